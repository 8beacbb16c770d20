//! Variable exponents and the standing hypotheses they must satisfy.
//!
//! Houses the exponent triple (p, q1, q2), the critical exponents
//! p* = p(N+2)/N and p_* = p(N+2)/N - 2/N, the log-Hölder modulus check,
//! nodewise admissibility p ≤ q1 < p* and p ≤ q2 < p_*, and sample-based
//! validation of the power-growth structure conditions on A, B, C.

use std::sync::Arc;

use crate::discretization::SpaceTimeGrid;
use crate::expr::{Expr, FIELD_VARS};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Where an exponent field lives: the whole cylinder or its lateral boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSupport {
    SpaceTime,
    Boundary,
}

/// A variable exponent sampled on a grid, with cached extrema.
#[derive(Clone, Debug)]
pub struct ExponentField {
    pub grid: Arc<SpaceTimeGrid>,
    pub support: FieldSupport,
    pub values: Vec<f64>,
    pub inf_value: f64,
    pub sup_value: f64,
}

impl ExponentField {
    pub fn from_fn(
        grid: &Arc<SpaceTimeGrid>,
        support: FieldSupport,
        mut f: impl FnMut(f64, &[f64]) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::new();
        for k in 0..grid.n_slices() {
            let t = grid.time(k);
            match support {
                FieldSupport::SpaceTime => {
                    for j in 0..grid.n_nodes() {
                        values.push(f(t, &grid.coords(j)));
                    }
                }
                FieldSupport::Boundary => {
                    for b in grid.boundary_nodes() {
                        values.push(f(t, &grid.coords(b.node)));
                    }
                }
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("exponent field has non-finite values".into()));
        }
        let inf_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup_value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(ExponentField {
            grid: grid.clone(),
            support,
            values,
            inf_value,
            sup_value,
        })
    }

    pub fn from_expr(grid: &Arc<SpaceTimeGrid>, support: FieldSupport, src: &str) -> Result<Self> {
        let expr = Expr::parse(src, &FIELD_VARS)?;
        let dim = grid.dim();
        Self::from_fn(grid, support, |t, x| {
            let mut args = [t, 0.0, 0.0, 0.0];
            args[1..=dim].copy_from_slice(x);
            expr.eval(&args)
        })
    }

    pub fn constant(grid: &Arc<SpaceTimeGrid>, support: FieldSupport, v: f64) -> Self {
        Self::from_fn(grid, support, |_, _| v).unwrap()
    }

    fn points_per_slice(&self) -> usize {
        match self.support {
            FieldSupport::SpaceTime => self.grid.n_nodes(),
            FieldSupport::Boundary => self.grid.boundary_nodes().len(),
        }
    }

    /// Value at (slice k, point index). For boundary support the point index
    /// enumerates boundary nodes.
    pub fn value(&self, k: usize, point: usize) -> f64 {
        self.values[k * self.points_per_slice() + point]
    }

    /// For space-time fields: value at a boundary node given by its position
    /// in `grid.boundary_nodes()`.
    pub fn value_at_boundary(&self, k: usize, b_index: usize) -> f64 {
        match self.support {
            FieldSupport::Boundary => self.value(k, b_index),
            FieldSupport::SpaceTime => {
                let node = self.grid.boundary_nodes()[b_index].node;
                self.value(k, node)
            }
        }
    }

    /// Coordinates (t, x) of the sample point with flat index `i`.
    fn point_coords(&self, i: usize) -> (f64, Vec<f64>) {
        let pps = self.points_per_slice();
        let k = i / pps;
        let p = i % pps;
        let node = match self.support {
            FieldSupport::SpaceTime => p,
            FieldSupport::Boundary => self.grid.boundary_nodes()[p].node,
        };
        (self.grid.time(k), self.grid.coords(node))
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }
}

/// Composite-trapezoid approximation of ∫∫ |u|^{p(t,x)} over the region and
/// the window [0, t(k_end)].
pub fn integrate_modular(
    u: &crate::discretization::SampledField,
    p: &ExponentField,
    region: crate::discretization::Region,
    k_end: usize,
) -> f64 {
    let expected = match region {
        crate::discretization::Region::Interior => FieldSupport::SpaceTime,
        crate::discretization::Region::Boundary => FieldSupport::Boundary,
    };
    assert!(
        p.support == expected || p.support == FieldSupport::SpaceTime,
        "exponent support does not match the integration region"
    );
    let at = |k: usize, i: usize| match region {
        crate::discretization::Region::Interior => p.value(k, i),
        crate::discretization::Region::Boundary => p.value_at_boundary(k, i),
    };
    crate::discretization::modular_value(&crate::discretization::modular_samples(
        u, at, region, k_end,
    ))
}

/// Luxemburg norm inf{τ > 0 : ∫∫ |u/τ|^{p(t,x)} ≤ 1} over the region and
/// window (bracketing plus bisection; 0 for the zero field).
pub fn luxemburg_norm(
    u: &crate::discretization::SampledField,
    p: &ExponentField,
    region: crate::discretization::Region,
    k_end: usize,
) -> Result<f64> {
    let at = |k: usize, i: usize| match region {
        crate::discretization::Region::Interior => p.value(k, i),
        crate::discretization::Region::Boundary => p.value_at_boundary(k, i),
    };
    crate::discretization::luxemburg_from_samples(&crate::discretization::modular_samples(
        u, at, region, k_end,
    ))
}

/// Interior and trace critical exponents for a scalar exponent value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalExponents {
    /// p* = p (N+2)/N
    pub interior: f64,
    /// p_* = p (N+2)/N - 2/N
    pub trace: f64,
}

/// Critical exponents p* and p_* for exponent value `p_val` in dimension `n`.
pub fn critical_exponents(p_val: f64, n: usize) -> Result<CriticalExponents> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "critical exponents need spatial dimension >= 2, got {n}"
        )));
    }
    if !(p_val > 1.0) {
        return Err(Error::Precondition(format!(
            "critical exponents need p > 1, got {p_val}"
        )));
    }
    let nf = n as f64;
    let interior = p_val * (nf + 2.0) / nf;
    Ok(CriticalExponents {
        interior,
        trace: interior - 2.0 / nf,
    })
}

/// Witness pair for a failed (or tight) log-Hölder check.
#[derive(Clone, Debug)]
pub struct LogHolderWitness {
    pub first: (f64, Vec<f64>),
    pub second: (f64, Vec<f64>),
    pub oscillation: f64,
    pub distance: f64,
    /// Bound k / log(e + 1/distance) at the witness pair (0 until k is known).
    pub allowed: f64,
}

#[derive(Clone, Debug)]
pub struct LogHolderReport {
    pub holds: bool,
    pub constant: f64,
    /// max over pairs of |Δp| · log(e + 1/dist) / k; the check holds iff ≤ 1.
    pub worst_ratio: f64,
    pub witness: Option<LogHolderWitness>,
    pub pairs_checked: usize,
    /// true when the grid was decimated to keep the pairwise scan tractable
    pub subsampled: bool,
}

const LOG_HOLDER_MAX_POINTS: usize = 4000;

fn log_holder_scan(field: &ExponentField) -> (f64, Option<LogHolderWitness>, usize, bool) {
    let total = field.n_points();
    let stride = total.div_ceil(LOG_HOLDER_MAX_POINTS).max(1);
    let subsampled = stride > 1;
    let pts: Vec<usize> = (0..total).step_by(stride).collect();
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut pairs = 0usize;
    for (a, &i) in pts.iter().enumerate() {
        let (ti, xi) = field.point_coords(i);
        let pi = field.values[i];
        for &j in &pts[a + 1..] {
            let (tj, xj) = field.point_coords(j);
            let dist = (ti - tj).abs()
                + xi.iter()
                    .zip(&xj)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
            if dist == 0.0 {
                continue;
            }
            pairs += 1;
            let osc = (pi - field.values[j]).abs();
            let scaled = osc * (std::f64::consts::E + 1.0 / dist).ln();
            if scaled > worst {
                worst = scaled;
                witness = Some(LogHolderWitness {
                    first: (ti, xi.clone()),
                    second: (tj, xj),
                    oscillation: osc,
                    distance: dist,
                    allowed: 0.0, // filled by caller once k is known
                });
            }
        }
    }
    (worst, witness, pairs, subsampled)
}

/// Check the log-Hölder modulus |p(z) - p(z')| ≤ k / log(e + 1/|z - z'|)
/// over all sampled grid-node pairs. A necessary-condition check: it can
/// refute the modulus on the grid but cannot prove it off-grid.
pub fn check_log_holder(field: &ExponentField, k: f64) -> Result<LogHolderReport> {
    if !(k > 0.0) {
        return Err(Error::Precondition(format!("log-Hölder constant must be positive, got {k}")));
    }
    let (worst_scaled, mut witness, pairs_checked, subsampled) = log_holder_scan(field);
    let worst_ratio = worst_scaled / k;
    if let Some(w) = witness.as_mut() {
        w.allowed = k / (std::f64::consts::E + 1.0 / w.distance).ln();
    }
    let holds = worst_ratio <= 1.0 + 1e-12;
    Ok(LogHolderReport {
        holds,
        constant: k,
        worst_ratio,
        witness: if holds { None } else { witness },
        pairs_checked,
        subsampled,
    })
}

/// Smallest constant k for which the log-Hölder check passes on the grid.
pub fn fit_log_holder(field: &ExponentField) -> f64 {
    let (worst_scaled, _, _, _) = log_holder_scan(field);
    worst_scaled
}

/// Strictly positive structure constants of the growth conditions.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct StructureConsts {
    pub a: [f64; 6],
    pub b: [f64; 3],
    pub c: [f64; 2],
}

impl StructureConsts {
    pub fn all_positive(&self) -> bool {
        self.a.iter().chain(&self.b).chain(&self.c).all(|&v| v > 0.0)
    }

    pub fn unit() -> Self {
        StructureConsts {
            a: [1.0; 6],
            b: [1.0; 3],
            c: [1.0; 2],
        }
    }
}

/// Exponent triple plus structure constants; the standing data of a problem.
#[derive(Clone, Debug)]
pub struct HypothesisSet {
    pub p: ExponentField,
    pub q1: ExponentField,
    pub q2: ExponentField,
    pub consts: StructureConsts,
}

impl HypothesisSet {
    pub fn new(
        p: ExponentField,
        q1: ExponentField,
        q2: ExponentField,
        consts: StructureConsts,
    ) -> Result<Self> {
        if p.support != FieldSupport::SpaceTime || q1.support != FieldSupport::SpaceTime {
            return Err(Error::Precondition("p and q1 must be space-time fields".into()));
        }
        if q2.support != FieldSupport::Boundary {
            return Err(Error::Precondition("q2 must be a boundary field".into()));
        }
        if !consts.all_positive() {
            return Err(Error::Precondition("structure constants must be strictly positive".into()));
        }
        if !(p.inf_value > 1.0) {
            return Err(Error::Precondition(format!(
                "need inf p > 1, got {}",
                p.inf_value
            )));
        }
        Ok(HypothesisSet { p, q1, q2, consts })
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.p.grid
    }
}

/// One admissibility condition outcome with the first violating node.
#[derive(Clone, Debug)]
pub struct ConditionOutcome {
    pub ok: bool,
    pub description: String,
    pub violation: Option<String>,
}

/// Nodewise admissibility report.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub ok: bool,
    pub conditions: Vec<ConditionOutcome>,
}

/// Verify inf p > 1, p ≤ q1 < p* on the cylinder and p ≤ q2 < p_* on the
/// boundary, nodewise on the grid.
pub fn check_admissible(h: &HypothesisSet) -> AdmissibilityReport {
    let grid = h.grid();
    let n = grid.dim();
    let mut conditions = Vec::new();

    if n < 2 {
        conditions.push(ConditionOutcome {
            ok: false,
            description: "spatial dimension at least 2".into(),
            violation: Some(format!("N = {n}")),
        });
        return AdmissibilityReport {
            ok: false,
            conditions,
        };
    }
    let nf = n as f64;

    conditions.push(ConditionOutcome {
        ok: h.p.inf_value > 1.0,
        description: "inf p > 1".into(),
        violation: if h.p.inf_value > 1.0 {
            None
        } else {
            Some(format!("inf p = {}", h.p.inf_value))
        },
    });

    let mut interior_ok = true;
    let mut interior_violation = None;
    'outer: for k in 0..grid.n_slices() {
        for j in 0..grid.n_nodes() {
            let p = h.p.value(k, j);
            let q1 = h.q1.value(k, j);
            let p_star = p * (nf + 2.0) / nf;
            if !(p <= q1 + 1e-12 && q1 < p_star) {
                interior_ok = false;
                interior_violation = Some(format!(
                    "at t={}, x={:?}: p={p}, q1={q1}, p*={p_star}",
                    grid.time(k),
                    grid.coords(j)
                ));
                break 'outer;
            }
        }
    }
    conditions.push(ConditionOutcome {
        ok: interior_ok,
        description: "p <= q1 < p* on the cylinder".into(),
        violation: interior_violation,
    });

    let mut boundary_ok = true;
    let mut boundary_violation = None;
    'bouter: for k in 0..grid.n_slices() {
        for (bi, b) in grid.boundary_nodes().iter().enumerate() {
            let p = h.p.value(k, b.node);
            let q2 = h.q2.value(k, bi);
            let p_lower = p * (nf + 2.0) / nf - 2.0 / nf;
            if !(p <= q2 + 1e-12 && q2 < p_lower) {
                boundary_ok = false;
                boundary_violation = Some(format!(
                    "at t={}, x={:?}: p={p}, q2={q2}, p_*={p_lower}",
                    grid.time(k),
                    grid.coords(b.node)
                ));
                break 'bouter;
            }
        }
    }
    conditions.push(ConditionOutcome {
        ok: boundary_ok,
        description: "p <= q2 < p_* on the boundary".into(),
        violation: boundary_violation,
    });

    AdmissibilityReport {
        ok: conditions.iter().all(|c| c.ok),
        conditions,
    }
}

/// A sample point for structure validation.
#[derive(Clone, Debug)]
pub struct StructureSample {
    pub slice: usize,
    pub node: usize,
    pub s: f64,
    pub xi: Vec<f64>,
}

/// Default sample set: 8 time slices × all spatial nodes × s ∈ {0,±1,±10} ×
/// |ξ| ∈ {0, 0.1, 1, 10, 100} in seeded random directions.
pub fn default_structure_samples(grid: &Arc<SpaceTimeGrid>, seed: u64) -> Vec<StructureSample> {
    let mut rng = SplitMix64::new(seed);
    let dim = grid.dim();
    let n_slices = grid.n_slices();
    let slice_ids: Vec<usize> = if n_slices <= 8 {
        (0..n_slices).collect()
    } else {
        (0..8).map(|i| i * (n_slices - 1) / 7).collect()
    };
    let s_values = [0.0, 1.0, -1.0, 10.0, -10.0];
    let xi_mags = [0.0, 0.1, 1.0, 10.0, 100.0];
    let mut out = Vec::new();
    for &k in &slice_ids {
        for j in 0..grid.n_nodes() {
            for &s in &s_values {
                for &m in &xi_mags {
                    let dir = rng.unit_vector(dim);
                    out.push(StructureSample {
                        slice: k,
                        node: j,
                        s,
                        xi: dir.into_iter().map(|d| d * m).collect(),
                    });
                }
            }
        }
    }
    out
}

/// Outcome of one growth condition over the sample set.
#[derive(Clone, Debug)]
pub struct GrowthOutcome {
    pub ok: bool,
    /// Smallest (most negative when failing) margin RHS - LHS over samples.
    pub worst_margin: f64,
    pub witness: Option<String>,
    pub non_finite: bool,
}

/// Sample-based validation of the four growth conditions.
#[derive(Clone, Debug)]
pub struct StructureReport {
    pub flux_growth: GrowthOutcome,
    pub flux_coercivity: GrowthOutcome,
    pub reaction_growth: GrowthOutcome,
    pub boundary_growth: GrowthOutcome,
}

impl StructureReport {
    pub fn ok(&self) -> bool {
        self.flux_growth.ok
            && self.flux_coercivity.ok
            && self.reaction_growth.ok
            && self.boundary_growth.ok
    }
}

fn update(outcome: &mut GrowthOutcome, margin: f64, desc: impl Fn() -> String) {
    if !margin.is_finite() {
        outcome.non_finite = true;
        outcome.ok = false;
        if outcome.witness.is_none() {
            outcome.witness = Some(desc());
        }
        return;
    }
    if margin < outcome.worst_margin {
        outcome.worst_margin = margin;
        if margin < -1e-12 {
            outcome.witness = Some(desc());
        }
    }
    if margin < -1e-12 {
        outcome.ok = false;
    }
}

/// Check the declared power-growth bounds on A, B (cylinder samples) and C
/// (boundary samples) with the constants in `h`.
pub fn validate_structure(
    a: &dyn Fn(f64, &[f64], f64, &[f64]) -> Vec<f64>,
    b: &dyn Fn(f64, &[f64], f64, &[f64]) -> f64,
    c: &dyn Fn(f64, &[f64], f64) -> f64,
    h: &HypothesisSet,
    samples: &[StructureSample],
) -> StructureReport {
    let grid = h.grid();
    let fresh = || GrowthOutcome {
        ok: true,
        worst_margin: f64::INFINITY,
        witness: None,
        non_finite: false,
    };
    let mut flux_growth = fresh();
    let mut flux_coercivity = fresh();
    let mut reaction_growth = fresh();
    let mut boundary_growth = fresh();
    let cns = &h.consts;

    for sample in samples {
        let t = grid.time(sample.slice);
        let x = grid.coords(sample.node);
        let p = h.p.value(sample.slice, sample.node);
        let q1 = h.q1.value(sample.slice, sample.node);
        let xi_mag = sample.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s_abs = sample.s.abs();

        let a_val = a(t, &x, sample.s, &sample.xi);
        let a_mag = a_val.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound_a = cns.a[0] * xi_mag.powf(p - 1.0)
            + cns.a[1] * s_abs.powf(q1 * (p - 1.0) / p)
            + cns.a[2];
        update(&mut flux_growth, bound_a - a_mag, || {
            format!("flux growth at t={t}, x={x:?}, s={}, |xi|={xi_mag}", sample.s)
        });

        let a_dot_xi: f64 = a_val.iter().zip(&sample.xi).map(|(u, v)| u * v).sum();
        let coercive = a_dot_xi - cns.a[3] * xi_mag.powf(p) + cns.a[4] * s_abs.powf(q1) + cns.a[5];
        update(&mut flux_coercivity, coercive, || {
            format!("flux coercivity at t={t}, x={x:?}, s={}, |xi|={xi_mag}", sample.s)
        });

        let b_val = b(t, &x, sample.s, &sample.xi).abs();
        let bound_b = cns.b[0] * xi_mag.powf(p * (q1 - 1.0) / q1)
            + cns.b[1] * s_abs.powf(q1 - 1.0)
            + cns.b[2];
        update(&mut reaction_growth, bound_b - b_val, || {
            format!("reaction growth at t={t}, x={x:?}, s={}, |xi|={xi_mag}", sample.s)
        });
    }

    // boundary condition samples: every boundary node at the sampled slices
    let slice_ids: Vec<usize> = samples.iter().map(|s| s.slice).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for &k in &slice_ids {
        let t = grid.time(k);
        for (bi, bn) in grid.boundary_nodes().iter().enumerate() {
            let x = grid.coords(bn.node);
            let q2 = h.q2.value_at_boundary(k, bi);
            for s in [0.0, 1.0, -1.0, 10.0, -10.0] {
                let c_val = c(t, &x, s).abs();
                let bound_c = cns.c[0] * s.abs().powf(q2 - 1.0) + cns.c[1];
                update(&mut boundary_growth, bound_c - c_val, || {
                    format!("boundary growth at t={t}, x={x:?}, s={s}")
                });
            }
        }
    }

    StructureReport {
        flux_growth,
        flux_coercivity,
        reaction_growth,
        boundary_growth,
    }
}
