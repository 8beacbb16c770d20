//! Multiplicative interpolation inequalities and parabolic embeddings.
//!
//! Interior form: ‖u‖_{L^q(Ω)} ≤ C_Ω ‖u‖_{W^{1,p}(Ω)}^α ‖u‖_{L^s(Ω)}^{1-α}
//! with N/q = α(N/p - 1) + (1-α) N/s. Trace form: the L^q(Γ)-norm on the
//! left, (N-1)/q = α(N/p - 1) + (1-α) N/s and additionally α > 1/q.
//!
//! From these follow the space-time embeddings used by the truncation
//! energy machinery: with q = p(N+2)/N (interior) resp. q = p(N+2)/N - 2/N
//! (trace),
//!
//! ```text
//! ∫∫ |u|^q ≤ C^q (∫∫ |∇u|^p + ∫∫ |u|^p) · (sup_t ∫ u²)^{p/N or (p-1)/N}.
//! ```
//!
//! The analytic constants are not computable here; the module instead
//! evaluates both sides on a fixed, versioned corpus of test functions and
//! reports the empirical ratios, which serve as lower bounds for the true
//! constants. A concentration-family probe demonstrates that the critical
//! exponents cannot be raised.

use std::fmt;
use std::sync::Arc;

use crate::discretization::{
    gradient, integrate_boundary_slice, integrate_slice, BoxDomain, SampledField, SpaceTimeGrid,
};
use crate::exponents::critical_exponents;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Interior,
    Boundary,
}

impl Side {
    pub fn label(&self) -> &'static str {
        match self {
            Side::Interior => "interior",
            Side::Boundary => "boundary",
        }
    }
}

/// A validated interpolation setup with its exponent α.
#[derive(Clone, Copy, Debug)]
pub struct InterpolationSetup {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub q: f64,
    pub side: Side,
    pub alpha: f64,
}

/// Why an interpolation setup was rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum GnRejection {
    BadInput(String),
    /// p = N s / (N + s) makes the linking equation degenerate.
    DegenerateDenominator,
    AlphaOutOfRange(f64),
    /// Trace setups additionally require α > 1/q.
    TraceAlphaTooSmall {
        alpha: f64,
        threshold: f64,
    },
}

impl fmt::Display for GnRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GnRejection::BadInput(m) => write!(f, "bad input: {m}"),
            GnRejection::DegenerateDenominator => {
                write!(f, "p = Ns/(N+s): linking equation degenerates")
            }
            GnRejection::AlphaOutOfRange(a) => write!(f, "alpha = {a} outside [0, 1]"),
            GnRejection::TraceAlphaTooSmall { alpha, threshold } => {
                write!(f, "trace setup needs alpha > 1/q: alpha = {alpha} <= {threshold}")
            }
        }
    }
}

/// Solve the linking equation for α and validate the setup.
///
/// Interior: α = (1/s - 1/q) / (1/N - 1/p + 1/s).
/// Boundary: α = (1/s - (N-1)/(N q)) / (1/N - 1/p + 1/s), and α > 1/q.
pub fn gn_exponent(
    n: usize,
    p: f64,
    s: f64,
    q: f64,
    side: Side,
) -> std::result::Result<InterpolationSetup, GnRejection> {
    if n < 2 {
        return Err(GnRejection::BadInput(format!("need N >= 2, got {n}")));
    }
    for (name, v) in [("p", p), ("s", s), ("q", q)] {
        if !(v > 1.0) || !v.is_finite() {
            return Err(GnRejection::BadInput(format!("need {name} in (1, inf), got {v}")));
        }
    }
    let nf = n as f64;
    let denom = 1.0 / nf - 1.0 / p + 1.0 / s;
    if denom.abs() < 1e-14 {
        return Err(GnRejection::DegenerateDenominator);
    }
    let numer = match side {
        Side::Interior => 1.0 / s - 1.0 / q,
        Side::Boundary => 1.0 / s - (nf - 1.0) / (nf * q),
    };
    let alpha = numer / denom;
    if !(-1e-12..=1.0 + 1e-12).contains(&alpha) {
        return Err(GnRejection::AlphaOutOfRange(alpha));
    }
    let alpha = alpha.clamp(0.0, 1.0);
    if side == Side::Boundary && alpha <= 1.0 / q + 1e-14 {
        return Err(GnRejection::TraceAlphaTooSmall {
            alpha,
            threshold: 1.0 / q,
        });
    }
    Ok(InterpolationSetup {
        n,
        p,
        s,
        q,
        side,
        alpha,
    })
}

/// Residual of the linking equation at a computed α (0 for exact solutions).
pub fn linking_residual(setup: &InterpolationSetup) -> f64 {
    let nf = setup.n as f64;
    let lhs = match setup.side {
        Side::Interior => nf / setup.q,
        Side::Boundary => (nf - 1.0) / setup.q,
    };
    let rhs = setup.alpha * (nf / setup.p - 1.0) + (1.0 - setup.alpha) * nf / setup.s;
    lhs - rhs
}

/// Norms entering an interpolation ratio check on a single time slice.
#[derive(Clone, Copy, Debug)]
pub struct GnRatio {
    pub lhs_norm: f64,
    pub sobolev_norm: f64,
    pub ls_norm: f64,
    /// ‖u‖_q / (‖u‖_{W^{1,p}}^α ‖u‖_s^{1-α}); the empirical constant.
    pub ratio: f64,
    pub degenerate: bool,
}

fn slice_lp_norm(grid: &SpaceTimeGrid, vals: &[f64], p: f64) -> f64 {
    let powered: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
    integrate_slice(grid, &powered).powf(1.0 / p)
}

fn slice_boundary_lp_norm(grid: &SpaceTimeGrid, vals: &[f64], p: f64) -> f64 {
    let powered: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
    integrate_boundary_slice(grid, &powered).powf(1.0 / p)
}

/// Evaluate the interpolation inequality on the slice `k` of `u`.
pub fn check_gn(u: &SampledField, k: usize, setup: &InterpolationSetup) -> GnRatio {
    let grid = &u.grid;
    let vals = u.slice(k);
    let grad = gradient(u);
    let grad_mag: Vec<f64> = (0..grid.n_nodes()).map(|j| grad.magnitude(k, j)).collect();
    let lp_u = slice_lp_norm(grid, vals, setup.p);
    let lp_grad = slice_lp_norm(grid, &grad_mag, setup.p);
    let sobolev = (lp_grad.powf(setup.p) + lp_u.powf(setup.p)).powf(1.0 / setup.p);
    let ls = slice_lp_norm(grid, vals, setup.s);
    let lhs = match setup.side {
        Side::Interior => slice_lp_norm(grid, vals, setup.q),
        Side::Boundary => slice_boundary_lp_norm(grid, vals, setup.q),
    };
    let denom = sobolev.powf(setup.alpha) * ls.powf(1.0 - setup.alpha);
    if denom == 0.0 {
        return GnRatio {
            lhs_norm: lhs,
            sobolev_norm: sobolev,
            ls_norm: ls,
            ratio: 0.0,
            degenerate: true,
        };
    }
    GnRatio {
        lhs_norm: lhs,
        sobolev_norm: sobolev,
        ls_norm: ls,
        ratio: lhs / denom,
        degenerate: false,
    }
}

/// Both sides of a space-time embedding check.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingCheck {
    pub q: f64,
    pub lhs: f64,
    /// (∫∫|∇u|^p + ∫∫|u|^p) × (sup_t ∫ u²)^{p/N resp. (p-1)/N}
    pub rhs: f64,
    /// lhs / rhs; empirically certifies the inequality with C^q = ratio.
    pub ratio: f64,
}

/// Evaluate the parabolic embedding with constant exponent `p` over the full
/// horizon. `q_override` replaces the critical exponent (used by the
/// optimality probe); `None` selects q = p(N+2)/N resp. p(N+2)/N - 2/N.
pub fn check_parabolic_embedding(
    u: &SampledField,
    p: f64,
    side: Side,
    q_override: Option<f64>,
) -> Result<EmbeddingCheck> {
    let grid = &u.grid;
    let n = grid.dim();
    let crit = critical_exponents(p, n)?;
    let q = q_override.unwrap_or(match side {
        Side::Interior => crit.interior,
        Side::Boundary => crit.trace,
    });
    let sup_exp = match side {
        Side::Interior => p / n as f64,
        Side::Boundary => (p - 1.0) / n as f64,
    };
    let grad = gradient(u);
    let k_end = grid.nt;
    let mut lhs = 0.0;
    let mut grad_p = 0.0;
    let mut u_p = 0.0;
    let mut sup_l2 = f64::NEG_INFINITY;
    for k in 0..=k_end {
        let tw = grid.time_weight(k, k_end);
        let vals = u.slice(k);
        match side {
            Side::Interior => {
                let powered: Vec<f64> = vals.iter().map(|v| v.abs().powf(q)).collect();
                lhs += tw * integrate_slice(grid, &powered);
            }
            Side::Boundary => {
                let powered: Vec<f64> = vals.iter().map(|v| v.abs().powf(q)).collect();
                lhs += tw * integrate_boundary_slice(grid, &powered);
            }
        }
        let gp: Vec<f64> = (0..grid.n_nodes())
            .map(|j| grad.magnitude(k, j).powf(p))
            .collect();
        grad_p += tw * integrate_slice(grid, &gp);
        let up: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
        u_p += tw * integrate_slice(grid, &up);
        let l2: Vec<f64> = vals.iter().map(|v| v * v).collect();
        sup_l2 = sup_l2.max(integrate_slice(grid, &l2));
    }
    let rhs = (grad_p + u_p) * sup_l2.powf(sup_exp);
    let ratio = if rhs == 0.0 { f64::NAN } else { lhs / rhs };
    Ok(EmbeddingCheck { q, lhs, rhs, ratio })
}

/// Version stamp of the test-function corpus; bump when members change.
pub const CORPUS_VERSION: u32 = 1;

fn xd(x: &[f64], d: usize) -> f64 {
    x.get(d).copied().unwrap_or(0.5)
}

/// Corner-anchored concentration bump u_k = k^{N/2} Π_d (1 - k x_d)_+^2.
/// L²-mass is k-independent up to quadrature; traces on the faces through
/// the anchored corner are nonzero.
pub fn concentration_member(grid: &Arc<SpaceTimeGrid>, k: f64) -> SampledField {
    let dim = grid.dim();
    let scale = k.powf(dim as f64 / 2.0);
    let lower = grid.domain.lower.clone();
    SampledField::from_fn(grid, move |_, x| {
        let mut v = scale;
        for d in 0..dim {
            let y = (1.0 - k * (x[d] - lower[d])).max(0.0);
            v *= y * y;
        }
        v
    })
}

/// The fixed corpus of 20 space-time test functions on the unit box.
pub fn corpus(grid: &Arc<SpaceTimeGrid>) -> Vec<(String, SampledField)> {
    use std::f64::consts::PI;
    let dim = grid.dim();
    let lower = grid.domain.lower.clone();
    let upper = grid.domain.upper.clone();
    fn member(
        grid: &Arc<SpaceTimeGrid>,
        name: &str,
        f: impl FnMut(f64, &[f64]) -> f64,
    ) -> (String, SampledField) {
        (name.to_string(), SampledField::from_fn(grid, f))
    }
    let mut out: Vec<(String, SampledField)> = vec![
        member(grid, "const_one", |_, _| 1.0),
        member(grid, "affine", |_, x| 0.5 + x[0]),
        member(grid, "sine_product", |_, x| {
            (PI * x[0]).sin() * (PI * xd(x, 1)).sin()
        }),
        member(grid, "sine_product_decay", |t, x| {
            (-t).exp() * (PI * x[0]).sin() * (PI * xd(x, 1)).sin()
        }),
        member(grid, "cosine_product_decay", |t, x| {
            (-2.0 * t).exp() * (PI * x[0]).cos() * (PI * xd(x, 1)).cos()
        }),
        member(grid, "sine_21", |_, x| {
            (2.0 * PI * x[0]).sin() * (PI * xd(x, 1)).sin()
        }),
        member(grid, "sine_12_decay", |t, x| {
            (-t).exp() * (PI * x[0]).sin() * (2.0 * PI * xd(x, 1)).sin()
        }),
        member(grid, "sine_22", |_, x| {
            (2.0 * PI * x[0]).sin() * (2.0 * PI * xd(x, 1)).sin()
        }),
    ];
    for k in 1..=6usize {
        let kf = k as f64;
        out.push(member(grid, &format!("oscillation_{k}"), move |_, x| {
            (kf * PI * x[0]).sin()
        }));
    }
    out.push(member(grid, "polynomial_decay", |t, x| {
        0.25 * (1.0 + x[0] * x[0]) * (1.0 + xd(x, 1) * xd(x, 1)) * (-t).exp()
    }));
    out.push(("corner_bump_1".to_string(), concentration_member(grid, 1.0)));
    out.push(member(grid, "center_bump", move |_, x| {
        let mut v = 1.0;
        for d in 0..dim {
            let s = (x[d] - lower[d]) / (upper[d] - lower[d]);
            v *= (4.0 * s * (1.0 - s)).powi(2);
        }
        v
    }));
    out.push(("corner_bump_2".to_string(), concentration_member(grid, 2.0)));
    out.push(member(grid, "time_oscillation", |t, x| {
        (2.0 * PI * t).cos() * (PI * x[0]).sin() * (PI * xd(x, 1)).sin()
    }));
    out.push(member(grid, "gaussian_bump", |t, x| {
        let dx = x[0] - 0.3;
        let dy = xd(x, 1) - 0.6;
        (-8.0 * (dx * dx + dy * dy)).exp() * (1.0 + 0.5 * (PI * t).cos())
    }));
    assert_eq!(out.len(), 20);
    out
}

/// Default evaluation grid for corpus-based constants (unit square).
pub fn corpus_grid() -> Arc<SpaceTimeGrid> {
    SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 8, vec![33, 33]).unwrap()
}

/// Reference grid for empirical embedding constants by dimension.
pub fn embedding_reference_grid(dim: usize) -> Result<Arc<SpaceTimeGrid>> {
    match dim {
        2 => Ok(corpus_grid()),
        3 => SpaceTimeGrid::new(
            BoxDomain::new(vec![0.0; 3], vec![1.0; 3])?,
            1.0,
            6,
            vec![13, 13, 13],
        ),
        other => Err(crate::Error::Precondition(format!(
            "embedding reference corpus is defined for N ∈ {{2, 3}}, got {other}"
        ))),
    }
}

/// Empirical embedding constant C (not C^q) for exponent `p` on side `side`:
/// the maximum of ratio^{1/q} over the corpus. A lower bound for the true
/// constant; no sharpness is claimed.
pub fn empirical_embedding_constant(p: f64, side: Side, grid: &Arc<SpaceTimeGrid>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, u) in corpus(grid) {
        let check = check_parabolic_embedding(&u, p, side, None)?;
        if check.ratio.is_finite() {
            worst = worst.max(check.ratio.powf(1.0 / check.q));
        }
    }
    Ok(worst)
}

/// Outcome of the concentration-family probe at a given side and exponent.
#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub side: Side,
    pub p: f64,
    pub q_critical: f64,
    pub scales: Vec<f64>,
    pub critical_ratios: Vec<f64>,
    pub supercritical_ratios: Vec<f64>,
    /// max/min of the critical ratios (stays below 2)
    pub critical_band: f64,
    /// last/first of the supercritical ratios (exceeds 2)
    pub supercritical_growth: f64,
    pub supercritical_monotone: bool,
}

/// Probe the optimality of the critical exponent: evaluate the embedding
/// ratio on the concentration family at the critical q and at q + 1/2.
/// At the critical exponent the ratios stay in a bounded band as the bumps
/// concentrate; half an exponent above they grow without bound.
pub fn probe_criticality(grid: &Arc<SpaceTimeGrid>, p: f64, side: Side) -> Result<ProbeOutcome> {
    let n = grid.dim();
    let crit = critical_exponents(p, n)?;
    let q_critical = match side {
        Side::Interior => crit.interior,
        Side::Boundary => crit.trace,
    };
    let scales = vec![1.0, 2.0, 4.0, 8.0];
    let mut critical_ratios = Vec::new();
    let mut supercritical_ratios = Vec::new();
    for &k in &scales {
        let u = concentration_member(grid, k);
        critical_ratios.push(check_parabolic_embedding(&u, p, side, None)?.ratio);
        supercritical_ratios
            .push(check_parabolic_embedding(&u, p, side, Some(q_critical + 0.5))?.ratio);
    }
    let band_max = critical_ratios.iter().cloned().fold(f64::MIN, f64::max);
    let band_min = critical_ratios.iter().cloned().fold(f64::MAX, f64::min);
    let monotone = supercritical_ratios.windows(2).all(|w| w[1] > w[0]);
    Ok(ProbeOutcome {
        side,
        p,
        q_critical,
        scales,
        critical_band: band_max / band_min,
        supercritical_growth: supercritical_ratios[supercritical_ratios.len() - 1]
            / supercritical_ratios[0],
        critical_ratios,
        supercritical_ratios,
        supercritical_monotone: monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn gn_exponent_interior_special_value() {
        let s = gn_exponent(2, 2.0, 2.0, 4.0, Side::Interior).unwrap();
        assert!((s.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gn_exponent_boundary_special_value() {
        let s = gn_exponent(2, 2.0, 2.0, 3.0, Side::Boundary).unwrap();
        assert!((s.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.alpha > 1.0 / s.q);
    }

    #[test]
    fn gn_exponent_rejects_equal_trace_triple() {
        for p in [1.5, 2.0, 2.5, 3.0] {
            match gn_exponent(2, p, p, p, Side::Boundary) {
                Err(GnRejection::TraceAlphaTooSmall { alpha, .. }) => {
                    assert!((alpha - 1.0 / p).abs() < 1e-12);
                }
                other => panic!("expected trace rejection, got {other:?}"),
            }
        }
    }

    #[test]
    fn gn_exponent_rejects_degenerate_denominator() {
        // p = N s / (N + s) with N = 2, s = 6 gives p = 1.5
        match gn_exponent(2, 1.5, 6.0, 2.0, Side::Interior) {
            Err(GnRejection::DegenerateDenominator) => {}
            other => panic!("expected degenerate-denominator rejection, got {other:?}"),
        }
    }

    #[test]
    fn linking_equation_holds_over_random_admissible_tuples() {
        let mut rng = SplitMix64::new(17);
        let mut accepted = 0;
        for _ in 0..5000 {
            if accepted >= 1000 {
                break;
            }
            let n = 2 + rng.index(2);
            let p = rng.range(1.05, 4.0);
            let s = rng.range(1.05, 4.0);
            let q = rng.range(1.05, 6.0);
            let side = if rng.next_f64() < 0.5 {
                Side::Interior
            } else {
                Side::Boundary
            };
            if let Ok(setup) = gn_exponent(n, p, s, q, side) {
                accepted += 1;
                assert!(
                    linking_residual(&setup).abs() < 1e-12,
                    "residual too large for {setup:?}"
                );
            }
        }
        assert!(accepted >= 500, "sampler produced too few admissible tuples");
    }

    #[test]
    fn special_families_collapse_to_p_over_q() {
        let mut rng = SplitMix64::new(23);
        for _ in 0..100 {
            let n = 2 + rng.index(2);
            let nf = n as f64;
            let p = rng.range(1.1, 3.5);
            let q1 = p * (nf + 2.0) / nf;
            let s1 = gn_exponent(n, p, 2.0, q1, Side::Interior).unwrap();
            assert!((s1.alpha - p / q1).abs() < 1e-12);
            let q2 = p * (nf + 2.0) / nf - 2.0 / nf;
            let s2 = gn_exponent(n, p, 2.0, q2, Side::Boundary).unwrap();
            assert!((s2.alpha - p / q2).abs() < 1e-12);
            assert!(s2.alpha > 1.0 / q2);
        }
    }

    #[test]
    fn gn_ratio_is_one_for_unit_constant() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 2, vec![17, 17]).unwrap();
        let u = SampledField::from_fn(&grid, |_, _| 1.0);
        let setup = gn_exponent(2, 2.0, 2.0, 4.0, Side::Interior).unwrap();
        let r = check_gn(&u, 0, &setup);
        assert!((r.ratio - 1.0).abs() < 1e-12, "ratio {}", r.ratio);
    }

    #[test]
    fn gn_ratio_scale_invariant() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 2, vec![17, 17]).unwrap();
        let u = SampledField::from_fn(&grid, |_, x| {
            (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin()
        });
        let setup = gn_exponent(2, 2.0, 2.0, 4.0, Side::Interior).unwrap();
        let base = check_gn(&u, 0, &setup).ratio;
        for lam in [0.1, 10.0] {
            let r = check_gn(&u.scale(lam), 0, &setup).ratio;
            assert!((r - base).abs() < 1e-9 * base, "lambda {lam}: {r} vs {base}");
        }
    }

    #[test]
    fn gn_zero_field_flagged_degenerate() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 2, vec![9, 9]).unwrap();
        let u = SampledField::zeros(&grid);
        let setup = gn_exponent(2, 2.0, 2.0, 4.0, Side::Interior).unwrap();
        assert!(check_gn(&u, 0, &setup).degenerate);
    }

    #[test]
    fn oscillation_family_ratios_stay_bounded() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 2, vec![65, 65]).unwrap();
        let setup = gn_exponent(2, 2.0, 2.0, 4.0, Side::Interior).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..=6 {
            let kf = k as f64;
            let u = SampledField::from_fn(&grid, |_, x| {
                (kf * std::f64::consts::PI * x[0]).sin()
            });
            worst = worst.max(check_gn(&u, 0, &setup).ratio);
        }
        // frozen envelope: the six ratios share a common constant
        assert!(worst < 2.0, "worst oscillation ratio {worst}");
    }

    #[test]
    fn embedding_ratio_is_one_for_unit_constant() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 4, vec![17, 17]).unwrap();
        let u = SampledField::from_fn(&grid, |_, _| 1.0);
        let c = check_parabolic_embedding(&u, 2.0, Side::Interior, None).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12);
        assert!((c.rhs - 1.0).abs() < 1e-12);
        assert!((c.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_ratio_finite_for_decaying_mode() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 6, vec![25, 25]).unwrap();
        let u = SampledField::from_fn(&grid, |t, x| {
            (-t).exp()
                * (std::f64::consts::PI * x[0]).sin()
                * (std::f64::consts::PI * x[1]).sin()
        });
        for side in [Side::Interior, Side::Boundary] {
            let c = check_parabolic_embedding(&u, 2.0, side, None).unwrap();
            assert!(c.ratio.is_finite() && c.ratio > 0.0, "{side:?}: {c:?}");
        }
    }

    #[test]
    fn corpus_has_twenty_versioned_members() {
        assert_eq!(CORPUS_VERSION, 1);
        let grid = corpus_grid();
        let members = corpus(&grid);
        assert_eq!(members.len(), 20);
        for (name, u) in &members {
            assert!(u.all_finite(), "{name} not finite");
        }
    }

    #[test]
    fn criticality_probe_separates_critical_from_supercritical() {
        let grid = SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 3, vec![97, 97]).unwrap();
        for side in [Side::Interior, Side::Boundary] {
            let probe = probe_criticality(&grid, 2.0, side).unwrap();
            assert!(
                probe.critical_band < 2.0,
                "{side:?} band {}",
                probe.critical_band
            );
            assert!(
                probe.supercritical_growth > 2.0,
                "{side:?} growth {}",
                probe.supercritical_growth
            );
            assert!(probe.supercritical_monotone);
        }
    }
}
