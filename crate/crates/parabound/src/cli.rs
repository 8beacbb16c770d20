//! Batch experiment runner: executes an ordered task list against a
//! problem, writes the solution/certificate/check artifacts and a summary
//! with one pass/fail entry per assertion.
//!
//! Exit-status contract: 0 all assertions pass, 1 assertion failure,
//! 2 configuration/validation error, 3 solver divergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::degiorgi::{
    build_partition, check_energy_estimate, compute_bound_certificate, iterate_lemma,
    supersolution_certificate, BoundCertificate, IterationParams, PartitionData, SolutionKind,
};
use crate::discretization::{
    luxemburg_from_samples, modular_samples, Region, SampledField, SpaceTimeGrid,
};
use crate::exponents::{check_admissible, fit_log_holder, HypothesisSet};
use crate::inequalities::{
    check_gn, check_parabolic_embedding, corpus, corpus_grid, gn_exponent, probe_criticality, Side,
};
use crate::problems::{self, ProblemConfig};
use crate::report::{self, fmt_f64, Assertion, Summary};
use crate::rng::SplitMix64;
use crate::smoothing::{regularized_residual, steklov, TimeAverager, TimeDirection};
use crate::solver::{solve, ProblemSpec, Solution, SolverConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Name(String),
    Inline(ProblemConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Solve,
    Certify,
    CheckEnergy,
    CheckGn,
    CheckEmbeddings,
    CheckSmoothing,
    Iterate,
    ValidateStructure,
}

impl Task {
    pub fn label(&self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Certify => "certify",
            Task::CheckEnergy => "check-energy",
            Task::CheckGn => "check-gn",
            Task::CheckEmbeddings => "check-embeddings",
            Task::CheckSmoothing => "check-smoothing",
            Task::Iterate => "iterate",
            Task::ValidateStructure => "validate-structure",
        }
    }
}

/// A full run configuration as ingested from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSource,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: u64,
    /// explicit truncation levels for check-energy (validated against the
    /// admissible floor)
    #[serde(default)]
    pub kappas: Option<Vec<f64>>,
    /// sample count for the iterate sweep (default 200)
    #[serde(default)]
    pub iterate_samples: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad run config: {e}")))?;
        if cfg.tasks.is_empty() {
            return Err(Error::Config("task list must not be empty".into()));
        }
        Ok(cfg)
    }

    fn resolve(&self) -> Result<(ProblemSpec, SolverConfig)> {
        let (spec, default_cfg) = match &self.problem {
            ProblemSource::Name(name) => problems::by_name(name).ok_or_else(|| {
                Error::Config(format!(
                    "unknown built-in problem `{name}` (available: {})",
                    problems::builtin_names().join(", ")
                ))
            })?,
            ProblemSource::Inline(cfg) => {
                let spec = cfg.to_problem_spec()?;
                let dim = spec.domain.dim();
                (spec, SolverConfig::new(vec![17; dim], 16))
            }
        };
        let solver_cfg = self.solver.clone().unwrap_or(default_cfg);
        if solver_cfg.shape.len() != spec.domain.dim() {
            return Err(Error::Config(format!(
                "solver shape has {} axes, domain has {}",
                solver_cfg.shape.len(),
                spec.domain.dim()
            )));
        }
        Ok((spec, solver_cfg))
    }
}

struct RunState {
    spec: ProblemSpec,
    solver_cfg: SolverConfig,
    solution: Option<Solution>,
    hypotheses: Option<HypothesisSet>,
    partition: Option<PartitionData>,
}

impl RunState {
    fn grid(&self) -> Result<Arc<SpaceTimeGrid>> {
        SpaceTimeGrid::new(
            self.spec.domain.clone(),
            self.spec.t_end,
            self.solver_cfg.nt,
            self.solver_cfg.shape.clone(),
        )
    }

    fn ensure_solution(&mut self) -> Result<&Solution> {
        if self.solution.is_none() {
            self.solution = Some(solve(&self.spec, &self.solver_cfg)?);
        }
        Ok(self.solution.as_ref().unwrap())
    }

    fn ensure_hypotheses(&mut self) -> Result<&HypothesisSet> {
        if self.hypotheses.is_none() {
            let grid = self.grid()?;
            self.hypotheses = Some(self.spec.hypotheses(&grid)?);
        }
        Ok(self.hypotheses.as_ref().unwrap())
    }

    fn ensure_partition(&mut self) -> Result<&PartitionData> {
        if self.partition.is_none() {
            self.ensure_hypotheses()?;
            let h = self.hypotheses.as_ref().unwrap();
            let report = check_admissible(h);
            if !report.ok {
                let detail: Vec<String> = report
                    .conditions
                    .iter()
                    .filter_map(|c| c.violation.clone())
                    .collect();
                return Err(Error::Precondition(format!(
                    "hypotheses not admissible: {}",
                    detail.join("; ")
                )));
            }
            self.partition = Some(build_partition(h)?);
        }
        Ok(self.partition.as_ref().unwrap())
    }
}

/// Certificate artifact: both sides plus the hypothesis diagnostics.
#[derive(Serialize)]
struct CertificateDocument {
    problem: String,
    shape: Vec<usize>,
    nt: usize,
    t_end: f64,
    time_independent_p: bool,
    /// fitted log-Hölder constant of p on the grid (skipped on the
    /// time-independent route, where Steklov averaging replaces the
    /// exponential time smoothing)
    log_holder_constant: Option<f64>,
    steklov_route: bool,
    upper: BoundCertificate,
    lower: BoundCertificate,
}

fn p_time_independent(h: &HypothesisSet) -> bool {
    let grid = h.grid();
    let n = grid.n_nodes();
    for k in 1..grid.n_slices() {
        for j in 0..n {
            if (h.p.value(k, j) - h.p.value(0, j)).abs() > 1e-14 {
                return false;
            }
        }
    }
    true
}

/// Execute the configured tasks in order, writing artifacts under `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Summary> {
    let (spec, solver_cfg) = config.resolve()?;
    fs::create_dir_all(out)?;
    let checks_dir = out.join("checks");
    fs::create_dir_all(&checks_dir)?;

    let mut state = RunState {
        spec,
        solver_cfg,
        solution: None,
        hypotheses: None,
        partition: None,
    };
    let mut assertions: Vec<Assertion> = Vec::new();

    for task in &config.tasks {
        match task {
            Task::Solve => task_solve(&mut state, out, &mut assertions)?,
            Task::ValidateStructure => {
                task_validate_structure(&mut state, &checks_dir, &mut assertions)?
            }
            Task::CheckGn => task_check_gn(&checks_dir, &mut assertions)?,
            Task::CheckEmbeddings => task_check_embeddings(&checks_dir, &mut assertions)?,
            Task::CheckSmoothing => {
                task_check_smoothing(config.seed, &checks_dir, &mut assertions)?
            }
            Task::Iterate => task_iterate(config, &checks_dir, &mut assertions)?,
            Task::CheckEnergy => task_check_energy(config, &mut state, &checks_dir, &mut assertions)?,
            Task::Certify => task_certify(&mut state, out, &mut assertions)?,
        }
    }

    let summary = Summary {
        status: if assertions.iter().all(|a| a.pass) {
            "pass".into()
        } else {
            "fail".into()
        },
        seed: config.seed,
        tasks: config.tasks.iter().map(|t| t.label().to_string()).collect(),
        assertions,
    };
    report::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn task_solve(state: &mut RunState, out: &Path, assertions: &mut Vec<Assertion>) -> Result<()> {
    let sol = state.ensure_solution()?;
    report::write_field_csv(&out.join("solution.csv"), &sol.u)?;
    let all_converged = sol.diagnostics.iter().all(|d| d.converged);
    let worst = sol
        .diagnostics
        .iter()
        .map(|d| d.final_residual)
        .fold(0.0f64, f64::max);
    assertions.push(Assertion::new(
        "solve/all-steps-converged",
        all_converged,
        format!("worst step residual {worst:.3e}"),
    ));
    Ok(())
}

fn task_validate_structure(
    state: &mut RunState,
    checks_dir: &Path,
    assertions: &mut Vec<Assertion>,
) -> Result<()> {
    let grid = state.grid()?;
    let report = state.spec.validate(&grid, 0)?;
    let rows: Vec<Vec<String>> = [
        ("flux-growth", &report.flux_growth),
        ("flux-coercivity", &report.flux_coercivity),
        ("reaction-growth", &report.reaction_growth),
        ("boundary-growth", &report.boundary_growth),
    ]
    .iter()
    .map(|(name, outcome)| {
        vec![
            name.to_string(),
            outcome.ok.to_string(),
            fmt_f64(outcome.worst_margin),
            outcome.witness.clone().unwrap_or_default(),
        ]
    })
    .collect();
    report::write_csv(
        &checks_dir.join("validate-structure.csv"),
        &["condition", "ok", "worst_margin", "witness"],
        &rows,
    )?;
    assertions.push(Assertion::new(
        "validate-structure/all-conditions",
        report.ok(),
        format!(
            "worst margins: growth {:.3e}, coercivity {:.3e}",
            report.flux_growth.worst_margin, report.flux_coercivity.worst_margin
        ),
    ));
    Ok(())
}

fn task_check_gn(checks_dir: &Path, assertions: &mut Vec<Assertion>) -> Result<()> {
    let grid = corpus_grid();
    let members = corpus(&grid);
    let mut rows = Vec::new();
    let mut all_ok = true;
    for &p in &[1.5, 2.0, 3.0] {
        for side in [Side::Interior, Side::Boundary] {
            let nf = grid.dim() as f64;
            let q = match side {
                Side::Interior => p * (nf + 2.0) / nf,
                Side::Boundary => p * (nf + 2.0) / nf - 2.0 / nf,
            };
            let setup = gn_exponent(grid.dim(), p, 2.0, q, side)
                .map_err(|e| Error::Precondition(format!("gn setup failed: {e}")))?;
            for (name, u) in &members {
                let r = check_gn(u, 0, &setup);
                let ok = r.degenerate || (r.ratio.is_finite() && r.ratio >= 0.0);
                all_ok &= ok;
                rows.push(vec![
                    name.clone(),
                    side.label().to_string(),
                    fmt_f64(p),
                    fmt_f64(setup.s),
                    fmt_f64(setup.q),
                    fmt_f64(setup.alpha),
                    fmt_f64(r.lhs_norm),
                    fmt_f64(r.sobolev_norm),
                    fmt_f64(r.ls_norm),
                    fmt_f64(r.ratio),
                    ok.to_string(),
                ]);
            }
        }
    }
    report::write_csv(
        &checks_dir.join("check-gn.csv"),
        &[
            "function", "side", "p", "s", "q", "alpha", "lhs_norm", "sobolev_norm", "ls_norm",
            "ratio", "verdict",
        ],
        &rows,
    )?;
    assertions.push(Assertion::new(
        "check-gn/ratios-finite",
        all_ok,
        format!("{} rows", rows.len()),
    ));
    Ok(())
}

fn task_check_embeddings(checks_dir: &Path, assertions: &mut Vec<Assertion>) -> Result<()> {
    let grid = corpus_grid();
    let members = corpus(&grid);
    let mut rows = Vec::new();
    let mut all_finite = true;
    for &p in &[1.5, 2.0, 3.0] {
        for side in [Side::Interior, Side::Boundary] {
            for (name, u) in &members {
                let c = check_parabolic_embedding(u, p, side, None)?;
                let ok = c.ratio.is_finite() || c.rhs == 0.0;
                all_finite &= ok;
                rows.push(vec![
                    name.clone(),
                    side.label().to_string(),
                    fmt_f64(p),
                    fmt_f64(c.q),
                    fmt_f64(c.lhs),
                    fmt_f64(c.rhs),
                    fmt_f64(c.ratio),
                    ok.to_string(),
                ]);
            }
        }
    }
    report::write_csv(
        &checks_dir.join("check-embeddings.csv"),
        &["function", "side", "p", "q", "lhs", "rhs", "ratio", "verdict"],
        &rows,
    )?;

    // criticality probe on a finer spatial grid
    let probe_grid = SpaceTimeGrid::new(crate::discretization::BoxDomain::unit_square(), 1.0, 3, vec![97, 97])?;
    let mut probe_rows = Vec::new();
    let mut probes_ok = true;
    for &p in &[1.5, 2.0, 3.0] {
        for side in [Side::Interior, Side::Boundary] {
            let probe = probe_criticality(&probe_grid, p, side)?;
            let ok = probe.critical_band < 2.0
                && probe.supercritical_growth > 2.0
                && probe.supercritical_monotone;
            probes_ok &= ok;
            for (i, &k) in probe.scales.iter().enumerate() {
                probe_rows.push(vec![
                    side.label().to_string(),
                    fmt_f64(p),
                    fmt_f64(k),
                    fmt_f64(probe.critical_ratios[i]),
                    fmt_f64(probe.supercritical_ratios[i]),
                    fmt_f64(probe.critical_band),
                    fmt_f64(probe.supercritical_growth),
                    ok.to_string(),
                ]);
            }
        }
    }
    report::write_csv(
        &checks_dir.join("check-embeddings-probe.csv"),
        &[
            "side",
            "p",
            "scale",
            "critical_ratio",
            "supercritical_ratio",
            "critical_band",
            "supercritical_growth",
            "verdict",
        ],
        &probe_rows,
    )?;
    assertions.push(Assertion::new(
        "check-embeddings/ratios-finite",
        all_finite,
        format!("{} rows", rows.len()),
    ));
    assertions.push(Assertion::new(
        "check-embeddings/criticality-probe",
        probes_ok,
        "critical band < 2, supercritical growth > 2",
    ));
    Ok(())
}

fn task_check_smoothing(seed: u64, checks_dir: &Path, assertions: &mut Vec<Assertion>) -> Result<()> {
    let mut rows = Vec::new();

    // duality of the forward/backward averages on random signal pairs
    let nt = 40_000;
    let dt = 1.0 / nt as f64;
    let mut rng = SplitMix64::new(seed.wrapping_add(101));
    let mut worst_duality: f64 = 0.0;
    for _ in 0..50 {
        let v: Vec<f64> = (0..=nt).map(|_| rng.range(-1.0, 1.0)).collect();
        let w: Vec<f64> = (0..=nt).map(|_| rng.range(-1.0, 1.0)).collect();
        let h = rng.range(0.05, 0.5);
        let fwd = TimeAverager::new(h, TimeDirection::Forward)?;
        let bwd = TimeAverager::new(h, TimeDirection::Backward)?;
        let tau_v = fwd.apply(&v, dt);
        let tau_star_w = bwd.apply(&w, dt);
        let pair = |a: &[f64], b: &[f64]| -> f64 {
            (0..=nt)
                .map(|k| {
                    let tw = if k == 0 || k == nt { 0.5 * dt } else { dt };
                    tw * a[k] * b[k]
                })
                .sum()
        };
        worst_duality = worst_duality.max((pair(&v, &tau_star_w) - pair(&tau_v, &w)).abs());
    }
    rows.push(vec!["duality-worst-defect".into(), fmt_f64(worst_duality)]);
    let duality_ok = worst_duality < 1e-8;

    // derivative identity error halves with Δt
    let h = 0.25;
    let mut deriv_errors = Vec::new();
    for nt in [64usize, 128, 256] {
        let dt = 1.0 / nt as f64;
        let signal: Vec<f64> = (0..=nt)
            .map(|k| 1.2 + (2.0 * std::f64::consts::PI * k as f64 * dt).sin())
            .collect();
        let avg = TimeAverager::new(h, TimeDirection::Forward)?;
        let tau = avg.apply(&signal, dt);
        let mut worst: f64 = 0.0;
        for k in 1..nt {
            let lhs = (tau[k + 1] - tau[k - 1]) / (2.0 * dt);
            let rhs = (signal[k] - tau[k]) / h;
            worst = worst.max((lhs - rhs).abs());
        }
        deriv_errors.push(worst);
        rows.push(vec![format!("derivative-identity-nt-{nt}"), fmt_f64(worst)]);
    }
    let deriv_ok = deriv_errors[1] <= 0.6 * deriv_errors[0] && deriv_errors[2] <= 0.6 * deriv_errors[1];

    // Steklov averages converge in the variable-exponent norm
    let grid = SpaceTimeGrid::new(crate::discretization::BoxDomain::unit_interval(), 1.0, 400, vec![65])?;
    let v = SampledField::from_fn(&grid, |t, x| {
        (2.0 * std::f64::consts::PI * t).sin() * (std::f64::consts::PI * x[0]).sin()
    });
    let p_at = |_k: usize, j: usize| 2.0 + 0.5 * grid.coords(j)[0];
    let k_end = (0.8 / grid.dt()).round() as usize;
    let mut steklov_norms = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let (avg, valid) = steklov(&v, h)?;
        assert!(valid > k_end);
        let diff = avg.zip(&v, |a, b| a - b);
        let samples = modular_samples(&diff, p_at, Region::Interior, k_end);
        let norm = luxemburg_from_samples(&samples)?;
        steklov_norms.push(norm);
        rows.push(vec![format!("steklov-error-h-{h}"), fmt_f64(norm)]);
    }
    let steklov_ok = steklov_norms.windows(2).all(|w| w[1] < w[0]);

    // collar remainder decays at least 4x per halving on the heat problem
    let spec = problems::heat_neumann_1d();
    let rgrid = SpaceTimeGrid::new(spec.domain.clone(), 1.0, 64, vec![129])?;
    let pi = std::f64::consts::PI;
    let u = SampledField::from_fn(&rgrid, |t, x| (-pi * pi * t).exp() * (pi * x[0]).cos());
    // asymmetric test field: affine relations between ψ and the solution
    // profile make the collar bracket cancel identically between walls
    let psi = SampledField::from_fn(&rgrid, |_, x| 1.0 + 0.5 * x[0]);
    let mut remainders = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let rr = regularized_residual(&u, &psi, h, &spec)?;
        remainders.push(rr.remainder_magnitude);
        rows.push(vec![
            format!("collar-remainder-h-{h}"),
            fmt_f64(rr.remainder_magnitude),
        ]);
        rows.push(vec![format!("weak-defect-h-{h}"), fmt_f64(rr.defect)]);
    }
    let remainder_ok = remainders
        .windows(2)
        .all(|w| w[1] <= w[0] / 4.0 * (1.0 + 1e-9));

    report::write_csv(&checks_dir.join("check-smoothing.csv"), &["check", "value"], &rows)?;
    assertions.push(Assertion::new(
        "check-smoothing/duality",
        duality_ok,
        format!("worst defect {worst_duality:.3e}"),
    ));
    assertions.push(Assertion::new(
        "check-smoothing/derivative-identity",
        deriv_ok,
        format!("errors {deriv_errors:?}"),
    ));
    assertions.push(Assertion::new(
        "check-smoothing/steklov-convergence",
        steklov_ok,
        format!("norms {steklov_norms:?}"),
    ));
    assertions.push(Assertion::new(
        "check-smoothing/collar-remainder-decay",
        remainder_ok,
        format!("magnitudes {remainders:?}"),
    ));
    Ok(())
}

fn task_iterate(
    config: &RunConfig,
    checks_dir: &Path,
    assertions: &mut Vec<Assertion>,
) -> Result<()> {
    let samples = config.iterate_samples.unwrap_or(200);
    let mut rng = SplitMix64::new(config.seed);
    let mut rows = Vec::new();
    let mut all_ok = true;
    for _ in 0..samples {
        let k = rng.range(0.5, 5.0);
        let b = rng.range(1.0 + 1e-6, 4.0);
        let d1 = rng.range(0.2, 3.0);
        let d2 = rng.range(d1, 3.0);
        let params = IterationParams::new(k, b, d1, d2)?;
        for (which, y0) in [
            ("simple", params.threshold_simple()),
            ("two-sided", params.threshold_two_sided()),
        ] {
            let out = iterate_lemma(y0, &params, 200)?;
            let ok = out.verdict == crate::degiorgi::IterationVerdict::Converges
                && out.reached_one
                && out.decay_bound_holds;
            all_ok &= ok;
            rows.push(vec![
                fmt_f64(k),
                fmt_f64(b),
                fmt_f64(d1),
                fmt_f64(d2),
                which.to_string(),
                fmt_f64(y0),
                format!("{:?}", out.verdict),
                out.reached_one.to_string(),
                out.decay_bound_holds.to_string(),
            ]);
        }
    }
    report::write_csv(
        &checks_dir.join("iterate.csv"),
        &[
            "coefficient",
            "base",
            "delta1",
            "delta2",
            "threshold",
            "y0",
            "verdict",
            "reached_one",
            "decay_bound",
        ],
        &rows,
    )?;
    assertions.push(Assertion::new(
        "iterate/thresholds-converge",
        all_ok,
        format!("{samples} samples, both thresholds"),
    ));
    Ok(())
}

fn task_check_energy(
    config: &RunConfig,
    state: &mut RunState,
    checks_dir: &Path,
    assertions: &mut Vec<Assertion>,
) -> Result<()> {
    state.ensure_solution()?;
    state.ensure_hypotheses()?;
    let sol = state.solution.as_ref().unwrap();
    let h = state.hypotheses.as_ref().unwrap();
    let u0_max = sol.u.slice(0).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = u0_max.max(1.0);
    let kappas: Vec<f64> = match &config.kappas {
        Some(list) => list.clone(),
        None => {
            let u_max = sol.u.max();
            let span = (u_max - floor).max(0.5);
            (0..10).map(|i| floor + span * i as f64 / 9.0).collect()
        }
    };
    let k_end = sol.u.grid.nt;
    let sub = check_energy_estimate(sol, h, &kappas, k_end, SolutionKind::Subsolution)?;

    // mirrored check on the negated problem data
    let neg_floor = (-sol.u.slice(0).iter().cloned().fold(f64::INFINITY, f64::min)).max(1.0);
    let neg_span = ((-sol.u.min()) - neg_floor).max(0.5);
    let neg_kappas: Vec<f64> = (0..10)
        .map(|i| neg_floor + neg_span * i as f64 / 9.0)
        .collect();
    let sup = check_energy_estimate(sol, h, &neg_kappas, k_end, SolutionKind::Supersolution)?;

    let mut rows = Vec::new();
    let mut all_ok = true;
    for (mode, list) in [("subsolution", &sub), ("supersolution", &sup)] {
        for v in list {
            all_ok &= v.holds;
            rows.push(vec![
                mode.to_string(),
                fmt_f64(v.kappa),
                fmt_f64(v.lhs),
                fmt_f64(v.rhs),
                v.holds.to_string(),
            ]);
        }
    }
    report::write_csv(
        &checks_dir.join("check-energy.csv"),
        &["mode", "kappa", "lhs", "rhs", "holds"],
        &rows,
    )?;
    assertions.push(Assertion::new(
        "check-energy/truncated-inequalities",
        all_ok,
        format!("{} levels per mode", kappas.len()),
    ));
    Ok(())
}

fn task_certify(state: &mut RunState, out: &Path, assertions: &mut Vec<Assertion>) -> Result<()> {
    state.ensure_solution()?;
    state.ensure_partition()?;
    let sol = state.solution.as_ref().unwrap();
    let h = state.hypotheses.as_ref().unwrap();
    let partition = state.partition.as_ref().unwrap();

    let time_independent = p_time_independent(h);
    let log_holder_constant = if time_independent {
        None
    } else {
        Some(fit_log_holder(&h.p))
    };

    let upper = compute_bound_certificate(sol, h, partition, &state.spec.name)?;
    let lower = supersolution_certificate(sol, h, partition, &state.spec.name)?;

    let doc = CertificateDocument {
        problem: state.spec.name.clone(),
        shape: state.solver_cfg.shape.clone(),
        nt: state.solver_cfg.nt,
        t_end: state.spec.t_end,
        time_independent_p: time_independent,
        log_holder_constant,
        steklov_route: time_independent,
        upper: upper.clone(),
        lower: lower.clone(),
    };
    report::write_json(&out.join("certificate.json"), &doc)?;

    let u_max = sol.u.max();
    let u_min = sol.u.min();
    let sound_upper = u_max <= upper.final_bound && upper.final_bound.is_finite();
    let sound_lower = u_min >= lower.global_bound() && lower.final_bound.is_finite();
    assertions.push(Assertion::new(
        "certify/upper-bound-sound",
        sound_upper,
        format!("max u = {u_max:.6e} ≤ bound 1e{:.2}", upper.final_bound_log10),
    ));
    assertions.push(Assertion::new(
        "certify/lower-bound-sound",
        sound_lower,
        format!("min u = {u_min:.6e} ≥ bound -1e{:.2}", lower.final_bound_log10),
    ));
    assertions.push(Assertion::new(
        "certify/exponent-algebra-nondegenerate",
        upper.algebra.eta_hat < 1.0 && lower.algebra.eta_hat < 1.0,
        format!("η̂ = {:.6}", upper.algebra.eta_hat),
    ));
    Ok(())
}

/// Parsed command line.
pub struct CliArgs {
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
}

pub fn parse_args(args: &[String]) -> Result<CliArgs> {
    if args.is_empty() || args[0] != "run" {
        return Err(Error::Config(
            "usage: parabound run --config <path> [--out <dir>] [--seed <u64>]".into(),
        ));
    }
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from("out");
    let mut seed_override = None;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = Some(PathBuf::from(args.get(i).ok_or_else(|| {
                    Error::Config("--config needs a path".into())
                })?));
            }
            "--out" => {
                i += 1;
                out_dir = PathBuf::from(
                    args.get(i)
                        .ok_or_else(|| Error::Config("--out needs a path".into()))?,
                );
            }
            "--seed" => {
                i += 1;
                let raw = args
                    .get(i)
                    .ok_or_else(|| Error::Config("--seed needs a value".into()))?;
                seed_override = Some(
                    raw.parse::<u64>()
                        .map_err(|_| Error::Config(format!("bad seed `{raw}`")))?,
                );
            }
            other => {
                return Err(Error::Config(format!("unknown argument `{other}`")));
            }
        }
        i += 1;
    }
    Ok(CliArgs {
        config_path: config_path.ok_or_else(|| Error::Config("--config is required".into()))?,
        out_dir,
        seed_override,
    })
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args(args: &[String]) -> i32 {
    let parsed = match parse_args(args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let text = match fs::read_to_string(&parsed.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", parsed.config_path.display());
            return 2;
        }
    };
    let mut config = match RunConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if let Some(seed) = parsed.seed_override {
        config.seed = seed;
    }
    match run(&config, &parsed.out_dir) {
        Ok(summary) => {
            for a in &summary.assertions {
                println!(
                    "{} {}: {}",
                    if a.pass { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            if summary.all_pass() {
                0
            } else {
                1
            }
        }
        Err(Error::SolverDiverged(m)) => {
            eprintln!("solver diverged: {m}");
            3
        }
        Err(e) => {
            eprintln!("{e}");
            2
        }
    }
}
