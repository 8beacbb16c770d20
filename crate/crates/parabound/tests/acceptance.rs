//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance is pinned here, in code.

use std::sync::OnceLock;
use std::time::Instant;

use parabound::degiorgi::{
    build_partition, check_energy_estimate, compute_bound_certificate, exponent_algebra,
    iterate_lemma, supersolution_certificate, IterationParams, IterationVerdict, Patch,
    PartitionData, SolutionKind,
};
use parabound::discretization::{
    luxemburg_from_samples, modular_samples, modular_value, BoxDomain, Region, SampledField,
    SpaceTimeGrid,
};
use parabound::exponents::HypothesisSet;
use parabound::inequalities::{
    check_parabolic_embedding, corpus, corpus_grid, gn_exponent, linking_residual,
    probe_criticality, GnRejection, Side,
};
use parabound::problems;
use parabound::rng::SplitMix64;
use parabound::smoothing::{
    regularized_residual, steklov, TimeAverager, TimeDirection,
};
use parabound::solver::{solve, Solution, SolverConfig};

fn pass(criterion: u32, name: &str, detail: &str) {
    println!("ACCEPTANCE {criterion} {name}: PASS ({detail})");
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_1_geometric_recursion_suite() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(1);
    for trial in 0..200 {
        let k = rng.range(0.5, 5.0);
        let b = rng.range(1.0 + 1e-9, 4.0);
        // δ1 bounded away from 0 so b^{-1/δ1²} stays representable
        let d1 = rng.range(0.2, 3.0);
        let d2 = rng.range(d1, 3.0);
        let params = IterationParams::new(k, b, d1, d2).unwrap();
        for (label, y0) in [
            ("simple", params.threshold_simple()),
            ("two-sided", params.threshold_two_sided()),
        ] {
            let out = iterate_lemma(y0, &params, 200).unwrap();
            assert_eq!(
                out.verdict,
                IterationVerdict::Converges,
                "trial {trial} ({label}): K={k} b={b} d1={d1} d2={d2}"
            );
            assert!(out.reached_one, "trial {trial} ({label}): never reached 1");
            assert!(
                out.decay_bound_holds,
                "trial {trial} ({label}): decay bound violated (1e-12 relative slack)"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "recursion suite took {elapsed:?}, budget 1 s"
    );
    pass(1, "geometric-recursion-suite", &format!("200 tuples, both thresholds, {elapsed:?}"));
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_interpolation_exponent_algebra() {
    let mut rng = SplitMix64::new(2);
    let mut accepted = 0usize;
    let mut tried = 0usize;
    while accepted < 1000 && tried < 50_000 {
        tried += 1;
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
            let residual = linking_residual(&setup).abs();
            assert!(residual <= 1e-12, "linking residual {residual} for {setup:?}");
        }
    }
    assert_eq!(accepted, 1000, "could not sample 1000 admissible tuples");

    for _ in 0..100 {
        let n = 2 + rng.index(2);
        let nf = n as f64;
        let p = rng.range(1.1, 3.5);
        let q1 = p * (nf + 2.0) / nf;
        let s1 = gn_exponent(n, p, 2.0, q1, Side::Interior).unwrap();
        assert!((s1.alpha - p / q1).abs() <= 1e-12);
        let q2 = p * (nf + 2.0) / nf - 2.0 / nf;
        let s2 = gn_exponent(n, p, 2.0, q2, Side::Boundary).unwrap();
        assert!((s2.alpha - p / q2).abs() <= 1e-12);
        assert!(s2.alpha > 1.0 / q2);
    }

    for p in [1.5, 2.0, 2.5, 3.0] {
        match gn_exponent(2, p, p, p, Side::Boundary) {
            Err(GnRejection::TraceAlphaTooSmall { .. }) => {}
            other => panic!("s2 = q2 = p must be rejected, got {other:?}"),
        }
    }
    pass(2, "interpolation-exponent-algebra", "1000 + 100 tuples at 1e-12");
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_parabolic_embedding_suite() {
    let start = Instant::now();
    let grid = corpus_grid();
    let members = corpus(&grid);
    assert_eq!(members.len(), 20);
    for &p in &[1.5, 2.0, 3.0] {
        for side in [Side::Interior, Side::Boundary] {
            let mut ratios = Vec::new();
            for (name, u) in &members {
                let check = check_parabolic_embedding(u, p, side, None).unwrap();
                assert!(
                    check.lhs.is_finite() && check.rhs.is_finite(),
                    "{name} p={p} {side:?}"
                );
                if check.rhs > 0.0 {
                    ratios.push(check.ratio);
                }
            }
            // the corpus maximum is the empirical constant C^q; every member
            // satisfies the inequality with it
            let c_emp = ratios.iter().cloned().fold(0.0f64, f64::max);
            assert!(c_emp.is_finite() && c_emp > 0.0);
            for r in &ratios {
                assert!(*r <= c_emp * (1.0 + 1e-12));
            }
        }
    }

    // optimality probe on the corner concentration family
    let probe_grid =
        SpaceTimeGrid::new(BoxDomain::unit_square(), 1.0, 3, vec![97, 97]).unwrap();
    for &p in &[1.5, 2.0, 3.0] {
        for side in [Side::Interior, Side::Boundary] {
            let probe = probe_criticality(&probe_grid, p, side).unwrap();
            assert!(
                probe.supercritical_growth > 2.0,
                "p={p} {side:?}: supercritical growth {} not > 2",
                probe.supercritical_growth
            );
            assert!(
                probe.supercritical_monotone,
                "p={p} {side:?}: supercritical ratios not monotone"
            );
            assert!(
                probe.critical_band < 2.0,
                "p={p} {side:?}: critical band {} not < 2",
                probe.critical_band
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "embedding suite took {elapsed:?}, budget 30 s"
    );
    pass(3, "parabolic-embedding-suite", &format!("20 functions x 3 p, probe ok, {elapsed:?}"));
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn criterion_4_smoothing_identities() {
    // duality on 50 random signal pairs to 1e-8
    let nt = 40_000;
    let dt = 1.0 / nt as f64;
    let mut rng = SplitMix64::new(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let v: Vec<f64> = (0..=nt).map(|_| rng.range(-1.0, 1.0)).collect();
        let w: Vec<f64> = (0..=nt).map(|_| rng.range(-1.0, 1.0)).collect();
        let h = rng.range(0.05, 0.5);
        let tau_v = TimeAverager::new(h, TimeDirection::Forward).unwrap().apply(&v, dt);
        let tau_star_w = TimeAverager::new(h, TimeDirection::Backward)
            .unwrap()
            .apply(&w, dt);
        let pair = |a: &[f64], b: &[f64]| -> f64 {
            (0..=nt)
                .map(|k| {
                    let tw = if k == 0 || k == nt { 0.5 * dt } else { dt };
                    tw * a[k] * b[k]
                })
                .sum()
        };
        worst = worst.max((pair(&v, &tau_star_w) - pair(&tau_v, &w)).abs());
    }
    assert!(worst <= 1e-8, "duality defect {worst}");

    // derivative identity: observed error at least halves when Δt halves
    let h = 0.25;
    let mut errors = Vec::new();
    for nt in [64usize, 128, 256] {
        let dt = 1.0 / nt as f64;
        let signal: Vec<f64> = (0..=nt)
            .map(|k| 1.2 + (2.0 * std::f64::consts::PI * k as f64 * dt).sin())
            .collect();
        let tau = TimeAverager::new(h, TimeDirection::Forward).unwrap().apply(&signal, dt);
        let mut w: f64 = 0.0;
        for k in 1..nt {
            let lhs = (tau[k + 1] - tau[k - 1]) / (2.0 * dt);
            let rhs = (signal[k] - tau[k]) / h;
            w = w.max((lhs - rhs).abs());
        }
        errors.push(w);
    }
    assert!(
        errors[1] <= 0.5 * errors[0] && errors[2] <= 0.5 * errors[1],
        "derivative identity errors {errors:?}"
    );

    // Steklov averages: variable-exponent norm errors strictly decreasing
    let grid = SpaceTimeGrid::new(BoxDomain::unit_interval(), 1.0, 400, vec![65]).unwrap();
    let v = SampledField::from_fn(&grid, |t, x| {
        (2.0 * std::f64::consts::PI * t).sin() * (std::f64::consts::PI * x[0]).sin()
    });
    let p_at = |_k: usize, j: usize| 2.0 + 0.5 * grid.coords(j)[0];
    let k_end = (0.8 / grid.dt()).round() as usize;
    let mut norms = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let (avg, valid) = steklov(&v, h).unwrap();
        assert!(valid > k_end);
        let diff = avg.zip(&v, |a, b| a - b);
        norms.push(
            luxemburg_from_samples(&modular_samples(&diff, p_at, Region::Interior, k_end)).unwrap(),
        );
    }
    assert!(
        norms[1] < norms[0] && norms[2] < norms[1],
        "steklov norms {norms:?}"
    );

    // collar remainder shrinks by at least 4x per halving of h
    let spec = problems::heat_neumann_1d();
    let rgrid = SpaceTimeGrid::new(spec.domain.clone(), 1.0, 64, vec![129]).unwrap();
    let pi = std::f64::consts::PI;
    let u = SampledField::from_fn(&rgrid, |t, x| (-pi * pi * t).exp() * (pi * x[0]).cos());
    let psi = SampledField::from_fn(&rgrid, |_, x| 1.0 + 0.5 * x[0]);
    let mut magnitudes = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let rr = regularized_residual(&u, &psi, h, &spec).unwrap();
        magnitudes.push(rr.remainder_magnitude);
    }
    assert!(
        magnitudes[1] <= magnitudes[0] / 4.0 && magnitudes[2] <= magnitudes[1] / 4.0,
        "collar remainder magnitudes {magnitudes:?}"
    );
    pass(
        4,
        "smoothing-identities",
        &format!("duality {worst:.2e}, remainder {magnitudes:?}"),
    );
}

// ---------------------------------------------------------------- criterion 5

fn linf_error(sol: &Solution, exact: impl Fn(f64, &[f64]) -> f64) -> f64 {
    let grid = &sol.u.grid;
    let mut worst: f64 = 0.0;
    for k in 0..grid.n_slices() {
        let t = grid.time(k);
        for j in 0..grid.n_nodes() {
            worst = worst.max((sol.u.value(k, j) - exact(t, &grid.coords(j))).abs());
        }
    }
    worst
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn criterion_5_solver_mms() {
    let start = Instant::now();

    // 1D heat, spatial order 2 ± 0.3 with Δt ∝ h²
    let spec = problems::heat_neumann_1d();
    let errs: Vec<f64> = [(65usize, 16usize), (129, 64), (257, 256)]
        .iter()
        .map(|&(nx, nt)| linf_error(&solve(&spec, &SolverConfig::new(vec![nx], nt)).unwrap(), problems::heat1d_exact))
        .collect();
    let orders = observed_orders(&errs);
    for o in &orders {
        assert!((o - 2.0).abs() <= 0.3, "1D spatial orders {orders:?}");
    }

    // 1D heat, temporal order 1 ± 0.3 on a fine spatial grid
    let errs: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&nt| linf_error(&solve(&spec, &SolverConfig::new(vec![257], nt)).unwrap(), problems::heat1d_exact))
        .collect();
    let orders = observed_orders(&errs);
    for o in &orders {
        assert!((o - 1.0).abs() <= 0.3, "1D temporal orders {orders:?}");
    }

    // 2D heat, spatial order 2 ± 0.3 up to 65²
    let spec2 = problems::heat_neumann_2d_mode();
    let errs: Vec<f64> = [(17usize, 4usize), (33, 16), (65, 64)]
        .iter()
        .map(|&(nx, nt)| {
            linf_error(
                &solve(&spec2, &SolverConfig::new(vec![nx, nx], nt)).unwrap(),
                problems::heat2d_exact,
            )
        })
        .collect();
    let orders = observed_orders(&errs);
    for o in &orders {
        assert!((o - 2.0).abs() <= 0.3, "2D spatial orders {orders:?}");
    }

    // variable-exponent manufactured solution: observed order ≥ 1
    let specv = problems::variable_exponent_mms_1d();
    let errs: Vec<f64> = [(33usize, 8usize), (65, 32), (129, 128)]
        .iter()
        .map(|&(nx, nt)| linf_error(&solve(&specv, &SolverConfig::new(vec![nx], nt)).unwrap(), problems::mms_exact))
        .collect();
    let orders = observed_orders(&errs);
    for o in &orders {
        assert!(*o >= 1.0, "variable-exponent orders {orders:?}");
    }

    // mass conservation with zero sources, per step
    let specc = problems::p_laplacian_neumann_1d(2.5);
    let sol = solve(&specc, &SolverConfig::new(vec![33], 16)).unwrap();
    let masses = parabound::solver::mass_per_slice(&sol);
    for w in masses.windows(2) {
        assert!((w[1] - w[0]).abs() <= 1e-8, "mass drift {:?}", w[1] - w[0]);
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "solver suite took {elapsed:?}, budget 60 s"
    );
    pass(5, "solver-mms", &format!("orders in band, mass conserved, {elapsed:?}"));
}

// ------------------------------------------------------- criteria 6 and 7

struct SolvedProblem {
    name: String,
    sol: Solution,
    hyp: HypothesisSet,
    partition: PartitionData,
}

static SUITE: OnceLock<Vec<SolvedProblem>> = OnceLock::new();

fn certification_suite() -> &'static [SolvedProblem] {
    SUITE.get_or_init(|| {
        problems::certification_suite()
            .into_iter()
            .map(|(spec, cfg)| {
                let sol = solve(&spec, &cfg).unwrap_or_else(|e| panic!("{}: {e}", spec.name));
                let grid = sol.u.grid.clone();
                let hyp = spec.hypotheses(&grid).unwrap();
                let partition = build_partition(&hyp).unwrap();
                SolvedProblem {
                    name: spec.name.clone(),
                    sol,
                    hyp,
                    partition,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_6_truncated_energy_estimates() {
    for problem in certification_suite() {
        let sol = &problem.sol;
        let k_end = sol.u.grid.nt;

        let u0_max = sol.u.slice(0).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = u0_max.max(1.0);
        let span = (sol.u.max() - floor).max(0.5);
        let kappas: Vec<f64> = (0..10).map(|i| floor + span * i as f64 / 9.0).collect();
        let verdicts =
            check_energy_estimate(sol, &problem.hyp, &kappas, k_end, SolutionKind::Subsolution)
                .unwrap();
        for v in &verdicts {
            assert!(
                v.lhs <= v.rhs * (1.0 + 1e-9),
                "{}: level {} lhs {} rhs {}",
                problem.name,
                v.kappa,
                v.lhs,
                v.rhs
            );
        }

        // mirrored estimate on the negated problem
        let neg_floor = (-sol.u.slice(0).iter().cloned().fold(f64::INFINITY, f64::min)).max(1.0);
        let neg_span = ((-sol.u.min()) - neg_floor).max(0.5);
        let neg_kappas: Vec<f64> = (0..10)
            .map(|i| neg_floor + neg_span * i as f64 / 9.0)
            .collect();
        let verdicts = check_energy_estimate(
            sol,
            &problem.hyp,
            &neg_kappas,
            k_end,
            SolutionKind::Supersolution,
        )
        .unwrap();
        for v in &verdicts {
            assert!(
                v.lhs <= v.rhs * (1.0 + 1e-9),
                "{} (mirror): level {} lhs {} rhs {}",
                problem.name,
                v.kappa,
                v.lhs,
                v.rhs
            );
        }
    }
    pass(6, "truncated-energy-estimates", "3 problems x 10 levels x 2 modes");
}

#[test]
fn criterion_7_certificate_soundness() {
    for problem in certification_suite() {
        let upper =
            compute_bound_certificate(&problem.sol, &problem.hyp, &problem.partition, &problem.name)
                .unwrap();
        let lower =
            supersolution_certificate(&problem.sol, &problem.hyp, &problem.partition, &problem.name)
                .unwrap();
        let u_max = problem.sol.u.max();
        let u_min = problem.sol.u.min();
        assert!(
            upper.final_bound.is_finite() && lower.final_bound.is_finite(),
            "{}: certificate not finite",
            problem.name
        );
        assert!(
            u_max <= upper.final_bound,
            "{}: max {} above bound {}",
            problem.name,
            u_max,
            upper.final_bound
        );
        assert!(
            u_min >= lower.global_bound(),
            "{}: min {} below bound {}",
            problem.name,
            u_min,
            lower.global_bound()
        );
        assert!(upper.algebra.eta_hat < 1.0 && lower.algebra.eta_hat < 1.0);
        for c in &upper.ledger {
            assert!(c.is_finite() && *c > 0.0);
        }
        // ordering of the certified quantities
        assert!(upper.kappa >= upper.initial_sup.max(1.0));
        assert!(upper.final_bound >= upper.kappa);
    }

    // hand-derived exponent algebra, reproduced exactly
    let patch = Patch {
        slab: 0,
        ball: 0,
        p_min: 2.0,
        p_max: 2.0,
        q1_min: 2.0,
        q1_max: 2.0,
        q2_max: Some(2.0),
        admissible: true,
    };
    let algebra = exponent_algebra(&[&patch], 2, 2.0, 2.0).unwrap();
    assert_eq!(algebra.eta_hat, 0.875);
    assert_eq!(algebra.delta1, 0.125);
    assert_eq!(algebra.delta2, 4.0);
    assert_eq!(algebra.beta, 16.0);
    pass(7, "certificate-soundness", "3 problems, hand example exact");
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_norm_axioms() {
    let grid = SpaceTimeGrid::new(BoxDomain::unit_interval(), 1.0, 6, vec![17]).unwrap();
    let mut rng = SplitMix64::new(8);
    for trial in 0..100 {
        let u = SampledField::from_fn(&grid, |_, _| rng.range(-2.0, 2.0));
        let v = SampledField::from_fn(&grid, |_, _| rng.range(-2.0, 2.0));
        let p_vals: Vec<f64> = (0..grid.n_slices() * grid.n_nodes())
            .map(|_| rng.range(1.2, 3.5))
            .collect();
        let pf = |k: usize, j: usize| p_vals[k * grid.n_nodes() + j];
        let norm = |f: &SampledField| {
            luxemburg_from_samples(&modular_samples(f, pf, Region::Interior, grid.nt)).unwrap()
        };
        let nu = norm(&u);
        let nv = norm(&v);
        // absolute homogeneity
        for lam in [0.1, 3.7, 10.0] {
            let nl = norm(&u.scale(lam));
            assert!(
                (nl - lam * nu).abs() <= 1e-8 * (1.0 + lam * nu),
                "trial {trial}: homogeneity at λ = {lam}"
            );
        }
        // triangle inequality
        let nsum = norm(&u.zip(&v, |a, b| a + b));
        assert!(nsum <= nu + nv + 1e-8, "trial {trial}: triangle inequality");
        // unit ball property
        if nu > 0.0 {
            let m = modular_value(&modular_samples(
                &u.scale(1.0 / nu),
                pf,
                Region::Interior,
                grid.nt,
            ));
            assert!(m <= 1.0 + 1e-8, "trial {trial}: unit ball, modular {m}");
        }
        // constant-exponent agreement with the classical norm
        let p = rng.range(1.2, 3.5);
        let samples = modular_samples(&u, |_, _| p, Region::Interior, grid.nt);
        let lux = luxemburg_from_samples(&samples).unwrap();
        let classical = modular_value(&samples).powf(1.0 / p);
        assert!(
            (lux - classical).abs() <= 1e-8 * (1.0 + classical),
            "trial {trial}: constant-exponent agreement"
        );
    }
    pass(8, "norm-axioms", "100 random fields, tolerances 1e-8");
}
