//! Desk-scale weak solutions of the quasilinear initial-boundary value
//! problem
//!
//! ```text
//! u_t - div A(t,x,u,∇u) = B(t,x,u,∇u) + g(t,x)   in (0,T) × Ω,
//!       A(t,x,u,∇u) · ν = C(t,x,u)               on (0,T) × Γ,
//! ```
//!
//! discretized by implicit Euler in time and a conservative face-flux
//! finite-difference scheme in space. Boundary conditions enter through the
//! flux on the outer faces of the boundary dual cells, which keeps the
//! discrete divergence theorem exact: with B = C = g = 0 the total mass
//! ∫_Ω u dx is conserved to solver tolerance at every step.
//!
//! Each time step solves the nonlinear nodal system with a damped
//! Jacobian-free Newton-Krylov iteration (BiCGStab inner solves,
//! finite-difference Jacobian action) and a damped relaxation fallback.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    gradient, integrate_boundary_slice, integrate_slice, trace, BoxDomain, SampledField,
    SpaceTimeGrid, TraceField,
};
use crate::exponents::{
    validate_structure, ExponentField, FieldSupport, HypothesisSet, StructureConsts,
    StructureReport, StructureSample,
};
use crate::{Error, Result};

pub type ScalarFieldFn = Box<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type SpatialFieldFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// (t, x, s, ξ, eps_reg) ↦ A; the regularization is threaded through so the
/// solver's configuration controls it.
pub type FluxFn = Box<dyn Fn(f64, &[f64], f64, &[f64], f64) -> [f64; 3] + Send + Sync>;
pub type ReactionFn = Box<dyn Fn(f64, &[f64], f64, &[f64], f64) -> f64 + Send + Sync>;
pub type BoundaryFluxFn = Box<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;

/// A full problem instance: geometry, horizon, data, structure functions
/// and the hypothesis data (exponents and structure constants).
pub struct ProblemSpec {
    pub name: String,
    pub domain: BoxDomain,
    pub t_end: f64,
    pub u0: SpatialFieldFn,
    pub flux_fn: FluxFn,
    pub reaction_fn: ReactionFn,
    pub boundary_fn: BoundaryFluxFn,
    /// extra source for manufactured solutions
    pub forcing: Option<ScalarFieldFn>,
    pub p_fn: ScalarFieldFn,
    pub q1_fn: ScalarFieldFn,
    pub q2_fn: ScalarFieldFn,
    pub consts: StructureConsts,
    /// regularization used when the structure functions are evaluated
    /// outside a solve (diagnostics, residuals)
    pub default_eps: f64,
}

impl ProblemSpec {
    pub fn flux(&self, t: f64, x: &[f64], s: f64, xi: &[f64]) -> [f64; 3] {
        (self.flux_fn)(t, x, s, xi, self.default_eps)
    }

    /// Reaction term including the manufactured forcing, if any.
    pub fn reaction(&self, t: f64, x: &[f64], s: f64, xi: &[f64]) -> f64 {
        let mut v = (self.reaction_fn)(t, x, s, xi, self.default_eps);
        if let Some(g) = &self.forcing {
            v += g(t, x);
        }
        v
    }

    pub fn boundary_flux(&self, t: f64, x: &[f64], s: f64) -> f64 {
        (self.boundary_fn)(t, x, s)
    }

    pub fn u0_at(&self, x: &[f64]) -> f64 {
        (self.u0)(x)
    }

    /// Sample the exponent triple on a grid and bundle the hypothesis data.
    pub fn hypotheses(&self, grid: &Arc<SpaceTimeGrid>) -> Result<HypothesisSet> {
        HypothesisSet::new(
            ExponentField::from_fn(grid, FieldSupport::SpaceTime, |t, x| (self.p_fn)(t, x))?,
            ExponentField::from_fn(grid, FieldSupport::SpaceTime, |t, x| (self.q1_fn)(t, x))?,
            ExponentField::from_fn(grid, FieldSupport::Boundary, |t, x| (self.q2_fn)(t, x))?,
            self.consts.clone(),
        )
    }

    /// Validate the declared growth bounds on the default sample set.
    pub fn validate(&self, grid: &Arc<SpaceTimeGrid>, seed: u64) -> Result<StructureReport> {
        let h = self.hypotheses(grid)?;
        let samples = crate::exponents::default_structure_samples(grid, seed);
        Ok(self.validate_on(&h, &samples))
    }

    pub fn validate_on(&self, h: &HypothesisSet, samples: &[StructureSample]) -> StructureReport {
        let eps = self.default_eps;
        let a = |t: f64, x: &[f64], s: f64, xi: &[f64]| {
            (self.flux_fn)(t, x, s, xi, eps)[..xi.len()].to_vec()
        };
        let b = |t: f64, x: &[f64], s: f64, xi: &[f64]| (self.reaction_fn)(t, x, s, xi, eps);
        let c = |t: f64, x: &[f64], s: f64| (self.boundary_fn)(t, x, s);
        validate_structure(&a, &b, &c, h, samples)
    }
}

/// Resolution and nonlinear-solver knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// spatial nodes per axis
    pub shape: Vec<usize>,
    /// time steps
    pub nt: usize,
    /// gradient regularization: powers of |∇u| use √(|∇u|² + eps_reg)
    pub eps_reg: f64,
    /// convergence threshold on Δt · ‖F‖_∞ (update units)
    pub tolerance: f64,
    /// nonlinear iteration cap per step
    pub max_iterations: usize,
    /// step-halving factor for damping
    pub damping: f64,
}

impl SolverConfig {
    pub fn new(shape: Vec<usize>, nt: usize) -> Self {
        SolverConfig {
            shape,
            nt,
            eps_reg: 1e-8,
            tolerance: 1e-10,
            max_iterations: 100,
            damping: 0.5,
        }
    }
}

/// Per-step nonlinear solver diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub newton_iterations: usize,
    pub fallback_iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// A computed space-time solution with boundary trace and diagnostics.
pub struct Solution {
    pub u: SampledField,
    pub boundary: TraceField,
    pub diagnostics: Vec<StepDiagnostics>,
}

struct StepContext<'a> {
    grid: &'a SpaceTimeGrid,
    spec: &'a ProblemSpec,
    eps: f64,
    t_new: f64,
    dt: f64,
    prev: &'a [f64],
    strides: Vec<usize>,
}

impl<'a> StepContext<'a> {
    /// Nodal gradient of `v` (central interior, one-sided at walls).
    fn nodal_gradient(&self, v: &[f64]) -> Vec<f64> {
        let grid = self.grid;
        let dim = grid.dim();
        let mut out = vec![0.0; v.len() * dim];
        for j in 0..grid.n_nodes() {
            for d in 0..dim {
                let h = grid.spacing()[d];
                let i = grid.axis_index(j, d);
                let g = if i == 0 {
                    (v[j + self.strides[d]] - v[j]) / h
                } else if i == grid.shape[d] - 1 {
                    (v[j] - v[j - self.strides[d]]) / h
                } else {
                    (v[j + self.strides[d]] - v[j - self.strides[d]]) / (2.0 * h)
                };
                out[j * dim + d] = g;
            }
        }
        out
    }

    /// Residual F(v) of the implicit Euler step.
    fn residual(&self, v: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let dim = grid.dim();
        let n = grid.n_nodes();
        let grad = self.nodal_gradient(v);

        // face fluxes: face (j, d) sits between j and j + e_d
        let mut face_flux = vec![0.0; n * dim];
        let mut xi = [0.0f64; 3];
        let mut xmid = [0.0f64; 3];
        for j in 0..n {
            for d in 0..dim {
                if grid.axis_index(j, d) + 1 >= grid.shape[d] {
                    continue;
                }
                let jn = j + self.strides[d];
                let h = grid.spacing()[d];
                let xa = grid.coord_slice(j);
                let xb = grid.coord_slice(jn);
                for e in 0..dim {
                    xmid[e] = 0.5 * (xa[e] + xb[e]);
                    xi[e] = if e == d {
                        (v[jn] - v[j]) / h
                    } else {
                        0.5 * (grad[j * dim + e] + grad[jn * dim + e])
                    };
                }
                let s = 0.5 * (v[j] + v[jn]);
                let a = (self.spec.flux_fn)(self.t_new, &xmid[..dim], s, &xi[..dim], self.eps);
                face_flux[j * dim + d] = a[d];
            }
        }

        for j in 0..n {
            let x = grid.coord_slice(j);
            let mut div = 0.0;
            for d in 0..dim {
                let plus = if grid.axis_index(j, d) + 1 < grid.shape[d] {
                    face_flux[j * dim + d]
                } else {
                    // outward normal +e_d: A·ν = C means A_d = C
                    self.spec.boundary_flux(self.t_new, x, v[j])
                };
                let minus = if grid.axis_index(j, d) > 0 {
                    face_flux[(j - self.strides[d]) * dim + d]
                } else {
                    // outward normal -e_d: A·ν = C means A_d = -C
                    -self.spec.boundary_flux(self.t_new, x, v[j])
                };
                div += (plus - minus) / grid.cell_width(j, d);
            }
            let xi_node = &grad[j * dim..(j + 1) * dim];
            let mut b = (self.spec.reaction_fn)(self.t_new, x, v[j], xi_node, self.eps);
            if let Some(g) = &self.spec.forcing {
                b += g(self.t_new, x);
            }
            out[j] = (v[j] - self.prev[j]) / self.dt - div - b;
        }
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Unpreconditioned BiCGStab on the finite-difference Jacobian action.
/// Returns the approximate solution and whether the relative residual
/// target was met.
fn bicgstab(
    ctx: &StepContext,
    v: &[f64],
    f0: &[f64],
    max_iters: usize,
) -> (Vec<f64>, bool) {
    let n = v.len();
    let b: Vec<f64> = f0.iter().map(|&f| -f).collect();
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut p = vec![0.0; n];
    let mut vv = vec![0.0; n];
    let b_norm = linf(&b).max(1e-300);
    let target = 1e-10 * b_norm;

    let mut scratch_v = vec![0.0; n];
    let mut scratch_f = vec![0.0; n];
    let mut matvec = |w: &[f64], out: &mut [f64]| {
        let wn = linf(w);
        if wn == 0.0 {
            out.fill(0.0);
            return;
        }
        let sigma = 1e-8 * (1.0 + linf(v)) / wn;
        for i in 0..n {
            scratch_v[i] = v[i] + sigma * w[i];
        }
        ctx.residual(&scratch_v, &mut scratch_f);
        for i in 0..n {
            out[i] = (scratch_f[i] - f0[i]) / sigma;
        }
    };

    for _ in 0..max_iters {
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 {
            break; // breakdown: return best effort
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * vv[i]);
        }
        matvec(&p, &mut vv);
        let denom: f64 = r0.iter().zip(&vv).map(|(a, b)| a * b).sum();
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * vv[i]).collect();
        if linf(&s) <= target {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return (x, true);
        }
        let mut t = vec![0.0; n];
        matvec(&s, &mut t);
        let tt: f64 = t.iter().map(|a| a * a).sum();
        if tt < 1e-300 {
            break;
        }
        omega = t.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if linf(&r) <= target {
            return (x, true);
        }
        if omega.abs() < 1e-300 {
            break;
        }
    }
    let converged = linf(&r) <= 1e-6 * b_norm;
    (x, converged)
}

/// Implicit Euler march. Every step must converge; failure aborts with
/// step diagnostics in the error message.
pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<Solution> {
    if !(cfg.eps_reg > 0.0) || !(cfg.tolerance > 0.0) || !(cfg.damping > 0.0 && cfg.damping < 1.0) {
        return Err(Error::Precondition(
            "solver config needs eps_reg > 0, tolerance > 0 and damping in (0, 1)".into(),
        ));
    }
    let grid = SpaceTimeGrid::new(spec.domain.clone(), spec.t_end, cfg.nt, cfg.shape.clone())?;
    let n = grid.n_nodes();
    let dim = grid.dim();
    let mut u = SampledField::zeros(&grid);
    for j in 0..n {
        let v = spec.u0_at(&grid.coords(j));
        if !v.is_finite() {
            return Err(Error::Precondition("initial datum not finite at a node".into()));
        }
        u.set(0, j, v);
    }
    let mut strides = vec![1usize; dim];
    for d in 1..dim {
        strides[d] = strides[d - 1] * grid.shape[d - 1];
    }
    let dt = grid.dt();
    let mut diagnostics = Vec::with_capacity(cfg.nt);

    for step in 0..cfg.nt {
        let prev: Vec<f64> = u.slice(step).to_vec();
        let ctx = StepContext {
            grid: &grid,
            spec,
            eps: cfg.eps_reg,
            t_new: grid.time(step + 1),
            dt,
            prev: &prev,
            strides: strides.clone(),
        };
        let mut v = prev.clone();
        let mut f = vec![0.0; n];
        ctx.residual(&v, &mut f);
        let mut res = linf(&f);
        let mut newton_iterations = 0usize;
        let mut fallback_iterations = 0usize;
        let mut converged = dt * res <= cfg.tolerance;

        while !converged && newton_iterations + fallback_iterations < cfg.max_iterations {
            // Newton direction from the linearized system
            let (dir, _converged) = bicgstab(&ctx, &v, &f, 400);
            let mut accepted = false;
            let mut alpha = 1.0;
            let mut trial = vec![0.0; n];
            let mut f_trial = vec![0.0; n];
            for _ in 0..10 {
                for i in 0..n {
                    trial[i] = v[i] + alpha * dir[i];
                }
                ctx.residual(&trial, &mut f_trial);
                let res_trial = linf(&f_trial);
                if res_trial.is_finite() && res_trial < res {
                    v.copy_from_slice(&trial);
                    f.copy_from_slice(&f_trial);
                    res = res_trial;
                    accepted = true;
                    break;
                }
                alpha *= cfg.damping;
            }
            if accepted {
                newton_iterations += 1;
            } else {
                // damped relaxation fallback on the raw residual
                let mut theta = 1.0;
                let mut improved = false;
                for _ in 0..20 {
                    for i in 0..n {
                        trial[i] = v[i] - theta * dt * f[i];
                    }
                    ctx.residual(&trial, &mut f_trial);
                    let res_trial = linf(&f_trial);
                    if res_trial.is_finite() && res_trial < res {
                        v.copy_from_slice(&trial);
                        f.copy_from_slice(&f_trial);
                        res = res_trial;
                        improved = true;
                        break;
                    }
                    theta *= cfg.damping;
                }
                if !improved {
                    return Err(Error::SolverDiverged(format!(
                        "step {step}: stalled at residual {res:.3e} after {newton_iterations} newton / {fallback_iterations} fallback iterations"
                    )));
                }
                fallback_iterations += 1;
            }
            converged = dt * res <= cfg.tolerance;
        }

        if !converged {
            return Err(Error::SolverDiverged(format!(
                "step {step}: iteration cap {} reached, residual {res:.3e}",
                cfg.max_iterations
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::SolverDiverged(format!("step {step}: non-finite state")));
        }
        diagnostics.push(StepDiagnostics {
            step,
            newton_iterations,
            fallback_iterations,
            final_residual: res,
            converged,
        });
        u.slice_mut(step + 1).copy_from_slice(&v);
    }

    let boundary = trace(&u);
    Ok(Solution {
        u,
        boundary,
        diagnostics,
    })
}

/// Total mass ∫_Ω u(t_k) dx per slice.
pub fn mass_per_slice(sol: &Solution) -> Vec<f64> {
    (0..sol.u.grid.n_slices())
        .map(|k| integrate_slice(&sol.u.grid, sol.u.slice(k)))
        .collect()
}

/// Signed defect of the space-time weak formulation against one test field:
///
/// -∫ u0 φ(0) - ∫∫ u φ_t + ∫∫ A·∇φ - ∫∫ B φ - ∫∫_Γ C φ dσ.
///
/// Test fields must be nonnegative with φ(T, ·) = 0.
pub fn weak_defect(u: &SampledField, spec: &ProblemSpec, phi: &SampledField) -> f64 {
    let grid = &u.grid;
    let n = grid.n_nodes();
    let dt = grid.dt();
    let n_slices = grid.n_slices();
    let grad_u = gradient(u);
    let grad_phi = gradient(phi);

    // φ_t by central differences (one-sided at the ends)
    let phi_t = |k: usize, j: usize| -> f64 {
        if k == 0 {
            (phi.value(1, j) - phi.value(0, j)) / dt
        } else if k == n_slices - 1 {
            (phi.value(k, j) - phi.value(k - 1, j)) / dt
        } else {
            (phi.value(k + 1, j) - phi.value(k - 1, j)) / (2.0 * dt)
        }
    };

    let mut initial = 0.0;
    for j in 0..n {
        initial += grid.node_weight(j) * spec.u0_at(&grid.coords(j)) * phi.value(0, j);
    }

    let dim = grid.dim();
    let mut time_term = 0.0;
    let mut flux_term = 0.0;
    let mut reaction_term = 0.0;
    let mut boundary_term = 0.0;
    let mut xi = vec![0.0; dim];
    for k in 0..n_slices {
        let tw = grid.time_weight(k, grid.nt);
        let t = grid.time(k);
        let mut s_time = vec![0.0; n];
        let mut s_flux = vec![0.0; n];
        let mut s_react = vec![0.0; n];
        for j in 0..n {
            let x = grid.coords(j);
            for d in 0..dim {
                xi[d] = grad_u.component(k, j, d);
            }
            s_time[j] = u.value(k, j) * phi_t(k, j);
            let a = spec.flux(t, &x, u.value(k, j), &xi);
            s_flux[j] = (0..dim).map(|d| a[d] * grad_phi.component(k, j, d)).sum();
            s_react[j] = spec.reaction(t, &x, u.value(k, j), &xi) * phi.value(k, j);
        }
        time_term += tw * integrate_slice(grid, &s_time);
        flux_term += tw * integrate_slice(grid, &s_flux);
        reaction_term += tw * integrate_slice(grid, &s_react);
        let mut s_bdry = vec![0.0; n];
        for bn in grid.boundary_nodes() {
            let x = grid.coords(bn.node);
            s_bdry[bn.node] = spec.boundary_flux(t, &x, u.value(k, bn.node)) * phi.value(k, bn.node);
        }
        boundary_term += tw * integrate_boundary_slice(grid, &s_bdry);
    }

    -initial - time_term + flux_term - reaction_term - boundary_term
}

/// Max |defect| over a test set.
pub fn weak_residual(u: &SampledField, spec: &ProblemSpec, tests: &[SampledField]) -> f64 {
    tests
        .iter()
        .map(|phi| weak_defect(u, spec, phi).abs())
        .fold(0.0, f64::max)
}

/// Default discrete test class: nonnegative space-time bumps vanishing at
/// t = T — a spatially constant ramp plus localized bump products.
pub fn default_test_set(grid: &Arc<SpaceTimeGrid>, seed: u64) -> Vec<SampledField> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let t_end = grid.t_end;
    let dim = grid.dim();
    let mut out = vec![SampledField::from_fn(grid, |t, _| 1.0 - t / t_end)];
    for _ in 0..7 {
        let centers: Vec<f64> = (0..dim)
            .map(|d| {
                let lo = grid.domain.lower[d];
                let hi = grid.domain.upper[d];
                rng.range(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo))
            })
            .collect();
        let width: f64 = rng.range(0.15, 0.4);
        let freq = 1.0 + rng.index(3) as f64;
        out.push(SampledField::from_fn(grid, move |t, x| {
            let mut v = 1.0 - t / t_end;
            v *= 0.5 + 0.5 * (freq * std::f64::consts::PI * t / t_end).cos().powi(2);
            for d in 0..dim {
                let r = (x[d] - centers[d]) / width;
                v *= (1.0 - r * r).max(0.0).powi(2);
            }
            v
        }));
    }
    out
}
