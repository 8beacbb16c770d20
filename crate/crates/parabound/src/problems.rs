//! Built-in problem instances and the JSON problem configuration.
//!
//! The named structure functions are
//!
//! * `p-laplacian`: A = coeff · (|ξ|² + eps)^{(p(t,x)-2)/2} ξ,
//! * `power-reaction`: B = coeff · |s|^{q1(t,x)-2} s,
//! * `power-boundary-flux`: C = coeff · |s|^{q2(t,x)-2} s,
//!
//! plus `zero` and arbitrary expression strings over (t, x1..xN, s, xi) for
//! the scalar functions B and C.

use serde::{Deserialize, Serialize};

use crate::discretization::BoxDomain;
use crate::exponents::StructureConsts;
use crate::expr::{Expr, FIELD_VARS, STRUCTURE_VARS};
use crate::solver::{BoundaryFluxFn, FluxFn, ProblemSpec, ReactionFn, ScalarFieldFn, SolverConfig, SpatialFieldFn};
use crate::{Error, Result};

/// A = coeff (|ξ|² + eps)^{(p-2)/2} ξ with variable exponent p(t, x).
pub fn p_laplacian_flux(
    p: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    coeff: f64,
) -> FluxFn {
    Box::new(move |t, x, _s, xi, eps| {
        let p_val = p(t, x);
        let scale = if p_val == 2.0 {
            coeff
        } else {
            let mag2 = xi.iter().map(|v| v * v).sum::<f64>() + eps;
            coeff * mag2.powf((p_val - 2.0) / 2.0)
        };
        let mut out = [0.0; 3];
        for (o, &v) in out.iter_mut().zip(xi) {
            *o = scale * v;
        }
        out
    })
}

/// B = coeff |s|^{q1-2} s.
pub fn power_reaction(
    q1: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    coeff: f64,
) -> ReactionFn {
    Box::new(move |t, x, s, _xi, _eps| {
        if s == 0.0 {
            0.0
        } else {
            coeff * s.abs().powf(q1(t, x) - 2.0) * s
        }
    })
}

/// C = coeff |s|^{q2-2} s.
pub fn power_boundary_flux(
    q2: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    coeff: f64,
) -> BoundaryFluxFn {
    Box::new(move |t, x, s| {
        if s == 0.0 {
            0.0
        } else {
            coeff * s.abs().powf(q2(t, x) - 2.0) * s
        }
    })
}

pub fn zero_reaction() -> ReactionFn {
    Box::new(|_, _, _, _, _| 0.0)
}

pub fn zero_boundary_flux() -> BoundaryFluxFn {
    Box::new(|_, _, _| 0.0)
}

fn small_consts() -> StructureConsts {
    StructureConsts {
        a: [1.0, 0.01, 0.01, 1.0, 0.01, 0.01],
        b: [0.01; 3],
        c: [0.01; 2],
    }
}

/// Everything zero on the unit interval; weak defects vanish identically.
pub fn zero_problem_1d() -> ProblemSpec {
    ProblemSpec {
        name: "zero".into(),
        domain: BoxDomain::unit_interval(),
        t_end: 1.0,
        u0: Box::new(|_| 0.0),
        flux_fn: p_laplacian_flux(|_, _| 2.0, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(|_, _| 2.0),
        q1_fn: Box::new(|_, _| 2.0),
        q2_fn: Box::new(|_, _| 2.0),
        consts: small_consts(),
        default_eps: 1e-8,
    }
}

/// 1D heat equation with homogeneous Neumann data; exact solution
/// e^{-π² t} cos(π x) for u0 = cos(π x).
pub fn heat_neumann_1d() -> ProblemSpec {
    heat_neumann_1d_with_u0(Box::new(|x| (std::f64::consts::PI * x[0]).cos()))
}

pub fn heat_neumann_1d_with_u0(u0: SpatialFieldFn) -> ProblemSpec {
    ProblemSpec {
        name: "heat-neumann-1d".into(),
        domain: BoxDomain::unit_interval(),
        t_end: 0.1,
        u0,
        flux_fn: p_laplacian_flux(|_, _| 2.0, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(|_, _| 2.0),
        q1_fn: Box::new(|_, _| 2.0),
        q2_fn: Box::new(|_, _| 2.0),
        consts: small_consts(),
        default_eps: 1e-8,
    }
}

pub fn heat1d_exact(t: f64, x: &[f64]) -> f64 {
    let pi = std::f64::consts::PI;
    (-pi * pi * t).exp() * (pi * x[0]).cos()
}

/// 2D heat mode for convergence studies: u0 = cos(πx)cos(πy), exact
/// solution e^{-2π² t} cos(πx) cos(πy).
pub fn heat_neumann_2d_mode() -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec {
        name: "heat-neumann-2d-mode".into(),
        domain: BoxDomain::unit_square(),
        t_end: 0.05,
        u0: Box::new(move |x| (pi * x[0]).cos() * (pi * x[1]).cos()),
        flux_fn: p_laplacian_flux(|_, _| 2.0, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(|_, _| 2.0),
        q1_fn: Box::new(|_, _| 2.0),
        q2_fn: Box::new(|_, _| 2.0),
        consts: small_consts(),
        default_eps: 1e-8,
    }
}

pub fn heat2d_exact(t: f64, x: &[f64]) -> f64 {
    let pi = std::f64::consts::PI;
    (-2.0 * pi * pi * t).exp() * (pi * x[0]).cos() * (pi * x[1]).cos()
}

/// 1D nonlinear diffusion without sources (conservation testbed).
pub fn p_laplacian_neumann_1d(p: f64) -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec {
        name: "plap-neumann-1d".into(),
        domain: BoxDomain::unit_interval(),
        t_end: 0.1,
        u0: Box::new(move |x| 1.0 + 0.5 * (pi * x[0]).cos()),
        flux_fn: p_laplacian_flux(move |_, _| p, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(move |_, _| p),
        q1_fn: Box::new(move |_, _| p + 0.25),
        q2_fn: Box::new(move |_, _| p + 0.1),
        consts: StructureConsts {
            a: [1.25, 0.01, 0.01, 1.0, 0.01, 0.01],
            b: [0.01; 3],
            c: [0.01; 2],
        },
        default_eps: 1e-8,
    }
}

/// Exponent of the 1D manufactured problem: p(t, x) = 2 + 0.5 t x.
pub fn mms_exponent(t: f64, x: &[f64]) -> f64 {
    2.0 + 0.5 * t * x[0]
}

/// Manufactured target u*(t, x) = e^{-t} (1 + x²).
pub fn mms_exact(t: f64, x: &[f64]) -> f64 {
    (-t).exp() * (1.0 + x[0] * x[0])
}

fn mms_exact_dx(t: f64, x: f64) -> f64 {
    (-t).exp() * 2.0 * x
}

/// 1D variable-exponent diffusion manufactured around `mms_exact`: the
/// forcing is u*_t - d/dx A(t, x, u*, u*_x) with the flux divergence taken
/// by high-accuracy central differencing of the closed-form flux profile,
/// and the boundary flux is the exact A·ν of the target.
pub fn variable_exponent_mms_1d() -> ProblemSpec {
    let eps = 1e-8;
    let flux_profile = move |t: f64, y: f64| -> f64 {
        let p = mms_exponent(t, &[y]);
        let g = mms_exact_dx(t, y);
        (g * g + eps).powf((p - 2.0) / 2.0) * g
    };
    let forcing = move |t: f64, x: &[f64]| -> f64 {
        let u_t = -mms_exact(t, x);
        let delta = 1e-5;
        let div = (flux_profile(t, x[0] + delta) - flux_profile(t, x[0] - delta)) / (2.0 * delta);
        u_t - div
    };
    let boundary = move |t: f64, x: &[f64], _s: f64| -> f64 {
        // outward flux of the target: A·ν with ν = ±1
        if x[0] > 0.5 {
            flux_profile(t, 1.0)
        } else {
            -flux_profile(t, 0.0)
        }
    };
    ProblemSpec {
        name: "varp-mms-1d".into(),
        domain: BoxDomain::unit_interval(),
        t_end: 0.5,
        u0: Box::new(|x| mms_exact(0.0, x)),
        flux_fn: p_laplacian_flux(mms_exponent, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: Box::new(boundary),
        forcing: Some(Box::new(forcing)),
        p_fn: Box::new(mms_exponent),
        q1_fn: Box::new(|t, x| mms_exponent(t, x) + 0.25),
        q2_fn: Box::new(|t, x| mms_exponent(t, x) + 0.1),
        consts: StructureConsts {
            a: [1.25, 0.01, 0.01, 1.0, 0.01, 0.01],
            b: [0.01; 3],
            // the manufactured boundary flux is s-independent; its sup-norm
            // (the target's wall flux, at most 2) sits in the constant term
            c: [0.01, 2.1],
        },
        default_eps: eps,
    }
}

/// Certification suite problem: 2D heat with homogeneous Neumann walls and
/// constant exponents p = q1 = q2 = 2.
pub fn heat_neumann_2d_suite() -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec {
        name: "heat-neumann".into(),
        domain: BoxDomain::unit_square(),
        t_end: 0.3,
        u0: Box::new(move |x| 1.0 + (pi * x[0]).cos() * (pi * x[1]).cos()),
        flux_fn: p_laplacian_flux(|_, _| 2.0, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(|_, _| 2.0),
        q1_fn: Box::new(|_, _| 2.0),
        q2_fn: Box::new(|_, _| 2.0),
        consts: StructureConsts {
            a: [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            b: [1.0; 3],
            c: [1.0; 2],
        },
        default_eps: 1e-8,
    }
}

/// Certification suite problem: p = 2.5 diffusion with a superlinear power
/// reaction that pushes the solution above its initial range.
pub fn plap_reaction_2d_suite() -> ProblemSpec {
    let pi = std::f64::consts::PI;
    let p = 2.5;
    let q1 = 2.75;
    ProblemSpec {
        name: "plap-reaction".into(),
        domain: BoxDomain::unit_square(),
        t_end: 0.25,
        u0: Box::new(move |x| 2.0 - 0.3 * (pi * x[0]).cos() * (pi * x[1]).cos()),
        flux_fn: p_laplacian_flux(move |_, _| p, 1.0),
        reaction_fn: power_reaction(move |_, _| q1, 1.0),
        boundary_fn: zero_boundary_flux(),
        forcing: None,
        p_fn: Box::new(move |_, _| p),
        q1_fn: Box::new(move |_, _| q1),
        q2_fn: Box::new(|_, _| 2.6),
        consts: StructureConsts {
            a: [1.25, 0.01, 0.01, 1.0, 0.1, 0.1],
            b: [0.01, 1.0, 0.01],
            c: [0.01; 2],
        },
        default_eps: 1e-8,
    }
}

/// Certification suite problem: mildly varying p(t, x) with a nonlinear
/// boundary influx.
pub fn varp_boundary_flux_2d_suite() -> ProblemSpec {
    let pi = std::f64::consts::PI;
    let p_fn = move |t: f64, x: &[f64]| 2.0 + 0.05 * (pi * x[0]).sin() * (pi * x[1]).sin() * (2.0 * t).cos();
    let q2_fn = move |t: f64, x: &[f64]| p_fn(t, x) + 0.05;
    ProblemSpec {
        name: "varp-boundary-flux".into(),
        domain: BoxDomain::unit_square(),
        t_end: 0.4,
        u0: Box::new(move |x| 1.0 + 0.3 * (pi * x[0]).cos() * (pi * x[1]).cos()),
        flux_fn: p_laplacian_flux(p_fn, 1.0),
        reaction_fn: zero_reaction(),
        boundary_fn: power_boundary_flux(q2_fn, 0.5),
        forcing: None,
        p_fn: Box::new(p_fn),
        q1_fn: Box::new(move |t, x| p_fn(t, x) + 0.2),
        q2_fn: Box::new(q2_fn),
        consts: StructureConsts {
            a: [1.05, 0.01, 0.01, 1.0, 0.01, 0.01],
            b: [0.01; 3],
            c: [0.5, 0.01],
        },
        default_eps: 1e-8,
    }
}

/// The three certification problems with desk-scale resolutions.
pub fn certification_suite() -> Vec<(ProblemSpec, SolverConfig)> {
    vec![
        (heat_neumann_2d_suite(), SolverConfig::new(vec![21, 21], 24)),
        (plap_reaction_2d_suite(), SolverConfig::new(vec![17, 17], 20)),
        (varp_boundary_flux_2d_suite(), SolverConfig::new(vec![17, 17], 20)),
    ]
}

/// Look up a built-in problem by its CLI name.
pub fn by_name(name: &str) -> Option<(ProblemSpec, SolverConfig)> {
    match name {
        "heat-neumann" => Some((heat_neumann_2d_suite(), SolverConfig::new(vec![21, 21], 24))),
        "plap-reaction" => Some((plap_reaction_2d_suite(), SolverConfig::new(vec![17, 17], 20))),
        "varp-boundary-flux" => Some((
            varp_boundary_flux_2d_suite(),
            SolverConfig::new(vec![17, 17], 20),
        )),
        "heat-neumann-1d" => Some((heat_neumann_1d(), SolverConfig::new(vec![65], 64))),
        "varp-mms-1d" => Some((variable_exponent_mms_1d(), SolverConfig::new(vec![65], 32))),
        _ => None,
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "heat-neumann",
        "plap-reaction",
        "varp-boundary-flux",
        "heat-neumann-1d",
        "varp-mms-1d",
    ]
}

/// JSON description of a scalar structure function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarStructureConfig {
    Zero,
    PowerReaction { coeff: f64 },
    PowerBoundaryFlux { coeff: f64 },
    /// expression over t, x1..xN, s, xi (gradient magnitude)
    Expression { source: String },
}

/// JSON description of the flux A (vector-valued; named built-ins only).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FluxConfig {
    PLaplacian { coeff: f64 },
}

/// Full problem description as ingested from a JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_end: f64,
    pub u0: String,
    pub p: String,
    pub q1: String,
    pub q2: String,
    pub flux: FluxConfig,
    pub reaction: ScalarStructureConfig,
    pub boundary: ScalarStructureConfig,
    pub constants: StructureConsts,
}

fn field_expr_fn(src: &str, dim: usize) -> Result<ScalarFieldFn> {
    let expr = Expr::parse(src, &FIELD_VARS)?;
    Ok(Box::new(move |t, x| {
        let mut args = [t, 0.0, 0.0, 0.0];
        args[1..=dim.min(3)].copy_from_slice(&x[..dim.min(3)]);
        expr.eval(&args)
    }))
}

fn spatial_expr_fn(src: &str, dim: usize) -> Result<SpatialFieldFn> {
    let f = field_expr_fn(src, dim)?;
    Ok(Box::new(move |x| f(0.0, x)))
}

impl ProblemConfig {
    pub fn to_problem_spec(&self) -> Result<ProblemSpec> {
        let domain = BoxDomain::new(self.lower.clone(), self.upper.clone())?;
        let dim = domain.dim();
        if !(self.t_end > 0.0) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if !self.constants.all_positive() {
            return Err(Error::Config("structure constants must be strictly positive".into()));
        }
        let p_fn = field_expr_fn(&self.p, dim)?;
        let q1_fn = field_expr_fn(&self.q1, dim)?;
        let q2_fn = field_expr_fn(&self.q2, dim)?;
        let p_for_flux = field_expr_fn(&self.p, dim)?;
        let flux_fn = match &self.flux {
            FluxConfig::PLaplacian { coeff } => {
                let c = *coeff;
                p_laplacian_flux(move |t, x| p_for_flux(t, x), c)
            }
        };
        let reaction_fn: ReactionFn = match &self.reaction {
            ScalarStructureConfig::Zero => zero_reaction(),
            ScalarStructureConfig::PowerReaction { coeff } => {
                let q = field_expr_fn(&self.q1, dim)?;
                power_reaction(move |t, x| q(t, x), *coeff)
            }
            ScalarStructureConfig::PowerBoundaryFlux { .. } => {
                return Err(Error::Config("power-boundary-flux is not a reaction term".into()));
            }
            ScalarStructureConfig::Expression { source } => {
                let expr = Expr::parse(source, &STRUCTURE_VARS)?;
                Box::new(move |t, x: &[f64], s, xi: &[f64], _eps| {
                    let mag = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let mut args = [t, 0.0, 0.0, 0.0, s, mag];
                    args[1..=x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
                    expr.eval(&args)
                })
            }
        };
        let boundary_fn: BoundaryFluxFn = match &self.boundary {
            ScalarStructureConfig::Zero => zero_boundary_flux(),
            ScalarStructureConfig::PowerBoundaryFlux { coeff } => {
                let q = field_expr_fn(&self.q2, dim)?;
                power_boundary_flux(move |t, x| q(t, x), *coeff)
            }
            ScalarStructureConfig::PowerReaction { .. } => {
                return Err(Error::Config("power-reaction is not a boundary flux".into()));
            }
            ScalarStructureConfig::Expression { source } => {
                let expr = Expr::parse(source, &STRUCTURE_VARS)?;
                Box::new(move |t, x: &[f64], s| {
                    let mut args = [t, 0.0, 0.0, 0.0, s, 0.0];
                    args[1..=x.len().min(3)].copy_from_slice(&x[..x.len().min(3)]);
                    expr.eval(&args)
                })
            }
        };
        let u0 = spatial_expr_fn(&self.u0, dim)?;
        Ok(ProblemSpec {
            name: self.name.clone(),
            domain,
            t_end: self.t_end,
            u0,
            flux_fn,
            reaction_fn,
            boundary_fn,
            forcing: None,
            p_fn,
            q1_fn,
            q2_fn,
            consts: self.constants.clone(),
            default_eps: 1e-8,
        })
    }
}
