//! Energies, discrete gradients, and the scaling diagnostic for the family
//! `J_lambda(u) = 1/2 |grad u|^2 - int F^lambda(u)`.
//!
//! The kinetic term and the potential quadrature share one discretization, and
//! the gradient is the exact discrete gradient of that functional divided by
//! the node weights. Monotonicity in lambda is exact in floating point:
//! `J_lambda = (kinetic/2 + int F2) - lambda * int F1` with `int F1 >= 0`.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::nonlinearity::SplitScheme;
use serde::Serialize;

/// Component-wise record of one energy evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential_f1: f64,
    pub potential_f2: f64,
    pub j_lambda: f64,
    pub a: f64,
    pub b: f64,
    pub p_lambda: f64,
    pub lambda: f64,
}

fn check_lambda(scheme: &SplitScheme, lambda: f64) -> Result<()> {
    if lambda < scheme.lambda0 - 1e-12 || lambda > 1.0 + 1e-12 {
        return Err(Error::LambdaOutOfRange(lambda, scheme.lambda0));
    }
    Ok(())
}

/// Full energy breakdown of a field at a given lambda.
pub fn energy(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<EnergyBreakdown> {
    check_lambda(scheme, lambda)?;
    let grid = u.grid();
    let kinetic = grid.kinetic(u.values());
    let weights = grid.node_weights();
    let mut int_f1 = 0.0;
    let mut int_f2 = 0.0;
    for (w, &v) in weights.iter().zip(u.values()) {
        if *w != 0.0 {
            int_f1 += w * scheme.big_f1_raw(v);
            int_f2 += w * scheme.big_f2_raw(v);
        }
    }
    let a = 0.5 * kinetic + int_f2;
    let b = int_f1;
    let j_lambda = a - lambda * b;
    let n = grid.ambient_dim() as f64;
    let p_lambda = 0.5 * (n - 2.0) * kinetic - n * (lambda * int_f1 - int_f2);
    Ok(EnergyBreakdown {
        kinetic,
        potential_f1: int_f1,
        potential_f2: int_f2,
        j_lambda,
        a,
        b,
        p_lambda,
        lambda,
    })
}

/// `J_lambda(u)` alone.
pub fn j_lambda(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<f64> {
    Ok(energy(u, scheme, lambda)?.j_lambda)
}

/// Pohozaev functional `P_lambda(u)`.
pub fn pohozaev(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<f64> {
    Ok(energy(u, scheme, lambda)?.p_lambda)
}

/// The L2-weighted gradient of the discrete `J_lambda`: node-wise
/// `-Delta_w u - f^lambda(u)` on interior nodes, zero on the Dirichlet
/// boundary, projected when the symmetry class demands it.
pub fn gradient(u: &Field, scheme: &SplitScheme, lambda: f64) -> Result<Field> {
    check_lambda(scheme, lambda)?;
    let grid = u.grid();
    let mut out = grid.neg_laplacian_weighted(u.values());
    for (flat, g) in out.iter_mut().enumerate() {
        if !grid.is_dirichlet(flat) {
            *g -= scheme.f_lambda_raw(lambda, u.values()[flat]);
        }
    }
    let field = Field::from_values(grid, out)?;
    if grid.class.has_tau_pair() {
        field.project_tau()
    } else {
        Ok(field)
    }
}

/// Verdict of the residual-based classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    CriticalCandidate,
    Noncritical,
}

/// Residual metrics attached to every classification.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyMetrics {
    pub h1_norm: f64,
    pub grad_residual: f64,
    pub poho_residual: f64,
    pub classification: Classification,
}

/// Thresholds for [`classify`]; both residuals are relative.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub grad_tol: f64,
    pub poho_tol: f64,
    pub trivial_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { grad_tol: 5e-3, poho_tol: 1e-2, trivial_floor: 1e-6 }
    }
}

/// Classify a candidate by its gradient and Pohozaev residuals.
pub fn classify(
    u: &Field,
    scheme: &SplitScheme,
    lambda: f64,
    thresholds: &Thresholds,
) -> Result<ClassifyMetrics> {
    let h1 = u.h1();
    if h1 <= thresholds.trivial_floor {
        return Ok(ClassifyMetrics {
            h1_norm: h1,
            grad_residual: 0.0,
            poho_residual: 0.0,
            classification: Classification::Trivial,
        });
    }
    let e = energy(u, scheme, lambda)?;
    let g = gradient(u, scheme, lambda)?;
    let grad_residual = g.l2() / u.l2().max(1e-300);
    let poho_residual = e.p_lambda.abs() / e.kinetic.max(1e-300);
    let classification = if grad_residual <= thresholds.grad_tol
        && poho_residual <= thresholds.poho_tol
    {
        Classification::CriticalCandidate
    } else {
        Classification::Noncritical
    };
    Ok(ClassifyMetrics { h1_norm: h1, grad_residual, poho_residual, classification })
}

/// Closed-form dilation curve `t -> J_lambda(u(./t))` given one energy
/// breakdown: `t^{N-2} * kinetic/2 - t^N * int F^lambda(u)`. Associated so
/// that t = 1 reproduces `j_lambda` bit for bit.
pub fn dilation_energy(e: &EnergyBreakdown, n: u32, t: f64) -> f64 {
    let nf = n as f64;
    (t.powf(nf - 2.0) * (0.5 * e.kinetic) + t.powf(nf) * e.potential_f2)
        - e.lambda * (t.powf(nf) * e.potential_f1)
}

/// The dilation factor putting `u(./t)` on the Pohozaev manifold, when the
/// nonlinear potential is positive: `t*^2 = (N-2) kinetic / (2N int F^lambda)`.
pub fn pohozaev_dilation(e: &EnergyBreakdown, n: u32) -> Option<f64> {
    let pot = e.lambda * e.potential_f1 - e.potential_f2;
    if pot <= 0.0 {
        return None;
    }
    let nf = n as f64;
    Some(((nf - 2.0) * e.kinetic / (2.0 * nf * pot)).sqrt())
}
