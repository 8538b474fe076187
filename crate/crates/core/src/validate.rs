//! Structural checks of a [`SystemModel`]: symmetrizer properties and
//! consistency of the supplied derivatives with finite differences.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_admissible, Matrix, State, SystemModel};
use crate::serialize::dvector;

/// Relative asymmetry allowed in `P`.
pub const P_SYMMETRY_TOL: f64 = 1e-12;
/// Relative asymmetry allowed in `PA`.
pub const PA_SYMMETRY_TOL: f64 = 1e-8;
/// Relative mismatch allowed between analytic and finite-difference derivatives.
pub const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleValidation {
    #[serde(with = "dvector")]
    pub state: State,
    pub p_asymmetry: f64,
    pub p_positive_definite: bool,
    pub pa_asymmetry: f64,
    pub jacobian_fd_error: f64,
    pub gradient_fd_error: f64,
    pub hessian_fd_error: f64,
    pub entropy_flux_error: Option<f64>,
    pub failures: Vec<String>,
}

impl SampleValidation {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: Vec<SampleValidation>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<(&SampleValidation, &str)> {
        self.samples
            .iter()
            .find_map(|s| s.failures.first().map(|f| (s, f.as_str())))
    }
}

/// Relative asymmetry `|M - Mᵀ| / |M|` (zero for the zero matrix).
pub fn asymmetry(m: &Matrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1e-2)
}

/// Central-difference Jacobian of a vector map.
pub fn fd_jacobian<F>(u: &State, steps: &[f64], map: F) -> Result<Matrix>
where
    F: Fn(&State) -> Result<State>,
{
    let n = u.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = steps[j];
        let mut up = u.clone();
        let mut dn = u.clone();
        up[j] += h;
        dn[j] -= h;
        cols.push((map(&up)? - map(&dn)?) / (2.0 * h));
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(Matrix::from_fn(m, n, |i, j| cols[j][i]))
}

fn fd_gradient<F>(u: &State, steps: &[f64], map: F) -> Result<State>
where
    F: Fn(&State) -> Result<f64>,
{
    let n = u.len();
    let mut g = State::zeros(n);
    for j in 0..n {
        let h = steps[j];
        let mut up = u.clone();
        let mut dn = u.clone();
        up[j] += h;
        dn[j] -= h;
        g[j] = (map(&up)? - map(&dn)?) / (2.0 * h);
    }
    Ok(g)
}

fn rel_err(approx: f64, exact_norm: f64) -> f64 {
    approx / exact_norm.max(1.0)
}

/// Checks one admissible state.
pub fn validate_state(model: &dyn SystemModel, u: &State) -> Result<SampleValidation> {
    check_admissible(model, u)?;
    let p = model.entropy_hessian(u)?;
    let a = model.jacobian(u)?;
    let grad = model.entropy_gradient(u)?;
    let mut failures = Vec::new();

    let p_asymmetry = asymmetry(&p);
    if p_asymmetry > P_SYMMETRY_TOL {
        failures.push(format!("entropy Hessian not symmetric (residual {p_asymmetry:e})"));
    }
    let p_positive_definite = Cholesky::new(p.clone()).is_some();
    if !p_positive_definite {
        failures.push("entropy Hessian not positive definite".to_string());
    }
    let pa_asymmetry = asymmetry(&(&p * &a));
    if pa_asymmetry > PA_SYMMETRY_TOL {
        failures.push(format!("P·A not symmetric (residual {pa_asymmetry:e})"));
    }

    let steps: Vec<f64> = u.iter().map(|&x| fd_step(x)).collect();
    let jac_fd = fd_jacobian(u, &steps, |x| model.flux(x))?;
    let jacobian_fd_error = rel_err((&jac_fd - &a).norm(), a.norm());
    if jacobian_fd_error > FD_TOL {
        failures.push(format!(
            "flux Jacobian disagrees with finite differences (error {jacobian_fd_error:e})"
        ));
    }
    let grad_fd = fd_gradient(u, &steps, |x| model.entropy(x))?;
    let gradient_fd_error = rel_err((&grad_fd - &grad).norm(), grad.norm());
    if gradient_fd_error > FD_TOL {
        failures.push(format!(
            "entropy gradient disagrees with finite differences (error {gradient_fd_error:e})"
        ));
    }
    let hess_fd = fd_jacobian(u, &steps, |x| model.entropy_gradient(x))?;
    let hessian_fd_error = rel_err((&hess_fd - &p).norm(), p.norm());
    if hessian_fd_error > FD_TOL {
        failures.push(format!(
            "entropy Hessian disagrees with finite differences (error {hessian_fd_error:e})"
        ));
    }

    let entropy_flux_error = if model.has_entropy_flux() {
        let dq = fd_gradient(u, &steps, |x| model.entropy_flux(x))?;
        let compat = a.tr_mul(&grad);
        let err = rel_err((&dq - &compat).norm(), compat.norm());
        if err > FD_TOL {
            failures.push(format!(
                "entropy flux incompatible: ∇η·A differs from ∇q (error {err:e})"
            ));
        }
        Some(err)
    } else {
        None
    };

    Ok(SampleValidation {
        state: u.clone(),
        p_asymmetry,
        p_positive_definite,
        pa_asymmetry,
        jacobian_fd_error,
        gradient_fd_error,
        hessian_fd_error,
        entropy_flux_error,
        failures,
    })
}

/// Runs [`validate_state`] on every sample; passes iff every sample passes.
pub fn validate_system(model: &dyn SystemModel, samples: &[State]) -> Result<ValidationReport> {
    let samples = samples
        .iter()
        .map(|u| validate_state(model, u))
        .collect::<Result<Vec<_>>>()?;
    let passed = samples.iter().all(SampleValidation::passed);
    Ok(ValidationReport { samples, passed })
}
