//! Built-in systems with analytic derivatives and closed-form Hugoniot loci.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::dvector;

use crate::error::{Error, Result};
use crate::model::{
    check_admissible, finite_mat, finite_scalar, finite_vec, Matrix, SharedModel, State,
    SystemModel,
};

/// Named numeric parameters, e.g. `{k: 1, gamma: 1.4}`.
pub type Params = BTreeMap<String, f64>;

pub const CATALOG: [&str; 4] = ["burgers", "p_system", "euler_ideal", "shallow_water"];

/// Inviscid Burgers: `f = u²/2`, `η = u²/2`, `q = u³/3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl SystemModel for Burgers {
    fn name(&self) -> &str {
        "burgers"
    }
    fn dim(&self) -> usize {
        1
    }
    fn flux(&self, u: &State) -> Result<State> {
        finite_vec(dvector![0.5 * u[0] * u[0]], "flux", u)
    }
    fn jacobian(&self, u: &State) -> Result<Matrix> {
        finite_mat(Matrix::from_element(1, 1, u[0]), "jacobian", u)
    }
    fn entropy(&self, u: &State) -> Result<f64> {
        finite_scalar(0.5 * u[0] * u[0], "entropy", u)
    }
    fn entropy_gradient(&self, u: &State) -> Result<State> {
        finite_vec(dvector![u[0]], "entropy gradient", u)
    }
    fn entropy_hessian(&self, _u: &State) -> Result<Matrix> {
        Ok(Matrix::from_element(1, 1, 1.0))
    }
    fn has_entropy_flux(&self) -> bool {
        true
    }
    fn entropy_flux(&self, u: &State) -> Result<f64> {
        finite_scalar(u[0].powi(3) / 3.0, "entropy flux", u)
    }
    fn in_domain(&self, u: &State) -> bool {
        u.len() == 1 && u[0].is_finite()
    }
}

/// Lagrangian gas dynamics in states `(v, u)`: `f = (-u, p(v))` with
/// `p(v) = k v^{-γ}` and `η = u²/2 + k v^{1-γ}/(γ-1)`, `q = u p(v)`.
#[derive(Debug, Clone, Copy)]
pub struct PSystem {
    pub k: f64,
    pub gamma: f64,
}

impl PSystem {
    pub fn new(k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_system requires k > 0, got {k}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "p_system requires gamma > 1, got {gamma}"
            )));
        }
        Ok(PSystem { k, gamma })
    }

    pub fn pressure(&self, v: f64) -> f64 {
        self.k * v.powf(-self.gamma)
    }

    fn pressure_deriv(&self, v: f64) -> f64 {
        -self.gamma * self.k * v.powf(-self.gamma - 1.0)
    }

    /// 1-shock state reached from `left` at specific volume `v < v_-`.
    pub fn shock_at(&self, left: &State, v: f64) -> Result<(State, f64)> {
        let (v0, u0) = (left[0], left[1]);
        if !(v > 0.0) || v > v0 {
            return Err(Error::NotOnShockBranch(format!(
                "p_system 1-shocks compress: need 0 < v <= {v0}, got {v}"
            )));
        }
        if v == v0 {
            return Ok((left.clone(), -(-self.pressure_deriv(v0)).sqrt()));
        }
        let sigma = -((self.pressure(v) - self.pressure(v0)) / (v0 - v)).sqrt();
        let u = u0 - sigma * (v - v0);
        Ok((dvector![v, u], sigma))
    }
}

impl SystemModel for PSystem {
    fn name(&self) -> &str {
        "p_system"
    }
    fn dim(&self) -> usize {
        2
    }
    fn flux(&self, u: &State) -> Result<State> {
        finite_vec(dvector![-u[1], self.pressure(u[0])], "flux", u)
    }
    fn jacobian(&self, u: &State) -> Result<Matrix> {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -1.0, self.pressure_deriv(u[0]), 0.0]);
        finite_mat(m, "jacobian", u)
    }
    fn entropy(&self, u: &State) -> Result<f64> {
        let e = 0.5 * u[1] * u[1] + self.k * u[0].powf(1.0 - self.gamma) / (self.gamma - 1.0);
        finite_scalar(e, "entropy", u)
    }
    fn entropy_gradient(&self, u: &State) -> Result<State> {
        finite_vec(dvector![-self.pressure(u[0]), u[1]], "entropy gradient", u)
    }
    fn entropy_hessian(&self, u: &State) -> Result<Matrix> {
        let m = Matrix::from_diagonal(&dvector![-self.pressure_deriv(u[0]), 1.0]);
        finite_mat(m, "entropy Hessian", u)
    }
    fn has_entropy_flux(&self) -> bool {
        true
    }
    fn entropy_flux(&self, u: &State) -> Result<f64> {
        finite_scalar(u[1] * self.pressure(u[0]), "entropy flux", u)
    }
    fn in_domain(&self, u: &State) -> bool {
        u.len() == 2 && u[0] > 0.0 && u[0].is_finite() && u[1].is_finite()
    }
}

/// Ideal-gas Euler equations in conserved variables `(ρ, m, E)`.
///
/// The entropy is `η = -ρ S/(γ-1)` with `S = ln(p ρ^{-γ})`; the factor
/// `1/(γ-1)` makes `∇η` the standard entropy variables and `∇²η > 0` on
/// `ρ, p > 0`. The entropy flux is `q = uη`.
#[derive(Debug, Clone, Copy)]
pub struct Euler {
    pub gamma: f64,
}

impl Euler {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "euler_ideal requires gamma > 1, got {gamma}"
            )));
        }
        Ok(Euler { gamma })
    }

    pub fn conserved(rho: f64, vel: f64, p: f64, gamma: f64) -> State {
        dvector![rho, rho * vel, p / (gamma - 1.0) + 0.5 * rho * vel * vel]
    }

    /// `(ρ, u, p)`.
    pub fn primitives(&self, w: &State) -> (f64, f64, f64) {
        let rho = w[0];
        let vel = w[1] / rho;
        let p = (self.gamma - 1.0) * (w[2] - 0.5 * w[1] * vel);
        (rho, vel, p)
    }

    pub fn sound_speed(&self, w: &State) -> f64 {
        let (rho, _, p) = self.primitives(w);
        (self.gamma * p / rho).sqrt()
    }

    fn specific_entropy(&self, rho: f64, p: f64) -> f64 {
        p.ln() - self.gamma * rho.ln()
    }

    /// 1-shock state reached from `left` at post-shock density `rho`.
    pub fn shock_at(&self, left: &State, rho: f64) -> Result<(State, f64)> {
        let g = self.gamma;
        let (rho0, u0, p0) = self.primitives(left);
        let limit = rho0 * (g + 1.0) / (g - 1.0);
        if !(rho >= rho0 && rho < limit) {
            return Err(Error::NotOnShockBranch(format!(
                "euler_ideal 1-shocks compress: need {rho0} <= rho < {limit}, got {rho}"
            )));
        }
        if rho == rho0 {
            return Ok((left.clone(), u0 - self.sound_speed(left)));
        }
        let ratio = rho / rho0;
        let pi = (ratio * (g + 1.0) - (g - 1.0)) / ((g + 1.0) - ratio * (g - 1.0));
        let p = pi * p0;
        let mass_flux = ((p - p0) / (1.0 / rho0 - 1.0 / rho)).sqrt();
        let u = u0 - (p - p0) / mass_flux;
        let sigma = u0 - mass_flux / rho0;
        Ok((Euler::conserved(rho, u, p, g), sigma))
    }
}

impl SystemModel for Euler {
    fn name(&self) -> &str {
        "euler_ideal"
    }
    fn dim(&self) -> usize {
        3
    }
    fn flux(&self, w: &State) -> Result<State> {
        let (_, u, p) = self.primitives(w);
        finite_vec(dvector![w[1], w[1] * u + p, (w[2] + p) * u], "flux", w)
    }
    fn jacobian(&self, w: &State) -> Result<Matrix> {
        let g = self.gamma;
        let (rho, u, p) = self.primitives(w);
        let h = (w[2] + p) / rho;
        let m = Matrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                0.5 * (g - 3.0) * u * u,
                (3.0 - g) * u,
                g - 1.0,
                u * (0.5 * (g - 1.0) * u * u - h),
                h - (g - 1.0) * u * u,
                g * u,
            ],
        );
        finite_mat(m, "jacobian", w)
    }
    fn entropy(&self, w: &State) -> Result<f64> {
        let (rho, _, p) = self.primitives(w);
        finite_scalar(
            -rho * self.specific_entropy(rho, p) / (self.gamma - 1.0),
            "entropy",
            w,
        )
    }
    fn entropy_gradient(&self, w: &State) -> Result<State> {
        let g = self.gamma;
        let (rho, u, p) = self.primitives(w);
        let s = self.specific_entropy(rho, p);
        let v = dvector![
            (g - s) / (g - 1.0) - 0.5 * rho * u * u / p,
            rho * u / p,
            -rho / p
        ];
        finite_vec(v, "entropy gradient", w)
    }
    fn entropy_hessian(&self, w: &State) -> Result<Matrix> {
        // ∇²η = (∂v/∂(ρ,u,p)) · (∂(ρ,u,p)/∂(ρ,m,E))
        let g = self.gamma;
        let (rho, u, p) = self.primitives(w);
        let dv_dw = Matrix::from_row_slice(
            3,
            3,
            &[
                g / ((g - 1.0) * rho) - 0.5 * u * u / p,
                -rho * u / p,
                -1.0 / ((g - 1.0) * p) + 0.5 * rho * u * u / (p * p),
                u / p,
                rho / p,
                -rho * u / (p * p),
                -1.0 / p,
                0.0,
                rho / (p * p),
            ],
        );
        let dw_du = Matrix::from_row_slice(
            3,
            3,
            &[
                1.0,
                0.0,
                0.0,
                -u / rho,
                1.0 / rho,
                0.0,
                0.5 * (g - 1.0) * u * u,
                -(g - 1.0) * u,
                g - 1.0,
            ],
        );
        let h = dv_dw * dw_du;
        // symmetric in exact arithmetic; remove rounding asymmetry
        finite_mat((&h + h.transpose()) * 0.5, "entropy Hessian", w)
    }
    fn has_entropy_flux(&self) -> bool {
        true
    }
    fn entropy_flux(&self, w: &State) -> Result<f64> {
        let (_, u, _) = self.primitives(w);
        Ok(u * self.entropy(w)?)
    }
    fn in_domain(&self, w: &State) -> bool {
        if w.len() != 3 || w.iter().any(|x| !x.is_finite()) || !(w[0] > 0.0) {
            return false;
        }
        let (_, _, p) = self.primitives(w);
        p > 0.0
    }
}

/// Shallow water in `(h, hu)`: `η = hu²/2 + gh²/2`, `q = u(hu²/2 + gh²)`.
#[derive(Debug, Clone, Copy)]
pub struct ShallowWater {
    pub g: f64,
}

impl ShallowWater {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shallow_water requires g > 0, got {g}"
            )));
        }
        Ok(ShallowWater { g })
    }

    /// 1-shock state reached from `left` at depth `h > h_-`.
    pub fn shock_at(&self, left: &State, h: f64) -> Result<(State, f64)> {
        let (h0, u0) = (left[0], left[1] / left[0]);
        if !(h >= h0) || !h.is_finite() {
            return Err(Error::NotOnShockBranch(format!(
                "shallow_water 1-shocks deepen: need h >= {h0}, got {h}"
            )));
        }
        if h == h0 {
            return Ok((left.clone(), u0 - (self.g * h0).sqrt()));
        }
        let u = u0 - (h - h0) * (self.g * (h0 + h) / (2.0 * h0 * h)).sqrt();
        let sigma = (h * u - h0 * u0) / (h - h0);
        Ok((dvector![h, h * u], sigma))
    }
}

impl SystemModel for ShallowWater {
    fn name(&self) -> &str {
        "shallow_water"
    }
    fn dim(&self) -> usize {
        2
    }
    fn flux(&self, w: &State) -> Result<State> {
        let (h, m) = (w[0], w[1]);
        finite_vec(dvector![m, m * m / h + 0.5 * self.g * h * h], "flux", w)
    }
    fn jacobian(&self, w: &State) -> Result<Matrix> {
        let u = w[1] / w[0];
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, self.g * w[0] - u * u, 2.0 * u]);
        finite_mat(m, "jacobian", w)
    }
    fn entropy(&self, w: &State) -> Result<f64> {
        let (h, m) = (w[0], w[1]);
        finite_scalar(0.5 * m * m / h + 0.5 * self.g * h * h, "entropy", w)
    }
    fn entropy_gradient(&self, w: &State) -> Result<State> {
        let u = w[1] / w[0];
        finite_vec(dvector![self.g * w[0] - 0.5 * u * u, u], "entropy gradient", w)
    }
    fn entropy_hessian(&self, w: &State) -> Result<Matrix> {
        let (h, u) = (w[0], w[1] / w[0]);
        let m = Matrix::from_row_slice(2, 2, &[u * u / h + self.g, -u / h, -u / h, 1.0 / h]);
        finite_mat(m, "entropy Hessian", w)
    }
    fn has_entropy_flux(&self) -> bool {
        true
    }
    fn entropy_flux(&self, w: &State) -> Result<f64> {
        let (h, u) = (w[0], w[1] / w[0]);
        finite_scalar(u * (0.5 * h * u * u + self.g * h * h), "entropy flux", w)
    }
    fn in_domain(&self, w: &State) -> bool {
        w.len() == 2 && w[0] > 0.0 && w[0].is_finite() && w[1].is_finite()
    }
}

/// Linear flux `f = Mu` with quadratic entropy `η = ½uᵀPu`, `q = ½uᵀPMu`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub flux_matrix: Matrix,
    pub symmetrizer: Matrix,
}

impl Linear {
    pub fn new(flux_matrix: Matrix, symmetrizer: Matrix) -> Self {
        Linear {
            flux_matrix,
            symmetrizer,
        }
    }
}

impl SystemModel for Linear {
    fn name(&self) -> &str {
        "linear"
    }
    fn dim(&self) -> usize {
        self.flux_matrix.nrows()
    }
    fn flux(&self, u: &State) -> Result<State> {
        Ok(&self.flux_matrix * u)
    }
    fn jacobian(&self, _u: &State) -> Result<Matrix> {
        Ok(self.flux_matrix.clone())
    }
    fn entropy(&self, u: &State) -> Result<f64> {
        Ok(0.5 * u.dot(&(&self.symmetrizer * u)))
    }
    fn entropy_gradient(&self, u: &State) -> Result<State> {
        Ok(&self.symmetrizer * u)
    }
    fn entropy_hessian(&self, _u: &State) -> Result<Matrix> {
        Ok(self.symmetrizer.clone())
    }
    fn has_entropy_flux(&self) -> bool {
        true
    }
    fn entropy_flux(&self, u: &State) -> Result<f64> {
        Ok(0.5 * u.dot(&(&self.symmetrizer * &self.flux_matrix * u)))
    }
    fn in_domain(&self, u: &State) -> bool {
        u.len() == self.dim() && u.iter().all(|x| x.is_finite())
    }
}

fn param(params: &Params, allowed: &[&str], key: &str, default: f64) -> Result<f64> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParameter(format!(
            "unknown parameter '{bad}' (expected one of {allowed:?})"
        )));
    }
    Ok(params.get(key).copied().unwrap_or(default))
}

/// Builds a catalog entry. Parameters: `p_system {k=1, gamma=1.4}`,
/// `euler_ideal {gamma=1.4}`, `shallow_water {g=9.81}`; burgers takes none.
pub fn catalog_lookup(name: &str, params: &Params) -> Result<SharedModel> {
    match name {
        "burgers" => {
            param(params, &[], "", 0.0)?;
            Ok(Arc::new(Burgers))
        }
        "p_system" => {
            let allowed = ["k", "gamma"];
            let k = param(params, &allowed, "k", 1.0)?;
            let gamma = param(params, &allowed, "gamma", 1.4)?;
            Ok(Arc::new(PSystem::new(k, gamma)?))
        }
        "euler_ideal" => {
            let gamma = param(params, &["gamma"], "gamma", 1.4)?;
            Ok(Arc::new(Euler::new(gamma)?))
        }
        "shallow_water" => {
            let g = param(params, &["g"], "g", 9.81)?;
            Ok(Arc::new(ShallowWater::new(g)?))
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

/// Closed-form 1-shock point at a target value of the first state
/// coordinate: `S` (burgers), `v` (p_system), `ρ` (euler_ideal), `h`
/// (shallow_water).
pub fn analytic_hugoniot(
    name: &str,
    params: &Params,
    left: &State,
    target: f64,
) -> Result<(State, f64)> {
    let model = catalog_lookup(name, params)?;
    check_admissible(model.as_ref(), left)?;
    match name {
        "burgers" => {
            if target > left[0] {
                return Err(Error::NotOnShockBranch(format!(
                    "burgers 1-shocks need S <= {}, got {target}",
                    left[0]
                )));
            }
            Ok((dvector![target], 0.5 * (left[0] + target)))
        }
        "p_system" => PSystem::new(
            param(params, &["k", "gamma"], "k", 1.0)?,
            param(params, &["k", "gamma"], "gamma", 1.4)?,
        )?
        .shock_at(left, target),
        "euler_ideal" => Euler::new(param(params, &["gamma"], "gamma", 1.4)?)?.shock_at(left, target),
        "shallow_water" => {
            ShallowWater::new(param(params, &["g"], "g", 9.81)?)?.shock_at(left, target)
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

fn grid2(xs: &[f64], ys: &[f64]) -> Vec<State> {
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| dvector![x, y]))
        .collect()
}

/// Standard validation samples for a catalog entry.
pub fn sample_states(name: &str, params: &Params) -> Result<Vec<State>> {
    Ok(match name {
        "burgers" => [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0]
            .iter()
            .map(|&x| dvector![x])
            .collect(),
        "p_system" => grid2(&[0.3, 0.5, 1.0, 2.0, 4.0], &[-1.0, 0.0, 1.0]),
        "euler_ideal" => {
            let gamma = param(params, &["gamma"], "gamma", 1.4)?;
            let mut out = Vec::new();
            for &rho in &[0.2, 1.0, 3.0] {
                for &vel in &[-1.0, 0.0, 2.0] {
                    for &p in &[0.1, 1.0, 5.0] {
                        out.push(Euler::conserved(rho, vel, p, gamma));
                    }
                }
            }
            out
        }
        "shallow_water" => grid2(&[0.2, 1.0, 3.0], &[-2.0, 0.0, 1.0])
            .into_iter()
            .map(|w| dvector![w[0], w[0] * w[1]])
            .collect(),
        other => return Err(Error::UnknownSystem(other.to_string())),
    })
}
