//! Shared data model: conservation-law systems, Hugoniot samples and curves,
//! and per-point condition reports.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serialize::dvector;

/// A state vector `u ∈ R^n`.
pub type State = DVector<f64>;
/// A dense `n × n` matrix.
pub type Matrix = DMatrix<f64>;

/// A system of conservation laws `u_t + f(u)_x = 0` with a strictly convex
/// entropy `η` and (optionally) its entropy flux `q`.
///
/// Implementations must be pure: every method is a function of its input
/// state only.
pub trait SystemModel: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn flux(&self, u: &State) -> Result<State>;

    /// `A(u) = ∇f(u)`.
    fn jacobian(&self, u: &State) -> Result<Matrix>;

    fn entropy(&self, u: &State) -> Result<f64>;

    fn entropy_gradient(&self, u: &State) -> Result<State>;

    /// `P(u) = ∇²η(u)`, the entropy symmetrizer.
    fn entropy_hessian(&self, u: &State) -> Result<Matrix>;

    fn has_entropy_flux(&self) -> bool {
        false
    }

    fn entropy_flux(&self, _u: &State) -> Result<f64> {
        Err(Error::EntropyFluxUnavailable)
    }

    /// Admissible states, e.g. positive specific volume for gas dynamics.
    fn in_domain(&self, u: &State) -> bool;
}

pub type SharedModel = Arc<dyn SystemModel>;

/// Dimension and domain check shared by every entry point taking a state.
pub fn check_admissible(model: &dyn SystemModel, u: &State) -> Result<()> {
    if u.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: u.len(),
        });
    }
    if u.iter().any(|x| !x.is_finite()) || !model.in_domain(u) {
        return Err(Error::Domain {
            state: u.iter().copied().collect(),
        });
    }
    Ok(())
}

pub(crate) fn finite_vec(v: State, what: &'static str, u: &State) -> Result<State> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(evaluation_error(what, u))
    }
}

pub(crate) fn finite_mat(m: Matrix, what: &'static str, u: &State) -> Result<Matrix> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(m)
    } else {
        Err(evaluation_error(what, u))
    }
}

pub(crate) fn finite_scalar(x: f64, what: &'static str, u: &State) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(evaluation_error(what, u))
    }
}

fn evaluation_error(what: &'static str, u: &State) -> Error {
    Error::Evaluation {
        what,
        state: u.iter().copied().collect(),
    }
}

/// One sample `(s, S_u(s), σ(s), S_u'(s), σ'(s))` of a 1-Hugoniot curve.
///
/// Tangents are unit vectors in the metric `|dS|² + dσ²`, oriented towards
/// increasing `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HugoniotPoint {
    pub s: f64,
    #[serde(with = "dvector")]
    pub state: State,
    pub speed: f64,
    #[serde(with = "dvector")]
    pub state_tangent: State,
    pub speed_tangent: f64,
}

impl HugoniotPoint {
    /// Scaled Rankine–Hugoniot residual `|σ(S-u) - (f(S)-f(u))| / (1 + |f(S)-f(u)|)`.
    pub fn rh_residual(&self, model: &dyn SystemModel, left: &State) -> Result<f64> {
        let df = model.flux(&self.state)? - model.flux(left)?;
        let r = (&self.state - left) * self.speed - &df;
        Ok(r.norm() / (1.0 + df.norm()))
    }

    /// `|σ'(S-u) - (A(S)-σ)S'|`.
    pub fn lrh_residual(&self, model: &dyn SystemModel, left: &State) -> Result<f64> {
        let a = model.jacobian(&self.state)?;
        let lhs = (&self.state - left) * self.speed_tangent;
        let rhs = &a * &self.state_tangent - &self.state_tangent * self.speed;
        Ok((lhs - rhs).norm())
    }

    /// Magnitude used to scale the nonstrict-inequality bands at this point.
    pub fn scale(&self) -> f64 {
        self.state
            .iter()
            .fold(self.speed.abs().max(1.0), |m, x| m.max(x.abs()))
    }
}

/// Which way the curve leaves its base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Characteristic speed decreases away from the base point (the shock branch).
    Compressive,
    /// The opposite half-branch.
    Reversed,
}

/// Samples of the 1-Hugoniot curve through a left state, ordered by `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HugoniotCurve {
    #[serde(with = "dvector")]
    pub left_state: State,
    pub family: usize,
    pub orientation: Orientation,
    /// Set when the family is not genuinely nonlinear at the left state.
    pub degenerate: bool,
    pub points: Vec<HugoniotPoint>,
}

impl HugoniotCurve {
    pub fn new(left_state: State, orientation: Orientation) -> Self {
        HugoniotCurve {
            left_state,
            family: 1,
            orientation,
            degenerate: false,
            points: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&HugoniotPoint> {
        self.points.last()
    }

    /// Largest traced parameter value.
    pub fn s_max(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }
}

/// Pass/fail flags of a [`ConditionReport`], derived from its raw values and
/// a tolerance policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// All Lax margins strictly above the band.
    pub lax: bool,
    /// `|det| > delta_lop`; absent at `s = 0`.
    pub lopatinski: Option<bool>,
    /// `σ' ≤ eps`.
    pub speed_nonincreasing: bool,
    /// `σ' < -eps`, the strict form used to gate the audit.
    pub speed_decreasing: bool,
    /// `d_s η(u|S) ≥ -eps`.
    pub rel_entropy_nondecreasing: bool,
    /// `[q] - σ[η] ≤ eps`; absent without an entropy flux.
    pub dissipative: Option<bool>,
    /// `β_j α_j ≥ -eps` for every `j ≥ 2`.
    pub beta_alpha_nonnegative: bool,
}

/// Every criterion evaluated at one curve point, with raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub point: HugoniotPoint,
    /// `[a_1(u)-σ, σ-a_1(S), a_2(S)-σ, a_3(S)-a_2(S), …]`.
    pub lax_margins: Vec<f64>,
    pub lopatinski_det: Option<f64>,
    pub rel_entropy: f64,
    pub rel_entropy_deriv: f64,
    pub speed_deriv: f64,
    /// `[q] - σ[η]`.
    pub dissipation: Option<f64>,
    /// Coordinates of `S - u` in the eigenbasis at `S` (`j = 1..n`).
    pub alpha: Vec<f64>,
    /// `α_j / (a_j(S) - σ)` for `j = 2..n`; absent where the shift is resonant.
    pub beta: Vec<Option<f64>>,
    /// `⟨S', P(S)(A(S)-σ)S'⟩`.
    pub quadratic_form: f64,
    /// `Q - σ'⟨S', P(S)(S-u)⟩`.
    pub identity_gap: f64,
    /// Linearized RH residual, scaled by `|P||S'|` and floored at rounding level.
    pub lrh_residual: f64,
    pub flags: ConditionFlags,
}
