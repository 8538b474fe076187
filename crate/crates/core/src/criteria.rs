//! Admissibility and stability criteria evaluated at points of a 1-Hugoniot
//! curve, together with the intermediate quantities of the Lopatinski
//! argument (eigen-coefficients of the jump and the quadratic form).
//!
//! Raw values are always reported. Pass/fail flags come from
//! [`derive_flags`] under a [`TolerancePolicy`], so a report can be
//! re-thresholded without re-evaluating the model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hugoniot::{point_at, ContinuationConfig};
use crate::model::{
    check_admissible, ConditionFlags, ConditionReport, HugoniotCurve, HugoniotPoint, State, SystemModel,
};
use crate::spectral::{eigen_decompose, normalized_determinant, SpectralConfig, SpectralData};

/// Bands for the nonstrict inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancePolicy {
    /// Relative half-width; the absolute band at a point is `eps_eq · point.scale()`.
    pub eps_eq: f64,
    /// `|det|` at or below this is reported as near-degenerate.
    pub delta_lop: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            eps_eq: 1e-10,
            delta_lop: 1e-6,
        }
    }
}

impl TolerancePolicy {
    pub fn check(&self) -> Result<()> {
        if !(self.eps_eq > 0.0 && self.delta_lop > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got eps_eq={}, delta_lop={}",
                self.eps_eq, self.delta_lop
            )));
        }
        Ok(())
    }

    pub fn band(&self, point: &HugoniotPoint) -> f64 {
        self.eps_eq * point.scale()
    }
}

/// `η(u|v) = η(u) - η(v) - ∇η(v)·(u - v)`.
pub fn relative_entropy(model: &dyn SystemModel, u: &State, v: &State) -> Result<f64> {
    check_admissible(model, u)?;
    check_admissible(model, v)?;
    Ok(model.entropy(u)? - model.entropy(v)? - model.entropy_gradient(v)?.dot(&(u - v)))
}

/// `d_s η(u|S(s)) = ⟨S', P(S)(S - u)⟩`.
pub fn relative_entropy_derivative(model: &dyn SystemModel, u: &State, point: &HugoniotPoint) -> Result<f64> {
    let p = model.entropy_hessian(&point.state)?;
    Ok(point.state_tangent.dot(&(p * (&point.state - u))))
}

/// Lax slacks `[a_1(u)-σ, σ-a_1(S), a_2(S)-σ, a_3(S)-a_2(S), …]`.
pub fn lax_margins_from_spectra(at_left: &SpectralData, at_right: &SpectralData, speed: f64) -> Vec<f64> {
    let a = &at_right.eigenvalues;
    let mut m = vec![at_left.eigenvalues[0] - speed, speed - a[0]];
    if a.len() > 1 {
        m.push(a[1] - speed);
        m.extend(a.as_slice().windows(2).skip(1).map(|w| w[1] - w[0]));
    }
    m
}

pub fn lax_check(model: &dyn SystemModel, u: &State, point: &HugoniotPoint) -> Result<Vec<f64>> {
    Ok(lax_margins_from_spectra(
        &eigen_decompose(model, u)?,
        &eigen_decompose(model, &point.state)?,
        point.speed,
    ))
}

fn lopatinski_with(
    model: &dyn SystemModel,
    u: &State,
    point: &HugoniotPoint,
    at_right: &SpectralData,
) -> Result<f64> {
    let jump = &point.state - u;
    if point.s == 0.0 || jump.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroAmplitude);
    }
    let mut columns = vec![jump];
    columns.extend((1..at_right.dim()).map(|j| at_right.eigenvector(j)));
    normalized_determinant(&columns, &model.entropy_hessian(&point.state)?)
}

/// Normalized `det(S - u, r_2(S), …, r_n(S))` with weights `P(S)`.
pub fn lopatinski(model: &dyn SystemModel, u: &State, point: &HugoniotPoint) -> Result<f64> {
    let at_right = eigen_decompose(model, &point.state)?;
    lopatinski_with(model, u, point, &at_right)
}

/// Small-amplitude value: normalized `det(r_1(u), …, r_n(u))` with weights `P(u)`.
pub fn lopatinski_limit(model: &dyn SystemModel, u: &State) -> Result<f64> {
    let sd = eigen_decompose(model, u)?;
    let columns: Vec<State> = (0..sd.dim()).map(|j| sd.eigenvector(j)).collect();
    normalized_determinant(&columns, &model.entropy_hessian(u)?)
}

/// `D = [q] - σ[η]`; dissipative iff `D ≤ 0`.
pub fn entropy_dissipation(model: &dyn SystemModel, u: &State, point: &HugoniotPoint) -> Result<f64> {
    if !model.has_entropy_flux() {
        return Err(Error::EntropyFluxUnavailable);
    }
    let s = &point.state;
    Ok((model.entropy_flux(s)? - model.entropy_flux(u)?) - point.speed * (model.entropy(s)? - model.entropy(u)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofDiagnostics {
    /// `S - u = Σ α_j r_j(S)`.
    pub alpha: Vec<f64>,
    /// `α_j / (a_j(S) - σ)`, `j ≥ 2`.
    pub beta: Vec<Option<f64>>,
    /// `Q = ⟨S', P(S)(A(S) - σ)S'⟩`.
    pub quadratic_form: f64,
    /// `Q - σ'⟨S', P(S)(S - u)⟩`.
    pub identity_gap: f64,
    /// `|(A(S) - σ)S' - σ'(S - u)|`.
    pub lrh_raw: f64,
    /// Bound on `|identity_gap|` implied by `lrh_raw`, plus rounding.
    pub lrh_residual: f64,
    /// `|Σ α_j r_j - (S - u)| / max(|S - u|, tiny)`.
    pub expansion_error: f64,
}

fn proof_diagnostics_with(
    model: &dyn SystemModel,
    u: &State,
    point: &HugoniotPoint,
    at_right: &SpectralData,
) -> Result<ProofDiagnostics> {
    let s = &point.state;
    let sigma = point.speed;
    let sp = &point.state_tangent;
    let p = model.entropy_hessian(s)?;
    let a = model.jacobian(s)?;
    let n = s.len();
    let jump = s - u;

    let r = &at_right.eigenvectors;
    let alpha = r.tr_mul(&(&p * &jump));
    let expansion_error = (r * &alpha - &jump).norm() / jump.norm().max(f64::MIN_POSITIVE);

    let cfg = SpectralConfig::default();
    let resonance = cfg.eps_inv * (a.norm() + sigma.abs());
    let beta = (1..n)
        .map(|j| {
            let d = at_right.eigenvalues[j] - sigma;
            (d.abs() > resonance).then(|| alpha[j] / d)
        })
        .collect();

    let shifted = &a - nalgebra::DMatrix::identity(n, n) * sigma;
    let q = sp.dot(&(&p * (&shifted * sp)));
    let gap = q - point.speed_tangent * sp.dot(&(&p * &jump));
    let lrh_raw = (&shifted * sp - &jump * point.speed_tangent).norm();
    let p_norm = p.norm();
    let floor = n as f64
        * f64::EPSILON
        * p_norm
        * sp.norm()
        * (shifted.norm() * sp.norm() + point.speed_tangent.abs() * jump.norm());
    Ok(ProofDiagnostics {
        alpha: alpha.iter().copied().collect(),
        beta,
        quadratic_form: q,
        identity_gap: gap,
        lrh_raw,
        lrh_residual: p_norm * sp.norm() * lrh_raw + floor,
        expansion_error,
    })
}

pub fn proof_diagnostics(model: &dyn SystemModel, u: &State, point: &HugoniotPoint) -> Result<ProofDiagnostics> {
    let at_right = eigen_decompose(model, &point.state)?;
    proof_diagnostics_with(model, u, point, &at_right)
}

/// All criteria at one point.
pub fn evaluate_point(
    model: &dyn SystemModel,
    u: &State,
    point: &HugoniotPoint,
    policy: &TolerancePolicy,
) -> Result<ConditionReport> {
    let at_left = eigen_decompose(model, u)?;
    let at_right = eigen_decompose(model, &point.state)?;
    let lopatinski_det = match lopatinski_with(model, u, point, &at_right) {
        Ok(d) => Some(d),
        Err(Error::ZeroAmplitude) => None,
        Err(e) => return Err(e),
    };
    let dissipation = if model.has_entropy_flux() {
        Some(entropy_dissipation(model, u, point)?)
    } else {
        None
    };
    let diag = proof_diagnostics_with(model, u, point, &at_right)?;
    let mut report = ConditionReport {
        point: point.clone(),
        lax_margins: lax_margins_from_spectra(&at_left, &at_right, point.speed),
        lopatinski_det,
        rel_entropy: relative_entropy(model, u, &point.state)?,
        rel_entropy_deriv: relative_entropy_derivative(model, u, point)?,
        speed_deriv: point.speed_tangent,
        dissipation,
        alpha: diag.alpha,
        beta: diag.beta,
        quadratic_form: diag.quadratic_form,
        identity_gap: diag.identity_gap,
        lrh_residual: diag.lrh_residual,
        flags: ConditionFlags {
            lax: false,
            lopatinski: None,
            speed_nonincreasing: false,
            speed_decreasing: false,
            rel_entropy_nondecreasing: false,
            dissipative: None,
            beta_alpha_nonnegative: false,
        },
    };
    report.flags = derive_flags(&report, policy);
    Ok(report)
}

/// Flags from the raw values of a report.
pub fn derive_flags(report: &ConditionReport, policy: &TolerancePolicy) -> ConditionFlags {
    let band = policy.band(&report.point);
    let beta_alpha_nonnegative = report
        .beta
        .iter()
        .enumerate()
        .all(|(k, b)| matches!(b, Some(b) if b * report.alpha[k + 1] >= -band));
    ConditionFlags {
        lax: report.lax_margins.iter().all(|&m| m > band),
        lopatinski: report.lopatinski_det.map(|d| d.abs() > policy.delta_lop),
        speed_nonincreasing: report.speed_deriv <= band,
        speed_decreasing: report.speed_deriv < -band,
        rel_entropy_nondecreasing: report.rel_entropy_deriv >= -band,
        dissipative: report.dissipation.map(|d| d <= band),
        beta_alpha_nonnegative,
    }
}

/// True when the point satisfies every hypothesis under which the
/// Lopatinski condition is expected: strict Lax margins, `σ' < -band`
/// and `d_s η ≥ -band`.
pub fn hypotheses_hold(flags: &ConditionFlags) -> bool {
    flags.lax && flags.speed_decreasing && flags.rel_entropy_nondecreasing
}

/// Reports for every sample of a curve.
pub fn evaluate_curve(
    model: &dyn SystemModel,
    curve: &HugoniotCurve,
    policy: &TolerancePolicy,
) -> Result<Vec<ConditionReport>> {
    curve
        .points
        .iter()
        .map(|p| evaluate_point(model, &curve.left_state, p, policy))
        .collect()
}

/// Outcome of one condition with its worst slack and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub holds: bool,
    /// Smallest slack; the condition holds iff it is `≥ -band`.
    pub margin: f64,
    /// Parameter value of the worst slack.
    pub at: f64,
}

impl Margin {
    fn worst(values: impl IntoIterator<Item = (f64, f64, f64)>) -> Margin {
        // (slack, s, band)
        let mut out = Margin {
            holds: true,
            margin: f64::INFINITY,
            at: 0.0,
        };
        for (slack, s, band) in values {
            if slack < out.margin {
                out.margin = slack;
                out.at = s;
            }
            if !(slack >= -band) {
                out.holds = false;
            }
        }
        out
    }
}

/// Speed and relative-entropy monotonicity conditions at `s_plus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvConditions {
    pub s_plus: f64,
    /// `σ' ≤ 0` on `[0, s_plus]`.
    pub i: Margin,
    /// `d_s η(u|S) ≥ 0` on `[0, s_plus]`.
    pub ii: Margin,
    /// `σ'(s_plus) ≤ 0`.
    pub i_prime: Margin,
    /// `d_s η(u|S(s_plus)) ≥ 0`.
    pub ii_prime: Margin,
    /// `(s - s_plus)(η(u|S(s)) - η(u|S(s_plus))) ≥ 0` on the traced range.
    pub ii_star: Margin,
}

pub fn lv_conditions(
    model: &dyn SystemModel,
    curve: &HugoniotCurve,
    s_plus: f64,
    policy: &TolerancePolicy,
    config: &ContinuationConfig,
) -> Result<LvConditions> {
    let u = &curve.left_state;
    let end = point_at(model, curve, s_plus, config)?;
    let mut prefix: Vec<&HugoniotPoint> = curve.points.iter().filter(|p| p.s < s_plus).collect();
    prefix.push(&end);

    let speed = |p: &HugoniotPoint| (-p.speed_tangent, p.s, policy.band(p));
    let ent = |p: &HugoniotPoint| -> Result<(f64, f64, f64)> {
        Ok((relative_entropy_derivative(model, u, p)?, p.s, policy.band(p)))
    };
    let ii = prefix.iter().map(|p| ent(p)).collect::<Result<Vec<_>>>()?;
    let eta_plus = relative_entropy(model, u, &end.state)?;
    let star = curve
        .points
        .iter()
        .map(|p| {
            let v = (p.s - s_plus) * (relative_entropy(model, u, &p.state)? - eta_plus);
            Ok((v, p.s, policy.band(p)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LvConditions {
        s_plus,
        i: Margin::worst(prefix.iter().map(|p| speed(p))),
        ii: Margin::worst(ii),
        i_prime: Margin::worst([speed(&end)]),
        ii_prime: Margin::worst([ent(&end)?]),
        ii_star: Margin::worst(star),
    })
}
