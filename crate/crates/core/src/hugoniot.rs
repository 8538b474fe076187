//! Pseudo-arclength continuation of the 1-Hugoniot curve.
//!
//! Unknowns are `X = (S, σ) ∈ R^{n+1}` and the equations are the
//! Rankine–Hugoniot conditions `σ(S - u) - (f(S) - f(u)) = 0`. The curve
//! parameter `s` is pseudo-arclength in the metric `|dS|² + dσ²`: a point at
//! offset `δ` from an anchor sample lies on the hyperplane orthogonal to the
//! anchor's unit tangent at distance `δ`.
//!
//! The trivial branch `S = u` crosses the Hugoniot curve at `(u, a_1(u))`,
//! where the linearization has a two-dimensional kernel. The base point
//! therefore takes its tangent from the small-amplitude expansion
//! `S ≈ u + s r_1`, `σ ≈ a_1 + (s/2)∇a_1·r_1` instead of the kernel.

use nalgebra::{DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::criteria::lax_margins_from_spectra;
use crate::error::{Error, Result};
use crate::model::{check_admissible, HugoniotCurve, HugoniotPoint, Matrix, Orientation, State, SystemModel};
use crate::spectral::{eigen_decompose_with, SpectralConfig, SpectralData};

/// Step control and stopping bounds for curve tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Scaled RH residual accepted by the corrector.
    pub tol_rh: f64,
    pub max_arclength: f64,
    pub max_newton_iters: usize,
    /// Wave family; only 1 is supported.
    pub family: usize,
    /// Stop once a curve that was a Lax 1-shock stops being one.
    pub stop_on_lax_loss: bool,
    /// Band applied to Lax margins when deciding the stop.
    pub eps_lax: f64,
    #[serde(skip)]
    pub spectral: SpectralConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            h0: 1e-3,
            h_min: 1e-9,
            h_max: 0.1,
            tol_rh: 1e-11,
            max_arclength: 2.0,
            max_newton_iters: 12,
            family: 1,
            stop_on_lax_loss: true,
            eps_lax: 1e-10,
            spectral: SpectralConfig::default(),
        }
    }
}

impl ContinuationConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_min <= self.h0 && self.h0 <= self.h_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < h_min <= h0 <= h_max, got h_min={}, h0={}, h_max={}",
                self.h_min, self.h0, self.h_max
            )));
        }
        if !(self.tol_rh > 0.0) {
            return Err(Error::InvalidParameter("tol_rh must be positive".into()));
        }
        if !(self.max_arclength >= 0.0) {
            return Err(Error::InvalidParameter("max_arclength must be nonnegative".into()));
        }
        if self.family != 1 {
            return Err(Error::InvalidParameter(format!(
                "only family 1 is supported (negate the flux for family n), got {}",
                self.family
            )));
        }
        Ok(())
    }
}

/// Base point of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub point: HugoniotPoint,
    /// `∇a_1·r_1` along the oriented eigenvector.
    pub nonlinearity: f64,
    /// The family is not genuinely nonlinear at the base point.
    pub degenerate: bool,
}

/// Why tracing ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    MaxArclength,
    DomainBoundary { s: f64 },
    LaxLost { s: f64 },
    HyperbolicityLost { s: f64 },
    RankDeficient { s: f64 },
    Stalled { s: f64 },
}

impl StopReason {
    /// Stops that signal a numerical failure rather than a natural end.
    pub fn is_failure(&self) -> bool {
        matches!(self, StopReason::RankDeficient { .. } | StopReason::Stalled { .. })
    }

    pub fn to_error(&self) -> Option<Error> {
        match *self {
            StopReason::RankDeficient { s } => Some(Error::RankDeficient { s }),
            StopReason::Stalled { s } => Some(Error::Stalled { s }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutcome {
    pub curve: HugoniotCurve,
    pub stop: StopReason,
}

impl TraceOutcome {
    pub fn into_result(self) -> Result<HugoniotCurve> {
        match self.stop.to_error() {
            Some(e) => Err(e),
            None => Ok(self.curve),
        }
    }
}

fn pack(state: &State, speed: f64) -> DVector<f64> {
    let n = state.len();
    DVector::from_fn(n + 1, |i, _| if i < n { state[i] } else { speed })
}

fn tangent_of(p: &HugoniotPoint) -> DVector<f64> {
    pack(&p.state_tangent, p.speed_tangent)
}

/// Seed on the compressive (shock) half-branch.
pub fn seed_curve(model: &dyn SystemModel, u: &State) -> Result<Seed> {
    seed_oriented(model, u, Orientation::Compressive, &SpectralConfig::default())
}

/// Base point `S = u`, `σ = a_1(u)` with the expansion tangent.
///
/// `Compressive` picks the sign of `r_1` along which `a_1` decreases; when
/// the field is degenerate it keeps the sign convention of `r_1` and
/// `Reversed` takes the opposite sign.
pub fn seed_oriented(
    model: &dyn SystemModel,
    u: &State,
    orientation: Orientation,
    spectral: &SpectralConfig,
) -> Result<Seed> {
    check_admissible(model, u)?;
    let sd = eigen_decompose_with(model, u, spectral)?;
    let a1 = sd.eigenvalues[0];
    let mut r = sd.eigenvector(0);

    // ∇a_1·r_1 by central differences along r_1
    let eps = 1e-5 * (1.0 + u.amax()) / r.amax();
    let a_plus = eigen_decompose_with(model, &(u + &r * eps), spectral)?.eigenvalues[0];
    let a_minus = eigen_decompose_with(model, &(u - &r * eps), spectral)?.eigenvalues[0];
    let mut g = (a_plus - a_minus) / (2.0 * eps);

    let a_norm = model.jacobian(u)?.norm();
    let degenerate = g.abs() <= 1e-7 * a_norm.max(1.0);
    if degenerate {
        g = 0.0;
    }
    let flip = match orientation {
        Orientation::Compressive => g > 0.0,
        Orientation::Reversed => g <= 0.0,
    };
    if flip {
        r.neg_mut();
        g = -g;
    }
    let t = pack(&r, 0.5 * g).normalize();
    let n = u.len();
    Ok(Seed {
        point: HugoniotPoint {
            s: 0.0,
            state: u.clone(),
            speed: a1,
            state_tangent: t.rows(0, n).into_owned(),
            speed_tangent: t[n],
        },
        nonlinearity: g,
        degenerate,
    })
}

/// Scaled RH residual of `(S, σ)`.
fn rh_residual(model: &dyn SystemModel, u: &State, fu: &State, s: &State, sigma: f64) -> Result<(State, f64)> {
    let df = model.flux(s)? - fu;
    let r = (s - u) * sigma - &df;
    let scaled = r.norm() / (1.0 + df.norm());
    Ok((r, scaled))
}

/// `[σI - A(S) | S - u]`.
fn rh_jacobian(model: &dyn SystemModel, u: &State, s: &State, sigma: f64) -> Result<Matrix> {
    let n = u.len();
    let a = model.jacobian(s)?;
    let mut j = Matrix::zeros(n, n + 1);
    for i in 0..n {
        for k in 0..n {
            j[(i, k)] = -a[(i, k)];
        }
        j[(i, i)] += sigma;
        j[(i, n)] = s[i] - u[i];
    }
    Ok(j)
}

enum Failure {
    Domain,
    Numerical,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. } => Failure::Domain,
            _ => Failure::Numerical,
        }
    }
}

/// Newton on RH plus the hyperplane `tᵀ(X - X_a) = δ`. Returns the solution
/// and the number of iterations needed to reach `tol_rh`.
fn correct(
    model: &dyn SystemModel,
    u: &State,
    fu: &State,
    anchor: &HugoniotPoint,
    delta: f64,
    config: &ContinuationConfig,
) -> std::result::Result<(State, f64, usize), Failure> {
    let n = u.len();
    let t = tangent_of(anchor);
    let xa = pack(&anchor.state, anchor.speed);
    let mut x = &xa + &t * delta;
    let mut converged_at = None;
    let mut prev_res = f64::INFINITY;

    for iter in 0..=config.max_newton_iters + 1 {
        let s = x.rows(0, n).into_owned();
        let sigma = x[n];
        if !model.in_domain(&s) {
            return Err(Failure::Domain);
        }
        let (rh, scaled) = rh_residual(model, u, fu, &s, sigma)?;
        if !scaled.is_finite() {
            return Err(Failure::Numerical);
        }
        if let Some(k) = converged_at {
            // one polishing step has been taken
            if scaled <= config.tol_rh {
                return Ok((s, sigma, k));
            }
            return Err(Failure::Numerical);
        }
        if scaled <= config.tol_rh {
            converged_at = Some(iter);
        } else if iter >= config.max_newton_iters || (iter > 2 && scaled > 10.0 * prev_res) {
            return Err(Failure::Numerical);
        }
        prev_res = scaled;

        let mut jac = Matrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n + 1))
            .copy_from(&rh_jacobian(model, u, &s, sigma)?);
        for k in 0..=n {
            jac[(n, k)] = t[k];
        }
        let mut g = DVector::zeros(n + 1);
        g.rows_mut(0, n).copy_from(&rh);
        g[n] = t.dot(&(&x - &xa)) - delta;
        let dx = jac.lu().solve(&g).ok_or(Failure::Numerical)?;
        x -= dx;
    }
    Err(Failure::Numerical)
}

/// Unit kernel vector of the RH linearization, oriented along `prev`.
/// `None` when the linearization is rank deficient.
fn kernel_tangent(
    model: &dyn SystemModel,
    u: &State,
    s: &State,
    sigma: f64,
    prev: &DVector<f64>,
) -> Result<Option<DVector<f64>>> {
    let n = u.len();
    let j = rh_jacobian(model, u, s, sigma)?;
    let mut square = Matrix::zeros(n + 1, n + 1);
    square.view_mut((0, 0), (n, n + 1)).copy_from(&j);
    let svd = SVD::new(square, false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let largest = svd.singular_values[order[n]];
    if n >= 1 && svd.singular_values[order[1]] <= 1e-10 * largest {
        return Ok(None);
    }
    let mut t = v_t.row(order[0]).transpose().normalize();
    if t.dot(prev) < 0.0 {
        t.neg_mut();
    }
    Ok(Some(t))
}

fn make_point(s_param: f64, state: State, speed: f64, t: &DVector<f64>) -> HugoniotPoint {
    let n = state.len();
    HugoniotPoint {
        s: s_param,
        state,
        speed,
        state_tangent: t.rows(0, n).into_owned(),
        speed_tangent: t[n],
    }
}

/// Curve point at pseudo-arclength offset `delta` from `anchor`.
pub fn chart_point(
    model: &dyn SystemModel,
    u: &State,
    anchor: &HugoniotPoint,
    delta: f64,
    config: &ContinuationConfig,
) -> Result<HugoniotPoint> {
    if delta == 0.0 {
        return Ok(anchor.clone());
    }
    let fu = model.flux(u)?;
    let (s, sigma, _) = correct(model, u, &fu, anchor, delta, config).map_err(|f| match f {
        Failure::Domain => Error::Domain {
            state: anchor.state.iter().copied().collect(),
        },
        Failure::Numerical => Error::Stalled {
            s: anchor.s + delta,
        },
    })?;
    let t = kernel_tangent(model, u, &s, sigma, &tangent_of(anchor))?.ok_or(Error::RankDeficient {
        s: anchor.s + delta,
    })?;
    Ok(make_point(anchor.s + delta, s, sigma, &t))
}

fn lax_ok(
    model: &dyn SystemModel,
    spec_u: &SpectralData,
    s: &State,
    sigma: f64,
    config: &ContinuationConfig,
) -> Result<bool> {
    let spec_s = eigen_decompose_with(model, s, &config.spectral)?;
    let margins = lax_margins_from_spectra(spec_u, &spec_s, sigma);
    let band = config.eps_lax * s.iter().fold(sigma.abs().max(1.0), |m, x| m.max(x.abs()));
    Ok(margins.iter().all(|&m| m > band))
}

const MAX_POINTS: usize = 200_000;

/// Appends points to a seeded curve until a stopping condition is met.
pub fn extend_curve(
    model: &dyn SystemModel,
    mut curve: HugoniotCurve,
    config: &ContinuationConfig,
) -> Result<TraceOutcome> {
    config.check()?;
    let u = curve.left_state.clone();
    check_admissible(model, &u)?;
    let fu = model.flux(&u)?;
    let spec_u = eigen_decompose_with(model, &u, &config.spectral)?;
    let Some(first) = curve.points.first() else {
        return Err(Error::InvalidParameter("curve has no seed point".into()));
    };
    if first.s > config.h0 {
        return Err(Error::InvalidParameter("curve does not start near s = 0".into()));
    }

    let mut lax_established = curve.points.len() > 1
        && lax_ok(model, &spec_u, &curve.points[curve.points.len() - 1].state, curve.points[curve.points.len() - 1].speed, config)
            .unwrap_or(false);
    let mut h = config.h0;
    let stop = loop {
        let last = curve.points.last().expect("nonempty").clone();
        let remaining = config.max_arclength - last.s;
        if remaining <= 1e-14 * config.max_arclength.max(1.0) || curve.points.len() >= MAX_POINTS {
            break StopReason::MaxArclength;
        }
        let step = h.min(remaining);
        let prev_t = tangent_of(&last);

        let attempt = correct(model, &u, &fu, &last, step, config);
        let failure = match attempt {
            Ok((s, sigma, iters)) => {
                let jump = (pack(&s, sigma) - pack(&last.state, last.speed)).norm();
                match kernel_tangent(model, &u, &s, sigma, &prev_t)? {
                    None => break StopReason::RankDeficient { s: last.s + step },
                    Some(t) if jump <= 2.0 * step && t.dot(&prev_t) >= 0.5 => {
                        if config.stop_on_lax_loss {
                            match lax_ok(model, &spec_u, &s, sigma, config) {
                                Ok(true) => lax_established = true,
                                Ok(false) if lax_established => {
                                    break StopReason::LaxLost { s: last.s + step }
                                }
                                Ok(false) => {}
                                Err(Error::NotStrictlyHyperbolic { .. }) => {
                                    break StopReason::HyperbolicityLost { s: last.s + step }
                                }
                                Err(e) => return Err(e),
                            }
                        }
                        curve.points.push(make_point(last.s + step, s, sigma, &t));
                        if iters <= 3 && step == h {
                            h = (2.0 * h).min(config.h_max);
                        }
                        continue;
                    }
                    Some(_) => Failure::Numerical,
                }
            }
            Err(f) => f,
        };
        h *= 0.5;
        if h < config.h_min {
            break match failure {
                Failure::Domain => StopReason::DomainBoundary { s: last.s },
                Failure::Numerical => StopReason::Stalled { s: last.s },
            };
        }
    };
    Ok(TraceOutcome { curve, stop })
}

/// Seeds and traces one half-branch.
pub fn trace_branch(
    model: &dyn SystemModel,
    u: &State,
    orientation: Orientation,
    config: &ContinuationConfig,
) -> Result<TraceOutcome> {
    config.check()?;
    let seed = seed_oriented(model, u, orientation, &config.spectral)?;
    let mut curve = HugoniotCurve::new(u.clone(), orientation);
    curve.degenerate = seed.degenerate;
    curve.points.push(seed.point);
    extend_curve(model, curve, config)
}

/// Traces the shock branch; when the family is degenerate at `u` both
/// half-branches are traced and flagged.
pub fn trace(model: &dyn SystemModel, u: &State, config: &ContinuationConfig) -> Result<Vec<TraceOutcome>> {
    let first = trace_branch(model, u, Orientation::Compressive, config)?;
    if first.curve.degenerate {
        let second = trace_branch(model, u, Orientation::Reversed, config)?;
        Ok(vec![first, second])
    } else {
        Ok(vec![first])
    }
}

/// Point at parameter `s` within the traced range.
pub fn point_at(
    model: &dyn SystemModel,
    curve: &HugoniotCurve,
    s: f64,
    config: &ContinuationConfig,
) -> Result<HugoniotPoint> {
    let s_max = curve.s_max();
    if curve.points.is_empty() || !(0.0..=s_max).contains(&s) {
        return Err(Error::OutOfRange { s_plus: s, s_max });
    }
    let k = curve.points.partition_point(|p| p.s <= s).saturating_sub(1);
    let anchor = &curve.points[k];
    if anchor.s == s {
        return Ok(anchor.clone());
    }
    chart_point(model, &curve.left_state, anchor, s - anchor.s, config)
}

/// Refines a sign change (or exact zero) of `predicate` along the curve by
/// bisection in `s` down to `1e-12`, finished with a secant step.
pub fn locate_parameter<F>(
    model: &dyn SystemModel,
    curve: &HugoniotCurve,
    config: &ContinuationConfig,
    predicate: F,
) -> Result<HugoniotPoint>
where
    F: Fn(&HugoniotPoint) -> f64,
{
    let values: Vec<f64> = curve.points.iter().map(&predicate).collect();
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            return Ok(curve.points[k].clone());
        }
        if k + 1 < values.len() && v * values[k + 1] < 0.0 {
            let anchor = &curve.points[k];
            let (mut lo, mut hi) = (0.0, curve.points[k + 1].s - anchor.s);
            let (mut g_lo, mut g_hi) = (v, values[k + 1]);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let p = chart_point(model, &curve.left_state, anchor, mid, config)?;
                let g = predicate(&p);
                if g == 0.0 {
                    return Ok(p);
                }
                if g * g_lo > 0.0 {
                    (lo, g_lo) = (mid, g);
                } else {
                    (hi, g_hi) = (mid, g);
                }
            }
            // final secant step inside the bracket
            let t = (g_lo / (g_lo - g_hi)).clamp(0.0, 1.0);
            return chart_point(model, &curve.left_state, anchor, lo + t * (hi - lo), config);
        }
    }
    Err(Error::NotBracketed)
}
