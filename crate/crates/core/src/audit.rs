//! Sweeps over left states: trace each 1-shock curve, evaluate every
//! criterion at uniformly spaced samples, and count how often the
//! hypotheses (strict Lax, `σ' < 0`, `d_s η ≥ 0`) hold without the
//! Lopatinski determinant staying away from zero.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{derive_flags, evaluate_point, hypotheses_hold, TolerancePolicy};
use crate::error::{Error, Result};
use crate::hugoniot::{point_at, trace_branch, ContinuationConfig, StopReason};
use crate::model::{check_admissible, ConditionReport, Orientation, State, SystemModel};
use crate::serialize::dvector;
use crate::systems::{catalog_lookup, Params};

/// `count` evenly spaced values from `min` to `max` (just `min` when `count == 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn fixed(value: f64) -> Self {
        GridAxis {
            min: value,
            max: value,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            c => (0..c)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub label: String,
    /// One axis per state coordinate; states are enumerated with the first
    /// coordinate varying slowest. May be empty.
    pub grid: Vec<GridAxis>,
    /// Explicit left states, enumerated after the grid.
    #[serde(default)]
    pub states: Vec<Vec<f64>>,
    pub continuation: ContinuationConfig,
    pub samples_per_curve: usize,
    pub policy: TolerancePolicy,
    /// Worker threads; 0 uses the global default.
    #[serde(skip)]
    pub jobs: usize,
}

impl SweepSpec {
    pub fn new(label: impl Into<String>, grid: Vec<GridAxis>) -> Self {
        SweepSpec {
            label: label.into(),
            grid,
            states: Vec::new(),
            continuation: ContinuationConfig::default(),
            samples_per_curve: 60,
            policy: TolerancePolicy::default(),
            jobs: 0,
        }
    }

    pub fn left_states(&self) -> Vec<State> {
        let axes: Vec<Vec<f64>> = self.grid.iter().map(GridAxis::values).collect();
        let total: usize = if axes.is_empty() {
            0
        } else {
            axes.iter().map(Vec::len).product()
        };
        let explicit = self.states.iter().map(|s| State::from_vec(s.clone()));
        (0..total)
            .map(|mut idx| {
                let mut coords = vec![0.0; axes.len()];
                for (k, axis) in axes.iter().enumerate().rev() {
                    coords[k] = axis[idx % axis.len()];
                    idx /= axis.len();
                }
                State::from_vec(coords)
            })
            .chain(explicit)
            .collect()
    }

    pub fn check(&self, model: &dyn SystemModel) -> Result<()> {
        self.continuation.check()?;
        self.policy.check()?;
        let n = model.dim();
        for len in std::iter::once(self.grid.len())
            .filter(|&l| l > 0)
            .chain(self.states.iter().map(Vec::len))
        {
            if len != n {
                return Err(Error::Dimension { expected: n, got: len });
            }
        }
        for a in &self.grid {
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return Err(Error::InvalidParameter(format!(
                    "grid axis needs finite min <= max, got [{}, {}]",
                    a.min, a.max
                )));
            }
        }
        if self.samples_per_curve == 0 {
            return Err(Error::InvalidParameter("samples_per_curve must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StateStatus {
    Inadmissible { reason: String },
    Untraced { reason: String },
    Traced { stop: StopReason, s_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub s: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAudit {
    pub index: usize,
    #[serde(with = "dvector")]
    pub left_state: State,
    pub status: StateStatus,
    pub reports: Vec<ConditionReport>,
    pub sample_failures: Vec<SampleFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub states: usize,
    pub traced: usize,
    pub untraced: usize,
    pub inadmissible: usize,
    pub points: usize,
    /// Strict Lax, `σ' < -band`, `d_s η ≥ -band`.
    pub hypothesis_points: usize,
    /// Hypothesis points with `|det| > delta_lop`.
    pub stable_hypothesis_points: usize,
    pub counterexamples: usize,
    /// Lax points with `d_s η ≥ -band` skipped because `σ'` lies in the band.
    pub grazing_skipped: usize,
    /// Points where `σ' ≤ band` holds at every sample up to and including them.
    pub dissipation_checked: usize,
    /// Among those, points with `[q] - σ[η] > band`.
    pub dissipation_violations: usize,
    /// Lopatinski holds while `σ' ≤ 0` or `d_s η ≥ 0` fails.
    pub openness_points: usize,
    /// `|Q - σ'⟨S', P(S - u)⟩|` above ten times the scaled lrh residual.
    pub identity_violations: usize,
    /// Lax points with some `β_j α_j < -band`.
    pub beta_alpha_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub state_index: usize,
    #[serde(with = "dvector")]
    pub left_state: State,
    pub s: f64,
    pub lax_margins: Vec<f64>,
    pub speed_deriv: f64,
    pub rel_entropy_deriv: f64,
    pub lopatinski_det: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub system: String,
    pub spec: SweepSpec,
    pub states: Vec<StateAudit>,
    pub tallies: Tallies,
    pub counterexamples: Vec<Counterexample>,
}

fn audit_state(model: &dyn SystemModel, spec: &SweepSpec, index: usize, u: State) -> StateAudit {
    let mut out = StateAudit {
        index,
        left_state: u.clone(),
        status: StateStatus::Untraced { reason: String::new() },
        reports: Vec::new(),
        sample_failures: Vec::new(),
    };
    if let Err(e) = check_admissible(model, &u) {
        out.status = StateStatus::Inadmissible { reason: e.to_string() };
        return out;
    }
    let traced = match trace_branch(model, &u, Orientation::Compressive, &spec.continuation) {
        Ok(t) => t,
        Err(e) => {
            out.status = StateStatus::Untraced { reason: e.to_string() };
            return out;
        }
    };
    let s_max = traced.curve.s_max();
    if s_max <= 0.0 {
        out.status = StateStatus::Untraced {
            reason: format!("no curve beyond the base point ({:?})", traced.stop),
        };
        return out;
    }
    out.status = StateStatus::Traced { stop: traced.stop, s_max };
    let n = spec.samples_per_curve;
    for k in 1..=n {
        let s = s_max * k as f64 / n as f64;
        let report = point_at(model, &traced.curve, s, &spec.continuation)
            .and_then(|p| evaluate_point(model, &u, &p, &spec.policy));
        match report {
            Ok(r) => out.reports.push(r),
            Err(e) => out.sample_failures.push(SampleFailure { s, reason: e.to_string() }),
        }
    }
    out
}

/// Tallies and counterexamples recomputed from the stored reports.
pub fn recount(states: &[StateAudit], policy: &TolerancePolicy) -> (Tallies, Vec<Counterexample>) {
    let mut t = Tallies {
        states: states.len(),
        ..Tallies::default()
    };
    let mut found = Vec::new();
    for st in states {
        match st.status {
            StateStatus::Inadmissible { .. } => t.inadmissible += 1,
            StateStatus::Untraced { .. } => t.untraced += 1,
            StateStatus::Traced { .. } => t.traced += 1,
        }
        let mut prefix_ok = true;
        for r in &st.reports {
            t.points += 1;
            let f = &derive_flags(r, policy);
            let band = policy.band(&r.point);
            let lop_ok = f.lopatinski == Some(true);
            if hypotheses_hold(f) {
                t.hypothesis_points += 1;
                if lop_ok {
                    t.stable_hypothesis_points += 1;
                } else {
                    found.push(Counterexample {
                        state_index: st.index,
                        left_state: st.left_state.clone(),
                        s: r.point.s,
                        lax_margins: r.lax_margins.clone(),
                        speed_deriv: r.speed_deriv,
                        rel_entropy_deriv: r.rel_entropy_deriv,
                        lopatinski_det: r.lopatinski_det,
                    });
                }
            } else if f.lax && f.rel_entropy_nondecreasing && f.speed_nonincreasing && !f.speed_decreasing {
                t.grazing_skipped += 1;
            }
            if lop_ok && !(f.speed_nonincreasing && f.rel_entropy_nondecreasing) {
                t.openness_points += 1;
            }
            prefix_ok &= f.speed_nonincreasing;
            if prefix_ok {
                if let Some(d) = r.dissipation {
                    t.dissipation_checked += 1;
                    if d > band {
                        t.dissipation_violations += 1;
                    }
                }
            }
            if !(r.identity_gap.abs() <= 10.0 * r.lrh_residual) {
                t.identity_violations += 1;
            }
            if f.lax && !f.beta_alpha_nonnegative {
                t.beta_alpha_violations += 1;
            }
        }
    }
    t.counterexamples = found.len();
    (t, found)
}

/// Runs the sweep. Per-state failures are recorded, never fatal; output is
/// independent of `jobs`.
pub fn run_audit(model: &dyn SystemModel, spec: &SweepSpec) -> Result<AuditResult> {
    spec.check(model)?;
    let lefts = spec.left_states();
    let work = || -> Vec<StateAudit> {
        lefts
            .par_iter()
            .enumerate()
            .map(|(i, u)| audit_state(model, spec, i, u.clone()))
            .collect()
    };
    let states = if spec.jobs == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)
    };
    let (tallies, counterexamples) = recount(&states, &spec.policy);
    Ok(AuditResult {
        system: model.name().to_string(),
        spec: spec.clone(),
        states,
        tallies,
        counterexamples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// No point satisfied the hypotheses.
    Vacuous,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationVerdict {
    pub verdict: Verdict,
    pub hypothesis_points: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl ImplicationVerdict {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn summary(&self) -> String {
        let mut s = match self.verdict {
            Verdict::Pass => format!("PASS ({} hypothesis points, all stable)", self.hypothesis_points),
            Verdict::Vacuous => "PASS (vacuous: no point satisfies the hypotheses)".to_string(),
            Verdict::Fail => format!(
                "FAIL ({} of {} hypothesis points with |det| <= delta_lop)",
                self.counterexamples.len(),
                self.hypothesis_points
            ),
        };
        for c in &self.counterexamples {
            let _ = write!(
                s,
                "\n  state #{} {:?} s={:e} det={:?} margins={:?}",
                c.state_index,
                c.left_state.as_slice(),
                c.s,
                c.lopatinski_det,
                c.lax_margins
            );
        }
        s
    }
}

/// Verdict recomputed from the stored reports, so hand-edited results are
/// judged on their contents.
pub fn implication_check(result: &AuditResult) -> ImplicationVerdict {
    let (t, counterexamples) = recount(&result.states, &result.spec.policy);
    let verdict = if !counterexamples.is_empty() {
        Verdict::Fail
    } else if t.hypothesis_points == 0 {
        Verdict::Vacuous
    } else {
        Verdict::Pass
    };
    ImplicationVerdict {
        verdict,
        hypothesis_points: t.hypothesis_points,
        counterexamples,
    }
}

pub const PLOT_HEADER: &str = "sweep,state_index,s,speed_deriv,rel_entropy_deriv,abs_lopatinski";

/// CSV rows `label, index, s, σ', d_s η, |det|` per sample, without header.
pub fn plot_rows(result: &AuditResult) -> String {
    let mut out = String::new();
    for st in &result.states {
        for r in &st.reports {
            let lop = r.lopatinski_det.map(|d| format!("{:.16e}", d.abs())).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                result.spec.label.replace(',', ";"),
                st.index, r.point.s, r.speed_deriv, r.rel_entropy_deriv, lop
            );
        }
    }
    out
}

/// CSV of [`plot_rows`] with a header line.
pub fn plot_table(result: &AuditResult) -> String {
    format!("{PLOT_HEADER}\n{}", plot_rows(result))
}

/// A catalog system paired with its sweep.
pub struct NamedSweep {
    pub system: String,
    pub params: Params,
    pub spec: SweepSpec,
}

/// The standard sweep: p-system (γ = 1.4 and 2) over a 5×5 grid, Euler
/// over 3×3 densities and energies at rest, Burgers at three states.
pub fn default_sweeps() -> Vec<NamedSweep> {
    let mut out = Vec::new();
    for gamma in [1.4, 2.0] {
        let params: Params = [("gamma".to_string(), gamma), ("k".to_string(), 1.0)].into_iter().collect();
        out.push(NamedSweep {
            system: "p_system".into(),
            params,
            spec: SweepSpec::new(
                format!("p_system gamma={gamma}"),
                vec![
                    GridAxis { min: 0.5, max: 2.0, count: 5 },
                    GridAxis { min: -1.0, max: 1.0, count: 5 },
                ],
            ),
        });
    }
    out.push(NamedSweep {
        system: "euler_ideal".into(),
        params: [("gamma".to_string(), 1.4)].into_iter().collect(),
        spec: SweepSpec::new(
            "euler_ideal gamma=1.4",
            vec![
                GridAxis { min: 0.5, max: 2.0, count: 3 },
                GridAxis::fixed(0.0),
                GridAxis { min: 1.5, max: 3.5, count: 3 },
            ],
        ),
    });
    out.push(NamedSweep {
        system: "burgers".into(),
        params: Params::new(),
        spec: SweepSpec {
            states: vec![vec![0.5], vec![1.0], vec![2.0]],
            ..SweepSpec::new("burgers", Vec::new())
        },
    });
    out
}

/// Runs [`default_sweeps`] with `jobs` worker threads.
pub fn run_default_sweeps(jobs: usize) -> Result<Vec<AuditResult>> {
    default_sweeps()
        .into_iter()
        .map(|named| {
            let model = catalog_lookup(&named.system, &named.params)?;
            let spec = SweepSpec { jobs, ..named.spec };
            run_audit(model.as_ref(), &spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serialize::to_document;
    use crate::systems::{Burgers, PSystem};

    fn burgers_spec() -> SweepSpec {
        SweepSpec {
            states: vec![vec![0.5], vec![1.0], vec![2.0]],
            ..SweepSpec::new("burgers", Vec::new())
        }
    }

    #[test]
    fn grid_enumeration_order() {
        let spec = SweepSpec::new(
            "g",
            vec![GridAxis { min: 0.0, max: 1.0, count: 2 }, GridAxis { min: 5.0, max: 7.0, count: 3 }],
        );
        let s: Vec<Vec<f64>> = spec.left_states().iter().map(|u| u.iter().copied().collect()).collect();
        assert_eq!(s[0], vec![0.0, 5.0]);
        assert_eq!(s[1], vec![0.0, 6.0]);
        assert_eq!(s[3], vec![1.0, 5.0]);
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn empty_grid_gives_empty_result() {
        let spec = SweepSpec::new("empty", vec![GridAxis { min: 0.0, max: 1.0, count: 0 }]);
        let r = run_audit(&Burgers, &spec).unwrap();
        assert!(r.states.is_empty());
        assert_eq!(implication_check(&r).verdict, Verdict::Vacuous);
    }

    #[test]
    fn burgers_sweep_passes() {
        let r = run_audit(&Burgers, &burgers_spec()).unwrap();
        assert_eq!(r.tallies.traced, 3);
        assert_eq!(r.tallies.points, 180);
        assert_eq!(r.tallies.hypothesis_points, r.tallies.stable_hypothesis_points);
        assert!(r.tallies.hypothesis_points > 0);
        assert_eq!(r.tallies.dissipation_violations, 0);
        assert_eq!(implication_check(&r).verdict, Verdict::Pass);
        assert_eq!(recount(&r.states, &r.spec.policy), (r.tallies.clone(), r.counterexamples.clone()));
    }

    #[test]
    fn injected_degenerate_report_fails() {
        let mut r = run_audit(&Burgers, &burgers_spec()).unwrap();
        let rep = &mut r.states[1].reports[10];
        rep.lopatinski_det = Some(0.0);
        rep.flags = crate::criteria::derive_flags(rep, &r.spec.policy);
        let v = implication_check(&r);
        assert_eq!(v.verdict, Verdict::Fail);
        assert_eq!(v.counterexamples.len(), 1);
        assert_eq!(v.counterexamples[0].state_index, 1);
        assert!(v.summary().starts_with("FAIL"));
    }

    #[test]
    fn inadmissible_states_are_recorded() {
        let model = PSystem::new(1.0, 2.0).unwrap();
        let spec = SweepSpec {
            states: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            samples_per_curve: 5,
            ..SweepSpec::new("p", Vec::new())
        };
        let r = run_audit(&model, &spec).unwrap();
        assert!(matches!(r.states[0].status, StateStatus::Inadmissible { .. }));
        assert_eq!(r.tallies.inadmissible, 1);
        assert_eq!(r.tallies.traced, 1);
    }

    #[test]
    fn output_independent_of_thread_count() {
        let model = PSystem::new(1.0, 1.4).unwrap();
        let base = SweepSpec {
            samples_per_curve: 10,
            ..SweepSpec::new(
                "p",
                vec![GridAxis { min: 0.5, max: 2.0, count: 3 }, GridAxis { min: -1.0, max: 1.0, count: 2 }],
            )
        };
        let one = run_audit(&model, &SweepSpec { jobs: 1, ..base.clone() }).unwrap();
        let four = run_audit(&model, &SweepSpec { jobs: 4, ..base }).unwrap();
        assert_eq!(to_document(&one), to_document(&four));
        assert_eq!(plot_table(&one), plot_table(&four));
    }
}
