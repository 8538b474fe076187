use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use shockcrit::audit::{
    default_sweeps, implication_check, plot_rows, run_audit, AuditResult, ImplicationVerdict, SweepSpec, Tallies,
    Verdict, PLOT_HEADER,
};
use shockcrit::criteria::{evaluate_point, lv_conditions, LvConditions, Margin};
use shockcrit::expr::ExprSystem;
use shockcrit::hugoniot::{locate_parameter, point_at, trace, trace_branch, StopReason};
use shockcrit::serialize::{curve_to_lines, dvector, from_document, to_document, to_record, CurveHeader, CurveRecord};
use shockcrit::systems::{catalog_lookup, sample_states};
use shockcrit::validate::{validate_system, ValidationReport};
use shockcrit::{ConditionReport, Orientation, State};

use crate::config::{parse_params, parse_state, CheckSection, RunConfig, SystemSection, Target};
use crate::{AuditArgs, CheckArgs, Cli, CliError, Command, Format, GlobalArgs, TraceArgs};

pub fn run(cli: Cli) -> Result<u8, CliError> {
    let mut cfg = resolve(&cli.global)?;
    match cli.command {
        Command::Trace(args) => cmd_trace(&cli.global, &mut cfg, &args),
        Command::Check(args) => cmd_check(&cli.global, &mut cfg, &args),
        Command::Audit(args) => cmd_audit(&cli.global, &mut cfg, &args),
        Command::Validate => cmd_validate(&cli.global, &cfg),
    }
}

/// Config file first, then command-line overrides.
fn resolve(global: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &global.system {
        match &mut cfg.system {
            Some(s) if s.custom.is_some() => {
                return Err(CliError::Config(
                    "--system conflicts with [system.custom] in the config".into(),
                ))
            }
            Some(s) => s.name = Some(name.clone()),
            None => {
                cfg.system = Some(SystemSection {
                    name: Some(name.clone()),
                    ..SystemSection::default()
                })
            }
        }
    }
    if let Some(text) = &global.params {
        let params = parse_params(text)?;
        let sys = cfg
            .system
            .as_mut()
            .ok_or_else(|| CliError::Config("--params needs --system or a [system] table".into()))?;
        match &mut sys.custom {
            Some(c) => c.params.extend(params),
            None => sys.params.extend(params),
        }
    }
    if let Some(e) = global.tol_eq {
        cfg.tolerances.eps_eq = e;
    }
    if let Some(d) = global.delta_lop {
        cfg.tolerances.delta_lop = d;
    }
    cfg.tolerances.check().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn format_of(global: &GlobalArgs, cfg: &RunConfig, default: Format) -> Result<Format, CliError> {
    if let Some(f) = global.format {
        return Ok(f);
    }
    match cfg.output.as_ref().and_then(|o| o.format.as_deref()) {
        None => Ok(default),
        Some("delimited") => Ok(Format::Delimited),
        Some("structured") => Ok(Format::Structured),
        Some(other) => Err(CliError::Config(format!(
            "output.format must be 'delimited' or 'structured', got '{other}'"
        ))),
    }
}

fn out_of(global: &GlobalArgs, cfg: &RunConfig) -> Option<PathBuf> {
    global
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.out.as_ref().map(PathBuf::from)))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// To `path`, or standard output when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
        }
    }
}

fn apply_trace_args(cfg: &mut RunConfig, args: &TraceArgs) -> Result<(), CliError> {
    if let Some(text) = &args.left_state {
        cfg.left_state = Some(parse_state(text)?);
    }
    if let Some(a) = args.max_arclength {
        cfg.continuation.max_arclength = a;
    }
    cfg.continuation.check().map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct BranchDocument {
    header: CurveHeader,
    stop: StopReason,
    points: Vec<CurveRecord>,
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    system: &'a str,
    branches: Vec<BranchDocument>,
}

fn cmd_trace(global: &GlobalArgs, cfg: &mut RunConfig, args: &TraceArgs) -> Result<u8, CliError> {
    apply_trace_args(cfg, args)?;
    let model = cfg.model()?;
    let u = cfg.left_state()?;
    let format = format_of(global, cfg, Format::Delimited)?;
    let outcomes = trace(model.as_ref(), &u, &cfg.continuation)?;

    let text = match format {
        Format::Delimited => {
            let mut s = String::new();
            for o in &outcomes {
                s.push_str(&curve_to_lines(model.as_ref(), &o.curve)?);
            }
            s
        }
        Format::Structured => {
            let branches = outcomes
                .iter()
                .map(|o| {
                    Ok(BranchDocument {
                        header: CurveHeader {
                            left_state: o.curve.left_state.clone(),
                            family: o.curve.family,
                            orientation: o.curve.orientation,
                            degenerate: o.curve.degenerate,
                        },
                        stop: o.stop,
                        points: o
                            .curve
                            .points
                            .iter()
                            .map(|p| CurveRecord::new(model.as_ref(), &u, p))
                            .collect::<shockcrit::Result<_>>()?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            to_document(&TraceDocument {
                system: model.name(),
                branches,
            })
        }
    };
    emit(out_of(global, cfg).as_deref(), &text)?;

    let mut code = 0;
    for o in &outcomes {
        match o.stop {
            StopReason::MaxArclength => {}
            stop if stop.is_failure() => {
                eprintln!(
                    "error: {} (partial curve written, {} points)",
                    stop.to_error().map(|e| e.to_string()).unwrap_or_default(),
                    o.curve.points.len()
                );
                code = 2;
            }
            stop => eprintln!("note: tracing ended early: {stop:?}"),
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct CheckHeader<'a> {
    system: &'a str,
    #[serde(with = "dvector")]
    left_state: State,
    target: String,
    s_plus: f64,
    lopatinski_error: Option<String>,
    conditions: LvConditions,
}

#[derive(Serialize)]
struct CheckDocument<'a> {
    #[serde(flatten)]
    header: CheckHeader<'a>,
    report: &'a ConditionReport,
    profile: &'a [ConditionReport],
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn margin_line(name: &str, what: &str, m: &Margin) -> String {
    format!("{name:<12} {}  worst {what} = {:.6e} at s = {:.6e}", pass(m.holds), m.margin, m.at)
}

fn cmd_check(global: &GlobalArgs, cfg: &mut RunConfig, args: &CheckArgs) -> Result<u8, CliError> {
    apply_trace_args(cfg, &args.trace)?;
    let model = cfg.model()?;
    let m = model.as_ref();
    let u = cfg.left_state()?;
    let mut section = cfg.check.clone().unwrap_or_default();
    if args.s_plus.is_some() || args.speed.is_some() || args.coordinate.is_some() || args.value.is_some() {
        section = CheckSection {
            s_plus: args.s_plus,
            speed: args.speed,
            coordinate: args.coordinate,
            value: args.value,
        };
    }
    let target = section.target()?;
    if let Target::Coordinate(i, _) = target {
        if i >= m.dim() {
            return Err(CliError::Config(format!(
                "check.coordinate {} exceeds the dimension {}",
                i + 1,
                m.dim()
            )));
        }
    }
    let format = format_of(global, cfg, Format::Structured)?;
    let policy = cfg.tolerances;
    let cont = cfg.continuation;

    let traced = trace_branch(m, &u, Orientation::Compressive, &cont)?;
    let curve = &traced.curve;
    let unreachable = |e: shockcrit::Error| {
        let why = match traced.stop.to_error() {
            Some(stop) => format!(" ({stop})"),
            None => String::new(),
        };
        CliError::Unreachable(format!("s_+ not reachable: {e}{why}"))
    };
    let end = match target {
        Target::Arclength(s) => point_at(m, curve, s, &cont),
        Target::Speed(v) => locate_parameter(m, curve, &cont, |p| p.speed - v),
        Target::Coordinate(i, v) => locate_parameter(m, curve, &cont, |p| p.state[i] - v),
    }
    .map_err(unreachable)?;

    let report = evaluate_point(m, &u, &end, &policy)?;
    let conditions = lv_conditions(m, curve, end.s, &policy, &cont)?;
    let mut profile = curve
        .points
        .iter()
        .filter(|p| p.s < end.s)
        .map(|p| evaluate_point(m, &u, p, &policy))
        .collect::<shockcrit::Result<Vec<_>>>()?;
    profile.push(report.clone());

    let header = CheckHeader {
        system: m.name(),
        left_state: u.clone(),
        target: format!("{target:?}"),
        s_plus: end.s,
        lopatinski_error: report
            .lopatinski_det
            .is_none()
            .then(|| shockcrit::Error::ZeroAmplitude.to_string()),
        conditions,
    };
    let summary = check_summary(&header, &report);

    if let Some(path) = out_of(global, cfg) {
        let text = match format {
            Format::Structured => to_document(&CheckDocument {
                header,
                report: &report,
                profile: &profile,
            }),
            Format::Delimited => {
                let mut s = to_record(&header);
                s.push('\n');
                for r in &profile {
                    s.push_str(&to_record(r));
                    s.push('\n');
                }
                s
            }
        };
        write_file(&path, &text)?;
    }
    print!("{summary}");
    Ok(0)
}

fn check_summary(h: &CheckHeader, r: &ConditionReport) -> String {
    let p = &r.point;
    let fmt_vec = |v: &State| {
        let parts: Vec<String> = v.iter().map(|x| format!("{x:.10e}")).collect();
        format!("[{}]", parts.join(", "))
    };
    let mut lines = vec![
        format!("system       {}", h.system),
        format!("left state   {}", fmt_vec(&h.left_state)),
        format!("s_plus       {:.10e}", h.s_plus),
        format!("right state  {}", fmt_vec(&p.state)),
        format!("speed        {:.10e}", p.speed),
    ];
    let min_lax = r.lax_margins.iter().copied().fold(f64::INFINITY, f64::min);
    lines.push(format!("{:<12} {}  min margin = {min_lax:.6e}", "Lax", pass(r.flags.lax)));
    lines.push(match (r.lopatinski_det, &h.lopatinski_error) {
        (Some(d), _) => format!(
            "{:<12} {}  det = {d:.6e}",
            "Lopatinski",
            pass(r.flags.lopatinski == Some(true))
        ),
        (None, Some(e)) => format!("{:<12} n/a   {e}", "Lopatinski"),
        (None, None) => format!("{:<12} n/a", "Lopatinski"),
    });
    let c = &h.conditions;
    lines.push(margin_line("(i)", "-sigma'", &c.i));
    lines.push(margin_line("(ii)", "d_s eta", &c.ii));
    lines.push(margin_line("(i')", "-sigma'", &c.i_prime));
    lines.push(margin_line("(ii')", "d_s eta", &c.ii_prime));
    lines.push(margin_line("(ii*)", "slack", &c.ii_star));
    lines.push(match (r.dissipation, r.flags.dissipative) {
        (Some(d), Some(ok)) => format!("{:<12} {}  D = [q] - sigma[eta] = {d:.10e}", "dissipation", pass(ok)),
        _ => format!("{:<12} n/a   entropy flux unavailable", "dissipation"),
    });
    lines.push(format!(
        "{:<12} {}  identity gap = {:.3e}, bound = {:.3e}",
        "proof",
        pass(r.flags.beta_alpha_nonnegative && r.identity_gap.abs() <= 10.0 * r.lrh_residual),
        r.identity_gap,
        10.0 * r.lrh_residual
    ));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AuditDocument {
    pub results: Vec<AuditResult>,
    pub verdicts: Vec<ImplicationVerdict>,
}

#[derive(Serialize)]
struct SweepHeader<'a> {
    label: &'a str,
    system: &'a str,
    spec: &'a SweepSpec,
    tallies: &'a Tallies,
    verdict: &'a ImplicationVerdict,
}

fn report_verdicts(results: &[AuditResult], verdicts: &[ImplicationVerdict]) -> u8 {
    let mut failed = false;
    for (r, v) in results.iter().zip(verdicts) {
        println!("{}: {}", r.spec.label, v.summary());
        let t = &r.tallies;
        println!(
            "  states {} (traced {}, untraced {}, inadmissible {}), points {}, dissipation checked {} violations {}, openness {}",
            t.states,
            t.traced,
            t.untraced,
            t.inadmissible,
            t.points,
            t.dissipation_checked,
            t.dissipation_violations,
            t.openness_points
        );
        if v.verdict == Verdict::Vacuous {
            eprintln!("warning: {}: no point satisfied the hypotheses", r.spec.label);
        }
        failed |= !v.passed();
    }
    println!("audit: {}", pass(!failed));
    if failed {
        3
    } else {
        0
    }
}

fn cmd_audit(global: &GlobalArgs, cfg: &mut RunConfig, args: &AuditArgs) -> Result<u8, CliError> {
    if let Some(path) = &args.from {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let doc: AuditDocument =
            from_document(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let verdicts: Vec<_> = doc.results.iter().map(implication_check).collect();
        return Ok(report_verdicts(&doc.results, &verdicts));
    }
    if let Some(a) = args.max_arclength {
        cfg.continuation.max_arclength = a;
    }
    cfg.continuation.check().map_err(|e| CliError::Config(e.to_string()))?;
    let format = format_of(global, cfg, Format::Structured)?;
    let jobs = global.jobs.unwrap_or(0);
    let audit = cfg.audit.clone().unwrap_or_default();
    let samples = args.samples.or(audit.samples_per_curve);
    let tune = |spec: SweepSpec| SweepSpec {
        continuation: cfg.continuation,
        policy: cfg.tolerances,
        samples_per_curve: samples.unwrap_or(spec.samples_per_curve),
        jobs,
        ..spec
    };

    let started = SystemTime::now();
    let clock = Instant::now();
    let mut results = Vec::new();
    if cfg.system.is_none() {
        for named in default_sweeps() {
            let model = catalog_lookup(&named.system, &named.params)?;
            results.push(run_audit(model.as_ref(), &tune(named.spec))?);
        }
    } else {
        let model = cfg.model()?;
        if audit.grid.is_empty() && audit.states.is_empty() && cfg.audit.is_none() {
            return Err(CliError::Config("missing key 'audit.grid' (or 'audit.states')".into()));
        }
        let spec = SweepSpec {
            grid: audit.grid.clone(),
            states: audit.states.clone(),
            ..SweepSpec::new(audit.label.clone().unwrap_or_else(|| model.name().to_string()), Vec::new())
        };
        let spec = tune(spec);
        spec.check(model.as_ref()).map_err(|e| CliError::Config(e.to_string()))?;
        results.push(run_audit(model.as_ref(), &spec)?);
    }
    let verdicts: Vec<_> = results.iter().map(implication_check).collect();

    let dir = out_of(global, cfg).unwrap_or_else(|| PathBuf::from("shockcrit-audit"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let doc = AuditDocument { results, verdicts };
    match format {
        Format::Structured => write_file(&dir.join("audit.json"), &to_document(&doc))?,
        Format::Delimited => {
            let mut s = String::new();
            for (r, v) in doc.results.iter().zip(&doc.verdicts) {
                s.push_str(&to_record(&SweepHeader {
                    label: &r.spec.label,
                    system: &r.system,
                    spec: &r.spec,
                    tallies: &r.tallies,
                    verdict: v,
                }));
                s.push('\n');
                for st in &r.states {
                    s.push_str(&to_record(st));
                    s.push('\n');
                }
            }
            write_file(&dir.join("audit.jsonl"), &s)?;
        }
    }
    let mut table = format!("{PLOT_HEADER}\n");
    for r in &doc.results {
        table.push_str(&plot_rows(r));
    }
    write_file(&dir.join("audit_table.csv"), &table)?;
    let meta = serde_json::json!({
        "tool": "shockcrit",
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix_s": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "elapsed_s": clock.elapsed().as_secs_f64(),
        "jobs": jobs,
    });
    write_file(&dir.join("audit.meta.json"), &format!("{meta:#}\n"))?;

    Ok(report_verdicts(&doc.results, &doc.verdicts))
}

fn cmd_validate(global: &GlobalArgs, cfg: &RunConfig) -> Result<u8, CliError> {
    let section = cfg
        .system
        .as_ref()
        .ok_or_else(|| CliError::Config("missing key 'system' (use --system NAME or a [system] table)".into()))?;
    let format = format_of(global, cfg, Format::Structured)?;
    let report: ValidationReport = match (&section.name, &section.custom) {
        (None, Some(custom)) => {
            let model = ExprSystem::from_config(custom)?;
            if custom.samples.is_empty() {
                return Err(CliError::Config("missing key 'system.custom.samples'".into()));
            }
            let samples: Vec<State> = custom.samples.iter().map(|s| State::from_vec(s.clone())).collect();
            validate_system(&model, &samples)?
        }
        _ => {
            let model = cfg.model()?;
            let name = section.name.as_deref().unwrap_or_default();
            validate_system(model.as_ref(), &sample_states(name, &section.params)?)?
        }
    };
    for s in &report.samples {
        let fd = s
            .jacobian_fd_error
            .max(s.gradient_fd_error)
            .max(s.hessian_fd_error)
            .max(s.entropy_flux_error.unwrap_or(0.0));
        println!(
            "{} {:?}  P asym {:.1e}  PA asym {:.1e}  fd {:.1e}{}",
            pass(s.passed()),
            s.state.as_slice(),
            s.p_asymmetry,
            s.pa_asymmetry,
            fd,
            s.failures.first().map(|f| format!("  ({f})")).unwrap_or_default()
        );
    }
    println!("validate: {}", pass(report.passed));
    if let Some(path) = out_of(global, cfg) {
        let text = match format {
            Format::Structured => to_document(&report),
            Format::Delimited => report.samples.iter().map(|s| to_record(s) + "\n").collect(),
        };
        write_file(&path, &text)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}
