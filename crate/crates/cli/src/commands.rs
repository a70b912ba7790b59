use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ncdist_core::distance::Divergence;
use ncdist_core::probes::{default_window, geometric_grid, DEFAULT_FIT_DECADES};
use ncdist_core::verify::{run_suite, Suite, SuiteOutcome, VerifyConfig};
use ncdist_core::{
    a_step, ahat, asymptotic_fit, check_ball, moyal_distance, radial_ball_check, torus_distance_in_box, BallReport,
    DistanceParams, DistanceReport, MoyalElement, OptimizerParams, ProbeSeries, StateSpec, TorusState,
};
use serde::{Deserialize, Serialize};

use crate::args::{BallArgs, Common, Format, MoyalArgs, ProbeArgs, TorusArgs, VerifyArgs};
use crate::error::CliError;

/// How a successful run ended; maps onto the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    SuiteFailure,
    NotConverged,
}

pub struct Emitted {
    pub body: String,
    pub status: Status,
    pub out: Option<PathBuf>,
}

/// A state given either in the command-line grammar or as a tagged object.
#[derive(Deserialize)]
#[serde(untagged)]
enum SpecInput {
    Text(String),
    Spec(StateSpec),
}

impl SpecInput {
    fn resolve(self) -> Result<StateSpec, CliError> {
        match self {
            SpecInput::Text(t) => Ok(t.parse()?),
            SpecInput::Spec(s) => Ok(s),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    theta: Option<f64>,
    order: Option<usize>,
    a: Option<SpecInput>,
    b: Option<SpecInput>,
    m: Option<[i64; 2]>,
    n: Option<[i64; 2]>,
    element: Option<MoyalElement>,
}

fn read_spec_file(path: Option<&Path>) -> Result<SpecFile, CliError> {
    match path {
        None => Ok(SpecFile::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Param(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Param(format!("{}: {e}", p.display())))
        }
    }
}

/// Settings shared by every subcommand after merging flags and the spec file.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub theta: f64,
    pub order: usize,
    pub box_radius: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

pub const DEFAULT_MOYAL_THETA: f64 = 1.0;
/// Golden-ratio conjugate, a convenient irrational default on the torus.
pub const DEFAULT_TORUS_THETA: f64 = 0.618_033_988_749_894_9;

impl RunConfig {
    fn build(common: &Common, file: &SpecFile, default_theta: f64, default_format: Format) -> Result<Self, CliError> {
        let defaults = OptimizerParams::default();
        let cfg = Self {
            theta: common.theta.or(file.theta).unwrap_or(default_theta),
            order: common.order.or(file.order).unwrap_or(DistanceParams::default().order),
            box_radius: common.box_radius,
            tol: common.tol.unwrap_or(defaults.tol),
            max_iter: common.max_iter.unwrap_or(defaults.max_iter),
            format: common.format.unwrap_or(default_format),
            out: common.out.clone(),
            timing: common.timing,
        };
        if cfg.order < 2 {
            return Err(CliError::Param(format!("order must be at least 2, got {}", cfg.order)));
        }
        if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
            return Err(CliError::Param(format!("tolerance must be positive, got {}", cfg.tol)));
        }
        if cfg.max_iter == 0 {
            return Err(CliError::Param("iteration cap must be positive".into()));
        }
        Ok(cfg)
    }

    fn moyal(common: &Common, file: &SpecFile, default_format: Format) -> Result<Self, CliError> {
        let cfg = Self::build(common, file, DEFAULT_MOYAL_THETA, default_format)?;
        if !(cfg.theta.is_finite() && cfg.theta > 0.0) {
            return Err(CliError::Param(format!("theta must be positive, got {}", cfg.theta)));
        }
        Ok(cfg)
    }

    fn torus(common: &Common, file: &SpecFile) -> Result<Self, CliError> {
        let cfg = Self::build(common, file, DEFAULT_TORUS_THETA, Format::Json)?;
        if !(0.0..1.0).contains(&cfg.theta) {
            return Err(CliError::Param(format!("torus theta must lie in [0, 1), got {}", cfg.theta)));
        }
        Ok(cfg)
    }

    fn optimizer(&self) -> OptimizerParams {
        OptimizerParams { tol: self.tol, max_iter: self.max_iter, ..OptimizerParams::default() }
    }
}

/// Report body with an optional wall-clock field appended.
#[derive(Serialize)]
struct Timed<'a, T> {
    #[serde(flatten)]
    inner: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

fn elapsed(cfg: &RunConfig, start: Instant) -> Option<f64> {
    cfg.timing.then(|| start.elapsed().as_secs_f64())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct ReportRow<'a> {
    state_a: &'a str,
    state_b: &'a str,
    theta: f64,
    order: usize,
    closed_form: Option<f64>,
    certificate_lower: f64,
    certificate_id: Option<&'a str>,
    analytic_upper: Option<f64>,
    optimizer_lower: Option<f64>,
    bracket_width: Option<f64>,
    converged: bool,
    divergence_claimed: Option<bool>,
    elapsed_seconds: Option<f64>,
}

fn emit_report(report: &DistanceReport, labels: (&str, &str), cfg: &RunConfig) -> Result<Emitted, CliError> {
    let body = match cfg.format {
        Format::Json => json(report)?,
        Format::Csv => csv_rows([ReportRow {
            state_a: labels.0,
            state_b: labels.1,
            theta: report.theta,
            order: report.order,
            closed_form: report.closed_form,
            certificate_lower: report.certificate_lower,
            certificate_id: report.certificate_id.as_deref(),
            analytic_upper: report.analytic_upper,
            optimizer_lower: report.optimizer_lower,
            bracket_width: report.bracket_width,
            converged: report.converged,
            divergence_claimed: report.divergence.as_ref().map(|d| d.claimed),
            elapsed_seconds: report.elapsed_seconds,
        }])?,
    };
    let status = if report.converged { Status::Ok } else { Status::NotConverged };
    Ok(Emitted { body, status, out: cfg.out.clone() })
}

fn probe_grid(lo: u64, hi: u64, points_per_decade: usize) -> Vec<u64> {
    geometric_grid(hi, points_per_decade).into_iter().filter(|&m| m >= lo).collect()
}

pub fn moyal_distance_cmd(args: &MoyalArgs) -> Result<Emitted, CliError> {
    let start = Instant::now();
    let mut file = read_spec_file(args.common.spec_file.as_deref())?;
    let cfg = RunConfig::moyal(&args.common, &file, Format::Json)?;
    let pick = |flag: &Option<StateSpec>, from_file: Option<SpecInput>, name: &str| match flag {
        Some(s) => Ok(s.clone()),
        None => from_file.map(SpecInput::resolve).unwrap_or_else(|| Err(CliError::Param(format!("missing --{name}")))),
    };
    let a = pick(&args.a, file.a.take(), "a")?;
    let b = pick(&args.b, file.b.take(), "b")?;
    let (s1, s2) = (a.build(cfg.theta)?, b.build(cfg.theta)?);
    let params = DistanceParams { order: cfg.order, optimizer: cfg.optimizer(), ..DistanceParams::default() };
    let mut report = moyal_distance(&s1, &s2, &params)?;
    if args.probe {
        let grid = probe_grid(100, 1_000_000, 12);
        match asymptotic_fit((&a, &b), cfg.theta, &grid, None) {
            Ok(series) => {
                report.divergence = Some(Divergence {
                    fitted_slope: series.fitted_slope,
                    theory_slope: series.theory_slope,
                    claimed: series.divergence,
                })
            }
            // B vanishes identically: nothing to fit
            Err(ncdist_core::Error::NonPositiveWindow) => {}
            Err(e) => return Err(e.into()),
        }
    }
    report.elapsed_seconds = elapsed(&cfg, start);
    emit_report(&report, (&a.to_string(), &b.to_string()), &cfg)
}

fn torus_label(s: TorusState) -> String {
    match s {
        TorusState::Tracial => "tracial".into(),
        TorusState::Phi((m1, m2)) => format!("phi:{m1},{m2}"),
    }
}

pub fn torus_distance_cmd(args: &TorusArgs) -> Result<Emitted, CliError> {
    let start = Instant::now();
    let file = read_spec_file(args.common.spec_file.as_deref())?;
    let cfg = RunConfig::torus(&args.common, &file)?;
    let m = args.m.or(file.m.map(|[a, b]| (a, b))).ok_or_else(|| CliError::Param("missing --m".into()))?;
    let s1 = TorusState::phi(m)?;
    let s2 = match args.n.or(file.n.map(|[a, b]| (a, b))) {
        Some(n) => TorusState::phi(n)?,
        None => TorusState::Tracial,
    };
    let mut report = torus_distance_in_box(s1, s2, cfg.theta, cfg.box_radius)?;
    report.elapsed_seconds = elapsed(&cfg, start);
    emit_report(&report, (&torus_label(s1), &torus_label(s2)), &cfg)
}

#[derive(Serialize)]
struct SeriesRow {
    m0: u64,
    b: f64,
    ln_m0: f64,
    ln_b: f64,
}

pub fn probe_cmd(args: &ProbeArgs) -> Result<Emitted, CliError> {
    let start = Instant::now();
    let mut file = read_spec_file(args.common.spec_file.as_deref())?;
    let cfg = RunConfig::moyal(&args.common, &file, Format::Csv)?;
    let (a, b) = match &args.pair {
        Some(p) => p.clone(),
        None => match (file.a.take(), file.b.take()) {
            (Some(a), Some(b)) => (a.resolve()?, b.resolve()?),
            _ => return Err(CliError::Param("missing --pair".into())),
        },
    };
    let (lo, hi) = args.grid;
    if args.points_per_decade == 0 {
        return Err(CliError::Param("points per decade must be positive".into()));
    }
    let grid = probe_grid(lo, hi, args.points_per_decade);
    let decades = if args.fit_top > 0.0 { args.fit_top } else { DEFAULT_FIT_DECADES };
    let window = default_window(&grid, decades);
    let series: ProbeSeries = asymptotic_fit((&a, &b), cfg.theta, &grid, Some(window))?;
    eprintln!(
        "slope {:.4} over m0 in [{}, {}]; leading-order slope {:.4}; divergence claimed: {}",
        series.fitted_slope, window.0, window.1, series.theory_slope, series.divergence
    );
    let body = match cfg.format {
        Format::Json => json(&Timed { inner: &series, elapsed_seconds: elapsed(&cfg, start) })?,
        Format::Csv => csv_rows(series.rows().map(|(m0, b, ln_m0, ln_b)| SeriesRow { m0, b, ln_m0, ln_b }))?,
    };
    Ok(Emitted { body, status: Status::Ok, out: cfg.out })
}

#[derive(Serialize)]
struct VerifySummary {
    passed: bool,
    suites: Vec<SuiteOutcome>,
}

#[derive(Serialize)]
struct CheckRow<'a> {
    suite: &'a str,
    check: &'a str,
    instances: usize,
    max_deviation: f64,
    tolerance: f64,
    passed: bool,
}

pub fn verify_cmd(args: &VerifyArgs) -> Result<Emitted, CliError> {
    let start = Instant::now();
    let file = read_spec_file(args.common.spec_file.as_deref())?;
    let suites: Vec<Suite> = match args.suite.as_str() {
        "all" => Suite::ALL.to_vec(),
        name => vec![name.parse()?],
    };
    if args.instances == 0 {
        return Err(CliError::Param("instances must be positive".into()));
    }
    let max_order = args.common.order.or(file.order).unwrap_or(VerifyConfig::default().max_order);
    if max_order < 2 {
        return Err(CliError::Param(format!("order must be at least 2, got {max_order}")));
    }
    let vcfg = VerifyConfig { instances: args.instances, max_order, seed: args.seed };
    let outcomes: Vec<SuiteOutcome> = suites.into_iter().map(|s| run_suite(s, &vcfg)).collect();
    let passed = outcomes.iter().all(|o| o.passed);
    let elapsed_seconds = args.common.timing.then(|| start.elapsed().as_secs_f64());
    let body = match args.common.format {
        Some(Format::Json) => json(&Timed { inner: &VerifySummary { passed, suites: outcomes.clone() }, elapsed_seconds })?,
        Some(Format::Csv) => csv_rows(outcomes.iter().flat_map(|o| {
            o.checks.iter().map(move |c| CheckRow {
                suite: o.suite.name(),
                check: &c.name,
                instances: c.instances,
                max_deviation: c.max_deviation,
                tolerance: c.tolerance,
                passed: c.passed,
            })
        }))?,
        None => {
            let mut text = String::new();
            for o in &outcomes {
                let ok = o.checks.iter().filter(|c| c.passed).count();
                let verdict = if o.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!("{:<10} {verdict}  {ok}/{} checks\n", o.suite.name(), o.checks.len()));
                for c in o.checks.iter().filter(|c| !c.passed) {
                    text.push_str(&format!(
                        "    failed: {} (max deviation {:.3e}, tolerance {:.1e}, {} instances)\n",
                        c.name, c.max_deviation, c.tolerance, c.instances
                    ));
                }
            }
            if let Some(t) = elapsed_seconds {
                text.push_str(&format!("elapsed {t:.3}s\n"));
            }
            text
        }
    };
    let status = if passed { Status::Ok } else { Status::SuiteFailure };
    Ok(Emitted { body, status, out: args.common.out.clone() })
}

/// `ahat:m0`, `step:n` or `basis:m,n`.
fn parse_element(text: &str, theta: f64) -> Result<MoyalElement, CliError> {
    let bad = || CliError::Param(format!("element `{text}`: expected ahat:m0, step:n or basis:m,n"));
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    Ok(match kind {
        "ahat" => ahat(num(rest)?, theta)?,
        "step" => a_step(num(rest)?, theta)?,
        "basis" => {
            let (m, n) = rest.split_once(',').ok_or_else(bad)?;
            MoyalElement::basis(theta, num(m)?, num(n)?)?
        }
        _ => return Err(bad()),
    })
}

#[derive(Serialize)]
struct BallOutput {
    theta: f64,
    order: usize,
    #[serde(flatten)]
    report: BallReport,
    /// Entry criterion verdict; absent for non-radial elements.
    radial_member: Option<bool>,
}

#[derive(Serialize)]
struct BallRow {
    theta: f64,
    order: usize,
    commutator_norm: f64,
    slack: f64,
    member: bool,
    violations: usize,
    radial_member: Option<bool>,
}

pub fn ball_check_cmd(args: &BallArgs) -> Result<Emitted, CliError> {
    let start = Instant::now();
    let mut file = read_spec_file(args.common.spec_file.as_deref())?;
    let cfg = RunConfig::moyal(&args.common, &file, Format::Json)?;
    let element = match (&args.element, file.element.take()) {
        (Some(text), _) => parse_element(text, cfg.theta)?,
        (None, Some(e)) => e,
        (None, None) => return Err(CliError::Param("missing --element".into())),
    };
    if !args.scale.is_finite() {
        return Err(CliError::Param(format!("scale must be finite, got {}", args.scale)));
    }
    let element = element.scale(args.scale);
    let tol = args.common.tol.unwrap_or(ncdist_core::lipschitz::DEFAULT_TOL);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Param(format!("tolerance must be nonnegative, got {tol}")));
    }
    let report = check_ball(&element, tol);
    let radial_member = radial_ball_check(&element).ok();
    let out = BallOutput { theta: element.theta(), order: element.order(), report, radial_member };
    let body = match cfg.format {
        Format::Json => json(&Timed { inner: &out, elapsed_seconds: elapsed(&cfg, start) })?,
        Format::Csv => csv_rows([BallRow {
            theta: out.theta,
            order: out.order,
            commutator_norm: out.report.commutator_norm,
            slack: out.report.slack,
            member: out.report.member,
            violations: out.report.violations.len(),
            radial_member,
        }])?,
    };
    Ok(Emitted { body, status: Status::Ok, out: cfg.out })
}
