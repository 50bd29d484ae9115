//! Command-line front end.  Every subcommand reads a scenario file and writes
//! CSV; metadata goes into leading `#` lines so data rows stay reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::Error;
use crate::mathieu::{self, MathieuEquation, SeriesFrequency};
use crate::oracle;
use crate::probability::{self, LogProbability};
use crate::propagator::{
    self, fluctuation_prefactor_robust, fluctuation_prefactor_single, AxisScenario, FSource,
    PropagationOptions, DEFAULT_CAUSTIC_THRESHOLD, TYPO_LEDGER,
};
use crate::records::{MeasurementRecord, RecordSpec};
use crate::scenario::{FSourceKind, Scenario};
use crate::trapmodel::{dimensionless, Axis, Frequency};

type C64 = Complex64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Oracle agreement required by `validate`: relative in log-modulus and
/// absolute in phase (rad).
pub const VALIDATION_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "paultrap",
    version,
    about = "Restricted propagator and record probabilities for a monitored Paul-trap ion"
)]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output path, or `stdout`.
    #[arg(long, global = true, default_value = "stdout")]
    pub out: String,
    /// Worker threads for parallel jobs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `numerics.tol`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-amplitude and its parts for both axes.
    Propagate,
    /// Rank candidate records by probability.
    Prob {
        /// x-axis record CSV (`time_s,value_m`); repeat for several candidates.
        #[arg(long = "record-x")]
        record_x: Vec<PathBuf>,
        /// z-axis record CSV, paired by position with `--record-x`.
        #[arg(long = "record-z")]
        record_z: Vec<PathBuf>,
    },
    /// Compare the pipeline with the sliced path integral.
    Validate {
        /// Coarse slice counts; each is extrapolated with twice as many.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<usize>,
        /// Validation window length in seconds from `t_start`.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Cartesian sweep over record family parameters and resolution.
    Sweep {
        /// Sweep specification (TOML).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Series coefficients and `f` samples in the scaled time `ωt/2`.
    Mathieu {
        #[arg(long, default_value = "x")]
        axis: AxisArg,
        #[arg(long, default_value_t = 4)]
        terms: usize,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Upper end of the scaled-time range.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        span: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    X,
    Z,
    #[default]
    Both,
}

impl AxisArg {
    fn axes(self) -> Vec<Axis> {
        match self {
            AxisArg::X => vec![Axis::X],
            AxisArg::Z => vec![Axis::Z],
            AxisArg::Both => vec![Axis::X, Axis::Z],
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_singularity() || matches!(e, Error::ToleranceNotMet { .. }) {
            EXIT_SINGULAR
        } else {
            EXIT_CONFIG
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        // A pool set up earlier in the same process is fine to keep.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let path = cli
        .scenario
        .as_deref()
        .ok_or_else(|| config("--scenario is required"))?;
    let mut scenario = Scenario::load(path)?;
    if let Some(tol) = cli.tol {
        scenario.numerics.tol = tol;
        scenario.validate()?;
    }
    let mut out = String::new();
    let result = match &cli.command {
        Command::Propagate => propagate(&scenario, &mut out),
        Command::Prob { record_x, record_z } => prob(&scenario, record_x, record_z, &mut out),
        Command::Validate { levels, window } => validate(&scenario, levels, *window, &mut out),
        Command::Sweep { spec } => sweep(&scenario, spec, &mut out),
        Command::Mathieu {
            axis,
            terms,
            samples,
            span,
        } => mathieu_dump(&scenario, *axis, *terms, *samples, *span, &mut out),
    };
    // Validation failures still produce their report.
    emit(&cli.out, &out)?;
    result
}

fn emit(target: &str, text: &str) -> Result<(), Failure> {
    if target == "stdout" || target == "-" {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(target, text).map_err(|e| Failure {
            code: 1,
            message: format!("cannot write {target}: {e}"),
        })
    }
}

/// Scientific notation with 16 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn header(out: &mut String, names: &[&str]) {
    out.push_str(&names.join(","));
    out.push('\n');
}

fn propagate(scenario: &Scenario, out: &mut String) -> Result<(), Failure> {
    let opts = scenario.propagation_options();
    let rows: Vec<_> = [Axis::X, Axis::Z]
        .par_iter()
        .map(|&axis| {
            scenario
                .axis(axis)
                .and_then(|s| propagator::restricted_propagator(&s, &opts))
                .map(|r| (axis, r))
        })
        .collect::<Result<_, Error>>()?;
    header(
        out,
        &[
            "axis",
            "log_modulus",
            "phase",
            "winding",
            "action_re",
            "action_im",
            "record_term",
            "log_prefactor_re",
            "log_prefactor_im",
            "caustics",
            "route",
        ],
    );
    for (axis, r) in rows {
        let route = match r.route {
            propagator::Route::Direct => "direct".to_string(),
            propagator::Route::PeriodStepped { periods } => format!("stepped:{periods}"),
        };
        row(
            out,
            &[
                axis.label().to_string(),
                num(r.log_modulus()),
                num(r.phase()),
                r.winding().to_string(),
                num(r.action.re),
                num(r.action.im),
                num(r.record_term),
                num(r.prefactor_term.re),
                num(r.prefactor_term.im),
                r.prefactor.caustics().to_string(),
                route,
            ],
        );
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_record(path: &Path) -> Result<MeasurementRecord, Failure> {
    Ok(MeasurementRecord::from_csv_path(path)?)
}

/// Candidate `(id, x scenario, z scenario)` triples.  Records given for only
/// one axis pair with the scenario's own record on the other.
fn candidates(
    scenario: &Scenario,
    xs: &[PathBuf],
    zs: &[PathBuf],
) -> Result<Vec<(String, AxisScenario, AxisScenario)>, Failure> {
    if !xs.is_empty() && !zs.is_empty() && xs.len() != zs.len() {
        return Err(config(format!(
            "--record-x given {} times but --record-z {} times; they pair by position",
            xs.len(),
            zs.len()
        )));
    }
    let n = xs.len().max(zs.len());
    if n == 0 {
        return Ok(vec![(
            "scenario".into(),
            scenario.axis(Axis::X)?,
            scenario.axis(Axis::Z)?,
        )]);
    }
    (0..n)
        .map(|k| {
            let (x, xid) = match xs.get(k) {
                Some(p) => (
                    scenario.axis_with_record(Axis::X, load_record(p)?),
                    Some(stem(p)),
                ),
                None => (scenario.axis(Axis::X)?, None),
            };
            let (z, zid) = match zs.get(k) {
                Some(p) => (
                    scenario.axis_with_record(Axis::Z, load_record(p)?),
                    Some(stem(p)),
                ),
                None => (scenario.axis(Axis::Z)?, None),
            };
            x.validate()?;
            z.validate()?;
            let id = match (xid, zid) {
                (Some(a), Some(b)) if a != b => format!("{a}+{b}"),
                (Some(a), _) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            };
            Ok((id, x, z))
        })
        .collect()
}

fn evaluate_pair(
    x: &AxisScenario,
    z: &AxisScenario,
    opts: &PropagationOptions,
) -> Result<(LogProbability, LogProbability), Error> {
    let (px, pz) = rayon::join(
        || probability::probability_x(x, opts),
        || probability::probability_z(z, opts),
    );
    Ok((px?, pz?))
}

fn prob(
    scenario: &Scenario,
    xs: &[PathBuf],
    zs: &[PathBuf],
    out: &mut String,
) -> Result<(), Failure> {
    scenario.check_joint_windows()?;
    let cands = candidates(scenario, xs, zs)?;
    let opts = scenario.propagation_options();
    let evaluated: Vec<(f64, f64)> = cands
        .par_iter()
        .map(|(_, x, z)| evaluate_pair(x, z, &opts).map(|(px, pz)| (px.log_p, pz.log_p)))
        .collect::<Result<_, Error>>()?;
    let ranked = probability::rank(
        cands
            .iter()
            .zip(&evaluated)
            .map(|((id, _, _), (px, pz))| (id.clone(), px + pz))
            .collect(),
    );
    header(
        out,
        &["record_id", "log_p_x", "log_p_z", "log_p_joint", "log_odds"],
    );
    for r in ranked {
        let (px, pz) = evaluated[r.index];
        row(
            out,
            &[r.id, num(px), num(pz), num(r.log_p), num(r.log_odds)],
        );
    }
    Ok(())
}

/// Longest window from `t′` that `n` oracle slices resolve well: 256 slices
/// per drive period and `ε·max|w̃| ≤ 0.02`.
pub fn oracle_window(s: &AxisScenario, n: usize) -> Result<f64, Error> {
    let spec = s.effective_frequency()?;
    let period = 2.0 * std::f64::consts::PI / spec.drive_omega;
    let w2max = (0..=64)
        .map(|k| {
            spec.w2(s.boundary.t_start + period * k as f64 / 64.0)
                .norm()
        })
        .fold(0.0, f64::max);
    let mut eps = 0.02 / w2max.sqrt().max(f64::MIN_POSITIVE);
    if spec.v != 0.0 {
        eps = eps.min(period / 256.0);
    }
    Ok(n as f64 * eps)
}

/// The same axis problem on `[t′, t′ + len]`.  The resolution is rescaled so
/// the weight strength, and with it `w̃²`, stays that of the full window;
/// the record keeps its values in time.
pub fn truncate(s: &AxisScenario, len: f64, n_samples: usize) -> Result<AxisScenario, Error> {
    let t0 = s.boundary.t_start;
    let full = s.measurement.duration();
    let mut meas = s.measurement;
    meas.t_end = t0 + len;
    meas.resolution = s.measurement.resolution * (full / len).sqrt();
    let n = n_samples.max(2);
    let dt = len / (n - 1) as f64;
    let samples = (0..n).map(|k| s.record.eval(t0 + k as f64 * dt)).collect();
    let mut out = s.clone();
    out.measurement = meas;
    out.record = MeasurementRecord::new(t0, dt, samples)?;
    out.boundary.t_end = t0 + len;
    Ok(out)
}

fn wrap(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = x.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

fn c_str(z: C64) -> String {
    format!("{:.9e}{:+.9e}i", z.re, z.im)
}

fn validate(
    scenario: &Scenario,
    levels: &[usize],
    window: Option<f64>,
    out: &mut String,
) -> Result<(), Failure> {
    let levels = if levels.is_empty() {
        vec![scenario.numerics.oracle_n]
    } else {
        levels.to_vec()
    };
    if let Some(&bad) = levels.iter().find(|&&n| n < 2) {
        return Err(config(format!(
            "--levels: need at least 2 slices, got {bad}"
        )));
    }
    let n_max = *levels.iter().min().unwrap();
    let opts = scenario.propagation_options();
    let mut all_pass = true;

    // Series identification.
    for axis in [Axis::X, Axis::Z] {
        let name = if axis == Axis::X { "alpha" } else { "beta" };
        let spec = scenario.axis(axis)?.effective_frequency()?;
        match dimensionless(&spec) {
            Ok(d) => {
                let _ = writeln!(
                    out,
                    "# {} axis: p = {}, q = {:.9e}, {name} = {}",
                    axis.label(),
                    c_str(d.p),
                    d.q,
                    c_str(d.alpha)
                );
            }
            Err(Error::ZeroQ) => {
                let _ = writeln!(
                    out,
                    "# {} axis: q = 0, series path unavailable; numeric ODE path used",
                    axis.label()
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut body = String::new();
    header(
        &mut body,
        &[
            "axis",
            "n",
            "t_end",
            "oracle_n_re",
            "oracle_n_im",
            "oracle_2n_re",
            "oracle_2n_im",
            "richardson_re",
            "richardson_im",
            "richardson_err",
            "pipeline_re",
            "pipeline_im",
            "abs_diff",
            "log_modulus_rel_err",
            "phase_err",
            "pass",
        ],
    );
    for axis in [Axis::X, Axis::Z] {
        let full = scenario.axis(axis)?;
        let limit = match window {
            Some(w) => w,
            None => oracle_window(&full, n_max)?,
        };
        let s = if limit < full.measurement.duration() {
            let t = truncate(&full, limit, scenario.numerics.n_samples)?;
            let _ = writeln!(
                out,
                "# {} axis: window truncated to [{}, {}] for the oracle (resolution rescaled to {:.6e} m to keep the weight strength)",
                axis.label(),
                t.boundary.t_start,
                t.boundary.t_end,
                t.measurement.resolution
            );
            t
        } else {
            full
        };
        let pipe = propagator::restricted_propagator(&s, &opts)?;
        prefactor_report(scenario, &s, out);
        let rows: Vec<_> = levels
            .par_iter()
            .map(|&n| oracle::extrapolated_propagator(&s, n).map(|r| (n, r)))
            .collect::<Result<_, Error>>()?;
        for (n, (a, b, r)) in rows {
            let diff = pipe.log_amplitude - r.value;
            let rel = diff.re.abs() / r.value.re.abs().max(f64::MIN_POSITIVE);
            let phase = wrap(diff.im).abs();
            let pass = rel <= VALIDATION_TOL && phase <= VALIDATION_TOL;
            all_pass &= pass;
            row(
                &mut body,
                &[
                    axis.label().into(),
                    n.to_string(),
                    num(s.boundary.t_end),
                    num(a.re),
                    num(a.im),
                    num(b.re),
                    num(b.im),
                    num(r.value.re),
                    num(r.value.im),
                    num(r.error),
                    num(pipe.log_amplitude.re),
                    num(pipe.log_amplitude.im),
                    num(diff.norm()),
                    num(rel),
                    num(phase),
                    if pass { "pass" } else { "fail" }.into(),
                ],
            );
        }
    }
    closed_form_report(scenario, out);
    out.push_str(&body);
    if all_pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: "pipeline and oracle disagree beyond tolerance".into(),
        })
    }
}

/// Cross-checks the `D`-function prefactor against the single-solution form.
fn prefactor_report(scenario: &Scenario, s: &AxisScenario, out: &mut String) {
    let label = s.axis.label();
    let (m, hbar) = (s.params.mass, s.params.hbar);
    let window = s.boundary.window();
    let spec = match s.effective_frequency() {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(out, "# {label} prefactor check skipped: {e}");
            return;
        }
    };
    let opts = scenario.propagation_options();
    let robust = match fluctuation_prefactor_robust(
        m,
        hbar,
        &spec,
        window,
        &opts.window_options(),
        DEFAULT_CAUSTIC_THRESHOLD,
    ) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(out, "# {label} prefactor check skipped: {e}");
            return;
        }
    };
    let series;
    let source = match scenario.numerics.f_source {
        FSourceKind::Ode => FSource::Ode {
            freq: &spec,
            init: (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        },
        FSourceKind::Series => match dimensionless(&spec)
            .and_then(|d| mathieu::mathieu_series(&d, mathieu::MAX_TERMS))
        {
            Ok(coeffs) => {
                series = SeriesFrequency {
                    coeffs,
                    drive_omega: spec.drive_omega,
                };
                FSource::Series(&series)
            }
            Err(e) => {
                let _ = writeln!(
                    out,
                    "# {label} series f unavailable ({e}); single-solution check skipped"
                );
                return;
            }
        },
    };
    let kind = match scenario.numerics.f_source {
        FSourceKind::Ode => "ode",
        FSourceKind::Series => "series",
    };
    match fluctuation_prefactor_single(m, hbar, &source, window, scenario.numerics.tol) {
        Ok(single) => {
            let rel = ((single.value() - robust.value()) / robust.value()).norm();
            let _ = writeln!(
                out,
                "# {label} prefactor: D-function {} single-solution({kind}) {} rel diff {:.3e}",
                c_str(robust.value()),
                c_str(single.value()),
                rel
            );
        }
        Err(e) => {
            let _ = writeln!(
                out,
                "# {label} prefactor: D-function {}; single-solution({kind}) unusable: {e}",
                c_str(robust.value())
            );
        }
    }
}

/// Closed-form prefactor of the two-term `f` against the `D`-function
/// prefactor on three zero-free windows, followed by the correction ledger.
fn closed_form_report(scenario: &Scenario, out: &mut String) {
    let Ok(spec) = scenario.axis(Axis::X).and_then(|s| s.effective_frequency()) else {
        return;
    };
    let d = match dimensionless(&spec) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(out, "# closed-form check skipped: {e}");
            return;
        }
    };
    let (m, hbar, omega) = (scenario.trap.mass, scenario.trap.hbar, spec.drive_omega);
    for w in propagator::zero_free_windows(d.alpha, omega) {
        match propagator::reconcile(&d, omega, m, hbar, w, scenario.numerics.tol.min(1e-11)) {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "# closed form on [{:.9e}, {:.9e}]: squared {} vs D-function {}; rel diff {:.3e} ({})",
                    w.0,
                    w.1,
                    c_str(r.closed.squared),
                    c_str(r.robust.value() * r.robust.value()),
                    r.rel_diff,
                    if r.rel_diff <= 1e-6 { "match" } else { "MISMATCH" }
                );
            }
            Err(e) => {
                let _ = writeln!(out, "# closed form on [{:.9e}, {:.9e}]: {e}", w.0, w.1);
            }
        }
    }
    for e in TYPO_LEDGER {
        let _ = writeln!(
            out,
            "# closed-form correction: printed `{}` -> implemented `{}`",
            e.printed, e.implemented
        );
    }
}

/// Sweep specification.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub axis: AxisArg,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default = "zero_list")]
    pub omega: Vec<f64>,
    #[serde(default = "zero_list")]
    pub phase: Vec<f64>,
    /// Empty keeps the scenario's resolution.
    #[serde(default)]
    pub resolution: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Constant,
    Sinusoid,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::invalid("sweep", e.to_string()))
    }

    /// Points in lexicographic order of `(amplitude, omega, phase, resolution)`
    /// indices.  `None` resolution keeps the scenario's.
    pub fn points(&self) -> Vec<(f64, f64, f64, Option<f64>)> {
        let res: Vec<Option<f64>> = if self.resolution.is_empty() {
            vec![None]
        } else {
            self.resolution.iter().map(|r| Some(*r)).collect()
        };
        let mut pts = Vec::new();
        for &a in &self.amplitude {
            for &w in &self.omega {
                for &p in &self.phase {
                    for &r in &res {
                        pts.push((a, w, p, r));
                    }
                }
            }
        }
        pts
    }
}

fn sweep(scenario: &Scenario, spec_path: &Path, out: &mut String) -> Result<(), Failure> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| config(format!("{}: {e}", spec_path.display())))?;
    let spec = SweepSpec::from_toml_str(&text)?;
    let swept = spec.axis.axes();
    let opts = scenario.propagation_options();
    let points = spec.points();
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|&(a, w, p, r)| {
            let mut s = scenario.clone();
            let family = match spec.family {
                Family::Constant => RecordSpec::Constant { amplitude: a },
                Family::Sinusoid => RecordSpec::Sinusoid {
                    amplitude: a,
                    omega: w,
                    phase: p,
                },
            };
            for axis in &swept {
                match axis {
                    Axis::X => {
                        s.record_x = family.clone();
                        if let Some(r) = r {
                            s.measurement_x.resolution = r;
                        }
                    }
                    Axis::Z => {
                        s.record_z = family.clone();
                        if let Some(r) = r {
                            s.measurement_z.resolution = r;
                        }
                    }
                }
            }
            s.validate()?;
            let (px, pz) = evaluate_pair(&s.axis(Axis::X)?, &s.axis(Axis::Z)?, &opts)?;
            Ok((px.log_p, pz.log_p))
        })
        .collect::<Result<_, Error>>()?;
    header(
        out,
        &[
            "amplitude",
            "omega",
            "phase",
            "resolution",
            "log_p_x",
            "log_p_z",
            "log_p_joint",
        ],
    );
    for (&(a, w, p, r), (px, pz)) in points.iter().zip(rows) {
        let res = r.map(num).unwrap_or_else(|| "scenario".into());
        row(
            out,
            &[num(a), num(w), num(p), res, num(px), num(pz), num(px + pz)],
        );
    }
    Ok(())
}

fn mathieu_dump(
    scenario: &Scenario,
    axis: AxisArg,
    terms: usize,
    samples: usize,
    span: f64,
    out: &mut String,
) -> Result<(), Failure> {
    let axis = match axis {
        AxisArg::X => Axis::X,
        AxisArg::Z => Axis::Z,
        AxisArg::Both => return Err(config("mathieu: --axis must be x or z")),
    };
    if samples < 2 {
        return Err(config("mathieu: --samples must be at least 2"));
    }
    let spec = scenario.axis(axis)?.effective_frequency()?;
    let d = dimensionless(&spec)?;
    let coeffs = mathieu::mathieu_series(&d, terms)?;
    let _ = writeln!(
        out,
        "# axis {}: p = {}, q = {:.15e}, ratio = {}",
        axis.label(),
        c_str(d.p),
        d.q,
        c_str(d.alpha)
    );
    for (k, c) in coeffs.coefficients.iter().enumerate() {
        let _ = writeln!(out, "# c{} = {}", 2 * k + 1, c_str(*c));
    }
    let grid: Vec<f64> = (0..samples)
        .map(|k| span * k as f64 / (samples - 1) as f64)
        .collect();
    let init = (
        mathieu::evaluate_f(&coeffs, 0.0),
        mathieu::evaluate_f_derivative(&coeffs, 0.0),
    );
    let ode = mathieu::integrate_mathieu_ode(
        MathieuEquation { p: d.p, q: d.q },
        (0.0, span),
        init,
        scenario.numerics.tol,
        Some(&grid),
    )?;
    header(
        out,
        &[
            "t_scaled",
            "f_re",
            "f_im",
            "residual_abs",
            "ode_re",
            "ode_im",
        ],
    );
    for (k, &t) in grid.iter().enumerate() {
        let f = mathieu::evaluate_f(&coeffs, t);
        let r = mathieu::residual(&coeffs, t);
        row(
            out,
            &[
                num(t),
                num(f.re),
                num(f.im),
                num(r.norm()),
                num(ode.psi[k].re),
                num(ode.psi[k].im),
            ],
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points_are_a_cartesian_product_in_index_order() {
        let s = SweepSpec::from_toml_str(
            "amplitude = [1.0, 2.0]\nphase = [0.0, 0.5]\nresolution = [1e-6]",
        )
        .unwrap();
        let p = s.points();
        assert_eq!(p.len(), 4);
        assert_eq!(p[1], (1.0, 0.0, 0.5, Some(1e-6)));
        assert_eq!(p[2], (2.0, 0.0, 0.0, Some(1e-6)));
    }

    #[test]
    fn empty_sweep_has_no_points() {
        assert!(SweepSpec::from_toml_str("").unwrap().points().is_empty());
        assert!(SweepSpec::from_toml_str("colour = 3").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            Failure::from(Error::ConjugatePoint {
                t_end: 1.0,
                ratio: 0.0
            })
            .code,
            EXIT_SINGULAR
        );
        assert_eq!(
            Failure::from(Error::invalid("mass", "bad")).code,
            EXIT_CONFIG
        );
    }

    #[test]
    fn wrap_reduces_to_principal_range() {
        assert!((wrap(2.0 * std::f64::consts::PI + 0.1) - 0.1).abs() < 1e-12);
        assert!((wrap(-0.1) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn numbers_keep_sixteen_digits() {
        assert_eq!(num(1.0 / 3.0), "3.333333333333333e-1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
