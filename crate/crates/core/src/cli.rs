//! Command-line front end.
//!
//! Subcommands `run`, `sweep`, `montecarlo` and `feasibility`. Parameters come
//! from an optional TOML or JSON file and are overridden by flags. Exit codes:
//! `0` on success, `2` for configuration and domain errors, `3` when a
//! physical invariant fails during a run.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Error;
use crate::feasibility::{feasibility_check, Coupling, CouplingParams, FeasibilityReport, DEFAULT_MARGIN};
use crate::measurement::OutcomeSource;
use crate::protocols::{
    run, run_monte_carlo, sweep, ProtocolConfig, ProtocolKind, ProtocolReport, RunOutput, SqueezePrepReport,
    SweepParam, SweepPoint, SweepRange,
};

/// Value of the `schema` column in every CSV table.
pub const CSV_SCHEMA: &str = "cvclone.v1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cvclone",
    version,
    about = "Gaussian simulator for coherent-state cloning with light and atomic ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one protocol and report clone fidelities.
    Run(RunArgs),
    /// Run a protocol over a parameter grid.
    Sweep(SweepArgs),
    /// Sample homodyne outcomes and log one JSON line per trial.
    Montecarlo(MonteCarloArgs),
    /// Check the spontaneous-emission condition for a coupling.
    Feasibility(FeasibilityArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ProtocolArgs {
    /// Protocol configuration file (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// two-pass, single-pass, atoms-light, atoms-light-unsqueezed, asymmetric or squeeze-prep.
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Option<ProtocolKind>,
    /// Coherent input amplitude as `X,P`.
    #[arg(long, value_parser = parse_alpha, allow_hyphen_values = true)]
    pub alpha: Option<[f64; 2]>,
    /// Squeezed ancilla variance.
    #[arg(long = "V", alias = "v", allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// QND interaction strength.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Scale of the feedback gains.
    #[arg(long, allow_hyphen_values = true)]
    pub gain: Option<f64>,
    /// Homodyne outcomes: averaged, mean, forced:<value> or sampled.
    #[arg(long, value_parser = parse_outcome, allow_hyphen_values = true)]
    pub outcome: Option<OutcomeArg>,
    /// Seed for sampled outcomes; implies `--outcome sampled`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sampled trials (Monte Carlo)
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Swept parameter: V, kappa or gain.
    #[arg(long, value_parser = parse_param)]
    pub param: SweepParam,
    /// First grid value
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    /// Last grid value, included when the step divides the span
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Grid spacing
    #[arg(long)]
    pub step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Trajectory log (JSON lines); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON; standard error when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeasibilityArgs {
    /// Coupling parameter file (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// QND strength, when given directly.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Effective per-atom coupling.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Wavelength in metres.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Natural linewidth in rad/s.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Detuning in rad/s.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Beam cross-section in m².
    #[arg(long)]
    pub beam_area: Option<f64>,
    /// Photon number.
    #[arg(long)]
    pub n_l: Option<f64>,
    /// Atom number.
    #[arg(long)]
    pub n_a: Option<f64>,
    /// Resonant optical density of the ensemble
    #[arg(long)]
    pub optical_density: Option<f64>,
    /// Factor by which the emission probability must undercut its bound.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum OutcomeArg {
    Averaged,
    Mean,
    Forced(f64),
    Sampled,
}

fn parse_protocol(s: &str) -> Result<ProtocolKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_alpha(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, p] = parts[..] else {
        return Err(format!("expected `X,P`, got `{s}`"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(x)?, num(p)?])
}

fn parse_outcome(s: &str) -> Result<OutcomeArg, String> {
    match s.trim() {
        "averaged" | "average" => Ok(OutcomeArg::Averaged),
        "mean" | "mean-value" => Ok(OutcomeArg::Mean),
        "sampled" => Ok(OutcomeArg::Sampled),
        other => match other.strip_prefix("forced:") {
            Some(v) => v.parse().map(OutcomeArg::Forced).map_err(|e| format!("`{v}`: {e}")),
            None => Err(format!(
                "unknown outcome source `{other}` (averaged, mean, forced:<value>, sampled)"
            )),
        },
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvariantViolation(_) => EXIT_INVARIANT,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| io_error(path, e))
    } else {
        toml::from_str(&text).map_err(|e| io_error(path, e))
    }
}

impl ProtocolArgs {
    /// File configuration (or defaults) with flags applied on top.
    pub fn resolve(&self, default_protocol: ProtocolKind) -> CliResult<ProtocolConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_file::<ProtocolConfig>(path)?,
            None => ProtocolConfig::new(default_protocol),
        };
        if let Some(p) = self.protocol {
            cfg.protocol = p;
        }
        if let Some(a) = self.alpha {
            cfg.input_alpha = a;
        }
        if let Some(v) = self.v {
            cfg.asymmetry_v = v;
        }
        if let Some(k) = self.kappa {
            cfg.kappa = k;
        }
        if let Some(g) = self.gain {
            cfg.feedback_gain = g;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        let file_seed = match cfg.outcome_source {
            OutcomeSource::Sampled { seed } => seed,
            _ => 0,
        };
        let seed = self.seed.unwrap_or(file_seed);
        match (self.outcome, self.seed) {
            (Some(OutcomeArg::Averaged), _) => cfg.outcome_source = OutcomeSource::Averaged,
            (Some(OutcomeArg::Mean), _) => cfg.outcome_source = OutcomeSource::MeanValue,
            (Some(OutcomeArg::Forced(v)), _) => cfg.outcome_source = OutcomeSource::Forced(v),
            (Some(OutcomeArg::Sampled), _) | (None, Some(_)) => {
                cfg.outcome_source = OutcomeSource::Sampled { seed }
            }
            (None, None) => {}
        }
        Ok(cfg)
    }
}

struct Sink {
    path: Option<PathBuf>,
    buf: Vec<u8>,
}

impl Sink {
    fn new(path: Option<PathBuf>) -> Self {
        Sink { path, buf: Vec::new() }
    }

    fn finish(self, stdout: &mut dyn Write) -> CliResult<()> {
        match &self.path {
            Some(p) => fs::write(p, &self.buf).map_err(|e| io_error(p, e)),
            None => stdout
                .write_all(&self.buf)
                .map_err(|e| io_error(Path::new("<stdout>"), e)),
        }
    }
}

/// One CSV row per cloning report.
#[derive(Serialize)]
struct ReportRow {
    schema: &'static str,
    protocol: String,
    param: Option<&'static str>,
    value: Option<f64>,
    alpha_x: f64,
    alpha_p: f64,
    kappa: f64,
    v: Option<f64>,
    feedback_gain: f64,
    mode: String,
    seed: Option<u64>,
    trials: u64,
    outcome: Option<f64>,
    f_a: f64,
    f_a_analytic: Option<f64>,
    f_a_abs_diff: Option<f64>,
    f_b: f64,
    f_b_analytic: Option<f64>,
    f_b_abs_diff: Option<f64>,
    f_a_universal: f64,
    f_b_universal: f64,
    mean_a_x: f64,
    mean_a_p: f64,
    mean_b_x: f64,
    mean_b_p: f64,
    var_a_x: f64,
    var_a_p: f64,
    var_b_x: f64,
    var_b_p: f64,
}

impl ReportRow {
    fn new(r: &ProtocolReport, swept: Option<(SweepParam, f64)>) -> Self {
        let (a, b) = (&r.clones[0], &r.clones[1]);
        ReportRow {
            schema: CSV_SCHEMA,
            protocol: r.protocol.to_string(),
            param: swept.map(|(p, _)| p.name()),
            value: swept.map(|(_, v)| v),
            alpha_x: r.input_alpha[0],
            alpha_p: r.input_alpha[1],
            kappa: r.kappa,
            v: r.asymmetry_v,
            feedback_gain: r.feedback_gain,
            mode: r.mode.to_string(),
            seed: r.seed,
            trials: r.trials,
            outcome: r.outcome,
            f_a: a.fidelity,
            f_a_analytic: a.analytic_fidelity,
            f_a_abs_diff: a.fidelity_abs_diff,
            f_b: b.fidelity,
            f_b_analytic: b.analytic_fidelity,
            f_b_abs_diff: b.fidelity_abs_diff,
            f_a_universal: a.universal_fidelity,
            f_b_universal: b.universal_fidelity,
            mean_a_x: a.mean[0],
            mean_a_p: a.mean[1],
            mean_b_x: b.mean[0],
            mean_b_p: b.mean[1],
            var_a_x: a.variances[0],
            var_a_p: a.variances[1],
            var_b_x: b.variances[0],
            var_b_p: b.variances[1],
        }
    }
}

#[derive(Serialize)]
struct SqueezeRow {
    schema: &'static str,
    protocol: &'static str,
    v: f64,
    kappa: f64,
    var_a_x: f64,
    var_a_p: f64,
    var_b_x: f64,
    var_b_p: f64,
    purity_a: f64,
    purity_b: f64,
    abs_diff: f64,
}

#[derive(Serialize)]
struct FeasibilityRow {
    schema: &'static str,
    kappa: f64,
    optical_density: f64,
    eta: f64,
    bound: f64,
    margin: f64,
    feasible: bool,
    required_optical_density: f64,
}

fn write_csv<T: Serialize>(rows: &[T], out: &mut Vec<u8>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| CliError {
            code: EXIT_CONFIG,
            message: format!("csv: {e}"),
        })?;
    }
    w.flush().map_err(|e| io_error(Path::new("<csv>"), e))
}

fn write_json<T: Serialize>(value: &T, out: &mut Vec<u8>) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError {
        code: EXIT_CONFIG,
        message: format!("json: {e}"),
    })?;
    out.push(b'\n');
    Ok(())
}

fn analytic_label(protocol: ProtocolKind, clone: &str) -> &'static str {
    match (protocol, clone) {
        (ProtocolKind::AsymmetricSinglePass, "A") => "F_A = 1/(1+V)",
        (ProtocolKind::AsymmetricSinglePass, _) => "F_B = 4V/(4V+1)",
        (ProtocolKind::AtomsLight, "B") => "flying clone before unsqueezing",
        _ => "optimal Gaussian cloner, F = 1/(1+n), n = 1/2",
    }
}

fn g(v: f64) -> String {
    format!("{v:.12}")
}

fn pretty_report(r: &ProtocolReport, out: &mut String) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "protocol        {}", r.protocol);
    let _ = writeln!(out, "run mode        {}", r.mode);
    let _ = writeln!(out, "input alpha     ({}, {})", r.input_alpha[0], r.input_alpha[1]);
    let _ = writeln!(out, "kappa           {}", r.kappa);
    if let Some(v) = r.asymmetry_v {
        let _ = writeln!(out, "ancilla V       {v}");
    }
    let _ = writeln!(out, "feedback gain   {}", r.feedback_gain);
    if let Some(seed) = r.seed {
        let _ = writeln!(out, "seed            {seed} ({} trials)", r.trials);
    }
    if let Some(y) = r.outcome {
        let _ = writeln!(out, "outcome         {y}");
    }
    for c in &r.clones {
        let _ = writeln!(out, "clone {}", c.label);
        let se = c.fidelity_std_error.map(|s| format!(" ± {}", g(s))).unwrap_or_default();
        let _ = writeln!(out, "  fidelity            {}{se}", g(c.fidelity));
        if let (Some(a), Some(d)) = (c.analytic_fidelity, c.fidelity_abs_diff) {
            let _ = writeln!(
                out,
                "  closed form         {}   [{}]   |diff| {d:.3e}",
                g(a),
                analytic_label(r.protocol, &c.label)
            );
        }
        let _ = writeln!(out, "  worst-case fidelity {}", g(c.universal_fidelity));
        let _ = writeln!(out, "  mean (x, p)         ({}, {})", g(c.mean[0]), g(c.mean[1]));
        let _ = writeln!(
            out,
            "  mean gain           [[{}, {}], [{}, {}]]",
            g(c.gain[0][0]),
            g(c.gain[0][1]),
            g(c.gain[1][0]),
            g(c.gain[1][1])
        );
        let _ = writeln!(
            out,
            "  variances (x, p)    ({}, {})",
            g(c.variances[0]),
            g(c.variances[1])
        );
    }
    if let Some(light) = &r.residual_light {
        let m = light.mean();
        let _ = writeln!(out, "anti-clone L");
        let _ = writeln!(out, "  mean (x, p)         ({}, {})", g(m[0]), g(m[1]));
        let _ = writeln!(
            out,
            "  variances (x, p)    ({}, {})",
            g(light.cov()[(0, 0)]),
            g(light.cov()[(1, 1)])
        );
    }
}

fn pretty_squeeze(r: &SqueezePrepReport, out: &mut String) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "protocol        squeeze-prep");
    let _ = writeln!(out, "target V        {}", r.asymmetry_v);
    let _ = writeln!(out, "kappa           {}   [kappa = sqrt(1/(4V) - 1/2)]", g(r.kappa));
    for (i, name) in ["A (x squeezed)", "B (p squeezed)"].iter().enumerate() {
        let _ = writeln!(out, "ancilla {name}");
        let _ = writeln!(out, "  squeezed variance   {}", g(r.squeezed_variances[i]));
        let _ = writeln!(out, "  conjugate variance  {}", g(r.anti_squeezed_variances[i]));
        let _ = writeln!(out, "  purity              {}", g(r.purities[i]));
    }
    let _ = writeln!(out, "|variance - V|  {:.3e}", r.abs_diff);
}

fn pretty_feasibility(r: &FeasibilityReport, out: &mut String) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "kappa                     {}", r.kappa);
    let _ = writeln!(out, "optical density           {}", r.optical_density);
    let _ = writeln!(out, "emission probability      {}   [eta = kappa^2 / optical density]", r.eta);
    let _ = writeln!(out, "tolerable emission        {}   [1/(1 + kappa^2)]", r.bound);
    let _ = writeln!(out, "margin                    {}", r.margin);
    let _ = writeln!(
        out,
        "required optical density  {}   [margin kappa^2 (1 + kappa^2)]",
        r.required_optical_density
    );
    let _ = writeln!(out, "feasible                  {}", if r.feasible { "yes" } else { "no" });
}

fn squeeze_row(r: &SqueezePrepReport) -> SqueezeRow {
    SqueezeRow {
        schema: CSV_SCHEMA,
        protocol: "squeeze-prep",
        v: r.asymmetry_v,
        kappa: r.kappa,
        var_a_x: r.state_a.cov()[(0, 0)],
        var_a_p: r.state_a.cov()[(1, 1)],
        var_b_x: r.state_b.cov()[(0, 0)],
        var_b_p: r.state_b.cov()[(1, 1)],
        purity_a: r.purities[0],
        purity_b: r.purities[1],
        abs_diff: r.abs_diff,
    }
}

fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = args.protocol.resolve(ProtocolKind::SinglePass)?;
    let output = run(&cfg)?;
    let mut sink = Sink::new(args.output.out.clone());
    match (args.output.format, &output) {
        (Format::Json, o) => write_json(o, &mut sink.buf)?,
        (Format::Csv, RunOutput::Cloning(r)) => write_csv(&[ReportRow::new(r, None)], &mut sink.buf)?,
        (Format::Csv, RunOutput::SqueezePrep(r)) => write_csv(&[squeeze_row(r)], &mut sink.buf)?,
        (Format::Pretty, o) => {
            let mut s = String::new();
            match o {
                RunOutput::Cloning(r) => pretty_report(r, &mut s),
                RunOutput::SqueezePrep(r) => pretty_squeeze(r, &mut s),
            }
            sink.buf.extend_from_slice(s.as_bytes());
        }
    }
    sink.finish(stdout)
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let default = match args.param {
        SweepParam::V => ProtocolKind::AsymmetricSinglePass,
        _ => ProtocolKind::SinglePass,
    };
    let cfg = args.protocol.resolve(default)?;
    let points: Vec<SweepPoint> = sweep(&cfg, args.param, SweepRange::new(args.from, args.to, args.step))?;
    let mut sink = Sink::new(args.output.out.clone());
    match args.output.format {
        Format::Json => write_json(&points, &mut sink.buf)?,
        Format::Csv => {
            let rows: Vec<ReportRow> = points
                .iter()
                .map(|p| ReportRow::new(&p.report, Some((p.param, p.value))))
                .collect();
            write_csv(&rows, &mut sink.buf)?
        }
        Format::Pretty => {
            use std::fmt::Write as _;
            let mut s = String::new();
            let _ = writeln!(
                s,
                "{:>10}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}",
                args.param.name(),
                "F_A",
                "F_A closed",
                "F_B",
                "F_B closed",
                "F_A worst",
                "F_B worst"
            );
            let opt = |v: Option<f64>| v.map(g).unwrap_or_else(|| "-".into());
            for p in &points {
                let (a, b) = (&p.report.clones[0], &p.report.clones[1]);
                let _ = writeln!(
                    s,
                    "{:>10.4}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}",
                    p.value,
                    g(a.fidelity),
                    opt(a.analytic_fidelity),
                    g(b.fidelity),
                    opt(b.analytic_fidelity),
                    g(a.universal_fidelity),
                    g(b.universal_fidelity)
                );
            }
            sink.buf.extend_from_slice(s.as_bytes());
        }
    }
    sink.finish(stdout)
}

fn cmd_montecarlo(args: &MonteCarloArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let mut cfg = args.protocol.resolve(ProtocolKind::SinglePass)?;
    if !matches!(cfg.outcome_source, OutcomeSource::Sampled { .. }) {
        if args.protocol.outcome.is_some() {
            return Err(Error::Config("Monte Carlo runs need sampled outcomes".into()).into());
        }
        cfg.outcome_source = OutcomeSource::Sampled { seed: 0 };
    }
    let mc = run_monte_carlo(&cfg)?;
    let mut log = Sink::new(args.out.clone());
    for t in &mc.trajectories {
        serde_json::to_writer(&mut log.buf, t).map_err(|e| CliError {
            code: EXIT_CONFIG,
            message: format!("json: {e}"),
        })?;
        log.buf.push(b'\n');
    }
    log.finish(stdout)?;
    let mut summary = Sink::new(args.summary.clone());
    write_json(&mc.summary, &mut summary.buf)?;
    summary.finish(stderr)
}

fn coupling_from_flags(args: &FeasibilityArgs) -> CliResult<CouplingParams> {
    let missing = |what: &str| -> CliError { Error::Config(format!("feasibility needs {what}")).into() };
    let coupling = if let Some(k) = args.kappa {
        Coupling::Kappa(k)
    } else if let Some(a) = args.a {
        Coupling::Effective {
            a,
            n_l: args.n_l.ok_or_else(|| missing("--n-l"))?,
            n_a: args.n_a.ok_or_else(|| missing("--n-a"))?,
        }
    } else if args.lambda.is_some() {
        Coupling::Physical {
            lambda: args.lambda.ok_or_else(|| missing("--lambda"))?,
            gamma: args.gamma.ok_or_else(|| missing("--gamma"))?,
            delta: args.delta.ok_or_else(|| missing("--delta"))?,
            beam_area: args.beam_area.ok_or_else(|| missing("--beam-area"))?,
            n_l: args.n_l.ok_or_else(|| missing("--n-l"))?,
            n_a: args.n_a.ok_or_else(|| missing("--n-a"))?,
        }
    } else {
        return Err(missing("--params, --kappa, --a or --lambda"));
    };
    Ok(CouplingParams {
        coupling,
        optical_density: args.optical_density.ok_or_else(|| missing("--optical-density"))?,
    })
}

fn cmd_feasibility(args: &FeasibilityArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = match &args.params {
        Some(path) => {
            let mut p: CouplingParams = read_file(path)?;
            if let Some(od) = args.optical_density {
                p.optical_density = od;
            }
            if let Some(k) = args.kappa {
                p.coupling = Coupling::Kappa(k);
            }
            p
        }
        None => coupling_from_flags(args)?,
    };
    let report = feasibility_check(&params, args.margin)?;
    let mut sink = Sink::new(args.output.out.clone());
    match args.output.format {
        Format::Json => write_json(&report, &mut sink.buf)?,
        Format::Csv => write_csv(
            &[FeasibilityRow {
                schema: CSV_SCHEMA,
                kappa: report.kappa,
                optical_density: report.optical_density,
                eta: report.eta,
                bound: report.bound,
                margin: report.margin,
                feasible: report.feasible,
                required_optical_density: report.required_optical_density,
            }],
            &mut sink.buf,
        )?,
        Format::Pretty => {
            let mut s = String::new();
            pretty_feasibility(&report, &mut s);
            sink.buf.extend_from_slice(s.as_bytes());
        }
    }
    sink.finish(stdout)
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Montecarlo(a) => cmd_montecarlo(a, stdout, stderr),
        Command::Feasibility(a) => cmd_feasibility(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match execute(&cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_to_string(args: &[&str]) -> CliResult<(String, String)> {
        let cli = Cli::try_parse_from(args).expect("arguments parse");
        let (mut out, mut err) = (Vec::new(), Vec::new());
        execute(&cli, &mut out, &mut err)?;
        Ok((String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap()))
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(parse_alpha("1,2").unwrap(), [1.0, 2.0]);
        assert_eq!(parse_alpha("-1.5, 3e-1").unwrap(), [-1.5, 0.3]);
        assert!(parse_alpha("1").is_err());
        assert!(parse_alpha("1,2,3").is_err());
        assert!(parse_alpha("a,b").is_err());
    }

    #[test]
    fn outcome_parsing() {
        assert_eq!(parse_outcome("forced:-0.5").unwrap(), OutcomeArg::Forced(-0.5));
        assert_eq!(parse_outcome("mean").unwrap(), OutcomeArg::Mean);
        assert!(parse_outcome("guess").is_err());
    }

    #[test]
    fn flags_override_seed_and_source() {
        let args = ProtocolArgs {
            seed: Some(9),
            trials: Some(5),
            ..Default::default()
        };
        let cfg = args.resolve(ProtocolKind::SinglePass).unwrap();
        assert_eq!(cfg.outcome_source, OutcomeSource::Sampled { seed: 9 });
        assert_eq!(cfg.trials, 5);
    }

    #[test]
    fn run_csv_has_schema_column() {
        let (out, _) = run_to_string(&["cvclone", "run", "--protocol", "two-pass", "--format", "csv"]).unwrap();
        let mut lines = out.lines();
        assert!(lines.next().unwrap().starts_with("schema,protocol,"));
        assert!(lines.next().unwrap().starts_with("cvclone.v1,two-pass,"));
        assert!(lines.next().is_none());
    }

    #[test]
    fn error_codes() {
        let e = run_to_string(&["cvclone", "run", "--protocol", "asymmetric", "--V", "-1"]).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        let e = run_to_string(&["cvclone", "sweep", "--param", "kappa", "--from", "2", "--to", "1", "--step", "0.1"])
            .unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        let e = CliError::from(Error::InvariantViolation("x".into()));
        assert_eq!(e.code, EXIT_INVARIANT);
    }

    #[test]
    fn feasibility_flags() {
        let (out, _) = run_to_string(&[
            "cvclone",
            "feasibility",
            "--kappa",
            "1",
            "--optical-density",
            "100",
            "--format",
            "json",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["eta"], 0.01);
        assert_eq!(v["feasible"], true);
    }
}
