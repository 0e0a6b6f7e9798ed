use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use relay_dde::experiments::{self, StudyOptions};
use relay_dde::integrator::{self, default_steps};
use relay_dde::report::{self, FloatFormat};
use relay_dde::{exact, maps, tables, Error, HistorySign, Params, Regime, SmoothingSpec};

const EXIT_INPUT: u8 = 1;
const EXIT_HYPOTHESIS: u8 = 2;
const EXIT_RESIDUAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "relay-dde",
    version,
    about = "Relay delay equation with a periodic step coefficient"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Return-map coefficients, fixed points, hypotheses and shape checks (JSON)
    Analyze {
        #[command(flatten)]
        params: ParamArgs,
        /// Defaults to double for the p2 preset, single otherwise
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trajectory CSV from the exact solver or the smoothed integrator
    Simulate(SimulateArgs),
    /// Build and export the smoothed nonlinearity and coefficient
    Smooth {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        delta: f64,
        /// Coefficient window width (defaults to delta)
        #[arg(long)]
        rho: Option<f64>,
        /// Spec JSON (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        f_csv: Option<PathBuf>,
        #[arg(long)]
        a_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Reproduce a published parameter table
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        table: u8,
        #[arg(long, default_value_t = tables::DEFAULT_TOL)]
        tol: f64,
        /// Table CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rows and summary as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        /// Fixed 17-digit floats
        #[arg(long)]
        golden: bool,
    },
    /// Cross-check the computation paths and run the smoothing convergence study
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        /// Defaults to double for the p2 preset, single otherwise
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
        deltas: Vec<f64>,
        /// delta for the smoothed cross-check
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Convergence CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        golden: bool,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    /// Named parameter set: p1 = (2, 0.1, 3, 1, 0.1), p2 = (4, 2, 0.5, 1, 0.1)
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// key = value file with a1, a2, p1, p2, mu
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Defaults to double for the p2 preset, single otherwise
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// `auto` for the regime's fixed point, or a number
    #[arg(long, default_value = "auto", allow_negative_numbers = true)]
    h: String,
    #[arg(long, value_enum, default_value_t = HistoryArg::Auto)]
    history: HistoryArg,
    #[arg(long, conflicts_with = "smoothed")]
    exact: bool,
    #[arg(long, requires = "delta")]
    smoothed: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Steps per unit time (smoothed only)
    #[arg(long)]
    step: Option<usize>,
    #[arg(long, default_value_t = 1)]
    periods: usize,
    /// Sample spacing of the exact CSV
    #[arg(long, default_value_t = 0.01)]
    sample: f64,
    /// Keep every n-th node of the smoothed CSV
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Event log JSON (exact only)
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum RegimeArg {
    Single,
    Double,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Single => Regime::SinglePeriod,
            RegimeArg::Double => Regime::DoublePeriod,
        }
    }
}

fn regime_of(arg: Option<RegimeArg>, params: &ParamArgs) -> Regime {
    match (arg, params.preset) {
        (Some(r), _) => r.into(),
        (None, Some(Preset::P2)) => Regime::DoublePeriod,
        (None, _) => Regime::SinglePeriod,
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Preset {
    P1,
    P2,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum HistoryArg {
    Auto,
    Positive,
    Negative,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(
                Error::HypothesisFailed(_) | Error::ShapeFailed(_) | Error::ShapeViolated { .. },
            ) => EXIT_HYPOTHESIS,
            _ => EXIT_INPUT,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Analyze {
            params,
            regime,
            out,
        } => analyze(&params, regime_of(regime, &params), out.as_deref()),
        Command::Simulate(args) => simulate(&args),
        Command::Smooth {
            params,
            delta,
            rho,
            out,
            f_csv,
            a_csv,
            samples,
        } => {
            let p = resolve(&params)?;
            let spec = SmoothingSpec::build(&p, delta, rho.unwrap_or(delta))?;
            emit(out.as_deref(), |w| {
                writeln!(w, "{}", spec.to_json()?)?;
                Ok(())
            })?;
            if let Some(path) = f_csv {
                spec.write_f_tilde_csv(create(&path)?, samples)?;
            }
            if let Some(path) = a_csv {
                spec.write_a_tilde_csv(create(&path)?, samples)?;
            }
            Ok(0)
        }
        Command::Sweep {
            table,
            tol,
            out,
            json,
            golden,
        } => sweep(table, tol, out.as_deref(), json.as_deref(), golden),
        Command::Verify {
            params,
            regime,
            deltas,
            delta,
            out,
            json,
            golden,
        } => verify(
            &params,
            regime_of(regime, &params),
            &deltas,
            delta,
            out.as_deref(),
            json.as_deref(),
            golden,
        ),
    }
}

fn preset(p: Preset) -> Params {
    match p {
        Preset::P1 => Params::new(2.0, 0.1, 3.0, 1.0, 0.1),
        Preset::P2 => Params::new(4.0, 2.0, 0.5, 1.0, 0.1),
    }
    .expect("presets are valid")
}

/// Preset, then config file, then individual flags, each overriding the last.
fn resolve(args: &ParamArgs) -> std::result::Result<Params, Failure> {
    let base = match (&args.preset, &args.config) {
        (Some(p), _) => Some(preset(*p)),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            Some(
                text.parse::<Params>()
                    .with_context(|| format!("in config {}", path.display()))?,
            )
        }
        (None, None) => None,
    };
    let flags = [
        ("a1", args.a1),
        ("a2", args.a2),
        ("p1", args.p1),
        ("p2", args.p2),
        ("mu", args.mu),
    ];
    match base {
        Some(mut p) => {
            for (name, v) in flags {
                if let Some(v) = v {
                    p = p.with(name, v)?;
                }
            }
            Ok(p)
        }
        None => {
            let missing: Vec<String> = flags
                .iter()
                .filter(|(_, v)| v.is_none())
                .map(|(n, _)| format!("--{n}"))
                .collect();
            if !missing.is_empty() {
                return Err(anyhow!(
                    "missing {} (or give --preset / --config)",
                    missing.join(", ")
                )
                .into());
            }
            let v: Vec<f64> = flags.iter().map(|(_, v)| v.unwrap_or_default()).collect();
            Ok(Params::new(v[0], v[1], v[2], v[3], v[4])?)
        }
    }
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Writes to `path`, or stdout when absent.
fn emit(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn analyze(args: &ParamArgs, regime: Regime, out: Option<&Path>) -> CmdResult {
    let p = resolve(args)?;
    let rep = report::analyze(&p);
    emit(out, |w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&rep)?)?;
        Ok(())
    })?;
    let r = rep.regime(regime);
    if r.ok() {
        Ok(0)
    } else {
        let mut why: Vec<String> = r
            .hypotheses
            .iter()
            .filter(|h| !h.holds)
            .map(|h| format!("{} fails ({})", h.name, h.value))
            .collect();
        why.extend(
            r.shape
                .failed_names()
                .into_iter()
                .map(|n| format!("{n} fails")),
        );
        eprintln!("{:?} regime not applicable: {}", regime, why.join(", "));
        Ok(EXIT_HYPOTHESIS)
    }
}

fn resolve_h(spec: &str, p: &Params, regime: Regime) -> std::result::Result<f64, Failure> {
    if spec == "auto" {
        let (s, c) = match regime {
            Regime::SinglePeriod => maps::single_coefficients(p),
            Regime::DoublePeriod => maps::double_coefficients(p),
        };
        Ok(match regime {
            Regime::SinglePeriod => c / (1.0 - s),
            Regime::DoublePeriod => -c / (1.0 + s),
        })
    } else {
        spec.parse::<f64>()
            .map_err(|_| anyhow!("--h must be 'auto' or a number (got '{spec}')").into())
    }
}

fn simulate(a: &SimulateArgs) -> CmdResult {
    let p = resolve(&a.params)?;
    let regime = regime_of(a.regime, &a.params);
    if !a.exact && !a.smoothed {
        return Err(anyhow!("choose --exact or --smoothed").into());
    }
    if a.periods == 0 {
        return Err(anyhow!("--periods must be >= 1").into());
    }
    let h = resolve_h(&a.h, &p, regime)?;
    let horizon = a.periods as f64 * p.period();
    if a.exact {
        let history = match a.history {
            HistoryArg::Auto => HistorySign::of(h),
            HistoryArg::Positive => HistorySign::Positive,
            HistoryArg::Negative => HistorySign::Negative,
        };
        let tr = exact::solve_exact_with_history(&p, h, history, horizon)?;
        emit(a.out.as_deref(), |w| Ok(tr.write_csv(w, a.sample)?))?;
        if let Some(path) = &a.events {
            write_json(path, &tr.events)?;
        }
        let shape = relay_dde::params::shape_conditions(&p, h.abs(), regime);
        if !shape.satisfied {
            eprintln!(
                "shape condition(s) fail at h = {}: {}",
                h.abs(),
                shape.failed_names().join(", ")
            );
            return Ok(EXIT_HYPOTHESIS);
        }
        Ok(0)
    } else {
        if regime != Regime::SinglePeriod {
            bail_input("smoothing is only constructed around the single-period orbit")?;
        }
        let delta = a.delta.expect("required by clap");
        let spec = SmoothingSpec::build(&p, delta, a.rho.unwrap_or(delta))?;
        let n = a.step.unwrap_or_else(|| default_steps(&spec));
        let tr = integrator::integrate_smoothed(&spec, h, horizon, n)?;
        emit(a.out.as_deref(), |w| Ok(tr.write_csv(w, a.stride)?))?;
        Ok(0)
    }
}

fn bail_input(msg: &str) -> std::result::Result<(), Failure> {
    Err(Failure {
        code: EXIT_INPUT,
        error: anyhow!("{msg}"),
    })
}

fn float_format(golden: bool) -> FloatFormat {
    if golden {
        FloatFormat::Fixed17
    } else {
        FloatFormat::Shortest
    }
}

fn sweep(table: u8, tol: f64, out: Option<&Path>, json: Option<&Path>, golden: bool) -> CmdResult {
    if tol.is_nan() || tol <= 0.0 {
        bail_input("--tol must be > 0")?;
    }
    let rows = tables::reproduce(table, tol)?;
    let ff = float_format(golden);
    emit(out, |w| Ok(report::write_table_csv(w, &rows, ff)?))?;
    let summary = report::summarize(&rows);
    if let Some(path) = json {
        let doc = serde_json::json!({ "table": table, "tolerance": tol, "summary": summary, "rows": rows });
        write_json(path, &doc)?;
    }
    eprintln!(
        "table {table}: {} rows, {} rounding-consistent, {} tolerated, {} mismatch, {} with shape satisfied",
        summary.rows, summary.rounding_consistent, summary.tolerated, summary.mismatch, summary.shape_ok
    );
    for r in rows.iter().filter(|r| !r.note.is_empty()) {
        eprintln!("  row {}: {}", r.row, r.note);
    }
    Ok(0)
}

fn verify(
    args: &ParamArgs,
    regime: Regime,
    deltas: &[f64],
    delta: f64,
    out: Option<&Path>,
    json: Option<&Path>,
    golden: bool,
) -> CmdResult {
    let p = resolve(args)?;
    if deltas.iter().any(|d| d.is_nan() || *d <= 0.0) {
        bail_input("--deltas must all be > 0")?;
    }
    let fp = match regime {
        Regime::SinglePeriod => maps::fixed_point_single(&p)?,
        Regime::DoublePeriod => maps::fixed_point_double(&p)?,
    };
    let check = experiments::oracle_crosscheck(&p, fp.h_star, regime, delta)?;
    let study = if regime == Regime::SinglePeriod && !deltas.is_empty() {
        Some(experiments::smoothing_convergence_study(
            &p,
            deltas,
            StudyOptions::default(),
        )?)
    } else {
        None
    };
    let ff = float_format(golden);
    if let Some(s) = &study {
        emit(out, |w| Ok(report::write_convergence_csv(w, s, ff)?))?;
    }
    if let Some(path) = json {
        let doc = serde_json::json!({ "crosscheck": check, "convergence": study });
        write_json(path, &doc)?;
    }
    eprintln!(
        "crosscheck: transit {:e}, smoothed {}, map {}, antiperiodic {} -> {}",
        check.transit_residual,
        opt_e(check.smoothed_residual),
        opt_e(check.map_residual),
        opt_e(check.antiperiodic_residual),
        if check.passed { "ok" } else { "BREACH" }
    );
    let mut ok = check.passed;
    if let Some(s) = &study {
        eprintln!(
            "convergence: probes {}, |lambda-m| monotone {}, |h~-h*| monotone {}, slopes lambda {} h {} R {}",
            if s.probes_ok() { "ok" } else { "BREACH" },
            s.monotone_lambda,
            s.monotone_h,
            opt_e(s.slope_lambda),
            opt_e(s.slope_h),
            opt_e(s.slope_r)
        );
        ok &= s.passed();
    }
    if ok {
        Ok(0)
    } else {
        Ok(EXIT_RESIDUAL)
    }
}

fn opt_e(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"))
}
