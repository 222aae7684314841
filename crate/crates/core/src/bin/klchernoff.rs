//! Command-line front end.
//!
//! Scalar commands print JSON by default, `sweep` prints CSV. Exit codes:
//! 0 on success, 1 on usage or domain errors, 2 when `verify` finds a
//! failing property.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::Value;

use klchernoff::inversion::{coord_upper_bound, critical_value_with, unseen_report};
use klchernoff::oracle::{mc_tail, tail_exact};
use klchernoff::report::{
    bound_csv_row, bound_record, csv_number, json_number, sweep_csv_row, Record, BOUND_CSV_HEADER,
    SWEEP_CSV_HEADER,
};
use klchernoff::verify::{self, VerifyConfig};
use klchernoff::{ExperimentShape, FrequencyTable, Method, ProbVector, TailBounds};

const LOG_NOTE: &str = "All logarithms and log-scale outputs are natural logs (nats).";

#[derive(Parser, Debug)]
#[command(
    name = "klchernoff",
    version,
    about = "Tail bounds on n·D(p̂‖p) for multinomial samples, with critical values and confidence bounds",
    after_help = LOG_NOTE
)]
struct Cli {
    /// Output format; defaults to json, or csv for `sweep`
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Upper bounds on P(n·D(p̂‖p) > t)
    #[command(after_help = LOG_NOTE)]
    Bound(BoundArgs),
    /// Bounds over a uniform t-grid
    #[command(after_help = LOG_NOTE)]
    Sweep(SweepArgs),
    /// Deviation level t at which a bound equals alpha
    #[command(after_help = LOG_NOTE)]
    Critical(CriticalArgs),
    /// Upper confidence bound on the mass of unseen categories
    #[command(after_help = LOG_NOTE)]
    CiUnseen(CiUnseenArgs),
    /// Upper confidence bound on one category probability
    #[command(after_help = LOG_NOTE)]
    CiCoord(CiCoordArgs),
    /// Property suite against exact enumeration
    Verify(VerifyArgs),
    /// Monte Carlo estimate of P(n·D(p̂‖p) > t)
    #[command(after_help = LOG_NOTE)]
    McTail(McTailArgs),
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: f64,
    /// One method name, or `all`
    #[arg(long, default_value = "all")]
    method: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    /// Defaults to the meaningfulness threshold min(ln G(1), k-1)
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Comma-separated method names, or `all` (every method but lambda_one)
    #[arg(long, default_value = "all")]
    methods: String,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value = "exact")]
    method: String,
}

#[derive(Args, Debug)]
struct CiUnseenArgs {
    /// CSV file with header `frequency,species`
    #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
    data: Option<PathBuf>,
    /// Comma-separated positive per-category counts
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<u64>>,
    #[arg(long)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct CiCoordArgs {
    /// Comma-separated per-category counts (zeros allowed)
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<u64>,
    /// 1-based category index
    #[arg(long)]
    coord: usize,
    #[arg(long, conflicts_with = "t", required_unless_present = "t")]
    alpha: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 4)]
    max_k: usize,
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, env = "KLCHERNOFF_SEED", default_value_t = 0)]
    seed: u64,
    /// Random probability vectors per shape
    #[arg(long, default_value_t = 25)]
    p_samples: usize,
    #[arg(long, default_value_t = 11)]
    lambda_points: usize,
    #[arg(long, default_value_t = 20)]
    t_points: usize,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args, Debug)]
struct McTailArgs {
    /// Comma-separated probabilities; k is their count
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, env = "KLCHERNOFF_SEED", default_value_t = 0)]
    seed: u64,
    /// Also report the exact tail by enumeration
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] klchernoff::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|()| out.flush().map_err(CliError::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            if !matches!(e, CliError::VerifyFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli, out: &mut impl Write) -> CliResult<()> {
    let format = cli.format;
    match cli.command {
        Command::Bound(a) => cmd_bound(a, format.unwrap_or(Format::Json), out),
        Command::Sweep(a) => cmd_sweep(a, format.unwrap_or(Format::Csv), out),
        Command::Critical(a) => cmd_critical(a, format.unwrap_or(Format::Json), out),
        Command::CiUnseen(a) => cmd_ci_unseen(a, format.unwrap_or(Format::Json), out),
        Command::CiCoord(a) => cmd_ci_coord(a, format.unwrap_or(Format::Json), out),
        Command::Verify(a) => cmd_verify(a, format.unwrap_or(Format::Json), out),
        Command::McTail(a) => cmd_mc_tail(a, format.unwrap_or(Format::Json), out),
    }
}

fn parse_method(s: &str) -> CliResult<Method> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        CliError::Usage(format!(
            "unknown method `{s}` (expected one of: {})",
            names.join(", ")
        ))
    })
}

/// Methods in a sweep when none are named.
fn default_sweep_methods() -> Vec<Method> {
    Method::ALL
        .into_iter()
        .filter(|&m| m != Method::LambdaOne)
        .collect()
}

fn parse_method_list(s: &str) -> CliResult<Vec<Method>> {
    if s.trim() == "all" {
        return Ok(default_sweep_methods());
    }
    let mut methods = Vec::new();
    for name in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let m = parse_method(name)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    Ok(methods)
}

fn write_scalar(
    out: &mut impl Write,
    format: Format,
    header: &str,
    csv: String,
    rec: Record,
) -> CliResult<()> {
    match format {
        Format::Json => writeln!(out, "{}", rec.to_json())?,
        Format::Csv => {
            writeln!(out, "{header}")?;
            writeln!(out, "{csv}")?;
        }
    }
    Ok(())
}

fn cmd_bound(a: BoundArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let bounds = TailBounds::new(ExperimentShape::for_bounds(a.k, a.n)?)?;
    let results = if a.method.trim() == "all" {
        let below = a.t <= a.k as f64 - 1.0;
        Method::ALL
            .into_iter()
            .filter(|m| !(below && m.needs_t_above_k_minus_one()))
            .map(|m| bounds.evaluate(m, a.t))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![bounds.evaluate(parse_method(&a.method)?, a.t)?]
    };
    match format {
        Format::Json => {
            for r in &results {
                writeln!(out, "{}", bound_record(a.k, a.n, a.t, r).to_json())?;
            }
        }
        Format::Csv => {
            writeln!(out, "{BOUND_CSV_HEADER}")?;
            for r in &results {
                writeln!(out, "{}", bound_csv_row(r))?;
            }
        }
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let methods = parse_method_list(&a.methods)?;
    let bounds = TailBounds::new(ExperimentShape::for_bounds(a.k, a.n)?)?;
    let t_min = a.t_min.unwrap_or_else(|| bounds.meaningful_threshold());
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    if !(t_min.is_finite() && a.t_max.is_finite() && t_min > 0.0 && a.t_max >= t_min) {
        return Err(CliError::Usage(format!(
            "invalid grid: need 0 < t-min <= t-max, got [{t_min}, {}]",
            a.t_max
        )));
    }
    if a.points > 1 && a.t_max == t_min {
        return Err(CliError::Usage(
            "a multi-point grid needs t-max > t-min".into(),
        ));
    }
    let grid: Vec<f64> = if a.points == 1 {
        vec![t_min]
    } else {
        let step = (a.t_max - t_min) / (a.points - 1) as f64;
        (0..a.points)
            .map(|i| {
                if i + 1 == a.points {
                    a.t_max
                } else {
                    t_min + step * i as f64
                }
            })
            .collect()
    };
    let k_minus_one = a.k as f64 - 1.0;
    let rows: Vec<Vec<(f64, Method, Option<_>)>> = grid
        .par_iter()
        .map(|&t| {
            methods
                .iter()
                .map(|&m| {
                    if m.needs_t_above_k_minus_one() && t <= k_minus_one {
                        Ok((t, m, None))
                    } else {
                        bounds.evaluate(m, t).map(|r| (t, m, Some(r)))
                    }
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    match format {
        Format::Csv => {
            writeln!(out, "{SWEEP_CSV_HEADER}")?;
            for (t, m, r) in rows.iter().flatten() {
                writeln!(out, "{}", sweep_csv_row(*t, *m, r.as_ref()))?;
            }
        }
        Format::Json => {
            for (t, m, r) in rows.iter().flatten() {
                let rec = Record::new()
                    .num("t", *t)
                    .str("method", m.name())
                    .opt_num("value", r.as_ref().map(|r| r.value))
                    .opt_num("log_value", r.as_ref().map(|r| r.log_value));
                writeln!(out, "{}", rec.to_json())?;
            }
        }
    }
    Ok(())
}

fn cmd_critical(a: CriticalArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let method = parse_method(&a.method)?;
    let bounds = TailBounds::new(ExperimentShape::for_bounds(a.k, a.n)?)?;
    let t = critical_value_with(&bounds, a.alpha, method)?;
    let achieved = bounds.evaluate(method, t)?.value;
    let rel_err = (achieved - a.alpha).abs() / a.alpha;
    let rec = Record::new()
        .int("k", a.k as u64)
        .int("n", a.n as u64)
        .num("alpha", a.alpha)
        .str("method", method.name())
        .num("t", t)
        .num("achieved", achieved)
        .num("relative_error", rel_err);
    let csv = format!(
        "{},{},{},{},{},{},{}",
        a.k,
        a.n,
        csv_number(a.alpha),
        method.name(),
        csv_number(t),
        csv_number(achieved),
        csv_number(rel_err)
    );
    write_scalar(
        out,
        format,
        "k,n,alpha,method,t,achieved,relative_error",
        csv,
        rec,
    )
}

fn cmd_ci_unseen(a: CiUnseenArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let table = match (&a.data, &a.counts) {
        (Some(path), _) => FrequencyTable::from_csv_reader(
            File::open(path)
                .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?,
        )?,
        (None, Some(counts)) => FrequencyTable::from_counts(counts)?,
        (None, None) => return Err(CliError::Usage("give --data or --counts".into())),
    };
    let r = unseen_report(&table, a.alpha)?;
    let rec = Record::new()
        .int("k", r.k as u64)
        .int("n", r.n as u64)
        .num("alpha", a.alpha)
        .num("t", r.ci.t_used)
        .num("upper", r.ci.upper);
    let csv = format!(
        "{},{},{},{},{}",
        r.k,
        r.n,
        csv_number(a.alpha),
        csv_number(r.ci.t_used),
        csv_number(r.ci.upper)
    );
    write_scalar(out, format, "k,n,alpha,t,upper", csv, rec)
}

fn cmd_ci_coord(a: CiCoordArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let n: u64 = a.counts.iter().sum();
    let shape = ExperimentShape::for_bounds(a.counts.len(), n as usize)?;
    let phat = ProbVector::from_counts(&a.counts)?;
    let t = match (a.alpha, a.t) {
        (_, Some(t)) => t,
        (Some(alpha), None) => critical_value_with(&TailBounds::new(shape)?, alpha, Method::Exact)?,
        (None, None) => return Err(CliError::Usage("give --alpha or --t".into())),
    };
    let mut ci = coord_upper_bound(&phat, shape, a.coord, t)?;
    if let Some(alpha) = a.alpha {
        ci.alpha = alpha;
    }
    let phat_c = phat.as_slice()[a.coord - 1];
    let rec = Record::new()
        .int("k", shape.k() as u64)
        .int("n", n)
        .int("coord", a.coord as u64)
        .num("phat", phat_c)
        .opt_num("alpha", a.alpha)
        .num("t", ci.t_used)
        .num("upper", ci.upper);
    let csv = format!(
        "{},{},{},{},{},{},{}",
        shape.k(),
        n,
        a.coord,
        csv_number(phat_c),
        a.alpha.map(csv_number).unwrap_or_default(),
        csv_number(ci.t_used),
        csv_number(ci.upper)
    );
    write_scalar(out, format, "k,n,coord,phat,alpha,t,upper", csv, rec)
}

fn cmd_verify(a: VerifyArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    if a.max_k < 2 || a.max_n < 1 {
        return Err(CliError::Usage("need --max-k >= 2 and --max-n >= 1".into()));
    }
    let cfg = VerifyConfig {
        max_k: a.max_k,
        max_n: a.max_n,
        seed: a.seed,
        p_samples: a.p_samples,
        lambda_points: a.lambda_points,
        t_points: a.t_points,
        inject_fault: a.inject_fault,
    };
    let report = verify::run(&cfg)?;
    match format {
        Format::Json => {
            let props: Vec<Value> = report
                .properties
                .iter()
                .map(|p| {
                    Record::new()
                        .str("name", p.name)
                        .int("passed", p.passed)
                        .int("total", p.total)
                        .bool("ok", p.ok())
                        .value(
                            "first_failure",
                            p.first_failure
                                .clone()
                                .map(Value::from)
                                .unwrap_or(Value::Null),
                        )
                        .into_value()
                })
                .collect();
            let rec = Record::new()
                .int("max_k", a.max_k as u64)
                .int("max_n", a.max_n as u64)
                .int("seed", a.seed)
                .bool("all_passed", report.all_passed())
                .value("properties", Value::from(props));
            writeln!(out, "{}", rec.to_json())?;
        }
        Format::Csv => {
            writeln!(out, "property,passed,total,ok")?;
            for p in &report.properties {
                writeln!(out, "{},{},{},{}", p.name, p.passed, p.total, p.ok())?;
            }
        }
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn cmd_mc_tail(a: McTailArgs, format: Format, out: &mut impl Write) -> CliResult<()> {
    let shape = ExperimentShape::for_bounds(a.p.len(), a.n)?;
    let p = ProbVector::new(a.p.clone())?;
    let est = mc_tail(shape, &p, a.t, a.samples, a.seed)?;
    let exact = if a.exact {
        Some(tail_exact(shape, &p, a.t)?)
    } else {
        None
    };
    let rec = Record::new()
        .int("k", shape.k() as u64)
        .int("n", a.n as u64)
        .num("t", a.t)
        .int("samples", est.samples)
        .int("seed", est.seed)
        .int("hits", est.hits)
        .num("estimate", est.estimate)
        .num("std_error", est.std_error)
        .value("exact", exact.map(json_number).unwrap_or(Value::Null));
    let csv = format!(
        "{},{},{},{},{},{},{},{},{}",
        shape.k(),
        a.n,
        csv_number(a.t),
        est.samples,
        est.seed,
        est.hits,
        csv_number(est.estimate),
        csv_number(est.std_error),
        exact.map(csv_number).unwrap_or_default()
    );
    write_scalar(
        out,
        format,
        "k,n,t,samples,seed,hits,estimate,std_error,exact",
        csv,
        rec,
    )
}
