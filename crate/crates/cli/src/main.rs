//! Batch front-end for the tailindex library.
//!
//! Exit codes: 0 success, 2 invalid input, 3 computation failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tailindex::classify::{self, diffusion_probes, diffusion_run_table, Probes, Thresholds};
use tailindex::dist::zoo;
use tailindex::dominance::{dominates, DominanceConfig};
use tailindex::estimate::{self, FrequencyTable};
use tailindex::tail_index::{self, geometric_schedule, DEFAULT_EPS};
use tailindex::{Distribution, Error, FamilySpec};

/// Environment variable naming the directory for relative `--out` paths.
const OUT_DIR_VAR: &str = "TAILINDEX_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "tailindex",
    version,
    about = "Tail indices of distributions on countable alphabets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Output file (standard output if omitted); relative paths resolve
    /// against $TAILINDEX_OUT_DIR when set
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Analytic,
    Numeric,
}

#[derive(Subcommand)]
enum Command {
    /// t_n along a geometric schedule
    Tn {
        #[arg(long)]
        dist: String,
        /// start:stop:xFactor
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Domain verdict
    Classify {
        #[arg(long)]
        dist: String,
        #[arg(long, value_enum, default_value = "analytic")]
        mode: Mode,
        #[arg(long, default_value = "16:4194304:x2")]
        schedule: String,
        /// TOML file with theta0, theta2, band_floor, band_ceiling, min_decades
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Oscillation profile t(c) on a grid over [1, e], or along a schedule
    Oscillate {
        /// Grid size for t(c)
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        /// With --schedule: report k*, c(n), t_n and t(c(n)) for this distribution
        #[arg(long, requires = "schedule")]
        dist: Option<String>,
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Counts of P's terms in the intervals of Q
    Dominates {
        #[arg(long)]
        q: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 50)]
        depth: u64,
        #[arg(long, default_value_t = 1_000_000)]
        probe_limit: u64,
        #[arg(long, default_value_t = 4)]
        growth_threshold: u64,
    },
    /// Z_{1,v} and t̂_v from a seeded sample or a frequency table
    Estimate {
        #[arg(long, required_unless_present = "table")]
        dist: Option<String>,
        #[arg(long, required_unless_present = "table")]
        n: Option<u64>,
        /// v range lo:hi (inclusive)
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read a `k,y` frequency table instead of sampling
        #[arg(long, conflicts_with_all = ["dist", "n"])]
        table: Option<PathBuf>,
        /// Also write the sampled frequency table as `k,y` CSV
        #[arg(long)]
        table_out: Option<PathBuf>,
    },
    /// List the catalogued family specs
    Zoo,
    /// Run table of the diffusion sequence
    DomainT {
        #[arg(long, default_value_t = 13)]
        stages: u32,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Compute(String),
    /// The reader went away; not worth reporting.
    Closed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Compute(_) => 3,
            Failure::Closed => 0,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Compute(m) => m,
            Failure::Closed => "",
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DepthExceeded { .. }
            | Error::TruncationBudget { .. }
            | Error::NoAnalyticRule(_) => Failure::Compute(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Compute(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io.into(),
            other => Failure::Compute(format!("csv: {other:?}")),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Compute(format!("json: {e}"))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn parse_dist(text: &str) -> Outcome<Distribution> {
    let spec: FamilySpec = text.parse()?;
    Ok(Distribution::new(spec)?)
}

fn parse_schedule(text: &str) -> Outcome<Vec<u64>> {
    let bad = || invalid(format!("schedule `{text}` is not start:stop:xFactor"));
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    let int = |s: &str| -> Outcome<u64> {
        s.parse::<u64>().or_else(|_| match s.parse::<f64>() {
            Ok(x) if x >= 1.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
            _ => Err(bad()),
        })
    };
    let factor: f64 = step
        .strip_prefix('x')
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    Ok(geometric_schedule(int(start)?, int(stop)?, factor)?)
}

fn parse_v_range(text: &str) -> Outcome<Vec<u64>> {
    let bad = || invalid(format!("v range `{text}` is not lo:hi"));
    let (lo, hi) = match text.split_once(':') {
        Some((a, b)) => (
            a.parse::<u64>().map_err(|_| bad())?,
            b.parse::<u64>().map_err(|_| bad())?,
        ),
        None => {
            let v = text.parse::<u64>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn check_eps(eps: f64) -> Outcome<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("eps must be positive, got {eps}")))
    }
}

fn finite(label: &str, x: f64) -> Outcome<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Compute(format!("{label} is not finite ({x})")))
    }
}

fn resolve_out(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if out.is_relative() => Path::new(&dir).join(out),
        _ => out.to_path_buf(),
    }
}

fn sink(out: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(resolve_out(path))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Writes rows as CSV (header from the field names) or as a JSON array.
fn emit<T: Serialize>(rows: &[T], format: Format, out: Option<&Path>) -> Outcome<()> {
    let mut w = sink(out)?;
    match format {
        Format::Csv => {
            let mut c = csv_writer(&mut w);
            for row in rows {
                c.serialize(row)?;
            }
            c.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TnRow {
    n: u64,
    t_n: f64,
    trunc_error: f64,
}

#[derive(Serialize)]
struct VerdictRow {
    domain: String,
    method: String,
    citation: String,
    growth_exponent: Option<f64>,
    doubling_ratio: Option<f64>,
    band_width: Option<f64>,
}

#[derive(Serialize)]
struct OscRow {
    c: f64,
    t_of_c: f64,
}

#[derive(Serialize)]
struct OscStateRow {
    n: u64,
    k_star: u64,
    c_of_n: f64,
    t_n: f64,
    t_of_c: f64,
}

#[derive(Serialize)]
struct CountRow {
    k: u64,
    count_in_interval: u64,
}

#[derive(Serialize)]
struct EstimateRow {
    v: u64,
    #[serde(rename = "Z_1v")]
    z_1v: f64,
    t_hat: f64,
}

#[derive(Serialize)]
struct ZooRow {
    kind: &'static str,
    spec: String,
}

#[derive(Serialize)]
struct RunRow {
    i: u32,
    d_i: u64,
    run_exponent: u32,
    n_i: String,
    t_n_i: f64,
    m_i: String,
    t_m_i: f64,
}

#[derive(Serialize, serde::Deserialize)]
struct TableRow {
    k: u64,
    y: u64,
}

fn run(cli: Cli) -> Outcome<()> {
    let out = cli.out.as_deref();
    let format = cli.format;
    match cli.command {
        Command::Tn {
            dist,
            schedule,
            eps,
        } => {
            check_eps(eps)?;
            let d = parse_dist(&dist)?;
            let schedule = parse_schedule(&schedule)?;
            let mut rows = Vec::with_capacity(schedule.len());
            for &n in &schedule {
                let v = tail_index::tn(&d, n, eps)?;
                rows.push(TnRow {
                    n,
                    t_n: finite("t_n", v.value)?,
                    trunc_error: finite("trunc_error", v.trunc_error)?,
                });
            }
            emit(&rows, format.unwrap_or(Format::Csv), out)
        }
        Command::Classify {
            dist,
            mode,
            schedule,
            thresholds,
        } => {
            let d = parse_dist(&dist)?;
            let verdict = match mode {
                Mode::Analytic => classify::classify_analytic(&d)?,
                Mode::Numeric => {
                    let t = match thresholds {
                        Some(path) => {
                            let text = std::fs::read_to_string(&path)
                                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                            toml::from_str::<Thresholds>(&text).map_err(|e| {
                                invalid(format!("{}: {}", path.display(), e.message()))
                            })?
                        }
                        None => Thresholds::default(),
                    };
                    let schedule = parse_schedule(&schedule)?;
                    let probes: Option<Probes> = d
                        .diffusion_runs()
                        .map(|_| diffusion_probes(&d))
                        .transpose()?;
                    classify::classify_numeric(&d, &schedule, &t, probes.as_ref())?
                }
            };
            for e in &verdict.evidence {
                finite("t_n", e.t_n)?;
            }
            match format.unwrap_or(Format::Json) {
                Format::Json => {
                    let mut w = sink(out)?;
                    serde_json::to_writer_pretty(&mut w, &verdict)?;
                    writeln!(w)?;
                    w.flush()?;
                    Ok(())
                }
                Format::Csv => {
                    let row = VerdictRow {
                        domain: format!("{:?}", verdict.domain),
                        method: format!("{:?}", verdict.method),
                        citation: verdict.citation.clone().unwrap_or_default(),
                        growth_exponent: verdict.diagnostics.growth_exponent,
                        doubling_ratio: verdict.diagnostics.doubling_ratio,
                        band_width: verdict.diagnostics.band_width,
                    };
                    emit(&[row], Format::Csv, out)
                }
            }
        }
        Command::Oscillate {
            grid,
            dist,
            schedule,
            eps,
        } => {
            check_eps(eps)?;
            if let (Some(dist), Some(schedule)) = (dist, schedule) {
                let d = parse_dist(&dist)?;
                let mut rows = Vec::new();
                for n in parse_schedule(&schedule)? {
                    let s = tail_index::oscillation_state(&d, n)?;
                    let t = tail_index::tn(&d, n, eps)?;
                    rows.push(OscStateRow {
                        n,
                        k_star: s.k_star,
                        c_of_n: finite("c(n)", s.c_of_n)?,
                        t_n: finite("t_n", t.value)?,
                        t_of_c: finite("t(c)", tail_index::oscillation_t(s.c_of_n))?,
                    });
                }
                return emit(&rows, format.unwrap_or(Format::Csv), out);
            }
            if grid < 2 {
                return Err(invalid("grid needs at least 2 points"));
            }
            let e = std::f64::consts::E;
            let rows = (0..grid)
                .map(|i| {
                    let c = 1.0 + (e - 1.0) * i as f64 / (grid - 1) as f64;
                    Ok(OscRow {
                        c,
                        t_of_c: finite("t(c)", tail_index::oscillation_t(c))?,
                    })
                })
                .collect::<Outcome<Vec<_>>>()?;
            emit(&rows, format.unwrap_or(Format::Csv), out)
        }
        Command::Dominates {
            q,
            p,
            depth,
            probe_limit,
            growth_threshold,
        } => {
            let q = parse_dist(&q)?;
            let p = parse_dist(&p)?;
            let report = dominates(
                &q,
                &p,
                &DominanceConfig {
                    depth,
                    probe_limit,
                    growth_threshold,
                },
            )?;
            eprintln!(
                "verdict: {:?} (max count {}, {} terms scanned)",
                report.verdict, report.max_count, report.scanned
            );
            match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let rows: Vec<CountRow> = report
                        .counts
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| CountRow {
                            k: i as u64 + 1,
                            count_in_interval: c,
                        })
                        .collect();
                    emit(&rows, Format::Csv, out)
                }
                Format::Json => {
                    let mut w = sink(out)?;
                    serde_json::to_writer_pretty(&mut w, &report)?;
                    writeln!(w)?;
                    w.flush()?;
                    Ok(())
                }
            }
        }
        Command::Estimate {
            dist,
            n,
            v,
            seed,
            table,
            table_out,
        } => {
            let vs = parse_v_range(&v)?;
            let freq = match table {
                Some(path) => read_table(&path)?,
                None => {
                    let d = parse_dist(dist.as_deref().unwrap_or_default())?;
                    estimate::sample(&d, n.unwrap_or_default(), seed)?
                }
            };
            if let Some(path) = table_out {
                write_table(&freq, &resolve_out(&path))?;
            }
            let report = estimate::estimator_report(&freq, &vs)?;
            let rows = report
                .v_values
                .iter()
                .zip(&report.z1v)
                .zip(&report.t_hat)
                .map(|((&v, &z), &t)| {
                    Ok(EstimateRow {
                        v,
                        z_1v: finite("Z_1v", z)?,
                        t_hat: finite("t_hat", t)?,
                    })
                })
                .collect::<Outcome<Vec<_>>>()?;
            emit(&rows, format.unwrap_or(Format::Csv), out)
        }
        Command::Zoo => {
            let rows: Vec<ZooRow> = zoo()
                .into_iter()
                .map(|s| ZooRow {
                    kind: s.kind().tag(),
                    spec: s.to_string(),
                })
                .collect();
            emit(&rows, format.unwrap_or(Format::Csv), out)
        }
        Command::DomainT { stages, eps } => {
            check_eps(eps)?;
            let d = Distribution::new(FamilySpec::Diffusion { stages })?;
            let rows = diffusion_run_table(&d, eps)?
                .into_iter()
                .map(|r| {
                    Ok(RunRow {
                        i: r.stage,
                        d_i: r.diffusion,
                        run_exponent: r.run_exponent,
                        n_i: format!("2^{}", r.run_exponent),
                        t_n_i: finite("t_n_i", r.t_n_i)?,
                        m_i: format!("2^{}-1", r.probe_exponent),
                        t_m_i: finite("t_m_i", r.t_m_i)?,
                    })
                })
                .collect::<Outcome<Vec<_>>>()?;
            emit(&rows, format.unwrap_or(Format::Csv), out)
        }
    }
}

fn read_table(path: &Path) -> Outcome<FrequencyTable> {
    let file = File::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if headers != vec!["k", "y"] {
        return Err(invalid(format!("{}: header must be `k,y`", path.display())));
    }
    let mut pairs = Vec::new();
    for row in reader.deserialize::<TableRow>() {
        let row = row.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        pairs.push((row.k, row.y));
    }
    Ok(FrequencyTable::from_counts(pairs)?)
}

fn write_table(freq: &FrequencyTable, path: &Path) -> Outcome<()> {
    let mut c = csv_writer(BufWriter::new(File::create(path)?));
    for (k, y) in freq.rows() {
        c.serialize(TableRow { k, y })?;
    }
    c.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
