//! `reebcz` command-line front end.
//!
//! Exit status: 0 when every requested check passes, 1 when an audit fails,
//! 2 on usage errors, 3 when an input cannot be loaded or parsed, 4 on
//! precision errors.  Failures print one JSON diagnostic line on stderr.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use reebcz::indices::index_bundle;
use reebcz::orbits::{
    ellipsoid_comparison, ellipsoid_system, multiplicity_audit, staircase_barcode,
};
use reebcz::persistence::{barcode_audit, barcode_from_filtered_complex, AuditOptions};
use reebcz::recurrence::find_recurrence_events;
use reebcz::{
    Barcode, BlockPath, Error, ExactReal, FilteredComplex, OrbitSystem, RecurrenceEvent,
    RecurrenceParams,
};

#[derive(Parser)]
#[command(
    name = "reebcz",
    version,
    about = "Index theory, recurrence events and barcodes of Reeb orbit systems"
)]
struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sharded searches.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed for `gen-system`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SystemKind {
    Ellipsoid,
    Dc,
}

#[derive(Subcommand)]
enum Command {
    /// Table of mean index and mu-/mu+ over iterates.
    Indices {
        /// Path as a JSON file or inline JSON.
        #[arg(long, conflicts_with = "system")]
        path: Option<String>,
        /// Orbit system file; pick the orbit with `--orbit`.
        #[arg(long, requires = "orbit")]
        system: Option<PathBuf>,
        /// Orbit label or zero-based position.
        #[arg(long)]
        orbit: Option<String>,
        #[arg(long, default_value_t = 10)]
        kmax: u64,
    },
    /// Search for recurrence events and emit them as JSON lines.
    Recurrence {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value_t = 1)]
        ell0: u64,
        /// Every iterate must be divisible by this.
        #[arg(long, default_value_t = 1)]
        div: u64,
        #[arg(long, default_value_t = 1)]
        events: usize,
        /// Largest iterate searched.
        #[arg(long, default_value_t = 100_000)]
        kmax: u64,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
    },
    /// Barcode of a filtered complex.
    Barcode {
        #[arg(long)]
        complex: PathBuf,
        /// Override the coefficient field characteristic.
        #[arg(long)]
        field: Option<u64>,
        /// Also write an SVG rendering here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Euler, boundary-depth and Smith checks on a barcode.
    Audit {
        #[arg(long)]
        barcode: PathBuf,
        #[arg(long)]
        n: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<i64>,
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long)]
        depth_bound: Option<String>,
    },
    /// Staircase barcode of an irrational ellipsoid.
    Ellipsoid {
        /// Comma separated axes, e.g. `1,sqrt2`.
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<String>,
        /// Number of spectrum points.
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Also write the barcode JSON here.
        #[arg(long)]
        barcode: Option<PathBuf>,
        /// Also write an SVG rendering here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Multiplicity audit of one recurrence event.
    AuditMult {
        #[arg(long)]
        system: PathBuf,
        /// Event JSON, or JSON lines as written by `recurrence` (the first event is used).
        #[arg(long)]
        event: PathBuf,
        #[arg(long)]
        kmax: u64,
    },
    /// Compare a system with the ellipsoid of the same mean indices.
    Compare {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 200)]
        kmax: u64,
        /// Replace every action by the mean index first.
        #[arg(long)]
        rescale: bool,
    },
    /// Random orbit system for testing.
    GenSystem {
        #[arg(long, value_enum)]
        kind: SystemKind,
        /// Ambient half dimension plus one (ellipsoid) or orbit half dimension (dc).
        #[arg(long)]
        n: usize,
        /// Number of orbits for `dc`.
        #[arg(long, default_value_t = 2)]
        orbits: usize,
    },
}

enum Failure {
    Usage(String),
    Load(String),
    Lib(Error),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn status(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Load(_) => 3,
            Failure::Audit(_) => 1,
            Failure::Lib(e) => match e {
                Error::Precision(_) | Error::HalfIntegerAmbiguity(_) | Error::Overflow(_) => 4,
                Error::InvalidParams(_) | Error::DivisionByZero => 2,
                Error::Parse(_)
                | Error::EmptySystem
                | Error::NonpositiveAction { .. }
                | Error::NonpositiveMeanIndex { .. }
                | Error::InvalidBlock(_)
                | Error::MalformedComplex(_)
                | Error::BoundaryNotSquareZero { .. }
                | Error::FiltrationViolation(_)
                | Error::RationalRatio { .. } => 3,
                _ => 1,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Load(_) => "load",
            Failure::Audit(_) => "audit-failed",
            Failure::Lib(e) => e.kind(),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Load(m) | Failure::Audit(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Run<T> {
    serde_json::from_str(text).map_err(|e| {
        // errors raised inside the library validators keep their kind
        let msg = e.to_string();
        if msg.starts_with("empty orbit system") {
            Failure::Lib(Error::EmptySystem)
        } else if let Some(m) = msg.strip_prefix("precision: ") {
            Failure::Lib(Error::Precision(format!("{what}: {m}")))
        } else if let Some(m) = msg.strip_prefix("half-integer ambiguity: ") {
            Failure::Lib(Error::HalfIntegerAmbiguity(format!("{what}: {m}")))
        } else {
            Failure::Lib(Error::Parse(format!("{what}: {msg}")))
        }
    })
}

fn load_system(path: &Path) -> Run<OrbitSystem> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

fn number(s: &str) -> Run<ExactReal> {
    ExactReal::parse(s).map_err(|e| Failure::Usage(format!("bad number '{s}': {e}")))
}

fn json_line(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, content: &str) -> Run<()> {
    fs::write(path, content).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))
}

fn format_or(fmt: Option<Format>, default: Format, allowed: &[Format], cmd: &str) -> Run<Format> {
    let f = fmt.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Usage(format!(
            "format {} is not supported by {cmd}",
            format!("{f:?}").to_lowercase()
        )))
    }
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Run<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Load(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Load(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn barcode_rows(bc: &Barcode) -> Vec<Vec<String>> {
    bc.bars()
        .iter()
        .map(|b| {
            vec![
                b.a.to_string(),
                b.b.as_ref()
                    .map_or_else(|| "inf".to_string(), |x| x.to_string()),
                b.deg.to_string(),
            ]
        })
        .collect()
}

/// Main output plus an optional audit failure that sets the exit status.
struct Outcome {
    text: String,
    failed: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, failed: None }
    }
}

fn cmd_indices(
    cli: &Cli,
    path: &Option<String>,
    system: &Option<PathBuf>,
    orbit: &Option<String>,
    kmax: u64,
) -> Run<Outcome> {
    let fmt = format_or(
        cli.format,
        Format::Csv,
        &[Format::Csv, Format::Json],
        "indices",
    )?;
    let path: BlockPath = match (path, system) {
        (Some(p), None) => {
            let text = if p.trim_start().starts_with('{') {
                p.clone()
            } else {
                read_text(Path::new(p))?
            };
            parse_json(&text, "path")?
        }
        (None, Some(s)) => {
            let sys = load_system(s)?;
            let o = orbit.as_deref().unwrap_or("0");
            let j = match o.parse::<usize>() {
                Ok(j) if j < sys.len() => j,
                _ => (0..sys.len())
                    .find(|j| sys.label(*j) == o)
                    .ok_or_else(|| Failure::Usage(format!("no orbit '{o}' in the system")))?,
            };
            sys.orbits()[j].path.clone()
        }
        _ => {
            return Err(Failure::Usage(
                "indices needs --path or --system with --orbit".into(),
            ))
        }
    };
    if kmax == 0 {
        return Err(Failure::Usage("--kmax must be at least 1".into()));
    }
    let bundles = (1..=kmax)
        .map(|k| index_bundle(&path, k))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match fmt {
        Format::Json => pretty(&bundles),
        _ => csv_text(
            &["k", "mean_index", "mu_minus", "mu_plus", "degenerate"],
            bundles
                .iter()
                .map(|b| {
                    vec![
                        b.k.to_string(),
                        b.mean_index.to_string(),
                        b.mu_minus.to_string(),
                        b.mu_plus.to_string(),
                        b.is_degenerate().to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok(Outcome::ok(text))
}

#[allow(clippy::too_many_arguments)]
fn cmd_recurrence(
    cli: &Cli,
    system: &Path,
    eta: &str,
    ell0: u64,
    div: u64,
    events: usize,
    kmax: u64,
    epsilon: &Option<String>,
    sigma: &Option<String>,
) -> Run<Outcome> {
    let fmt = format_or(
        cli.format,
        Format::Json,
        &[Format::Json, Format::Csv],
        "recurrence",
    )?;
    let sys = load_system(system)?;
    let mut params = RecurrenceParams::new(number(eta)?, ell0);
    params.divisor = div;
    params.event_count = events;
    params.k_ceiling = kmax;
    params.epsilon = epsilon.as_deref().map(number).transpose()?;
    params.sigma = sigma.as_deref().map(number).transpose()?;
    params.parallel = cli.threads > 1;
    let out = find_recurrence_events(&sys, &params)?;
    let all_verified = out
        .events
        .iter()
        .all(|e| e.verified.as_ref().is_some_and(|v| v.passed));
    let complete = out.events.len() == events;
    let passed = all_verified && complete;
    let text = match fmt {
        Format::Csv => csv_text(
            &["C", "d", "k", "verified"],
            out.events
                .iter()
                .map(|e| {
                    let join = |v: Vec<String>| v.join(" ");
                    vec![
                        e.c.to_string(),
                        join(e.d.iter().map(|x| x.to_string()).collect()),
                        join(e.k.iter().map(|x| x.to_string()).collect()),
                        e.verified.as_ref().is_some_and(|v| v.passed).to_string(),
                    ]
                })
                .collect(),
        )?,
        _ => {
            let mut s = String::new();
            for e in &out.events {
                s.push_str(&json_line(e));
                s.push('\n');
            }
            let summary = json!({"summary": {
                "requested": events,
                "found": out.events.len(),
                "rejected": out.rejected,
                "observed_gaps": out.observed_gaps,
                "params": out.params,
                "audits": out.events.iter().map(|e| json!({
                    "C": e.c,
                    "d": e.d,
                    "k": e.k,
                    "passed": e.verified.as_ref().is_some_and(|v| v.passed),
                })).collect::<Vec<Value>>(),
                "passed": passed,
            }});
            s.push_str(&json_line(&summary));
            s.push('\n');
            s
        }
    };
    let failed = (!passed).then(|| {
        if complete {
            "an event failed verification".to_string()
        } else {
            format!(
                "found {} of {events} events up to k={kmax}",
                out.events.len()
            )
        }
    });
    Ok(Outcome { text, failed })
}

fn cmd_barcode(
    cli: &Cli,
    complex: &Path,
    field: Option<u64>,
    svg_out: &Option<PathBuf>,
) -> Run<Outcome> {
    let fmt = format_or(
        cli.format,
        Format::Json,
        &[Format::Json, Format::Csv, Format::Svg],
        "barcode",
    )?;
    let mut cx: FilteredComplex = parse_json(&read_text(complex)?, &complex.display().to_string())?;
    if let Some(f) = field {
        cx.field = f;
    }
    let bc = barcode_from_filtered_complex(&cx)?;
    if let Some(p) = svg_out {
        write_file(p, &svg::barcode_svg(&bc))?;
    }
    let text = match fmt {
        Format::Json => pretty(&bc),
        Format::Csv => csv_text(&["a", "b", "deg"], barcode_rows(&bc))?,
        Format::Svg => svg::barcode_svg(&bc),
    };
    Ok(Outcome::ok(text))
}

fn cmd_audit(
    cli: &Cli,
    barcode: &Path,
    n: Option<i64>,
    chi: Option<i64>,
    primes: &[u64],
    depth_bound: &Option<String>,
) -> Run<Outcome> {
    format_or(cli.format, Format::Json, &[Format::Json], "audit")?;
    let bc: Barcode = parse_json(&read_text(barcode)?, &barcode.display().to_string())?;
    let opts = AuditOptions {
        n,
        chi,
        depth_bound: depth_bound.as_deref().map(number).transpose()?,
        primes: primes.to_vec(),
        ..AuditOptions::default()
    };
    let report = barcode_audit(&bc, &opts)?;
    let failed = (!report.passed).then(|| {
        let names: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect();
        format!("failed checks: {}", names.join(", "))
    });
    Ok(Outcome {
        text: pretty(&report),
        failed,
    })
}

fn cmd_ellipsoid(
    cli: &Cli,
    deltas: &[String],
    count: usize,
    barcode: &Option<PathBuf>,
    svg_out: &Option<PathBuf>,
) -> Run<Outcome> {
    let fmt = format_or(
        cli.format,
        Format::Json,
        &[Format::Json, Format::Csv, Format::Svg],
        "ellipsoid",
    )?;
    if deltas.is_empty() {
        return Err(Failure::Usage("--deltas needs at least one value".into()));
    }
    let ds = deltas.iter().map(|d| number(d)).collect::<Run<Vec<_>>>()?;
    let sys = ellipsoid_system(&ds)?;
    let st = staircase_barcode(&sys, count)?;
    if let Some(p) = barcode {
        write_file(p, &pretty(&st.barcode))?;
    }
    if let Some(p) = svg_out {
        write_file(p, &svg::barcode_svg(&st.barcode))?;
    }
    let text = match fmt {
        Format::Json => pretty(&st),
        Format::Csv => csv_text(&["a", "b", "deg"], barcode_rows(&st.barcode))?,
        Format::Svg => svg::barcode_svg(&st.barcode),
    };
    Ok(Outcome::ok(text))
}

/// An event from a JSON document or from the first event line of a JSON lines stream.
fn load_event(path: &Path) -> Run<RecurrenceEvent> {
    let text = read_text(path)?;
    let what = path.display().to_string();
    if let Ok(ev) = serde_json::from_str::<RecurrenceEvent>(&text) {
        return Ok(ev);
    }
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = parse_json(line, &what)?;
        if v.get("summary").is_none() {
            return parse_json(line, &what);
        }
    }
    Err(Failure::Lib(Error::Parse(format!(
        "{what}: no event found"
    ))))
}

fn cmd_audit_mult(cli: &Cli, system: &Path, event: &Path, kmax: u64) -> Run<Outcome> {
    format_or(cli.format, Format::Json, &[Format::Json], "audit-mult")?;
    let sys = load_system(system)?;
    let ev = load_event(event)?;
    let report = multiplicity_audit(&sys, &ev, kmax)?;
    let failed = (!report.passed).then(|| {
        let names: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect();
        format!("failed checks: {}", names.join(", "))
    });
    Ok(Outcome {
        text: pretty(&report),
        failed,
    })
}

fn cmd_compare(cli: &Cli, system: &Path, kmax: u64, rescale: bool) -> Run<Outcome> {
    format_or(cli.format, Format::Json, &[Format::Json], "compare")?;
    let mut sys = load_system(system)?;
    if rescale {
        sys = sys.rescaled_to_mean_index();
    }
    let report = ellipsoid_comparison(&sys, kmax)?;
    let failed =
        (!report.passed).then(|| "system differs from its comparison ellipsoid".to_string());
    Ok(Outcome {
        text: pretty(&report),
        failed,
    })
}

fn cmd_gen_system(cli: &Cli, kind: SystemKind, n: usize, orbits: usize) -> Run<Outcome> {
    format_or(cli.format, Format::Json, &[Format::Json], "gen-system")?;
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let sys = match kind {
        SystemKind::Ellipsoid => {
            let ds =
                reebcz::generate::field_ellipsoid_deltas(&mut rng, n, &ExactReal::ratio(1, 8))?;
            ellipsoid_system(&ds)?
        }
        SystemKind::Dc => reebcz::generate::dc_system(&mut rng, orbits.max(1), n)?,
    };
    Ok(Outcome::ok(pretty(&sys)))
}

fn run(cli: &Cli) -> Run<Outcome> {
    match &cli.command {
        Command::Indices {
            path,
            system,
            orbit,
            kmax,
        } => cmd_indices(cli, path, system, orbit, *kmax),
        Command::Recurrence {
            system,
            eta,
            ell0,
            div,
            events,
            kmax,
            epsilon,
            sigma,
        } => cmd_recurrence(
            cli, system, eta, *ell0, *div, *events, *kmax, epsilon, sigma,
        ),
        Command::Barcode {
            complex,
            field,
            svg,
        } => cmd_barcode(cli, complex, *field, svg),
        Command::Audit {
            barcode,
            n,
            chi,
            primes,
            depth_bound,
        } => cmd_audit(cli, barcode, *n, *chi, primes, depth_bound),
        Command::Ellipsoid {
            deltas,
            count,
            barcode,
            svg,
        } => cmd_ellipsoid(cli, deltas, *count, barcode, svg),
        Command::AuditMult {
            system,
            event,
            kmax,
        } => cmd_audit_mult(cli, system, event, *kmax),
        Command::Compare {
            system,
            kmax,
            rescale,
        } => cmd_compare(cli, system, *kmax, *rescale),
        Command::GenSystem { kind, n, orbits } => cmd_gen_system(cli, *kind, *n, *orbits),
    }
}

fn emit(cli: &Cli, text: &str) -> Run<()> {
    match &cli.out {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Load(format!("stdout: {e}"))),
    }
}

fn diagnose(f: &Failure) -> ExitCode {
    let line = json!({"error": f.kind(), "status": f.status(), "message": f.message()});
    eprintln!("{line}");
    ExitCode::from(f.status())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let head: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let text = head.join(" ");
            return diagnose(&Failure::Usage(
                text.trim_start_matches("error: ").to_string(),
            ));
        }
    };
    if cli.threads == 0 {
        return diagnose(&Failure::Usage("--threads must be at least 1".into()));
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        return diagnose(&Failure::Usage(format!("thread pool: {e}")));
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(f) => return diagnose(&f),
    };
    if let Err(f) = emit(&cli, &outcome.text) {
        return diagnose(&f);
    }
    match outcome.failed {
        Some(m) => diagnose(&Failure::Audit(m)),
        None => ExitCode::SUCCESS,
    }
}
