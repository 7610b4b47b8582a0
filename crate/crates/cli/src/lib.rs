//! Command-line front end: `run <config>`, `plotdata <in> <out>` and
//! `version`.
//!
//! Failures map to exit codes by class: 1 for configuration and usage
//! errors, 2 for data errors, 3 for solver failures. Each is reported as a
//! single line `error[<class>]: <message>`.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use risklab::config::RunConfig;
use risklab::experiment::{price_files, run_experiment, write_outputs, ScenarioResult, ROWS_HEADER};
use risklab::{Error, ErrorClass};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const THREADS_ENV: &str = "RISKLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Config,
    Data,
    Solver,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Usage | FailureKind::Config => 1,
            FailureKind::Data => 2,
            FailureKind::Solver => 3,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            FailureKind::Usage => "usage",
            FailureKind::Config => "config",
            FailureKind::Data => "data",
            FailureKind::Solver => "solver",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: FailureKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {}", self.kind.tag(), one_line)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e.class() {
            ErrorClass::Config => FailureKind::Config,
            ErrorClass::Data => FailureKind::Data,
            ErrorClass::Solver => FailureKind::Solver,
        };
        CliError::new(kind, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Run { config: PathBuf },
    PlotData { input: PathBuf, output: PathBuf },
    Version,
}

pub const USAGE: &str = "usage: risklab run <config> | risklab plotdata <rows.csv> <out.csv> | risklab version";

pub fn parse_args<I, S>(args: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let usage = |why: &str| CliError::new(FailureKind::Usage, format!("{why}; {USAGE}"));
    match args.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["run", config] => Ok(Command::Run {
            config: PathBuf::from(config),
        }),
        ["plotdata", input, output] => Ok(Command::PlotData {
            input: PathBuf::from(input),
            output: PathBuf::from(output),
        }),
        ["version"] | ["--version"] => Ok(Command::Version),
        [] => Err(usage("missing subcommand")),
        [cmd, ..] if ["run", "plotdata", "version"].contains(cmd) => {
            Err(usage(&format!("wrong number of arguments for `{cmd}`")))
        }
        [cmd, ..] => Err(usage(&format!("unknown subcommand `{cmd}`"))),
    }
}

/// Worker-thread cap from `RISKLAB_THREADS`; `None` when unset.
pub fn thread_limit(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::new(
                FailureKind::Usage,
                format!("{THREADS_ENV} must be a positive integer, got `{v}`"),
            )),
        },
    }
}

pub fn version_line() -> String {
    format!("risklab {}", env!("CARGO_PKG_VERSION"))
}

/// Outcome of a successful `run`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub results: Vec<ScenarioResult>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new(FailureKind::Data, format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Manifest text: config echo, scenarios with seeds and sizes, data
/// checksums and output checksums. Contains no timestamps or absolute
/// paths, so identical inputs give identical manifests.
pub fn manifest_text(
    config: &RunConfig,
    results: &[ScenarioResult],
    outputs: &[PathBuf],
) -> Result<String, CliError> {
    let mut m = String::new();
    let _ = writeln!(m, "# {}", version_line());
    let _ = writeln!(m, "[config]");
    m.push_str(&config.echo());
    let _ = writeln!(m, "\n[scenarios]");
    for r in results {
        let seed = r.spec.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let flags = if r.cvar.thin_tail.is_empty() {
            String::new()
        } else {
            format!(" thin_tail_points={}", r.cvar.thin_tail.len())
        };
        let _ = writeln!(
            m,
            "{} kind={:?} sample_size={} rows={} assets={} seed={} bootstrap_seed={} l_star={}{flags}",
            r.spec.name,
            r.spec.data_kind,
            r.spec.sample_size,
            r.periods,
            r.n_assets,
            seed,
            r.spec.bootstrap_seed,
            r.cvar.l_star.map_or_else(|| "none".to_string(), |l| l.to_string()),
        );
    }
    let _ = writeln!(m, "\n[data]");
    for universe in &config.universes {
        for file in price_files(&universe.data_dir)? {
            let _ = writeln!(m, "sha256 {} {}/{}", sha256_file(&file)?, universe.name, file_name(&file));
        }
    }
    let _ = writeln!(m, "\n[outputs]");
    for file in outputs {
        let _ = writeln!(m, "sha256 {} {}", sha256_file(file)?, file_name(file));
    }
    Ok(m)
}

/// Runs both studies on every scenario and writes the CSVs plus the
/// manifest into the configured output directory.
pub fn cmd_run(config_path: &Path) -> Result<RunSummary, CliError> {
    let config = RunConfig::load(config_path)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::new(
            FailureKind::Config,
            format!("out_dir {} is not writable: {e}", config.out_dir.display()),
        )
    })?;
    let results = run_experiment(&config)?;
    let mut written = write_outputs(&results, &config.out_dir)?;
    let manifest = manifest_text(&config, &results, &written)?;
    let manifest_path = config.out_dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, manifest).map_err(|e| {
        CliError::new(FailureKind::Data, format!("cannot write {}: {e}", manifest_path.display()))
    })?;
    written.push(manifest_path);
    Ok(RunSummary {
        out_dir: config.out_dir,
        written,
        results,
    })
}

/// Pivots a rows CSV into `epsilon,sr_<model>,...` sorted by epsilon, with
/// model columns in order of first appearance. Missing cells are `nan`.
pub fn pivot_rows(input: &str) -> Result<String, CliError> {
    let bad = |msg: String| CliError::new(FailureKind::Data, msg);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| bad(format!("unreadable header: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != ROWS_HEADER {
        return Err(bad(format!("expected header `{ROWS_HEADER}`, got `{header}`")));
    }

    let mut models: Vec<String> = Vec::new();
    // (epsilon value, epsilon text, sortino per model)
    let mut points: Vec<(f64, String, Vec<Option<String>>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| bad(format!("line {line}: {e}")))?;
        let (eps_text, model, sortino) = (&record[0], &record[1], &record[4]);
        let eps: f64 = eps_text
            .parse()
            .ok()
            .filter(|e: &f64| e.is_finite())
            .ok_or_else(|| bad(format!("line {line}: bad epsilon `{eps_text}`")))?;
        if model.is_empty() {
            return Err(bad(format!("line {line}: empty model")));
        }
        let col = match models.iter().position(|m| m == model) {
            Some(c) => c,
            None => {
                models.push(model.to_string());
                models.len() - 1
            }
        };
        let idx = match points.iter().position(|p| p.0 == eps) {
            Some(p) => p,
            None => {
                points.push((eps, eps_text.to_string(), Vec::new()));
                points.len() - 1
            }
        };
        let cells = &mut points[idx].2;
        if cells.len() <= col {
            cells.resize(col + 1, None);
        }
        if cells[col].replace(sortino.to_string()).is_some() {
            return Err(bad(format!("line {line}: duplicate row for epsilon {eps_text}, model {model}")));
        }
    }
    if points.is_empty() {
        return Err(bad("no data rows".into()));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out = String::from("epsilon");
    for m in &models {
        let _ = write!(out, ",sr_{}", m.to_lowercase());
    }
    out.push('\n');
    for (_, eps_text, cells) in &points {
        out.push_str(eps_text);
        for c in 0..models.len() {
            let cell = cells.get(c).cloned().flatten().unwrap_or_else(|| "nan".into());
            let _ = write!(out, ",{cell}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_plotdata(input: &Path, output: &Path) -> Result<usize, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::new(FailureKind::Data, format!("cannot read {}: {e}", input.display())))?;
    let pivot = pivot_rows(&text)
        .map_err(|e| CliError::new(e.kind, format!("{}: {}", input.display(), e.message)))?;
    std::fs::write(output, &pivot)
        .map_err(|e| CliError::new(FailureKind::Data, format!("cannot write {}: {e}", output.display())))?;
    Ok(pivot.lines().count() - 1)
}

/// Executes a parsed command, returning the text to print on success.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Version => Ok(version_line()),
        Command::Run { config } => {
            let summary = cmd_run(config)?;
            Ok(format!(
                "wrote {} files for {} scenarios to {}",
                summary.written.len(),
                summary.results.len(),
                summary.out_dir.display()
            ))
        }
        Command::PlotData { input, output } => {
            let rows = cmd_plotdata(input, output)?;
            Ok(format!("wrote {rows} rows to {}", output.display()))
        }
    }
}
