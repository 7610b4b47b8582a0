//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers. `#` starts a comment.
//!
//! ```text
//! [run]
//! seed = 20181001
//! out_dir = results
//!
//! [universe.bse30]
//! data_dir = data/bse30
//! date_min = 2017-12-18
//! date_max = 2018-09-30
//!
//! [model]
//! annual_rf = 0.06
//! kappa = chebyshev
//! l_values = 2, 3, 4, 5
//! grid_step = 0.002
//!
//! [bootstrap]
//! resamples = 1000
//! confidence = 0.95
//!
//! [simulation]
//! large_samples = 1000
//! ```
//!
//! A single `[data]` section (same keys as a universe, plus an optional
//! `name`) may be used instead of `[universe.<name>]` sections. Relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::risk::KappaKind;

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseConfig {
    pub name: String,
    pub data_dir: PathBuf,
    pub date_min: NaiveDate,
    pub date_max: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub universes: Vec<UniverseConfig>,
    pub out_dir: PathBuf,
    pub annual_rf: f64,
    pub bootstrap_b: usize,
    pub bootstrap_confidence: f64,
    pub seed: u64,
    pub kappa_kind: KappaKind,
    pub l_values: Vec<usize>,
    pub grid_step: f64,
    /// Size of the large simulated sample.
    pub large_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            universes: Vec::new(),
            out_dir: PathBuf::from("results"),
            annual_rf: 0.06,
            bootstrap_b: 1000,
            bootstrap_confidence: 0.95,
            seed: 0,
            kappa_kind: KappaKind::Chebyshev,
            l_values: vec![2, 3, 4, 5],
            grid_step: 0.002,
            large_samples: 1000,
        }
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| config_err(line, format!("cannot parse `{key}` value `{raw}`")))
}

fn parse_date(line: usize, key: &str, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|_| config_err(line, format!("`{key}` must be YYYY-MM-DD, got `{raw}`")))
}

#[derive(Default)]
struct PartialUniverse {
    name: Option<String>,
    data_dir: Option<PathBuf>,
    date_min: Option<NaiveDate>,
    date_max: Option<NaiveDate>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut universes: Vec<PartialUniverse> = Vec::new();
        let mut section = String::new();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if section == "data" {
                    universes.push(PartialUniverse::default());
                } else if let Some(u) = section.strip_prefix("universe.") {
                    universes.push(PartialUniverse {
                        name: Some(u.to_string()),
                        ..PartialUniverse::default()
                    });
                } else if !matches!(section.as_str(), "run" | "model" | "bootstrap" | "simulation") {
                    return Err(config_err(line_no, format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| config_err(line_no, "expected `key = value`"))?;

            let in_universe = section == "data" || section.starts_with("universe.");
            match (in_universe, section.as_str(), key) {
                (true, _, _) => {
                    let u = universes.last_mut().expect("section opened a universe");
                    match key {
                        "name" if section == "data" => u.name = Some(value.to_string()),
                        "data_dir" => u.data_dir = Some(base.join(value)),
                        "date_min" => u.date_min = Some(parse_date(line_no, key, value)?),
                        "date_max" => u.date_max = Some(parse_date(line_no, key, value)?),
                        _ => return Err(config_err(line_no, format!("unknown key `{key}` in [{section}]"))),
                    }
                }
                (_, "run", "seed") => cfg.seed = parse_value(line_no, key, value)?,
                (_, "run", "out_dir") => cfg.out_dir = base.join(value),
                (_, "model", "annual_rf") => cfg.annual_rf = parse_value(line_no, key, value)?,
                (_, "model", "kappa") => {
                    cfg.kappa_kind = value
                        .parse()
                        .map_err(|e: Error| config_err(line_no, e))?
                }
                (_, "model", "l_values") => {
                    cfg.l_values = value
                        .split(',')
                        .map(|v| parse_value(line_no, key, v.trim()))
                        .collect::<Result<_>>()?
                }
                (_, "model", "grid_step") => cfg.grid_step = parse_value(line_no, key, value)?,
                (_, "bootstrap", "resamples") => cfg.bootstrap_b = parse_value(line_no, key, value)?,
                (_, "bootstrap", "confidence") => {
                    cfg.bootstrap_confidence = parse_value(line_no, key, value)?
                }
                (_, "simulation", "large_samples") => {
                    cfg.large_samples = parse_value(line_no, key, value)?
                }
                _ => {
                    let where_ = if section.is_empty() { "top level".into() } else { format!("[{section}]") };
                    return Err(config_err(line_no, format!("unknown key `{key}` at {where_}")));
                }
            }
        }

        for u in universes {
            let data_dir = u
                .data_dir
                .ok_or_else(|| Error::Config("universe without `data_dir`".into()))?;
            let name = u.name.unwrap_or_else(|| {
                data_dir
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "market".into())
            });
            cfg.universes.push(UniverseConfig {
                name,
                data_dir,
                date_min: u.date_min.unwrap_or(NaiveDate::MIN),
                date_max: u.date_max.unwrap_or(NaiveDate::MAX),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.universes.is_empty() {
            return fail("no [data] or [universe.<name>] section".into());
        }
        let mut names: Vec<&str> = self.universes.iter().map(|u| u.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return fail("duplicate universe name".into());
        }
        for u in &self.universes {
            if u.date_min > u.date_max {
                return fail(format!("universe {}: date_min after date_max", u.name));
            }
            if u.name.is_empty() || !u.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return fail(format!("universe name `{}` must be alphanumeric", u.name));
            }
        }
        if !(self.annual_rf >= 0.0 && self.annual_rf < 1.0) {
            return fail(format!("annual_rf {} outside [0, 1)", self.annual_rf));
        }
        if self.bootstrap_b < 100 {
            return fail(format!("bootstrap resamples {} below 100", self.bootstrap_b));
        }
        if !(self.bootstrap_confidence > 0.5 && self.bootstrap_confidence < 1.0) {
            return fail(format!("bootstrap confidence {} outside (0.5, 1)", self.bootstrap_confidence));
        }
        if !(self.grid_step > 0.0 && self.grid_step < 0.1) {
            return fail(format!("grid_step {} outside (0, 0.1)", self.grid_step));
        }
        if self.l_values.is_empty() || self.l_values.iter().any(|l| !(1..=5).contains(l)) {
            return fail(format!("l_values {:?} must be drawn from 1..=5", self.l_values));
        }
        if self.large_samples < 2 {
            return fail("large_samples must be at least 2".into());
        }
        Ok(())
    }

    /// Canonical `key = value` rendering, used for the run manifest.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("seed", self.seed.to_string());
        line("annual_rf", self.annual_rf.to_string());
        line("kappa", self.kappa_kind.name().to_string());
        line(
            "l_values",
            self.l_values.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        );
        line("grid_step", self.grid_step.to_string());
        line("bootstrap_resamples", self.bootstrap_b.to_string());
        line("bootstrap_confidence", self.bootstrap_confidence.to_string());
        line("large_samples", self.large_samples.to_string());
        for u in &self.universes {
            let bound = |d: NaiveDate, open: NaiveDate| {
                if d == open { "open".to_string() } else { d.to_string() }
            };
            line(
                &format!("universe.{}", u.name),
                format!(
                    "{} .. {}",
                    bound(u.date_min, NaiveDate::MIN),
                    bound(u.date_max, NaiveDate::MAX)
                ),
            );
        }
        out
    }
}
