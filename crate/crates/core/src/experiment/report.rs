use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::study::{SweepReport, SweepRow};
use crate::error::{Error, Result};
use crate::risk::Model;

pub const ROWS_HEADER: &str = "epsilon,model,mu,sigma_d,sortino";
pub const LSELECT_HEADER: &str = "l,avg_sr_cvar,avg_sr_wcvar,diff";
pub const SUMMARY_HEADER: &str = "scenario,l_star,avg_sr_var,avg_sr_wvar,avg_sr_cvar,avg_sr_wcvar";

/// Formats `x` with six significant digits in the style of C's `%g`.
pub fn fmt_sig6(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // The exponent after rounding to six digits decides the notation.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_sig6)
}

fn row_line(out: &mut String, row: &SweepRow) {
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        fmt_sig6(row.epsilon),
        row.model,
        fmt_sig6(row.performance.mean_return),
        fmt_sig6(row.performance.downside_dev),
        fmt_opt(row.sortino()),
    );
}

/// `epsilon,model,mu,sigma_d,sortino` for every row.
pub fn rows_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{ROWS_HEADER}\n");
    for row in rows {
        row_line(&mut out, row);
    }
    out
}

pub fn lselect_csv(report: &SweepReport) -> String {
    let mut out = format!("{LSELECT_HEADER}\n");
    for s in &report.l_selection {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.l,
            fmt_sig6(s.avg_sr_cvar),
            fmt_sig6(s.avg_sr_wcvar),
            fmt_sig6(s.diff)
        );
    }
    out
}

/// One summary line per scenario: selected `l` and the four average
/// Sortino ratios.
pub fn summary_csv(pairs: &[(&SweepReport, &SweepReport)]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (var, cvar) in pairs {
        let avg = |r: &SweepReport, m| r.average(m).map_or_else(|| "nan".into(), fmt_sig6);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            var.scenario,
            cvar.l_star.map_or_else(|| "nan".into(), |l| l.to_string()),
            avg(var, Model::Var),
            avg(var, Model::WVar),
            avg(cvar, Model::CVar),
            avg(cvar, Model::WCVar),
        );
    }
    out
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

/// Writes `<scenario>_<study>_rows.csv`, `<scenario>_<study>_table.csv`
/// and, for the CVaR study, `<scenario>_cvar_lselect.csv`.
pub fn write_report(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let stem = format!("{}_{}", report.scenario, report.study.tag());
    let mut written = vec![
        write_file(&dir.join(format!("{stem}_rows.csv")), &rows_csv(&report.rows))?,
        write_file(&dir.join(format!("{stem}_table.csv")), &rows_csv(&report.table_rows))?,
    ];
    if !report.l_selection.is_empty() {
        written.push(write_file(&dir.join(format!("{stem}_lselect.csv")), &lselect_csv(report))?);
    }
    Ok(written)
}
