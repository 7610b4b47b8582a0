//! Price file loading and log-return panel construction.
//!
//! Every model consumes a [`ReturnSample`]: a `T x N` matrix of per-period
//! log-returns on dates shared by all assets. Missing quotes are handled by
//! strict date intersection across assets.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Adjusted closing prices of a single asset, ascending by date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub asset_id: String,
    rows: Vec<(NaiveDate, f64)>,
    dropped: usize,
}

impl PriceTable {
    /// Builds a table from unordered rows. Non-positive or non-finite prices
    /// are dropped (and counted); duplicate dates are rejected.
    pub fn new(asset_id: impl Into<String>, rows: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let asset_id = asset_id.into();
        let before = rows.len();
        let mut rows: Vec<_> = rows
            .into_iter()
            .filter(|(_, p)| p.is_finite() && *p > 0.0)
            .collect();
        let dropped = before - rows.len();
        rows.sort_by_key(|(d, _)| *d);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate {
                asset: asset_id,
                date: w[0].0,
            });
        }
        Ok(Self {
            asset_id,
            rows,
            dropped,
        })
    }

    pub fn rows(&self) -> &[(NaiveDate, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of input rows discarded while cleaning.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    fn price_on(&self, date: NaiveDate) -> Option<f64> {
        self.rows
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.rows[i].1)
    }
}

/// Loads one `<TICKER>.csv` file. The asset id is the file stem.
///
/// The header must contain `Date` and `Adj Close` columns (matched
/// case-insensitively); other columns are ignored. Rows whose date or price
/// does not parse, or whose price is not strictly positive, are dropped.
pub fn load_price_csv(path: &Path) -> Result<PriceTable> {
    let asset_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(e.to_string()))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let date_col = find("date").ok_or_else(|| csv_err("missing `Date` column".into()))?;
    let price_col = find("adj close").ok_or_else(|| csv_err("missing `Adj Close` column".into()))?;

    let mut rows = Vec::new();
    let mut unparsed = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let date = record
            .get(date_col)
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok());
        let price = record.get(price_col).and_then(|s| s.parse::<f64>().ok());
        match (date, price) {
            (Some(d), Some(p)) => rows.push((d, p)),
            _ => unparsed += 1,
        }
    }

    let mut table = PriceTable::new(asset_id, rows)?;
    table.dropped += unparsed;
    if table.is_empty() {
        return Err(Error::NoRows {
            path: path.to_path_buf(),
        });
    }
    if table.dropped > 0 {
        log::warn!(
            "{}: dropped {} row(s) with missing or non-positive price",
            path.display(),
            table.dropped
        );
    }
    Ok(table)
}

/// Aligned `T x N` panel of per-period log-returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSample {
    assets: Vec<String>,
    dates: Vec<NaiveDate>,
    returns: DMatrix<f64>,
}

impl ReturnSample {
    /// Wraps an existing return matrix (rows are periods, columns assets).
    pub fn new(assets: Vec<String>, dates: Vec<NaiveDate>, returns: DMatrix<f64>) -> Result<Self> {
        if returns.nrows() == 0 {
            return Err(Error::InsufficientData {
                what: "return rows",
                required: 1,
                actual: 0,
            });
        }
        if returns.ncols() == 0 {
            return Err(Error::InsufficientData {
                what: "assets",
                required: 1,
                actual: 0,
            });
        }
        if assets.len() != returns.ncols() {
            return Err(Error::DimensionMismatch {
                context: "asset labels",
                expected: returns.ncols(),
                actual: assets.len(),
            });
        }
        if dates.len() != returns.nrows() {
            return Err(Error::DimensionMismatch {
                context: "date labels",
                expected: returns.nrows(),
                actual: dates.len(),
            });
        }
        if returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite return".into()));
        }
        Ok(Self {
            assets,
            dates,
            returns,
        })
    }

    /// Builds a sample with synthetic asset labels `A0, A1, ...` and
    /// consecutive calendar dates starting 2000-01-01.
    pub fn from_matrix(returns: DMatrix<f64>) -> Result<Self> {
        let assets = (0..returns.ncols()).map(|j| format!("A{j}")).collect();
        let dates = synthetic_dates(returns.nrows());
        Self::new(assets, dates, returns)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                context: "return row",
                expected: n,
                actual: bad.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    /// Number of periods `T`.
    pub fn periods(&self) -> usize {
        self.returns.nrows()
    }

    /// Number of assets `N`.
    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Per-period portfolio returns `p_t = sum_j x_j r_tj`.
    pub fn portfolio_returns(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.n_assets() {
            return Err(Error::DimensionMismatch {
                context: "portfolio weights",
                expected: self.n_assets(),
                actual: weights.len(),
            });
        }
        Ok((0..self.periods())
            .map(|t| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| w * self.returns[(t, j)])
                    .sum()
            })
            .collect())
    }

    /// Keeps the rows at `indices` (in that order); labels follow the rows.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let returns = self.returns.select_rows(indices);
        let dates = indices.iter().map(|&i| self.dates[i]).collect();
        Self::new(self.assets.clone(), dates, returns)
    }
}

pub(crate) fn synthetic_dates(count: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    start.iter_days().take(count).collect()
}

/// Intersects the tables' dates inside `[date_min, date_max]` and returns
/// `r_tj = ln(P_tj / P_(t-1)j)` on the common dates.
pub fn align_and_log_returns(
    tables: &[PriceTable],
    date_min: NaiveDate,
    date_max: NaiveDate,
) -> Result<ReturnSample> {
    if tables.is_empty() {
        return Err(Error::InsufficientData {
            what: "price tables",
            required: 1,
            actual: 0,
        });
    }
    if date_min > date_max {
        return Err(Error::invalid(
            "date window",
            format!("{date_min}..{date_max}"),
            "date_min <= date_max",
        ));
    }

    let mut common: Option<BTreeSet<NaiveDate>> = None;
    for table in tables {
        let dates: BTreeSet<NaiveDate> = table
            .rows()
            .iter()
            .map(|(d, _)| *d)
            .filter(|d| (date_min..=date_max).contains(d))
            .collect();
        if dates.is_empty() {
            return Err(Error::NoOverlap {
                asset: table.asset_id.clone(),
            });
        }
        common = Some(match common {
            None => dates,
            Some(acc) => acc.intersection(&dates).copied().collect(),
        });
    }
    let common: Vec<NaiveDate> = common.unwrap_or_default().into_iter().collect();
    if common.len() < 2 {
        return Err(Error::InsufficientData {
            what: "common dates",
            required: 2,
            actual: common.len(),
        });
    }

    let periods = common.len() - 1;
    let mut returns = DMatrix::zeros(periods, tables.len());
    for (j, table) in tables.iter().enumerate() {
        let prices: Vec<f64> = common
            .iter()
            .map(|d| table.price_on(*d).expect("date is in the intersection"))
            .collect();
        for t in 0..periods {
            returns[(t, j)] = (prices[t + 1] / prices[t]).ln();
        }
    }
    ReturnSample::new(
        tables.iter().map(|t| t.asset_id.clone()).collect(),
        common[1..].to_vec(),
        returns,
    )
}
