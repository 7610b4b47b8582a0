//! Downside-risk portfolio optimization toolkit.
//!
//! Four long-only portfolio models are built on a shared pair of numerical
//! engines:
//!
//! * base VaR and worst-case VaR, minimized as `kappa * sqrt(x'Sx) - mu'x`
//!   over the unit simplex ([`optim::solve_simplex_cone`]);
//! * base CVaR and worst-case CVaR (mixture uncertainty), solved as scenario
//!   linear programs ([`optim::solve_lp`]).
//!
//! The [`experiment`] module sweeps the tail probability `epsilon`, scores
//! every optimal portfolio in-sample by its Sortino ratio and writes the
//! comparison tables as CSV.

pub mod config;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod optim;
pub mod risk;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use ingest::{PriceTable, ReturnSample};
