//! The four risk models and the empirical evaluators used to cross-check
//! them.

mod cvar;
mod kappa;
mod var;

pub use cvar::{
    empirical_cvar, empirical_var, minimize_cvar, minimize_wcvar, tail_is_thin, MixtureSpec,
};
pub use kappa::{kappa_chebyshev, kappa_gaussian, KappaKind};
pub use var::{minimize_var, minimize_wvar};

use std::fmt;

use crate::error::{Error, Result};

/// Tail probability `epsilon`; the confidence level is `1 - epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConfidenceParam(f64);

impl ConfidenceParam {
    /// Accepts `0 < epsilon <= 1`. Individual operations narrow the domain.
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon <= 1.0 {
            Ok(Self(epsilon))
        } else {
            Err(Error::invalid("epsilon", epsilon, "in (0, 1]"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ConfidenceParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    Var,
    WVar,
    CVar,
    WCVar,
}

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::Var => "VaR",
            Model::WVar => "WVaR",
            Model::CVar => "CVaR",
            Model::WCVar => "WCVaR",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "VaR" => Ok(Model::Var),
            "WVaR" => Ok(Model::WVar),
            "CVaR" => Ok(Model::CVar),
            "WCVaR" => Ok(Model::WCVar),
            other => Err(Error::invalid("model", other, "VaR, WVaR, CVaR or WCVaR")),
        }
    }
}

/// An optimal long-only portfolio together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub weights: Vec<f64>,
    /// Model-specific optimal risk value.
    pub objective_value: f64,
    pub model: Model,
    pub epsilon: ConfidenceParam,
    /// VaR threshold recovered from the CVaR-family programs.
    pub gamma: Option<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl Portfolio {
    pub fn expected_return(&self, mean: &[f64]) -> f64 {
        self.weights.iter().zip(mean).map(|(w, m)| w * m).sum()
    }
}
