use crate::error::{Error, Result};
use crate::stats::normal::inverse_cdf;

/// Distribution-free risk factor `sqrt((1 - eps) / eps)`.
pub fn kappa_chebyshev(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("epsilon", eps, "in (0, 1)"));
    }
    Ok(((1.0 - eps) / eps).sqrt())
}

/// Gaussian risk factor `-Phi^-1(eps)`.
pub fn kappa_gaussian(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid("epsilon", eps, "in (0, 0.5) for the gaussian factor"));
    }
    Ok(-inverse_cdf(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KappaKind {
    #[default]
    Chebyshev,
    Gaussian,
}

impl KappaKind {
    pub fn kappa(self, eps: f64) -> Result<f64> {
        match self {
            KappaKind::Chebyshev => kappa_chebyshev(eps),
            KappaKind::Gaussian => kappa_gaussian(eps),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KappaKind::Chebyshev => "chebyshev",
            KappaKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for KappaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chebyshev" => Ok(KappaKind::Chebyshev),
            "gaussian" => Ok(KappaKind::Gaussian),
            _ => Err(Error::invalid("kappa kind", s, "chebyshev or gaussian")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_values() {
        assert_eq!(kappa_chebyshev(0.5).unwrap(), 1.0);
        assert!((kappa_chebyshev(0.05).unwrap() - 19f64.sqrt()).abs() < 1e-12);
        assert!((kappa_chebyshev(0.05).unwrap() - 4.358_898_94).abs() < 1e-8);
        let k = |e| kappa_chebyshev(e).unwrap();
        assert!(k(0.01) > k(0.05) && k(0.05) > k(0.09));
        assert!(kappa_chebyshev(0.0).is_err());
        assert!(kappa_chebyshev(1.0).is_err());
    }

    #[test]
    fn gaussian_values() {
        assert!((kappa_gaussian(0.05).unwrap() - 1.644_853_6).abs() < 1e-7);
        assert!((kappa_gaussian(0.025).unwrap() - 1.959_964_0).abs() < 1e-7);
        assert!(kappa_gaussian(0.5).is_err());
        assert!(kappa_gaussian(-0.1).is_err());
    }

    #[test]
    fn chebyshev_dominates_gaussian() {
        for i in 1..100 {
            let eps = 0.5 * i as f64 / 100.0;
            assert!(kappa_chebyshev(eps).unwrap() >= kappa_gaussian(eps).unwrap());
        }
    }

    #[test]
    fn parses_kind() {
        assert_eq!("Gaussian".parse::<KappaKind>().unwrap(), KappaKind::Gaussian);
        assert!("student".parse::<KappaKind>().is_err());
    }
}
