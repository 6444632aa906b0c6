//! Valuation distributions: uniform, log-normal, and quantile-truncated
//! log-normal, plus the closed-form log-normal fit used by estimation.
//!
//! Log-normals are parameterized by the log-scale sigma and the median m
//! (so ln X ~ Normal(ln m, sigma)). The truncated variant keeps the parent
//! shape between two parent quantiles and renormalizes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

/// Default truncation quantiles applied when a log-normal needs bounded
/// support (for example before the equilibrium solver runs).
pub const DEFAULT_TRUNCATION: (f64, f64) = (0.001, 0.999);

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Inverse standard normal cdf; p must lie in (0, 1).
fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    LogNormal {
        sigma: f64,
        /// Median of the distribution.
        scale: f64,
    },
    TruncatedLogNormal {
        sigma: f64,
        scale: f64,
        #[serde(default = "default_lower_q")]
        lower_q: f64,
        #[serde(default = "default_upper_q")]
        upper_q: f64,
    },
}

fn default_lower_q() -> f64 {
    DEFAULT_TRUNCATION.0
}

fn default_upper_q() -> f64 {
    DEFAULT_TRUNCATION.1
}

impl ValuationDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = ValuationDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn log_normal(sigma: f64, scale: f64) -> Result<Self> {
        let d = ValuationDistribution::LogNormal { sigma, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_log_normal(sigma: f64, scale: f64, lower_q: f64, upper_q: f64) -> Result<Self> {
        let d = ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ValuationDistribution::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi <= lo {
                    return Err(Error::invalid(format!(
                        "uniform support needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            ValuationDistribution::LogNormal { sigma, scale } => {
                validate_log_normal_params(sigma, scale)?;
            }
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => {
                validate_log_normal_params(sigma, scale)?;
                if !(0.0..1.0).contains(&lower_q) || !(lower_q..=1.0).contains(&upper_q) || upper_q <= lower_q || upper_q > 1.0 {
                    return Err(Error::invalid(format!(
                        "truncation quantiles need 0 <= lower < upper <= 1, got ({lower_q}, {upper_q})"
                    )));
                }
                if lower_q == 0.0 || upper_q == 1.0 {
                    return Err(Error::invalid(
                        "truncation quantiles must be interior so the truncated support is bounded away from 0 and infinity",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Support as [min, max]. Untruncated log-normals report an unbounded
    /// upper end; truncate before handing them to anything that needs a
    /// finite box.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ValuationDistribution::Uniform { lo, hi } => (lo, hi),
            ValuationDistribution::LogNormal { .. } => (0.0, f64::INFINITY),
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => (
                parent_quantile(sigma, scale, lower_q),
                parent_quantile(sigma, scale, upper_q),
            ),
        }
    }

    /// Self if already bounded, otherwise the default-truncated version.
    pub fn with_bounded_support(&self) -> Self {
        match *self {
            ValuationDistribution::LogNormal { sigma, scale } => {
                ValuationDistribution::TruncatedLogNormal {
                    sigma,
                    scale,
                    lower_q: DEFAULT_TRUNCATION.0,
                    upper_q: DEFAULT_TRUNCATION.1,
                }
            }
            ref d => d.clone(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lo, hi } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            ValuationDistribution::LogNormal { sigma, scale } => parent_cdf(sigma, scale, x),
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => {
                let p = parent_cdf(sigma, scale, x);
                ((p - lower_q) / (upper_q - lower_q)).clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ValuationDistribution::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            ValuationDistribution::LogNormal { sigma, scale } => parent_pdf(sigma, scale, x),
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => {
                let (min, max) = self.support();
                if x < min || x > max {
                    0.0
                } else {
                    parent_pdf(sigma, scale, x) / (upper_q - lower_q)
                }
            }
        }
    }

    /// Inverse cdf. p = 0 and p = 1 map to the support endpoints (infinity
    /// for an untruncated log-normal).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("quantile probability must be in [0, 1], got {p}")));
        }
        Ok(match *self {
            ValuationDistribution::Uniform { lo, hi } => lo + p * (hi - lo),
            ValuationDistribution::LogNormal { sigma, scale } => parent_quantile(sigma, scale, p),
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => {
                parent_quantile(sigma, scale, lower_q + p * (upper_q - lower_q))
            }
        })
    }

    /// Integral of x f(x) over [lo, hi] intersected with the support.
    /// Closed form for every kind; outcome integration leans on this.
    pub fn partial_mean(&self, lo: f64, hi: f64) -> f64 {
        let (min, max) = self.support();
        let a = lo.max(min);
        let b = hi.min(max);
        if b <= a {
            return 0.0;
        }
        match *self {
            ValuationDistribution::Uniform { lo: s_lo, hi: s_hi } => {
                (b * b - a * a) / (2.0 * (s_hi - s_lo))
            }
            ValuationDistribution::LogNormal { sigma, scale } => {
                parent_partial_mean(sigma, scale, a, b)
            }
            ValuationDistribution::TruncatedLogNormal { sigma, scale, lower_q, upper_q } => {
                parent_partial_mean(sigma, scale, a, b) / (upper_q - lower_q)
            }
        }
    }
}

fn validate_log_normal_params(sigma: f64, scale: f64) -> Result<()> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::invalid(format!("log-normal sigma must be finite and > 0, got {sigma}")));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::invalid(format!("log-normal scale must be finite and > 0, got {scale}")));
    }
    Ok(())
}

fn parent_cdf(sigma: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        norm_cdf((x.ln() - scale.ln()) / sigma)
    }
}

fn parent_pdf(sigma: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        norm_pdf((x.ln() - scale.ln()) / sigma) / (x * sigma)
    }
}

fn parent_quantile(sigma: f64, scale: f64, p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        scale * (sigma * norm_quantile(p)).exp()
    }
}

/// E[X 1{a <= X <= b}] for the parent log-normal.
fn parent_partial_mean(sigma: f64, scale: f64, a: f64, b: f64) -> f64 {
    let mu = scale.ln();
    let mean = (mu + 0.5 * sigma * sigma).exp();
    let z = |x: f64| (x.ln() - mu - sigma * sigma) / sigma;
    let upper = if b.is_finite() { norm_cdf(z(b)) } else { 1.0 };
    let lower = if a > 0.0 { norm_cdf(z(a)) } else { 0.0 };
    mean * (upper - lower)
}

/// Closed-form log-normal fit: median from the mean of logs, sigma from the
/// population standard deviation of logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalFit {
    pub sigma: f64,
    pub scale: f64,
    /// All samples equal: sigma is exactly zero and the fit is a point mass.
    pub degenerate: bool,
}

pub fn fit_lognormal_mle(samples: &[f64]) -> Result<LogNormalFit> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "log-normal fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    for &x in samples {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::invalid(format!(
                "log-normal fit needs positive finite samples, got {x}"
            )));
        }
    }
    let n = samples.len() as f64;
    let logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    let sigma = var.sqrt();
    Ok(LogNormalFit { sigma, scale: mean.exp(), degenerate: sigma == 0.0 })
}
