//! Beta and gamma prior families with method-of-moments fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds on the fitted beta concentration `alpha + beta`. The upper bound
/// doubles as the minimum-variance floor for degenerate samples.
pub const MIN_CONCENTRATION: f64 = 1.0;
pub const MAX_CONCENTRATION: f64 = 1000.0;
/// Upper bound on a fitted gamma shape (minimum-variance floor).
pub const MAX_GAMMA_SHAPE: f64 = 1000.0;
pub const MIN_GAMMA_SHAPE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::param(format!(
                "beta hyperparameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaPrior { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    /// Matches mean and variance; variance outside the feasible range is
    /// clamped so the concentration stays within
    /// `[MIN_CONCENTRATION, MAX_CONCENTRATION]`. The mean is preserved.
    pub fn from_moments(mean: f64, var: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(Error::param(format!("beta mean must be in (0,1), got {mean}")));
        }
        let raw = if var > 0.0 {
            mean * (1.0 - mean) / var - 1.0
        } else {
            f64::INFINITY
        };
        let conc = if raw.is_nan() {
            MAX_CONCENTRATION
        } else {
            raw.clamp(MIN_CONCENTRATION, MAX_CONCENTRATION)
        };
        BetaPrior::new(mean * conc, (1.0 - mean) * conc)
    }

    /// Log density up to the normalizing constant.
    #[inline]
    pub fn ln_kernel(&self, p: f64) -> f64 {
        (self.alpha - 1.0) * p.ln() + (self.beta - 1.0) * (1.0 - p).ln()
    }

    pub fn ln_pdf(&self, p: f64) -> f64 {
        if !(p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        self.ln_kernel(p) - ln_beta_fn(self.alpha, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::param(format!(
                "gamma hyperparameters must be positive, got ({shape}, {rate})"
            )));
        }
        Ok(GammaPrior { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    pub fn from_moments(mean: f64, var: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::param(format!("gamma mean must be > 0, got {mean}")));
        }
        let raw = if var > 0.0 { mean * mean / var } else { f64::INFINITY };
        let shape = if raw.is_nan() {
            MAX_GAMMA_SHAPE
        } else {
            raw.clamp(MIN_GAMMA_SHAPE, MAX_GAMMA_SHAPE)
        };
        GammaPrior::new(shape, shape / mean)
    }

    #[inline]
    pub fn ln_kernel(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.ln_kernel(x) + self.shape * self.rate.ln() - statrs::function::gamma::ln_gamma(self.shape)
    }
}

pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`, the beta CDF.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

/// Sample mean and unbiased sample variance.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}
