use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// Symmetric base law of an innovation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Normal,
    /// Student t with `df` degrees of freedom.
    StudentT { df: f64 },
    /// Generalised error distribution with unit variance.
    Ged { shape: f64 },
}

/// Innovation law: a symmetric base, an optional Fernández-Steel skew `xi`
/// and optional standardisation to zero mean and unit variance.
///
/// Unstandardised Student t keeps its natural scale (variance
/// `df / (df - 2)`); standardised laws have mean 0 and variance 1 whatever
/// the skew.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "one")]
    pub skew: f64,
    #[serde(default)]
    pub standardized: bool,
}

fn one() -> f64 {
    1.0
}

/// Skew used when a skewed law is requested without a value.
pub const DEFAULT_SKEW: f64 = 1.5;

impl InnovationSpec {
    pub fn normal() -> Self {
        Self { family: Family::Normal, skew: 1.0, standardized: false }
    }

    pub fn student_t(df: f64) -> Self {
        Self { family: Family::StudentT { df }, skew: 1.0, standardized: false }
    }

    pub fn ged(shape: f64) -> Self {
        Self { family: Family::Ged { shape }, skew: 1.0, standardized: false }
    }

    pub fn skewed(mut self, xi: f64) -> Self {
        self.skew = xi;
        self
    }

    pub fn standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            Family::Normal => {}
            Family::StudentT { df } => {
                if !(df > 2.0) {
                    return Err(invalid(format!("student t df = {df} must exceed 2")));
                }
            }
            Family::Ged { shape } => {
                if !(shape > 0.0) {
                    return Err(invalid(format!("GED shape = {shape} must be > 0")));
                }
            }
        }
        if !(self.skew > 0.0 && self.skew.is_finite()) {
            return Err(invalid(format!("skew xi = {} must be > 0", self.skew)));
        }
        Ok(())
    }

    /// Scale applied to the textbook base law; unit-variance bases when
    /// standardised.
    fn base_scale(&self) -> f64 {
        match self.family {
            Family::StudentT { df } if self.standardized => ((df - 2.0) / df).sqrt(),
            _ => 1.0,
        }
    }

    /// `(E|Z|, E Z^2)` of the scaled symmetric base.
    fn base_moments(&self) -> (f64, f64) {
        let s = self.base_scale();
        match self.family {
            Family::Normal => ((2.0 / std::f64::consts::PI).sqrt(), 1.0),
            Family::StudentT { df } => {
                let m1 = 2.0 * df.sqrt() * (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp()
                    / (std::f64::consts::PI.sqrt() * (df - 1.0));
                (s * m1, s * s * df / (df - 2.0))
            }
            Family::Ged { shape } => {
                let lambda = ged_lambda(shape);
                let m1 = lambda * 2f64.powf(1.0 / shape) * (ln_gamma(2.0 / shape) - ln_gamma(1.0 / shape)).exp();
                (m1, 1.0)
            }
        }
    }

    /// Mean and standard deviation of the skewed, unstandardised variable.
    fn skew_moments(&self) -> (f64, f64) {
        let xi = self.skew;
        let (m1, m2) = self.base_moments();
        let mu = m1 * (xi - 1.0 / xi);
        let var = (m2 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - m2;
        (mu, var.sqrt())
    }

    fn base_pdf(&self, z: f64) -> f64 {
        let s = self.base_scale();
        let z = z / s;
        let raw = match self.family {
            Family::Normal => crate::cde::normal_pdf(z, 0.0, 1.0),
            Family::StudentT { df } => {
                let ln_c = ln_gamma((df + 1.0) / 2.0)
                    - ln_gamma(df / 2.0)
                    - 0.5 * (df * std::f64::consts::PI).ln();
                (ln_c - (df + 1.0) / 2.0 * (1.0 + z * z / df).ln()).exp()
            }
            Family::Ged { shape } => {
                let lambda = ged_lambda(shape);
                let ln_c = shape.ln()
                    - lambda.ln()
                    - (1.0 + 1.0 / shape) * std::f64::consts::LN_2
                    - ln_gamma(1.0 / shape);
                (ln_c - 0.5 * (z / lambda).abs().powf(shape)).exp()
            }
        };
        raw / s
    }

    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z = match self.family {
            Family::Normal => rng.sample(StandardNormal),
            Family::StudentT { df } => StudentT::new(df).expect("validated df").sample(rng),
            Family::Ged { shape } => {
                let g: f64 = Gamma::new(1.0 / shape, 1.0).expect("validated shape").sample(rng);
                let mag = ged_lambda(shape) * (2.0 * g).powf(1.0 / shape);
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        };
        z * self.base_scale()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let xi = self.skew;
        let z = if xi == 1.0 {
            self.sample_base(rng)
        } else {
            let mag = self.sample_base(rng).abs();
            if rng.random::<f64>() < xi * xi / (1.0 + xi * xi) {
                xi * mag
            } else {
                -mag / xi
            }
        };
        if self.standardized && xi != 1.0 {
            let (mu, sigma) = self.skew_moments();
            (z - mu) / sigma
        } else {
            z
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        let xi = self.skew;
        if xi == 1.0 {
            return self.base_pdf(z);
        }
        let skewed = |v: f64| {
            let f = if v >= 0.0 { self.base_pdf(v / xi) } else { self.base_pdf(v * xi) };
            2.0 / (xi + 1.0 / xi) * f
        };
        if self.standardized {
            let (mu, sigma) = self.skew_moments();
            sigma * skewed(mu + sigma * z)
        } else {
            skewed(z)
        }
    }

    /// Mean and variance of the innovation.
    pub fn moments(&self) -> (f64, f64) {
        if self.standardized {
            return (0.0, 1.0);
        }
        let (mu, sigma) = self.skew_moments();
        (mu, sigma * sigma)
    }
}

fn ged_lambda(shape: f64) -> f64 {
    (2f64.powf(-2.0 / shape) * (ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)).exp()).sqrt()
}
