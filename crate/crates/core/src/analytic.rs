//! Closed-form European option prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{stock_price, MappingParams};
use crate::normal::normal_cdf;
use crate::pb::{impact_delta, InteractionMatrix, PbVector};

/// Market inputs. Times are plain year fractions, rates continuously compounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub sigma: f64,
    pub r: f64,
    pub strike: f64,
    pub expiry: f64,
    #[serde(default)]
    pub valuation_time: f64,
}

impl MarketParams {
    pub fn new(sigma: f64, r: f64, strike: f64, expiry: f64, valuation_time: f64) -> Result<Self> {
        let m = Self {
            sigma,
            r,
            strike,
            expiry,
            valuation_time,
        };
        m.validate()?;
        Ok(m)
    }

    /// Valued at `t = 0` with `tau` years to run.
    pub fn with_tau(sigma: f64, r: f64, strike: f64, tau: f64) -> Result<Self> {
        Self::new(sigma, r, strike, tau, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.sigma,
            self.r,
            self.strike,
            self.expiry,
            self.valuation_time,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("market", "all parameters must be finite"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid(
                "sigma",
                format!("must be >= 0, got {}", self.sigma),
            ));
        }
        if self.strike <= 0.0 {
            return Err(Error::invalid(
                "strike",
                format!("must be > 0, got {}", self.strike),
            ));
        }
        if self.expiry < self.valuation_time {
            return Err(Error::invalid(
                "expiry",
                format!(
                    "expiry {} precedes valuation time {}",
                    self.expiry, self.valuation_time
                ),
            ));
        }
        Ok(())
    }

    /// Time to expiry `T - t`.
    pub fn tau(&self) -> f64 {
        self.expiry - self.valuation_time
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.tau()).exp()
    }

    /// Total standard deviation of log price over the remaining life.
    pub fn scale(&self) -> f64 {
        self.sigma * self.tau().sqrt()
    }

    pub fn at_time(&self, valuation_time: f64) -> Result<Self> {
        Self::new(self.sigma, self.r, self.strike, self.expiry, valuation_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Pde,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Pde => "pde",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceQuote {
    pub call: f64,
    pub put: f64,
    pub method: Method,
    /// Zero for the closed form, a standard error for Monte Carlo, a
    /// discretization bound otherwise.
    pub error_estimate: f64,
}

fn check_spot(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid(
            "spot",
            format!("must be positive and finite, got {s}"),
        ));
    }
    Ok(())
}

pub fn d1_d2(s: f64, m: &MarketParams) -> Result<(f64, f64)> {
    check_spot(s)?;
    let tau = m.tau();
    let scale = m.scale();
    if scale <= 0.0 {
        return Err(Error::DegenerateLimit { scale });
    }
    let d1 = ((s / m.strike).ln() + (m.r + 0.5 * m.sigma * m.sigma) * tau) / scale;
    Ok((d1, d1 - scale))
}

pub fn call_price(s: f64, m: &MarketParams) -> Result<f64> {
    check_spot(s)?;
    m.validate()?;
    let tau = m.tau();
    if tau == 0.0 {
        return Ok((s - m.strike).max(0.0));
    }
    let df = m.discount();
    match d1_d2(s, m) {
        Ok((d1, d2)) => Ok((s * normal_cdf(d1) - m.strike * df * normal_cdf(d2)).max(0.0)),
        Err(Error::DegenerateLimit { .. }) => Ok((s - m.strike * df).max(0.0)),
        Err(e) => Err(e),
    }
}

pub fn put_price(s: f64, m: &MarketParams) -> Result<f64> {
    check_spot(s)?;
    m.validate()?;
    let tau = m.tau();
    if tau == 0.0 {
        return Ok((m.strike - s).max(0.0));
    }
    let df = m.discount();
    match d1_d2(s, m) {
        Ok((d1, d2)) => Ok((m.strike * df * normal_cdf(-d2) - s * normal_cdf(-d1)).max(0.0)),
        Err(Error::DegenerateLimit { .. }) => Ok((m.strike * df - s).max(0.0)),
        Err(e) => Err(e),
    }
}

/// Both legs from the closed form.
pub fn quote(s: f64, m: &MarketParams) -> Result<PriceQuote> {
    Ok(PriceQuote {
        call: call_price(s, m)?,
        put: put_price(s, m)?,
        method: Method::ClosedForm,
        error_estimate: 0.0,
    })
}

/// Prices both legs on the spot mapped from the impact change `h_ref -> h_now`.
pub fn price_pb_option(
    h_now: &PbVector,
    h_ref: &PbVector,
    g: &InteractionMatrix,
    map: &MappingParams,
    m: &MarketParams,
) -> Result<PriceQuote> {
    let delta = impact_delta(h_ref, h_now, g)?;
    let spot = stock_price(map, delta).positive()?;
    quote(spot, m)
}
