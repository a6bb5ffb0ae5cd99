//! Closed-form solution of the heat equation as a Gaussian convolution,
//! evaluated by quadrature.
//!
//! With `z = (y - x) / (sigma sqrt(tau))` the kernel integral becomes a
//! standard-normal expectation of the initial data,
//! `u(x, tau) = E[u0(x + sigma sqrt(tau) Z)]`. The call payoff vanishes for
//! `y < 0`, so only `z >= -x / (sigma sqrt(tau))` contributes.

use std::f64::consts::PI;

use crate::analytic::{MarketParams, Method, PriceQuote};
use crate::error::{Error, Result};
use crate::normal::normal_cdf;
use crate::pde::heat_x;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Initial truncation width in standard deviations.
    pub width: f64,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Panel doubling stops when successive estimates differ by less than
    /// `tol * max(1, |I|)`.
    pub tol: f64,
    /// Width doubles until the discounted tail bound drops below this.
    pub tail_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            width: 10.0,
            order: 20,
            tol: 1e-14,
            tail_tol: 1e-12,
            max_panels: 1 << 14,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::invalid(
                "width",
                format!("must be positive, got {}", self.width),
            ));
        }
        if !(1..=256).contains(&self.order) {
            return Err(Error::invalid(
                "order",
                format!("must be in 1..=256, got {}", self.order),
            ));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::invalid(
                "tol",
                format!("must be >= 0, got {}", self.tol),
            ));
        }
        if !(self.tail_tol.is_finite() && self.tail_tol > 0.0) {
            return Err(Error::invalid(
                "tail_tol",
                format!("must be positive, got {}", self.tail_tol),
            ));
        }
        if self.max_panels == 0 {
            return Err(Error::invalid("max_panels", "must be at least 1"));
        }
        Ok(())
    }
}

/// `(1/sqrt(2 pi)) * integral_lo^hi f(z) exp(-z^2/2) dz` and an error estimate
/// from the last panel doubling.
pub fn gaussian_average<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadConfig) -> (f64, f64) {
    if hi <= lo {
        return (0.0, 0.0);
    }
    let rule = GaussLegendre::new(cfg.order);
    let weighted = |z: f64| f(z) * (-0.5 * z * z).exp();
    let norm = 1.0 / (2.0 * PI).sqrt();

    let mut panels = ((hi - lo) / 0.5).ceil().max(1.0) as usize;
    let mut coarse = norm * rule.integrate(&weighted, lo, hi, panels);
    loop {
        panels *= 2;
        let fine = norm * rule.integrate(&weighted, lo, hi, panels);
        let diff = (fine - coarse).abs();
        if diff <= cfg.tol * fine.abs().max(1.0) || panels >= cfg.max_panels {
            return (fine, diff);
        }
        coarse = fine;
    }
}

/// Both legs from the kernel convolution of the call and put initial data.
///
/// `error_estimate` is the larger leg's quadrature estimate plus its
/// truncation bound, in price units.
pub fn greens_function_price(s: f64, m: &MarketParams, cfg: &QuadConfig) -> Result<PriceQuote> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("spot", format!("must be positive, got {s}")));
    }
    m.validate()?;
    cfg.validate()?;
    let tau = m.tau();
    let scale = m.scale();
    if tau <= 0.0 || scale <= 0.0 {
        return Err(Error::DegenerateLimit { scale });
    }
    let k = m.strike;
    let df = m.discount();
    let x = heat_x(s, tau, m);

    // tail of K e^{x + scale z} beyond z = w is K e^{x + scale^2/2} N(scale - w)
    let call_tail = |w: f64| k * (x + 0.5 * scale * scale).exp() * normal_cdf(scale - w);
    let put_tail = |w: f64| k * normal_cdf(-w);
    let mut width = cfg.width;
    while df * call_tail(width).max(put_tail(width)) >= cfg.tail_tol && width < 1e3 {
        width *= 2.0;
    }

    let kink = -x / scale;
    let (u_call, e_call) = gaussian_average(
        |z| k * ((x + scale * z).exp() - 1.0),
        kink.max(-width),
        width,
        cfg,
    );
    let (u_put, e_put) = gaussian_average(
        |z| k * (1.0 - (x + scale * z).exp()),
        -width,
        kink.min(width),
        cfg,
    );

    let call_err = e_call + call_tail(width);
    let put_err = e_put + put_tail(width);
    Ok(PriceQuote {
        call: (u_call * df).max(0.0),
        put: (u_put * df).max(0.0),
        method: Method::Quadrature,
        error_estimate: df * call_err.max(put_err),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quote;

    #[test]
    fn kernel_is_normalized() {
        let cfg = QuadConfig::default();
        let (v, _) = gaussian_average(|_| 1.0, -cfg.width, cfg.width, &cfg);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kernel_moments() {
        let cfg = QuadConfig::default();
        let (m2, _) = gaussian_average(|z| z * z, -12.0, 12.0, &cfg);
        assert!((m2 - 1.0).abs() < 1e-12);
        // E[e^{aZ}] = e^{a^2/2}
        let (mgf, _) = gaussian_average(|z| (0.3 * z).exp(), -15.0, 15.0, &cfg);
        assert!((mgf - 0.045_f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn matches_closed_form_at_the_money() {
        let m = MarketParams::with_tau(0.2, 0.05, 100.0, 1.0).unwrap();
        let q = greens_function_price(100.0, &m, &QuadConfig::default()).unwrap();
        let cf = quote(100.0, &m).unwrap();
        assert!((q.call - cf.call).abs() < 1e-8, "{} vs {}", q.call, cf.call);
        assert!((q.put - cf.put).abs() < 1e-8);
        assert!((q.call - 10.450_583_572_185_567).abs() < 1e-8);
        assert!(q.error_estimate < 1e-8);
    }

    #[test]
    fn deep_out_of_the_money_vanishes() {
        let m = MarketParams::with_tau(0.1, 0.05, 100.0, 0.25).unwrap();
        let q = greens_function_price(1.0, &m, &QuadConfig::default()).unwrap();
        assert!(q.call < 1e-12, "{}", q.call);
    }

    #[test]
    fn degenerate_inputs_signal() {
        let cfg = QuadConfig::default();
        let flat = MarketParams::with_tau(0.0, 0.05, 100.0, 1.0).unwrap();
        assert!(matches!(
            greens_function_price(100.0, &flat, &cfg),
            Err(Error::DegenerateLimit { .. })
        ));
        let expired = MarketParams::with_tau(0.2, 0.05, 100.0, 0.0).unwrap();
        assert!(matches!(
            greens_function_price(100.0, &expired, &cfg),
            Err(Error::DegenerateLimit { .. })
        ));
    }
}
