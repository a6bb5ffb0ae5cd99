//! The pricing equation solved through the substitution
//!
//! ```text
//! tau = T - t,   x = ln(S/K) + (r - sigma^2/2) tau,   u = C e^{r tau}
//! ```
//!
//! which turns it into `u_tau = (sigma^2 / 2) u_xx` with initial data
//! `u(x, 0) = K max(e^x - 1, 0)`. Two solvers live here: the Gaussian-kernel
//! convolution ([`greens`]) and a finite-difference stepper ([`fd`]).

pub mod fd;
pub mod greens;

use serde::Serialize;

use crate::analytic::MarketParams;
use crate::error::{Error, Result};

pub use fd::{
    convergence_table, fd_price, fd_solve, fd_solve_leg, initial_data, payoff_on_grid,
    write_surface_csv, ConvergenceRow, FdSolution, Grid, Leg, Scheme,
};
pub use greens::{gaussian_average, greens_function_price, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatVariables {
    pub tau: f64,
    pub x: f64,
    pub u: f64,
}

/// Log-moneyness coordinate for spot `s` with `tau` years to run.
#[inline]
pub fn heat_x(s: f64, tau: f64, m: &MarketParams) -> f64 {
    (s / m.strike).ln() + (m.r - 0.5 * m.sigma * m.sigma) * tau
}

/// Spot corresponding to heat coordinate `x` at `tau`.
#[inline]
pub fn spot_from_x(x: f64, tau: f64, m: &MarketParams) -> f64 {
    m.strike * (x - (m.r - 0.5 * m.sigma * m.sigma) * tau).exp()
}

pub fn to_heat(s: f64, t: f64, c: f64, m: &MarketParams) -> Result<HeatVariables> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("spot", format!("must be positive, got {s}")));
    }
    let tau = m.expiry - t;
    if tau < 0.0 {
        return Err(Error::invalid(
            "t",
            format!("{t} is past expiry {}", m.expiry),
        ));
    }
    Ok(HeatVariables {
        tau,
        x: heat_x(s, tau, m),
        u: c * (m.r * tau).exp(),
    })
}

/// Inverse of [`to_heat`]: `(s, t, c)`.
pub fn from_heat(hv: &HeatVariables, m: &MarketParams) -> (f64, f64, f64) {
    (
        spot_from_x(hv.x, hv.tau, m),
        m.expiry - hv.tau,
        hv.u * (-m.r * hv.tau).exp(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_expiry_and_the_money_offsets_vanish() {
        let m = MarketParams::new(0.3, 0.05, 100.0, 2.0, 0.0).unwrap();
        let hv = to_heat(100.0, 2.0, 7.5, &m).unwrap();
        assert_eq!(hv.tau, 0.0);
        assert_eq!(hv.x, 0.0);
        assert_eq!(hv.u, 7.5);
    }

    #[test]
    fn value_grows_with_discounting() {
        let m = MarketParams::new(0.3, 0.05, 100.0, 2.0, 0.0).unwrap();
        let hv = to_heat(100.0, 0.0, 1.0, &m).unwrap();
        assert!((hv.u - 0.1_f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn past_expiry_rejected() {
        let m = MarketParams::new(0.3, 0.05, 100.0, 2.0, 0.0).unwrap();
        assert!(to_heat(100.0, 2.5, 1.0, &m).is_err());
        assert!(to_heat(0.0, 1.0, 1.0, &m).is_err());
    }
}
