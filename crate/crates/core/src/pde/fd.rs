//! Finite-difference stepping of `u_tau = (sigma^2/2) u_xx` on a uniform grid.
//!
//! Crank-Nicolson starts with two steps replaced by four implicit-Euler
//! half steps (Rannacher smoothing) so the payoff kink does not leak
//! undamped high-frequency error into the solution.

use std::io::{self, Write};

use serde::Serialize;

use crate::analytic::{call_price, MarketParams, Method, PriceQuote};
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::pde::{heat_x, spot_from_x};

pub const RANNACHER_STEPS: usize = 2;
pub const NODES_PER_LENGTH: f64 = 160.0;
pub const HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_STEPS: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Explicit,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub ntau: usize,
}

impl Grid {
    /// Rejects grids that do not bracket zero or that miss `x = 0` as a node.
    pub fn new(x_min: f64, x_max: f64, nx: usize, ntau: usize) -> Result<Self> {
        if !(x_min < 0.0 && 0.0 < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::invalid(
                "grid",
                format!("need x_min < 0 < x_max, got [{x_min}, {x_max}]"),
            ));
        }
        if nx < 3 {
            return Err(Error::invalid("grid", format!("nx must be >= 3, got {nx}")));
        }
        if ntau < 1 {
            return Err(Error::invalid("grid", "ntau must be >= 1"));
        }
        let grid = Self {
            x_min,
            x_max,
            nx,
            ntau,
        };
        let pos = -x_min / grid.dx();
        if (pos - pos.round()).abs() > 1e-9 * pos.max(1.0) {
            return Err(Error::invalid("grid", "x = 0 must fall on a grid node"));
        }
        Ok(grid)
    }

    /// Grid sized to the diffusion length `sigma sqrt(tau)`: nodes at spacing
    /// `L / NODES_PER_LENGTH`, extending `HALF_WIDTH` lengths beyond both the
    /// kink and the spot, with `DEFAULT_STEPS` time steps.
    pub fn default_for(s: f64, m: &MarketParams) -> Result<Self> {
        m.validate()?;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("spot", format!("must be positive, got {s}")));
        }
        let len = m.scale();
        if !(len > 0.0) {
            return Err(Error::DegenerateLimit { scale: len });
        }
        let dx = len / NODES_PER_LENGTH;
        let x0 = heat_x(s, m.tau(), m);
        // multiples of 8 so the grid survives three coarsenings
        let nodes = |v: f64| 8 * ((v / dx / 8.0).ceil() as usize).max(1);
        let below = nodes(-x0.min(0.0) + HALF_WIDTH * len);
        let above = nodes(x0.max(0.0) + HALF_WIDTH * len);
        Ok(Self {
            x_min: -(below as f64) * dx,
            x_max: above as f64 * dx,
            nx: below + above + 1,
            ntau: DEFAULT_STEPS,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn zero_index(&self) -> usize {
        (-self.x_min / self.dx()).round() as usize
    }

    /// `sigma^2 dtau / (2 dx^2)`; the explicit scheme needs this `<= 1/2`.
    pub fn diffusion_number(&self, sigma: f64, tau: f64) -> f64 {
        let dtau = tau / self.ntau as f64;
        sigma * sigma * dtau / (2.0 * self.dx() * self.dx())
    }

    /// Both spacings halved.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * (self.nx - 1) + 1,
            ntau: 2 * self.ntau,
            ..*self
        }
    }

    /// Both spacings doubled, if the node at zero survives.
    pub fn coarsened(&self) -> Option<Self> {
        if (self.nx - 1) % 2 != 0 || self.zero_index() % 2 != 0 || self.nx < 5 {
            return None;
        }
        Some(Self {
            nx: (self.nx - 1) / 2 + 1,
            ntau: self.ntau.div_ceil(2),
            ..*self
        })
    }
}

fn initial(leg: Leg, k: f64, x: f64) -> f64 {
    match leg {
        Leg::Call => k * (x.exp() - 1.0).max(0.0),
        Leg::Put => k * (1.0 - x.exp()).max(0.0),
    }
}

/// Mean of the payoff over `[a, b]`.
fn cell_average(leg: Leg, k: f64, a: f64, b: f64) -> f64 {
    let integral = match leg {
        Leg::Call => {
            let (lo, hi) = (a.max(0.0), b.max(0.0));
            (hi.exp() - lo.exp()) - (hi - lo)
        }
        Leg::Put => {
            let (lo, hi) = (a.min(0.0), b.min(0.0));
            (hi - lo) - (hi.exp() - lo.exp())
        }
    };
    k * integral / (b - a)
}

/// Payoff sampled at the nodes.
pub fn payoff_on_grid(grid: &Grid, leg: Leg, k: f64) -> Vec<f64> {
    let mut u: Vec<f64> = (0..grid.nx).map(|i| initial(leg, k, grid.x(i))).collect();
    // exp(0) - 1 is exact, but x(zero_index) may carry rounding
    u[grid.zero_index()] = 0.0;
    u
}

/// Starting level for the march: payoff averaged over each node's cell.
/// Sampling the kink instead costs roughly an order of magnitude in accuracy
/// near the money.
pub fn initial_data(grid: &Grid, leg: Leg, k: f64) -> Vec<f64> {
    let h = grid.dx();
    let z = grid.zero_index() as f64;
    (0..grid.nx)
        .map(|i| {
            // measured from the kink node so its cell is symmetric about zero
            let x = (i as f64 - z) * h;
            cell_average(leg, k, x - 0.5 * h, x + 0.5 * h)
        })
        .collect()
}

/// Far-field values: the call tends to `S - K e^{-r tau}`, the put to
/// `K e^{-r tau} - S`; both are exact heat solutions in `u`.
fn boundaries(leg: Leg, k: f64, sigma: f64, grid: &Grid, tau: f64) -> (f64, f64) {
    let drift = 0.5 * sigma * sigma * tau;
    match leg {
        Leg::Call => (0.0, k * ((grid.x_max + drift).exp() - 1.0)),
        Leg::Put => (k * (1.0 - (grid.x_min + drift).exp()), 0.0),
    }
}

/// Thomas solve of the constant-coefficient system
/// `-a v[i-1] + (1 + 2a) v[i] - a v[i+1] = rhs[i]` on the interior.
fn solve_interior(a: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    let diag = 1.0 + 2.0 * a;
    scratch[0] = -a / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let denom = diag + a * scratch[i - 1];
        scratch[i] = -a / denom;
        rhs[i] = (rhs[i] + a * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

struct Stepper {
    leg: Leg,
    k: f64,
    sigma: f64,
    grid: Grid,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    /// One theta-step of length `dt` ending at `tau_new`.
    fn step(&mut self, u: &mut [f64], theta: f64, dt: f64, tau_new: f64) {
        let n = u.len();
        let dx = self.grid.dx();
        let a = 0.5 * self.sigma * self.sigma * dt / (dx * dx);
        let (lo, hi) = boundaries(self.leg, self.k, self.sigma, &self.grid, tau_new);
        let ex = (1.0 - theta) * a;
        let im = theta * a;

        for i in 1..n - 1 {
            self.rhs[i - 1] = u[i] + ex * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
        }
        if im == 0.0 {
            u[1..n - 1].copy_from_slice(&self.rhs[..n - 2]);
        } else {
            self.rhs[0] += im * lo;
            self.rhs[n - 3] += im * hi;
            solve_interior(im, &mut self.rhs[..n - 2], &mut self.scratch[..n - 2]);
            u[1..n - 1].copy_from_slice(&self.rhs[..n - 2]);
        }
        u[0] = lo;
        u[n - 1] = hi;
    }
}

/// Marches the initial data to `m.tau()`, calling `on_level(tau, u)` on the
/// initial level and after every full time step.
pub fn march<F: FnMut(f64, &[f64])>(
    m: &MarketParams,
    grid: &Grid,
    scheme: Scheme,
    leg: Leg,
    mut on_level: F,
) -> Result<Vec<f64>> {
    m.validate()?;
    let tau = m.tau();
    if scheme == Scheme::Explicit {
        let ratio = grid.diffusion_number(m.sigma, tau);
        if ratio > 0.5 {
            return Err(Error::Unstable { ratio });
        }
    }
    let n = grid.nx;
    let mut u = initial_data(grid, leg, m.strike);
    on_level(0.0, &u);

    let dt = tau / grid.ntau as f64;
    let mut stepper = Stepper {
        leg,
        k: m.strike,
        sigma: m.sigma,
        grid: *grid,
        rhs: vec![0.0; n - 2],
        scratch: vec![0.0; n - 2],
    };
    for step in 0..grid.ntau {
        let t0 = step as f64 * dt;
        let t1 = (step + 1) as f64 * dt;
        match scheme {
            Scheme::Explicit => stepper.step(&mut u, 0.0, dt, t1),
            Scheme::CrankNicolson if step < RANNACHER_STEPS => {
                stepper.step(&mut u, 1.0, 0.5 * dt, t0 + 0.5 * dt);
                stepper.step(&mut u, 1.0, 0.5 * dt, t1);
            }
            Scheme::CrankNicolson => stepper.step(&mut u, 0.5, dt, t1),
        }
        on_level(t1, &u);
    }
    Ok(u)
}

/// Final-level solution on the grid.
#[derive(Debug, Clone)]
pub struct FdSolution {
    pub grid: Grid,
    pub market: MarketParams,
    pub leg: Leg,
    pub u: Vec<f64>,
}

impl FdSolution {
    pub fn tau(&self) -> f64 {
        self.market.tau()
    }

    /// Option value at spot `s`, by four-point Lagrange interpolation in `x`.
    pub fn value_at(&self, s: f64) -> Result<f64> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("spot", format!("must be positive, got {s}")));
        }
        let g = &self.grid;
        let x = heat_x(s, self.tau(), &self.market);
        if x < g.x_min || x > g.x_max {
            return Err(Error::invalid(
                "spot",
                format!("x = {x} outside grid [{}, {}]", g.x_min, g.x_max),
            ));
        }
        let dx = g.dx();
        let j = (((x - g.x_min) / dx).floor() as usize).clamp(1, g.nx - 3);
        let t = (x - g.x(j)) / dx;
        let (u0, u1, u2, u3) = (self.u[j - 1], self.u[j], self.u[j + 1], self.u[j + 2]);
        let u = -t * (t - 1.0) * (t - 2.0) / 6.0 * u0
            + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * u1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * u2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * u3;
        Ok((u * (-self.market.r * self.tau()).exp()).max(0.0))
    }

    /// `(S, C)` pairs on the grid nodes.
    pub fn spot_slice(&self) -> Vec<(f64, f64)> {
        let tau = self.tau();
        let df = (-self.market.r * tau).exp();
        (0..self.grid.nx)
            .map(|i| {
                (
                    spot_from_x(self.grid.x(i), tau, &self.market),
                    self.u[i] * df,
                )
            })
            .collect()
    }

    pub fn write_slice_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "S,C")?;
        for (s, c) in self.spot_slice() {
            writeln!(w, "{},{}", sig12(s), sig12(c))?;
        }
        Ok(())
    }
}

pub fn fd_solve_leg(m: &MarketParams, grid: &Grid, scheme: Scheme, leg: Leg) -> Result<FdSolution> {
    let u = march(m, grid, scheme, leg, |_, _| {})?;
    Ok(FdSolution {
        grid: *grid,
        market: *m,
        leg,
        u,
    })
}

/// Call-leg solution.
pub fn fd_solve(m: &MarketParams, grid: &Grid, scheme: Scheme) -> Result<FdSolution> {
    fd_solve_leg(m, grid, scheme, Leg::Call)
}

/// Writes every time level as `x,tau,u` rows.
pub fn write_surface_csv<W: Write>(
    m: &MarketParams,
    grid: &Grid,
    scheme: Scheme,
    leg: Leg,
    mut w: W,
) -> Result<()> {
    let mut io_err = None;
    writeln!(w, "x,tau,u").map_err(|e| Error::invalid("output", e.to_string()))?;
    march(m, grid, scheme, leg, |tau, u| {
        if io_err.is_some() {
            return;
        }
        for (i, v) in u.iter().enumerate() {
            if let Err(e) = writeln!(w, "{},{},{}", sig12(grid.x(i)), sig12(tau), sig12(*v)) {
                io_err = Some(e);
                return;
            }
        }
    })?;
    match io_err {
        Some(e) => Err(Error::invalid("output", e.to_string())),
        None => Ok(()),
    }
}

/// Both legs; `error_estimate` is the change against the grid with both
/// spacings doubled (NaN when the grid cannot be coarsened).
pub fn fd_price(s: f64, m: &MarketParams, grid: &Grid, scheme: Scheme) -> Result<PriceQuote> {
    let call = fd_solve_leg(m, grid, scheme, Leg::Call)?.value_at(s)?;
    let put = fd_solve_leg(m, grid, scheme, Leg::Put)?.value_at(s)?;
    let error_estimate = match grid.coarsened() {
        Some(coarse) => {
            let cc = fd_solve_leg(m, &coarse, scheme, Leg::Call)?.value_at(s)?;
            let pc = fd_solve_leg(m, &coarse, scheme, Leg::Put)?.value_at(s)?;
            (call - cc).abs().max((put - pc).abs())
        }
        None => f64::NAN,
    };
    Ok(PriceQuote {
        call,
        put,
        method: Method::Pde,
        error_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub ntau: usize,
    pub call: f64,
    pub error: f64,
    /// `log2` of the error ratio against the previous (coarser) row.
    pub order: Option<f64>,
}

/// Call errors against the closed form as both spacings halve `levels - 1` times.
pub fn convergence_table(
    s: f64,
    m: &MarketParams,
    base: &Grid,
    levels: usize,
    scheme: Scheme,
) -> Result<Vec<ConvergenceRow>> {
    let exact = call_price(s, m)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut grid = *base;
    for _ in 0..levels {
        let call = fd_solve(m, &grid, scheme)?.value_at(s)?;
        let error = (call - exact).abs();
        let order = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(ConvergenceRow {
            nx: grid.nx,
            ntau: grid.ntau,
            call,
            error,
            order,
        });
        grid = grid.refined();
    }
    Ok(rows)
}
