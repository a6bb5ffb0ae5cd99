//! Monte Carlo pricing under geometric Brownian motion.
//!
//! Terminal prices are sampled exactly, `S_T = s exp((r - sigma^2/2) tau + sigma sqrt(tau) Z)`,
//! so there is no time-stepping bias. Draws are split into fixed-size
//! batches; batch `b` reads ChaCha8 stream `b` keyed by the seed, and batch
//! statistics are merged in batch order. The estimate therefore depends only
//! on `(seed, paths, antithetic)`, never on the number of worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{MarketParams, Method, PriceQuote};
use crate::error::{Error, Result};
use crate::normal::inverse_normal_cdf;

/// Draws per RNG stream.
pub const BATCH: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    pub antithetic: bool,
    /// Worker threads; 0 uses the global rayon pool. Never affects the result.
    pub workers: usize,
}

impl McConfig {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            antithetic: false,
            workers: 0,
        }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub quote: PriceQuote,
    pub call_se: f64,
    pub put_se: f64,
    /// `e^{-r tau} E[S_T]`, which should equal the spot.
    pub discounted_spot: f64,
    pub discounted_spot_se: f64,
    /// Independent samples behind each mean (pairs when antithetic).
    pub samples: u64,
    /// Simulated terminal prices finishing in the money, counting both
    /// members of an antithetic pair.
    pub call_exercised: u64,
    pub put_exercised: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BatchStats {
    call: Moments,
    put: Moments,
    spot: Moments,
    call_itm: u64,
    put_itm: u64,
}

impl BatchStats {
    #[inline]
    fn count(&mut self, call: f64, put: f64) {
        self.call_itm += u64::from(call > 0.0);
        self.put_itm += u64::from(put > 0.0);
    }

    fn merge(self, o: Self) -> Self {
        Self {
            call: self.call.merge(o.call),
            put: self.put.merge(o.put),
            spot: self.spot.merge(o.spot),
            call_itm: self.call_itm + o.call_itm,
            put_itm: self.put_itm + o.put_itm,
        }
    }
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

struct PathModel {
    s: f64,
    strike: f64,
    drift: f64,
    vol: f64,
    df: f64,
    antithetic: bool,
}

impl PathModel {
    fn batch(&self, seed: u64, index: u64, draws: u64) -> BatchStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut stats = BatchStats::default();
        for _ in 0..draws {
            let z = inverse_normal_cdf(open_unit(rng.next_u64()));
            let (c, p, st) = self.discounted(z);
            stats.count(c, p);
            if self.antithetic {
                let (c2, p2, st2) = self.discounted(-z);
                stats.count(c2, p2);
                stats.call.push(0.5 * (c + c2));
                stats.put.push(0.5 * (p + p2));
                stats.spot.push(0.5 * (st + st2));
            } else {
                stats.call.push(c);
                stats.put.push(p);
                stats.spot.push(st);
            }
        }
        stats
    }

    #[inline]
    fn discounted(&self, z: f64) -> (f64, f64, f64) {
        let st = self.s * (self.drift + self.vol * z).exp();
        (
            self.df * (st - self.strike).max(0.0),
            self.df * (self.strike - st).max(0.0),
            self.df * st,
        )
    }
}

pub fn mc_price(s: f64, m: &MarketParams, cfg: &McConfig) -> Result<McEstimate> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid("spot", format!("must be positive, got {s}")));
    }
    m.validate()?;
    if cfg.paths == 0 {
        return Err(Error::invalid("paths", "must be at least 1"));
    }
    let tau = m.tau();
    let scale = m.scale();
    if tau <= 0.0 || scale <= 0.0 {
        return Err(Error::DegenerateLimit { scale });
    }

    let model = PathModel {
        s,
        strike: m.strike,
        drift: (m.r - 0.5 * m.sigma * m.sigma) * tau,
        vol: scale,
        df: m.discount(),
        antithetic: cfg.antithetic,
    };
    let draws = if cfg.antithetic {
        cfg.paths.div_ceil(2)
    } else {
        cfg.paths
    };
    let batches = draws.div_ceil(BATCH);
    let size = |b: u64| BATCH.min(draws - b * BATCH);

    let per_batch: Vec<BatchStats> = if cfg.workers == 1 {
        (0..batches)
            .map(|b| model.batch(cfg.seed, b, size(b)))
            .collect()
    } else {
        let run = || {
            (0..batches)
                .into_par_iter()
                .map(|b| model.batch(cfg.seed, b, size(b)))
                .collect()
        };
        if cfg.workers == 0 {
            run()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?
                .install(run)
        }
    };
    let total = per_batch
        .into_iter()
        .fold(BatchStats::default(), BatchStats::merge);

    let call_se = total.call.std_error();
    let put_se = total.put.std_error();
    Ok(McEstimate {
        quote: PriceQuote {
            call: total.call.mean,
            put: total.put.mean,
            method: Method::MonteCarlo,
            error_estimate: call_se.max(put_se),
        },
        call_se,
        put_se,
        discounted_spot: total.spot.mean,
        discounted_spot_se: total.spot.std_error(),
        samples: draws,
        call_exercised: total.call_itm,
        put_exercised: total.put_itm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quote;

    fn atm() -> MarketParams {
        MarketParams::with_tau(0.2, 0.05, 100.0, 1.0).unwrap()
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert!((merged.mean - all.mean).abs() < 1e-12);
        assert!((merged.m2 - all.m2).abs() < 1e-9 * all.m2);
    }

    #[test]
    fn pins_the_at_the_money_call() {
        let m = atm();
        let est = mc_price(100.0, &m, &McConfig::new(10_000_000, 20_240_901)).unwrap();
        let cf = quote(100.0, &m).unwrap();
        assert!(
            (est.quote.call - cf.call).abs() < 3.0 * est.call_se,
            "{est:?}"
        );
        assert!((est.quote.put - cf.put).abs() < 3.0 * est.put_se);
        assert!(est.call_se < 0.006);
        // call and put exercise on complementary events
        assert_eq!(est.call_exercised + est.put_exercised, 10_000_000);
    }

    #[test]
    fn discounted_spot_is_a_martingale() {
        let m = MarketParams::with_tau(0.35, 0.03, 90.0, 1.5).unwrap();
        let est = mc_price(80.0, &m, &McConfig::new(200_000, 7)).unwrap();
        assert!((est.discounted_spot - 80.0).abs() < 3.0 * est.discounted_spot_se);
    }

    #[test]
    fn parity_within_noise() {
        let m = MarketParams::with_tau(0.25, 0.04, 100.0, 0.5).unwrap();
        let est = mc_price(105.0, &m, &McConfig::new(200_000, 11)).unwrap();
        let lhs = est.quote.call - est.quote.put;
        // call - put per path is the discounted forward payoff
        assert!((lhs - (105.0 - 100.0 * m.discount())).abs() < 3.0 * est.discounted_spot_se);
    }

    #[test]
    fn vanishing_volatility_is_deterministic() {
        let m = MarketParams::with_tau(1e-8, 0.05, 100.0, 1.0).unwrap();
        let est = mc_price(100.0, &m, &McConfig::new(10_000, 3)).unwrap();
        let expected = (100.0 * 0.05_f64.exp() - 100.0) * (-0.05_f64).exp();
        assert!((est.quote.call - expected).abs() < 1e-6);
    }

    #[test]
    fn antithetic_reduces_error() {
        for (s, sigma) in [(100.0, 0.2), (95.0, 0.3), (105.0, 0.1)] {
            let m = MarketParams::with_tau(sigma, 0.05, 100.0, 1.0).unwrap();
            let plain = mc_price(s, &m, &McConfig::new(100_000, 5)).unwrap();
            let anti = mc_price(s, &m, &McConfig::new(100_000, 5).antithetic(true)).unwrap();
            assert!(
                anti.call_se <= plain.call_se,
                "{} > {}",
                anti.call_se,
                plain.call_se
            );
        }
    }

    #[test]
    fn independent_of_worker_count() {
        let m = atm();
        let base = McConfig::new(100_003, 99);
        let one = mc_price(100.0, &m, &base.workers(1)).unwrap();
        for w in [2, 3, 8] {
            let other = mc_price(100.0, &m, &base.workers(w)).unwrap();
            assert_eq!(one.quote.call.to_bits(), other.quote.call.to_bits());
            assert_eq!(one.call_se.to_bits(), other.call_se.to_bits());
            assert_eq!(one.put_exercised, other.put_exercised);
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let m = atm();
        assert!(mc_price(100.0, &m, &McConfig::new(0, 1)).is_err());
        assert!(mc_price(-1.0, &m, &McConfig::new(10, 1)).is_err());
        let flat = MarketParams::with_tau(0.0, 0.05, 100.0, 1.0).unwrap();
        assert!(matches!(
            mc_price(100.0, &flat, &McConfig::new(10, 1)),
            Err(Error::DegenerateLimit { .. })
        ));
    }
}
