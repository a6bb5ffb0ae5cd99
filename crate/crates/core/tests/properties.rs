use proptest::prelude::*;

use esopt_core::mapping::{classify_eigenvalues, two_variable_test};
use esopt_core::*;
use nalgebra::{DMatrix, SymmetricEigen};

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0_f64, n)
}

/// Symmetric `n x n` with entries in `[-1, 1]`, as raw rows.
fn symmetric(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(-1.0..1.0_f64, n * (n + 1) / 2).prop_map(move |upper| {
        let mut g = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                g[i][j] = upper[k];
                g[j][i] = upper[k];
                k += 1;
            }
        }
        g
    })
}

fn coupling(n: usize) -> impl Strategy<Value = InteractionMatrix> {
    symmetric(n).prop_filter_map("degenerate", |raw| validate_matrix(&raw).ok())
}

fn state_and_coupling() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, InteractionMatrix)> {
    (1usize..=9).prop_flat_map(|n| (vector(n), vector(n), coupling(n)))
}

fn market() -> impl Strategy<Value = MarketParams> {
    (0.01..1.0_f64, 0.0..0.1_f64, 10.0..200.0_f64, 0.01..5.0_f64)
        .prop_map(|(sigma, r, k, tau)| MarketParams::with_tau(sigma, r, k, tau).unwrap())
}

fn pb(v: &[f64]) -> PbVector {
    PbVector::new(v.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn zero_coupling_is_the_plain_sum(h in (1usize..=20).prop_flat_map(vector)) {
        let g = InteractionMatrix::zeros(h.len());
        let sum: f64 = h.iter().sum();
        prop_assert_eq!(human_impact(&pb(&h), &g).unwrap(), sum);
    }

    #[test]
    fn impact_delta_is_antisymmetric((a, b, g) in state_and_coupling()) {
        let forward = impact_delta(&pb(&a), &pb(&b), &g).unwrap();
        let back = impact_delta(&pb(&b), &pb(&a), &g).unwrap();
        prop_assert_eq!(forward, -back);
    }

    #[test]
    fn symmetrizing_leaves_the_aggregate_unchanged(
        (h, raw) in (2usize..=9).prop_flat_map(|n| (vector(n), symmetric(n))),
        skew in 1e-11..1e-10_f64,
    ) {
        let n = h.len();
        let mut tilted = raw.clone();
        tilted[0][n - 1] += skew;
        tilted[n - 1][0] -= skew;
        prop_assume!(validate_matrix(&raw).is_ok());
        let sym = validate_matrix(&raw).unwrap();
        let from_tilted = validate_matrix(&tilted).unwrap();
        let a = human_impact(&pb(&h), &sym).unwrap();
        let b = human_impact(&pb(&h), &from_tilted).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn spot_strictly_decreases_in_delta_h(
        s0 in 1.0..1000.0_f64,
        alpha in 0.01..100.0_f64,
        d1 in -5.0..5.0_f64,
        d2 in -5.0..5.0_f64,
    ) {
        prop_assume!((d1 - d2).abs() > 1e-9);
        let p = MappingParams::new(s0, alpha).unwrap();
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(stock_price(&p, lo).value > stock_price(&p, hi).value);
    }

    #[test]
    fn scaling_coupling_scales_the_hessian(
        (raw, lambda) in (2usize..=6).prop_flat_map(|n| (symmetric(n), 0.01..100.0_f64)),
    ) {
        prop_assume!(validate_matrix(&raw).is_ok());
        let g = validate_matrix(&raw).unwrap();
        let p = MappingParams::new(100.0, 1.5).unwrap();
        let coords: Vec<usize> = (0..g.dim()).collect();
        let base = classify_extremum(&p, &g, &coords).unwrap();
        let scaled = classify_extremum(&p, &g.scaled(lambda), &coords).unwrap();
        for (row, srow) in base.hessian.iter().zip(&scaled.hessian) {
            for (v, sv) in row.iter().zip(srow) {
                prop_assert!((sv - lambda * v).abs() <= 1e-12 * (lambda * v).abs().max(1e-300));
            }
        }
        prop_assert_eq!(base.classification, scaled.classification);
    }

    #[test]
    fn determinant_test_agrees_with_eigenvalues(raw in symmetric(2)) {
        let h = DMatrix::from_fn(2, 2, |i, j| raw[i][j]);
        let by_eigen = classify_eigenvalues(SymmetricEigen::new(h.clone()).eigenvalues.as_slice());
        prop_assume!(by_eigen != Classification::Degenerate);
        prop_assert_eq!(two_variable_test(&h).is_maximum(), by_eigen == Classification::Maximum);
    }

    #[test]
    fn maximum_iff_both_conditions_hold(raw in symmetric(2)) {
        prop_assume!(validate_matrix(&raw).is_ok());
        let g = validate_matrix(&raw).unwrap();
        let report = classify_extremum(&MappingParams::new(10.0, 2.0).unwrap(), &g, &[0, 1]).unwrap();
        prop_assume!(report.classification != Classification::Degenerate);
        let t = report.two_variable_test.unwrap();
        prop_assert_eq!(report.classification == Classification::Maximum, t.is_maximum());
    }

    #[test]
    fn prices_are_monotone(m in market(), s in 1.0..300.0_f64, bump in 1e-3..10.0_f64) {
        let up = s + bump;
        prop_assert!(call_price(up, &m).unwrap() >= call_price(s, &m).unwrap());
        prop_assert!(put_price(up, &m).unwrap() <= put_price(s, &m).unwrap());
        let mut higher = m;
        higher.strike += bump;
        prop_assert!(call_price(s, &higher).unwrap() <= call_price(s, &m).unwrap());
        prop_assert!(put_price(s, &higher).unwrap() >= put_price(s, &m).unwrap());
    }

    #[test]
    fn prices_respect_static_bounds(m in market(), s in 1.0..300.0_f64) {
        let df = m.discount();
        let c = call_price(s, &m).unwrap();
        let p = put_price(s, &m).unwrap();
        let slack = 1e-12 * s.max(m.strike);
        prop_assert!(c >= (s - m.strike * df).max(0.0) - slack && c <= s + slack);
        prop_assert!(p >= (m.strike * df - s).max(0.0) - slack && p <= m.strike * df + slack);
    }

    #[test]
    fn parity_holds(m in market(), s in 1.0..300.0_f64) {
        let lhs = call_price(s, &m).unwrap() - put_price(s, &m).unwrap();
        prop_assert!((lhs - (s - m.strike * m.discount())).abs() <= 1e-12);
    }

    #[test]
    fn small_volatility_approaches_the_forward(r in 0.0..0.1_f64, k in 50.0..150.0_f64, tau in 0.1..3.0_f64, s in 20.0..200.0_f64) {
        let limit = MarketParams::with_tau(0.0, r, k, tau).unwrap();
        let near = MarketParams::with_tau(1e-6, r, k, tau).unwrap();
        // away from the forward-at-the-money point the gap is below any tolerance
        prop_assume!((s - k * (-r * tau).exp()).abs() > 1e-3);
        prop_assert!((call_price(s, &near).unwrap() - call_price(s, &limit).unwrap()).abs() < 1e-9);
        prop_assert!((put_price(s, &near).unwrap() - put_price(s, &limit).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn call_falls_as_impact_rises(
        (a, b) in (1usize..=9).prop_flat_map(|n| (vector(n), vector(n))),
        m in market(),
    ) {
        let n = a.len();
        let g = InteractionMatrix::zeros(n);
        let map = MappingParams::new(100.0, 1.0).unwrap();
        let reference = PbVector::zeros(n);
        let (da, db) = (
            impact_delta(&reference, &pb(&a), &g).unwrap(),
            impact_delta(&reference, &pb(&b), &g).unwrap(),
        );
        prop_assume!((da - db).abs() > 1e-6);
        let (lo, hi) = if da < db { (&a, &b) } else { (&b, &a) };
        let c_lo = price_pb_option(&pb(lo), &reference, &g, &map, &m).unwrap().call;
        let c_hi = price_pb_option(&pb(hi), &reference, &g, &map, &m).unwrap().call;
        // strict in exact arithmetic; deep out of the money both round to zero
        prop_assert!(c_lo > c_hi || (c_lo == 0.0 && c_hi == 0.0), "{} <= {}", c_lo, c_hi);
    }

    #[test]
    fn heat_transform_round_trips(m in market(), s in 0.1..1000.0_f64, c in 0.0..500.0_f64, frac in 0.0..1.0_f64) {
        let t = frac * m.expiry;
        let hv = to_heat(s, t, c, &m).unwrap();
        let (s2, t2, c2) = from_heat(&hv, &m);
        prop_assert!((s2 - s).abs() <= 1e-12 * s);
        prop_assert!((t2 - t).abs() <= 1e-12 * m.expiry);
        prop_assert!((c2 - c).abs() <= 1e-12 * c.max(1e-300));
    }

    #[test]
    fn normal_cdf_is_symmetric_and_monotone(x in -10.0..10.0_f64, dx in 1e-6..1.0_f64) {
        prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 2e-16);
        prop_assert!(normal_cdf(x + dx) >= normal_cdf(x));
    }

    #[test]
    fn inverse_cdf_round_trips(p in 1e-12..(1.0 - 1e-12)) {
        let x = inverse_normal_cdf(p);
        prop_assert!((normal_cdf(x) - p).abs() <= 1e-14 * p.min(1.0 - p).max(1e-3));
    }
}
