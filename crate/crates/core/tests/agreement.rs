//! Each numerical route against the closed form within its own error estimate.

use esopt_core::*;

fn sweep() -> impl Iterator<Item = (f64, MarketParams)> {
    [0.5, 0.8, 1.0, 1.25, 2.0].into_iter().flat_map(|ratio| {
        [0.1, 0.2, 0.4].into_iter().flat_map(move |sigma| {
            [0.0, 0.05].into_iter().flat_map(move |r| {
                [0.25, 1.0, 2.0].into_iter().map(move |tau| {
                    (
                        100.0 * ratio,
                        MarketParams::with_tau(sigma, r, 100.0, tau).unwrap(),
                    )
                })
            })
        })
    })
}

#[test]
fn quadrature_within_its_estimate() {
    for (s, m) in sweep() {
        let cf = quote(s, &m).unwrap();
        let q = greens_function_price(s, &m, &QuadConfig::default()).unwrap();
        // the closed form itself carries a few ulps of the strike
        let rounding = 8.0 * f64::EPSILON * s.max(m.strike);
        for (a, b) in [(q.call, cf.call), (q.put, cf.put)] {
            assert!(
                (a - b).abs() <= q.error_estimate + rounding,
                "S={s} {m:?}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn finite_differences_within_their_estimate() {
    for (s, m) in sweep() {
        let cf = quote(s, &m).unwrap();
        let fd = fd_price(
            s,
            &m,
            &Grid::default_for(s, &m).unwrap(),
            Scheme::CrankNicolson,
        )
        .unwrap();
        for (a, b) in [(fd.call, cf.call), (fd.put, cf.put)] {
            assert!(
                (a - b).abs() <= fd.error_estimate,
                "S={s} {m:?}: {a} vs {b}, estimate {}",
                fd.error_estimate
            );
        }
    }
}
