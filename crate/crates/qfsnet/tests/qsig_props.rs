use proptest::prelude::*;
use qfsnet::qsig::*;

fn plateaus(ys: &[f64]) -> usize {
    let mut count = 0;
    let mut run = 0;
    for w in ys.windows(2) {
        if (w[1] - w[0]).abs() < 1e-9 {
            run += 1;
            if run == 5 {
                count += 1;
            }
        } else {
            run = 0;
        }
    }
    count
}

#[test]
fn staircase_has_one_plateau_per_class() {
    for levels in [2, 3, 4, 5, 6, 8, 10] {
        for lambda in [25.0, 40.0] {
            let tau = boundary_set(BoundarySet::S1, levels, &[]).unwrap();
            let p = QSigParams::with(tau, lambda, 1.0, 0.0, GRAY_SCALE).unwrap();
            let ys: Vec<f64> = (0..10_000).map(|i| p.response(i as f64 / 9_999.0, 8.0)).collect();
            assert_eq!(plateaus(&ys), levels, "L={levels} lambda={lambda}");
        }
    }
}

#[test]
fn otsu_splits_bimodal_histogram_between_peaks() {
    let mut h = vec![0u64; 256];
    for (i, c) in h.iter_mut().enumerate() {
        let x = (i as f64 + 0.5) / 256.0;
        let g = |m: f64| (-(x - m).powi(2) / (2.0 * 0.05f64.powi(2))).exp();
        *c = (1000.0 * (g(0.2) + g(0.8))).round() as u64;
    }
    let t = boundary_set(BoundarySet::S3, 2, &h).unwrap();
    assert!(t[1] > 0.4 && t[1] < 0.6, "{t:?}");
    // exhaustive between-class variance oracle
    let total: f64 = h.iter().map(|&c| c as f64).sum();
    let mass: f64 = h.iter().enumerate().map(|(i, &c)| c as f64 * (i as f64 + 0.5) / 256.0).sum();
    let variance = |cut: usize| {
        let w0: f64 = h[..cut].iter().map(|&c| c as f64).sum();
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            return 0.0;
        }
        let s0: f64 = h[..cut].iter().enumerate().map(|(i, &c)| c as f64 * (i as f64 + 0.5) / 256.0).sum();
        let (m0, m1) = (s0 / w0, (mass - s0) / w1);
        w0 * w1 * (m0 - m1).powi(2)
    };
    let best = (1..256).map(variance).fold(0.0, f64::max);
    let chosen = (t[1] * 256.0).floor() as usize;
    assert!((variance(chosen) - best).abs() <= 1e-9 * best);
}

#[test]
fn kmeans_splits_bimodal_histogram_between_peaks() {
    let mut h = vec![0u64; 256];
    h[50] = 500;
    h[51] = 400;
    h[200] = 450;
    h[202] = 300;
    let t = boundary_set(BoundarySet::S4, 2, &h).unwrap();
    let c0 = (50.5 * 500.0 + 51.5 * 400.0) / 900.0 / 256.0;
    let c1 = (200.5 * 450.0 + 202.5 * 300.0) / 750.0 / 256.0;
    assert!((t[1] - 0.5 * (c0 + c1)).abs() < 1e-12);
}

#[test]
fn quantile_oracle() {
    let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 1000) as f64 / 1000.0).collect();
    let h = histogram(&values, HIST_BINS);
    let t = boundary_set(BoundarySet::S2, 4, &h).unwrap();
    for (v, &b) in t[1..4].iter().enumerate() {
        let below = values.iter().filter(|&&x| x < b).count();
        let want = (v + 1) * 1000 / 4;
        assert!(below >= want && below <= want + 4, "{b} holds {below}");
    }
}

fn hist_strategy() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..50, 256).prop_filter("two bins", |h| h.iter().filter(|&&c| c > 0).count() >= 2)
}

fn kind() -> impl Strategy<Value = BoundarySet> {
    prop::sample::select(BoundarySet::ALL.to_vec())
}

proptest! {
    #[test]
    fn boundaries_strictly_increase_and_span(h in hist_strategy(), k in kind(), levels in 2usize..10) {
        let t = boundary_set(k, levels, &h).unwrap();
        prop_assert_eq!(t.len(), levels + 1);
        prop_assert_eq!(t[0], 0.0);
        prop_assert_eq!(t[levels], 1.0);
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(QSigParams::new(t, 0.239).is_ok());
    }

    #[test]
    fn sparse_histograms_still_give_valid_boundaries(a in 0usize..256, b in 0usize..256, k in kind(), levels in 2usize..12) {
        prop_assume!(a != b);
        let mut h = vec![0u64; 256];
        h[a] = 3;
        h[b] = 1;
        let t = boundary_set(k, levels, &h).unwrap();
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(t[levels], 1.0);
    }

    #[test]
    fn multiclass_is_monotone(h in hist_strategy(), k in kind(), levels in 2usize..9,
                              lambda in 0.05f64..30.0, q_n in 0.01f64..8.0,
                              pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1000)) {
        let p = QSigParams::new(boundary_set(k, levels, &h).unwrap(), lambda).unwrap();
        for (a, b) in pairs {
            let (x1, x2) = if a < b { (a, b) } else { (b, a) };
            let y1 = qsig_multiclass(x1, &p, q_n).unwrap();
            let y2 = qsig_multiclass(x2, &p, q_n).unwrap();
            prop_assert!(y1 <= y2 + 1e-12);
            prop_assert!((0.0..=1.0).contains(&y1));
        }
    }

    #[test]
    fn single_stays_in_range(x in -1e3f64..1e3, kappa in 0.1f64..100.0, lambda in 0.01f64..10.0) {
        let p = QSigParams::with(vec![0.0, 0.5, 1.0], lambda, 1.0, 0.0, 1.0).unwrap();
        let y = qsig_single(x, &p, kappa).unwrap();
        prop_assert!(y >= 0.0 && y <= 1.0 / kappa);
        let hi = qsig_single(50.0 / lambda, &p, kappa).unwrap();
        let lo = qsig_single(-50.0 / lambda, &p, kappa).unwrap();
        prop_assert!((hi - 1.0 / kappa).abs() < 1e-6);
        prop_assert!(lo.abs() < 1e-6);
    }

    #[test]
    fn kappa_matches_definition(q_n in 1e-6f64..100.0, lo in 0.0f64..0.9, gap in 1e-6f64..0.1) {
        let k = kappa_for_class(q_n, lo + gap, lo).unwrap();
        prop_assert_eq!(k, q_n / ((lo + gap) - lo));
    }
}
