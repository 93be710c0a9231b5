use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rttsync::estimators::{
    pcp_estimate, phase_error, phase_error_seconds, preprocess_outliers, robust_weights, unwrap,
    uls_estimate, wls_cost, wls_estimate, WeightVector,
};
use rttsync::model::generate_series;
use rttsync::montecarlo::{inject_outliers, OutlierSpec};
use rttsync::{
    ClockTruth, KnownParams, LinkTruth, NoiseSpec, RttSeries, SampleSchedule, SearchGrids,
    SearchGridsF32,
};

fn record(f_d: f64, phi: f64, n: usize, snr: f64, seed: u64) -> (RttSeries<f64>, KnownParams<f64>) {
    let clock = ClockTruth::new(1e8, f_d, phi).unwrap();
    let link = LinkTruth::new(2.0, 5e-6).unwrap();
    let sched = SampleSchedule::new(0.0, 1e-3, n).unwrap();
    let noise = NoiseSpec::from_snr(snr, snr, 1e-8);
    let s = generate_series(&sched, &clock, &link, &noise, seed).unwrap();
    (s, KnownParams::from_truth(&clock, &link))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unwrap_keeps_congruence_and_small_steps(z in prop::collection::vec(-PI..PI, 1..200)) {
        let u = unwrap(&z);
        prop_assert_eq!(u[0], z[0]);
        for (a, b) in u.iter().zip(&z) {
            let k = (a - b) / TAU;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
        for w in u.windows(2) {
            let d = w[1] - w[0];
            prop_assert!(d > -PI - 1e-12 && d <= PI + 1e-12);
        }
    }

    #[test]
    fn phase_error_is_wrapped(a in 0.0..TAU, b in 0.0..TAU) {
        let e = phase_error(a, b);
        prop_assert!(e > -PI && e <= PI);
        prop_assert!(((b - a - e) / TAU - ((b - a - e) / TAU).round()).abs() < 1e-12);
    }

    #[test]
    fn wls_cost_ignores_constant_offsets(
        seed in any::<u64>(), f in -300.0..300.0, phi in 0.0..TAU, shift in -1e-7..1e-7
    ) {
        let (s, known) = record(-32.0, 1.0, 40, 30.0, seed);
        let w = WeightVector::uniform(40);
        let shifted = s.with_values(s.values().iter().map(|y| y + shift).collect()).unwrap();
        let a = wls_cost(f, phi, &s, &known, &w).unwrap();
        let b = wls_cost(f, phi, &shifted, &known, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-30));
    }

    #[test]
    fn robust_weights_shift_and_scale_invariant(seed in any::<u64>(), shift in -1e-6..1e-6, scale in 0.1..10.0) {
        let (s, _) = record(-32.0, 2.0, 60, 20.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, _) = inject_outliers(&s, &OutlierSpec::new(0.1, 3.5e-6, 4.9e-6).unwrap(), &mut rng).unwrap();
        let base = robust_weights(&s).unwrap();
        let moved = s.with_values(s.values().iter().map(|y| y + shift).collect()).unwrap();
        let scaled = s.with_values(s.values().iter().map(|y| y * scale).collect()).unwrap();
        let moved_w = robust_weights(&moved).unwrap();
        let scaled_w = robust_weights(&scaled).unwrap();
        prop_assert_eq!(moved_w.as_slice(), base.as_slice());
        prop_assert_eq!(scaled_w.as_slice(), base.as_slice());
    }

    #[test]
    fn uls_range_is_affine_in_the_mean(seed in any::<u64>(), delta in -1e-9..1e-9) {
        let (s, known) = record(-32.0, 0.4, 80, 30.0, seed);
        let moved = s.with_values(s.values().iter().map(|y| y + delta).collect()).unwrap();
        let a = uls_estimate(&s, &known).unwrap();
        let b = uls_estimate(&moved, &known).unwrap();
        let d: f64 = b.rho_hat - a.rho_hat - rttsync::SPEED_OF_LIGHT * delta / 2.0;
        prop_assert!(d.abs() < 1e-6);
    }

    #[test]
    fn estimates_are_wrapped_and_deterministic(seed in any::<u64>(), phi in 0.0..TAU) {
        let (s, known) = record(-32.0, phi, 64, 25.0, seed);
        let g = SearchGrids::for_series(&s).unwrap();
        let w = robust_weights(&s).unwrap();
        for _ in 0..2 {
            let runs = [
                uls_estimate(&s, &known).unwrap(),
                pcp_estimate(&s, &known, &g).unwrap(),
                wls_estimate(&s, &known, &g, &w).unwrap(),
            ];
            for e in &runs {
                prop_assert!(e.phi_hat >= 0.0 && e.phi_hat < TAU);
                prop_assert!(e.f_d_hat.is_finite() && e.rho_hat.is_finite());
            }
            let again = wls_estimate(&s, &known, &g, &w).unwrap();
            prop_assert_eq!(again.f_d_hat.to_bits(), runs[2].f_d_hat.to_bits());
            prop_assert_eq!(again.phi_hat.to_bits(), runs[2].phi_hat.to_bits());
            prop_assert_eq!(again.rho_hat.to_bits(), runs[2].rho_hat.to_bits());
        }
    }
}

#[test]
fn phase_error_examples() {
    assert_eq!(phase_error(0.1, 0.1), 0.0);
    assert!((phase_error(6.2, 0.1) - (0.1 + TAU - 6.2)).abs() < 1e-12);
    assert!((phase_error(6.2_f64, 0.1) - 0.1832).abs() < 1e-4);
    assert!((phase_error_seconds(0.0, PI, 1e-8).abs() - 5e-9).abs() < 1e-20);
}

#[test]
fn interval_outliers_are_all_rejected() {
    let mut clean_kept = 0;
    let mut clean_total = 0;
    for seed in 0..50 {
        let (s, _) = record(-32.0, seed as f64 * 0.1, 100, 40.0, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let spec = OutlierSpec::new(0.1, 3.5e-6, 4.9e-6).unwrap();
        let (s, idx) = inject_outliers(&s, &spec, &mut rng).unwrap();
        let w = robust_weights(&s).unwrap();
        for (i, &wi) in w.as_slice().iter().enumerate() {
            if idx.contains(&i) {
                assert_eq!(wi, 0.0, "seed {seed}: outlier {i} kept");
            } else {
                clean_total += 1;
                clean_kept += (wi == 1.0) as usize;
            }
        }
    }
    assert!(clean_kept as f64 >= 0.99 * clean_total as f64);
}

#[test]
fn preprocessing_rules() {
    let t: Vec<f64> = (0..11).map(|i| i as f64 * 1e-3).collect();
    let mut y: Vec<f64> = (0..11).map(|i| 5e-6 + (i % 4) as f64 * 1e-9).collect();
    let clean = RttSeries::new(t.clone(), y.clone()).unwrap();
    assert_eq!(preprocess_outliers(&clean).unwrap().series, clean);

    y[3] = 4e-6;
    let one = preprocess_outliers(&RttSeries::new(t.clone(), y.clone()).unwrap()).unwrap();
    assert_eq!(one.series.values()[3], (y[2] + y[4]) / 2.0);

    y[4] = 4.1e-6;
    let two = preprocess_outliers(&RttSeries::new(t.clone(), y.clone()).unwrap()).unwrap();
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[5];
    assert_eq!(two.series.values()[3], median);
    assert_eq!(two.series.values()[4], median);
    assert_eq!(two.series.times(), &t[..]);
}

#[test]
fn wls_and_pcp_agree_on_noiseless_data() {
    for &phi in &[0.5, 3.0, 5.5] {
        let (s, known) = record(-32.0, phi, 100, f64::INFINITY, 0);
        let g = SearchGrids::for_series(&s).unwrap();
        let p = pcp_estimate(&s, &known, &g).unwrap();
        let w = wls_estimate(&s, &known, &g, &WeightVector::uniform(100)).unwrap();
        assert!((p.f_d_hat - w.f_d_hat).abs() <= g.freq_step, "{} vs {}", p.f_d_hat, w.f_d_hat);
        assert!(phase_error(p.phi_hat, w.phi_hat).abs() <= 0.3);
    }
}

#[test]
fn single_precision_estimators_run() {
    let clock = ClockTruth::<f32>::new(1e8, -32.0, 1.0).unwrap();
    let link = LinkTruth::<f32>::new(2.0, 5e-6).unwrap();
    let sched = SampleSchedule::<f32>::new(0.0, 1e-3, 100).unwrap();
    let s = generate_series(&sched, &clock, &link, &NoiseSpec::noiseless(), 0).unwrap();
    let known = KnownParams::from_truth(&clock, &link);
    let g: SearchGridsF32 = SearchGrids::for_series(&s).unwrap();
    let e = pcp_estimate(&s, &known, &g).unwrap();
    assert!((e.f_d_hat + 32.0).abs() <= 1.0, "{}", e.f_d_hat);
    let e = uls_estimate(&s, &known).unwrap();
    assert!((e.f_d_hat + 32.0).abs() <= 1.0, "{}", e.f_d_hat);
}
