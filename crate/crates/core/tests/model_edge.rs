use std::f64::consts::TAU;

use rttsync::edge_sim::{
    equivalent_clock, simulate_campaign, simulate_exchange, slave_offset_for_phase, ExchangeConfig,
    Oscillator,
};
use rttsync::model::{generate_series, nominal_delay_exact, sawtooth};
use rttsync::{ClockTruth, LinkTruth, NoiseSpec, RttSeriesF32, SampleSchedule, SPEED_OF_LIGHT};

fn default_pair(slave_offset: f64) -> (Oscillator<f64>, Oscillator<f64>) {
    let master = Oscillator::with_frequency(1e8, 1e8, 0.0).unwrap();
    let slave = Oscillator::with_frequency(1e8, 1e8 + 32.0, slave_offset).unwrap();
    (master, slave)
}

#[test]
fn edge_rtt_is_bounded_by_delay_and_one_slave_period() {
    let (m, s) = default_pair(3.3e-9);
    let cfg = ExchangeConfig::new(500, 2.0).unwrap();
    let sched = SampleSchedule::new(0.0, 1e-3, 2000).unwrap();
    let rec = simulate_campaign(&m, &s, &cfg, &sched).unwrap();
    let base = 500.0 * s.period() + 4.0 / SPEED_OF_LIGHT;
    for &y in rec.values() {
        assert!(y >= base - 1e-15 && y < base + s.period() + 1e-15, "{y}");
    }
}

#[test]
fn sweeping_slave_offset_shifts_waveform_cyclically() {
    // a slave offset of one eighth of its period advances the sawtooth by 2π/8
    let cfg = ExchangeConfig::new(500, 2.0).unwrap();
    let sched = SampleSchedule::new(0.0, 1e-3, 400).unwrap();
    let (m, s0) = default_pair(0.0);
    let period = s0.period();
    let base = simulate_campaign(&m, &s0, &cfg, &sched).unwrap();
    for k in 1..8 {
        let (_, s) = default_pair(k as f64 * period / 8.0);
        let shifted = simulate_campaign(&m, &s, &cfg, &sched).unwrap();
        let clock0 = equivalent_clock(&m, &s0, 2.0).unwrap();
        let clock = equivalent_clock(&m, &s, 2.0).unwrap();
        let dphi = (clock.phi - clock0.phi).rem_euclid(TAU);
        assert!((dphi - k as f64 * TAU / 8.0).abs() < 1e-6, "k={k}: {dphi}");
        // same multiset of waits modulo one period: the mean of the wrapped
        // difference is the shift
        let lag: f64 = shifted
            .values()
            .iter()
            .zip(base.values())
            .map(|(a, b)| (a - b).rem_euclid(period))
            .map(|d| d.min(period - d))
            .sum::<f64>()
            / 400.0;
        let expected = (k as f64 / 8.0).min(1.0 - k as f64 / 8.0) * period;
        assert!((lag - expected).abs() < 1e-12, "k={k}: {lag} vs {expected}");
    }
}

#[test]
fn model_reproduces_edge_simulation_for_many_offsets() {
    let cfg = ExchangeConfig::new(500, 2.0).unwrap();
    let sched = SampleSchedule::new(0.0, 1e-3, 500).unwrap();
    for &phi in &[0.0, 0.5, 2.0, 4.0, 6.2] {
        let m = Oscillator::with_frequency(1e8, 1e8, 0.0).unwrap();
        let f_s = 1e8 + 32.0;
        let s = Oscillator::with_frequency(1e8, f_s, slave_offset_for_phase(&m, f_s, phi, 2.0)).unwrap();
        let edge = simulate_campaign(&m, &s, &cfg, &sched).unwrap();
        let clock = ClockTruth::new(1e8, -32.0, phi).unwrap();
        let link = LinkTruth::new(2.0, nominal_delay_exact(5e-6, &clock)).unwrap();
        let model = generate_series(&sched, &clock, &link, &NoiseSpec::noiseless(), 0).unwrap();
        for (a, b) in edge.values().iter().zip(model.values()) {
            let d: f64 = a - b;
            assert!(d.abs() < 1e-11, "phi={phi}: {a} vs {b}");
        }
    }
}

#[test]
fn tdc_quantization_error_is_at_most_half_a_step() {
    let (m, s) = default_pair(1.7e-9);
    let ideal = ExchangeConfig::new(500, 2.0).unwrap();
    let tdc = ideal.clone().with_tdc_resolution(50e-12).unwrap();
    for i in 0..200 {
        let t = i as f64 * 1e-3;
        let d = simulate_exchange(&m, &s, &tdc, t) - simulate_exchange(&m, &s, &ideal, t);
        assert!(d.abs() <= 25e-12 + 1e-18);
    }
}

#[test]
fn sawtooth_completes_f_d_periods_per_second() {
    // 32 Hz beat over 1 s of 1 kHz samples wraps 32 times
    let wraps = (1..1000)
        .filter(|&i| {
            let a = sawtooth((i - 1) as f64 * 1e-3, -32.0, 0.7, 1e-8);
            let b = sawtooth(i as f64 * 1e-3, -32.0, 0.7, 1e-8);
            (b - a).abs() > 0.5e-8
        })
        .count();
    assert_eq!(wraps, 32);
}

#[test]
fn single_precision_model_tracks_double() {
    let clock = ClockTruth::<f32>::new(1e8, -32.0, 1.0).unwrap();
    let link = LinkTruth::<f32>::new(2.0, 5e-6).unwrap();
    let sched = SampleSchedule::<f32>::new(0.0, 1e-3, 100).unwrap();
    let s: RttSeriesF32 = generate_series(&sched, &clock, &link, &NoiseSpec::noiseless(), 0).unwrap();
    let clock64 = ClockTruth::new(1e8, -32.0, 1.0).unwrap();
    let link64 = LinkTruth::new(2.0, 5e-6).unwrap();
    let sched64 = SampleSchedule::new(0.0, 1e-3, 100).unwrap();
    let d = generate_series(&sched64, &clock64, &link64, &NoiseSpec::noiseless(), 0).unwrap();
    for (a, b) in s.values().iter().zip(d.values()) {
        // f32 resolves ~5e-13 s at 5 µs; the phase argument loses more
        assert!((*a as f64 - b).abs() < 1e-10, "{a} vs {b}");
    }
}
