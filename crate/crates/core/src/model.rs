//! Forward measurement model for two-way round-trip-time records.
//!
//! A master pings a slave that answers after counting a fixed number of its
//! own clock cycles. Because the slave only starts counting on its next clock
//! edge, every RTT carries a sub-period wait that drifts as the two clocks
//! slip past each other. Sampled periodically, the RTT record is a sawtooth
//! of amplitude `T_m` riding on `δ₀ + 2ρ/c`:
//!
//! ```text
//! y(t) = (T_m / 2π) · mod_2π(2π·f_d·t + φ + v(t)) + δ₀ + 2ρ/c + n(t)
//! ```
//!
//! The phase argument carries an explicit `2π` so that the waveform repeats
//! every `1/|f_d|` seconds.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{wrap_two_pi, Real, SPEED_OF_LIGHT};

/// Relative frequency difference above which the small-`f_d` approximations
/// start to bend.
pub const FD_RATIO_WARN: f64 = 1e-3;

/// Clock parameters of the master/slave pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockTruth<T> {
    /// Master clock frequency, Hz.
    pub f_m: T,
    /// Frequency difference `f_m - f_s`, Hz.
    pub f_d: T,
    /// Relative clock offset, radians in `[0, 2π)`.
    pub phi: T,
}

impl<T: Real> ClockTruth<T> {
    pub fn new(f_m: T, f_d: T, phi: T) -> Result<Self> {
        if !(f_m > T::zero()) || !f_m.is_finite() {
            return Err(Error::config(format!("master frequency must be positive, got {f_m}")));
        }
        if !f_d.is_finite() || f_d.abs() >= f_m {
            return Err(Error::config(format!("|f_d| must be below f_m, got f_d = {f_d}")));
        }
        if !(phi >= T::zero() && phi < T::TAU()) {
            return Err(Error::config(format!("phase must lie in [0, 2π), got {phi}")));
        }
        if (f_d / f_m).abs() > T::lit(FD_RATIO_WARN) {
            warn!(
                "|f_d|/f_m = {:e} exceeds {:e}; the constant-delay approximation degrades",
                (f_d / f_m).abs(),
                FD_RATIO_WARN
            );
        }
        Ok(ClockTruth { f_m, f_d, phi })
    }

    /// Master clock period `T_m = 1/f_m`.
    pub fn master_period(&self) -> T {
        self.f_m.recip()
    }

    pub fn slave_frequency(&self) -> T {
        self.f_m - self.f_d
    }

    pub fn with_phase(self, phi: T) -> Self {
        ClockTruth { phi: wrap_two_pi(phi), ..self }
    }
}

/// Geometry and nominal slave delay of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTruth<T> {
    /// Master-slave range, m.
    pub rho: T,
    /// Nominal slave delay, s.
    pub delta0: T,
}

impl<T: Real> LinkTruth<T> {
    pub fn new(rho: T, delta0: T) -> Result<Self> {
        if !(rho >= T::zero()) || !rho.is_finite() {
            return Err(Error::config(format!("range must be non-negative, got {rho}")));
        }
        if !(delta0 > T::zero()) || !delta0.is_finite() {
            return Err(Error::config(format!("slave delay must be positive, got {delta0}")));
        }
        Ok(LinkTruth { rho, delta0 })
    }

    /// Two-way flight time `2ρ/c`.
    pub fn flight_time(&self) -> T {
        T::lit(2.0) * self.rho / T::lit(SPEED_OF_LIGHT)
    }
}

/// Uniform measurement schedule `t_i = t0 + i·Ts`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSchedule<T> {
    pub t0: T,
    pub ts: T,
    pub n: usize,
}

impl<T: Real> SampleSchedule<T> {
    pub fn new(t0: T, ts: T, n: usize) -> Result<Self> {
        let s = SampleSchedule { t0, ts, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > T::zero()) || !self.ts.is_finite() {
            return Err(Error::config(format!("update period must be positive, got {}", self.ts)));
        }
        if !self.t0.is_finite() {
            return Err(Error::config("first sample time must be finite"));
        }
        if self.n < 2 {
            return Err(Error::config(format!("schedule needs at least 2 samples, got {}", self.n)));
        }
        Ok(())
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + T::from_usize_lossy(i) * self.ts
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n).map(|i| self.time(i)).collect()
    }
}

/// Zero-mean Gaussian noise levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    /// Clock jitter standard deviation, rad.
    pub sigma_v: T,
    /// Channel noise standard deviation, s.
    pub sigma_n: T,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(sigma_v: T, sigma_n: T) -> Result<Self> {
        if !(sigma_v >= T::zero()) || !(sigma_n >= T::zero()) {
            return Err(Error::config("noise standard deviations must be non-negative"));
        }
        Ok(NoiseSpec { sigma_v, sigma_n })
    }

    pub fn noiseless() -> Self {
        NoiseSpec { sigma_v: T::zero(), sigma_n: T::zero() }
    }

    /// Builds the noise levels from channel and jitter SNRs in dB.
    /// `+∞` dB yields a zero standard deviation.
    pub fn from_snr(snr_c_db: T, snr_j_db: T, master_period: T) -> Self {
        let (sigma_n, sigma_v) = snr_to_sigma(snr_c_db, snr_j_db, master_period);
        NoiseSpec { sigma_v, sigma_n }
    }

    /// Inverse of [`NoiseSpec::from_snr`]: `(SNR_c, SNR_j)` in dB.
    pub fn to_snr(&self, master_period: T) -> (T, T) {
        sigma_to_snr(self.sigma_n, self.sigma_v, master_period)
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_v == T::zero() && self.sigma_n == T::zero()
    }
}

/// `SNR_c = 10·log10(T_m²/σ_n²)`, `SNR_j = 10·log10((2π)²/σ_v²)`.
/// Returns `(σ_n, σ_v)`.
pub fn snr_to_sigma<T: Real>(snr_c_db: T, snr_j_db: T, master_period: T) -> (T, T) {
    let ten = T::lit(10.0);
    let twenty = T::lit(20.0);
    let sigma_n = master_period * ten.powf(-snr_c_db / twenty);
    let sigma_v = T::TAU() * ten.powf(-snr_j_db / twenty);
    (sigma_n, sigma_v)
}

/// Returns `(SNR_c, SNR_j)` in dB for the given standard deviations.
pub fn sigma_to_snr<T: Real>(sigma_n: T, sigma_v: T, master_period: T) -> (T, T) {
    let twenty = T::lit(20.0);
    (twenty * (master_period / sigma_n).log10(), twenty * (T::TAU() / sigma_v).log10())
}

/// The parameters every estimator is told: master period and nominal delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownParams<T> {
    pub master_period: T,
    pub delta0: T,
}

impl<T: Real> KnownParams<T> {
    pub fn new(master_period: T, delta0: T) -> Result<Self> {
        if !(master_period > T::zero()) || !(delta0 > T::zero()) {
            return Err(Error::config("master period and nominal delay must be positive"));
        }
        Ok(KnownParams { master_period, delta0 })
    }

    pub fn from_truth(clock: &ClockTruth<T>, link: &LinkTruth<T>) -> Self {
        KnownParams { master_period: clock.master_period(), delta0: link.delta0 }
    }
}

/// Sawtooth `(T_m/2π)·mod_2π(2π·f_d·t + φ)`, always in `[0, T_m)`.
#[inline]
pub fn sawtooth<T: Real>(t: T, f_d: T, phi: T, master_period: T) -> T {
    let arg = wrap_two_pi(T::TAU() * f_d * t + phi);
    let h = master_period * arg / T::TAU();
    if h >= master_period {
        T::zero()
    } else {
        h
    }
}

/// Sub-period wait at time `t` with jitter `v` (radians).
pub fn remainder_h<T: Real>(t: T, clock: &ClockTruth<T>, v: T) -> T {
    sawtooth(t, clock.f_d, clock.phi + v, clock.master_period())
}

/// Whole-cycle count of `x`, treating values within 1e-9 of an integer as
/// that integer so that decimal inputs like `5e-6 · 1e8` count 500 cycles.
fn whole_cycles<T: Real>(x: T) -> T {
    let r = x.round();
    if (x - r).abs() <= T::lit(1e-9) * x.abs().max(T::one()) {
        r
    } else {
        x.floor()
    }
}

/// Slave delay approximated with the master frequency: `⌊span·f_m⌋ / f_m`.
pub fn nominal_delay<T: Real>(span: T, clock: &ClockTruth<T>) -> T {
    whole_cycles(span * clock.f_m) / clock.f_m
}

/// Slave delay counted with the true slave frequency `f_m - f_d`.
pub fn nominal_delay_exact<T: Real>(span: T, clock: &ClockTruth<T>) -> T {
    let f_s = clock.slave_frequency();
    whole_cycles(span * f_s) / f_s
}

/// One RTT sample with jitter `v` (rad) and channel noise `n` (s).
pub fn rtt_sample<T: Real>(t: T, clock: &ClockTruth<T>, link: &LinkTruth<T>, v: T, n: T) -> T {
    remainder_h(t, clock, v) + link.delta0 + link.flight_time() + n
}

/// Generates a noisy record with a ChaCha stream seeded from `seed`.
pub fn generate_series<T: Real>(
    schedule: &SampleSchedule<T>,
    clock: &ClockTruth<T>,
    link: &LinkTruth<T>,
    noise: &NoiseSpec<T>,
    seed: u64,
) -> Result<RttSeries<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_series_with(schedule, clock, link, noise, &mut rng)
}

/// As [`generate_series`], drawing from a caller-supplied generator.
/// Each sample consumes two standard normals: jitter first, then channel noise.
pub fn generate_series_with<T: Real, R: Rng + ?Sized>(
    schedule: &SampleSchedule<T>,
    clock: &ClockTruth<T>,
    link: &LinkTruth<T>,
    noise: &NoiseSpec<T>,
    rng: &mut R,
) -> Result<RttSeries<T>> {
    schedule.validate()?;
    if !(link.flight_time() < schedule.ts) {
        return Err(Error::config("round-trip flight time must be shorter than the update period"));
    }
    let times = schedule.times();
    let values = times
        .iter()
        .map(|&t| {
            let zv: f64 = rng.sample(StandardNormal);
            let zn: f64 = rng.sample(StandardNormal);
            let v = noise.sigma_v * T::lit(zv);
            let n = noise.sigma_n * T::lit(zn);
            rtt_sample(t, clock, link, v, n)
        })
        .collect();
    RttSeries::new(times, values)
}

/// Residuals `y - h(f_d, φ, 0) - δ₀ - 2ρ/c` for a fitted parameter set.
pub fn model_residuals<T: Real>(
    series: &RttSeries<T>,
    f_d: T,
    phi: T,
    rho: T,
    known: &KnownParams<T>,
) -> Vec<T> {
    let offset = known.delta0 + T::lit(2.0) * rho / T::lit(SPEED_OF_LIGHT);
    series
        .iter()
        .map(|(t, y)| y - sawtooth(t, f_d, phi, known.master_period) - offset)
        .collect()
}

/// Paired sample times and RTT values, both in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RttSeries<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> RttSeries<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::series(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::series(format!("time at index {i} is not finite")));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::series(format!("times not strictly increasing at index {}", i + 1)));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(Error::series(format!("value at index {i} is not finite")));
        }
        Ok(RttSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Same times, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        RttSeries::new(self.times.clone(), values)
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.len())
    }

    /// Sampling period if the times are uniform to within `1e-9` of a step.
    pub fn uniform_step(&self) -> Option<T> {
        if self.len() < 2 {
            return None;
        }
        let n = self.len();
        let step = (self.times[n - 1] - self.times[0]) / T::from_usize_lossy(n - 1);
        let tol = step * T::lit(1e-9);
        let uniform = self
            .times
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - (self.times[0] + T::from_usize_lossy(i) * step)).abs() <= tol);
        uniform.then_some(step)
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<T>) {
        (self.times, self.values)
    }
}
