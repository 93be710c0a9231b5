//! Monte Carlo evaluation: RMSE of every estimator over sweeps of channel
//! SNR, jitter SNR, record length, outlier fraction or frequency difference.
//!
//! Each trial draws a uniform phase, generates a record, optionally replaces
//! a fraction of it with outliers, and runs the selected estimators. ULS and
//! PCP see the record after [`preprocess_outliers`]; WLS sees the raw record
//! with [`robust_weights`].
//!
//! Trial `(s, i)` of sweep value `s` draws from ChaCha stream
//! `s·2³² + i` under the master seed, so results do not depend on thread
//! count or scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis_io::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::{
    pcp_estimate, phase_error, preprocess_outliers, robust_weights, uls_estimate, wls_estimate,
    Estimate, Method, SearchGrids,
};
use crate::model::{
    generate_series_with, ClockTruth, KnownParams, LinkTruth, NoiseSpec, RttSeries, SampleSchedule,
};

/// Default outlier value interval, seconds.
pub const OUTLIER_INTERVAL: (f64, f64) = (3.5e-6, 4.9e-6);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierSpec {
    /// Fraction of samples replaced, in `[0, 1]`.
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
}

impl OutlierSpec {
    pub fn new(fraction: f64, lo: f64, hi: f64) -> Result<Self> {
        let s = OutlierSpec { fraction, lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn none() -> Self {
        OutlierSpec { fraction: 0.0, lo: OUTLIER_INTERVAL.0, hi: OUTLIER_INTERVAL.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::config(format!("outlier fraction {} outside [0, 1]", self.fraction)));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::config("outlier interval needs lo < hi"));
        }
        Ok(())
    }

    /// Number of replaced samples in a record of `n`: `round(fraction·n)`.
    pub fn count(&self, n: usize) -> usize {
        ((self.fraction * n as f64).round() as usize).min(n)
    }
}

/// Replaces `round(fraction·N)` uniformly chosen samples with values drawn
/// uniformly from `[lo, hi]`. Returns the new record and the sorted indices.
pub fn inject_outliers<R: Rng + ?Sized>(
    series: &RttSeries<f64>,
    spec: &OutlierSpec,
    rng: &mut R,
) -> Result<(RttSeries<f64>, Vec<usize>)> {
    spec.validate()?;
    let count = spec.count(series.len());
    if count == 0 {
        return Ok((series.clone(), Vec::new()));
    }
    let mut idx = sample(rng, series.len(), count).into_vec();
    idx.sort_unstable();
    let mut values = series.values().to_vec();
    for &i in &idx {
        values[i] = rng.random_range(spec.lo..=spec.hi);
    }
    Ok((series.with_values(values)?, idx))
}

/// [`inject_outliers`] with its own seeded generator.
pub fn inject_outliers_seeded(
    series: &RttSeries<f64>,
    spec: &OutlierSpec,
    seed: u64,
) -> Result<(RttSeries<f64>, Vec<usize>)> {
    inject_outliers(series, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SnrC,
    SnrJ,
    SampleCount,
    OutlierFraction,
    FreqDiff,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::SnrC => "snr_c",
            SweepAxis::SnrJ => "snr_j",
            SweepAxis::SampleCount => "n",
            SweepAxis::OutlierFraction => "outlier_fraction",
            SweepAxis::FreqDiff => "f_d",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_c" => Ok(SweepAxis::SnrC),
            "snr_j" => Ok(SweepAxis::SnrJ),
            "n" => Ok(SweepAxis::SampleCount),
            "outlier_fraction" => Ok(SweepAxis::OutlierFraction),
            "f_d" => Ok(SweepAxis::FreqDiff),
            other => Err(Error::config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Full description of a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub f_m: f64,
    pub f_d: f64,
    pub rho: f64,
    pub delta0: f64,
    pub t0: f64,
    pub ts: f64,
    pub n: usize,
    pub snr_c_db: f64,
    pub snr_j_db: f64,
    pub outliers: OutlierSpec,
    pub iterations: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub phase_points: usize,
    pub refine: bool,
    /// `None` searches up to the Nyquist frequency.
    pub f_max: Option<f64>,
}

impl Default for ExperimentConfig {
    /// 100 MHz master, `f_d = -32 Hz`, 2 m, 5 µs slave delay, 1 kHz updates,
    /// 100 samples, 40 dB channel and jitter SNR, 1000 iterations.
    fn default() -> Self {
        ExperimentConfig {
            f_m: 1e8,
            f_d: -32.0,
            rho: 2.0,
            delta0: 5e-6,
            t0: 0.0,
            ts: 1e-3,
            n: 100,
            snr_c_db: 40.0,
            snr_j_db: 40.0,
            outliers: OutlierSpec::none(),
            iterations: 1000,
            seed: 0,
            estimators: Method::ALL.to_vec(),
            axis: SweepAxis::SnrC,
            values: vec![40.0],
            phase_points: crate::estimators::DEFAULT_PHASE_POINTS,
            refine: true,
            f_max: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::config("iteration count must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("no estimators selected"));
        }
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep values must be finite"));
        }
        if self.values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("sweep values must be sorted ascending"));
        }
        for &v in &self.values {
            let c = self.at(v)?;
            ClockTruth::new(c.f_m, c.f_d, 0.0)?;
            LinkTruth::new(c.rho, c.delta0)?;
            SampleSchedule::new(c.t0, c.ts, c.n)?;
            c.outliers.validate()?;
            if c.snr_c_db.is_nan() || c.snr_j_db.is_nan() {
                return Err(Error::config("SNR must not be NaN"));
            }
        }
        Ok(())
    }

    /// Copy of the configuration with the sweep axis set to `value`.
    pub fn at(&self, value: f64) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        match self.axis {
            SweepAxis::SnrC => c.snr_c_db = value,
            SweepAxis::SnrJ => c.snr_j_db = value,
            SweepAxis::FreqDiff => c.f_d = value,
            SweepAxis::OutlierFraction => c.outliers.fraction = value,
            SweepAxis::SampleCount => {
                if value < 2.0 || value.fract() != 0.0 {
                    return Err(Error::config(format!("sample count {value} is not an integer ≥ 2")));
                }
                c.n = value as usize;
            }
        }
        Ok(c)
    }
}

/// Generator for trial `iteration` of sweep point `sweep_index`.
pub fn trial_rng(master_seed: u64, sweep_index: usize, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((sweep_index as u64) << 32) | iteration as u64);
    rng
}

/// Signed estimation errors of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialErrors {
    /// `f̂_d - f_d`, Hz.
    pub f_d: f64,
    /// Wrapped phase error, rad in `(-π, π]`.
    pub phi_rad: f64,
    /// Phase error in seconds of master clock.
    pub phi_s: f64,
    /// `ρ̂ - ρ`, m.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub phi_true: f64,
    pub outlier_indices: Vec<usize>,
    /// One entry per configured estimator, in configuration order.
    pub results: Vec<(Method, std::result::Result<TrialErrors, String>)>,
}

/// Runs every configured estimator on one synthetic record. Estimator
/// failures are recorded, not propagated.
pub fn run_trial<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<TrialOutcome> {
    let phi_true = rng.random_range(0.0..std::f64::consts::TAU);
    let clock = ClockTruth::new(cfg.f_m, cfg.f_d, phi_true)?;
    let link = LinkTruth::new(cfg.rho, cfg.delta0)?;
    let schedule = SampleSchedule::new(cfg.t0, cfg.ts, cfg.n)?;
    let noise = NoiseSpec::from_snr(cfg.snr_c_db, cfg.snr_j_db, clock.master_period());
    let clean = generate_series_with(&schedule, &clock, &link, &noise, rng)?;
    let (series, outlier_indices) = inject_outliers(&clean, &cfg.outliers, rng)?;

    let known = KnownParams::from_truth(&clock, &link);
    let mut grids = SearchGrids::for_series(&series)?
        .with_phase_points(cfg.phase_points)
        .with_refine(cfg.refine);
    if let Some(f_max) = cfg.f_max {
        grids = grids.with_f_max(f_max);
    }

    let results = cfg
        .estimators
        .iter()
        .map(|&m| {
            let est = run_estimator(m, &series, &known, &grids);
            let errs = est
                .map(|e| TrialErrors {
                    f_d: e.f_d_hat - cfg.f_d,
                    phi_rad: phase_error(e.phi_hat, phi_true),
                    phi_s: phase_error(e.phi_hat, phi_true) * clock.master_period()
                        / std::f64::consts::TAU,
                    rho: e.rho_hat - cfg.rho,
                })
                .map_err(|e| e.to_string());
            (m, errs)
        })
        .collect();
    Ok(TrialOutcome { phi_true, outlier_indices, results })
}

/// One estimator with the input conditioning used in the evaluation protocol.
pub fn run_estimator(
    method: Method,
    series: &RttSeries<f64>,
    known: &KnownParams<f64>,
    grids: &SearchGrids<f64>,
) -> Result<Estimate<f64>> {
    match method {
        Method::Uls => uls_estimate(&preprocess_outliers(series)?.series, known),
        Method::Pcp => pcp_estimate(&preprocess_outliers(series)?.series, known, grids),
        Method::Wls => wls_estimate(series, known, grids, &robust_weights(series)?),
    }
}

/// Root mean square and box-plot percentiles of a signed error sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSummary {
    pub rmse: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
}

impl ErrorSummary {
    pub fn from_errors(errors: &[f64]) -> Self {
        if errors.is_empty() {
            let nan = f64::NAN;
            return ErrorSummary { rmse: nan, p25: nan, p50: nan, p75: nan, min: nan, max: nan };
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        ErrorSummary {
            rmse,
            p25: quantile_sorted(&sorted, 0.25),
            p50: quantile_sorted(&sorted, 0.5),
            p75: quantile_sorted(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub estimator: Method,
    pub f_d: ErrorSummary,
    pub phi_s: ErrorSummary,
    pub rho: ErrorSummary,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn row(&self, sweep_value: f64, estimator: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.sweep_value == sweep_value && r.estimator == estimator)
    }

    pub const CSV_HEADER: &'static str = "sweep_axis,sweep_value,estimator,\
rmse_fd_hz,rmse_phi_s,rmse_rho_m,\
fd_p25,fd_p50,fd_p75,fd_min,fd_max,\
phi_p25,phi_p50,phi_p75,phi_min,phi_max,\
rho_p25,rho_p50,rho_p75,rho_min,rho_max,n_failed";

    /// Tidy CSV, one row per sweep value and estimator.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let mut fields = vec![
                self.axis.to_string(),
                fmt_f64(r.sweep_value),
                r.estimator.to_string(),
                fmt_f64(r.f_d.rmse),
                fmt_f64(r.phi_s.rmse),
                fmt_f64(r.rho.rmse),
            ];
            for s in [&r.f_d, &r.phi_s, &r.rho] {
                fields.extend([s.p25, s.p50, s.p75, s.min, s.max].map(fmt_f64));
            }
            fields.push(r.n_failed.to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Runs `iterations` trials at every sweep value.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (si, &value) in cfg.values.iter().enumerate() {
        let point = cfg.at(value)?;
        let outcomes: Vec<TrialOutcome> = (0..cfg.iterations)
            .into_par_iter()
            .map(|it| run_trial(&point, &mut trial_rng(cfg.seed, si, it)))
            .collect::<Result<_>>()?;
        for (ei, &method) in cfg.estimators.iter().enumerate() {
            let ok: Vec<TrialErrors> = outcomes
                .iter()
                .filter_map(|o| o.results[ei].1.as_ref().ok().copied())
                .collect();
            let n_failed = outcomes.len() - ok.len();
            if n_failed > 0 {
                log::warn!("{method} failed in {n_failed} of {} trials at {value}", outcomes.len());
            }
            let pick = |f: fn(&TrialErrors) -> f64| ok.iter().map(f).collect::<Vec<_>>();
            rows.push(SweepRow {
                sweep_value: value,
                estimator: method,
                f_d: ErrorSummary::from_errors(&pick(|e| e.f_d)),
                phi_s: ErrorSummary::from_errors(&pick(|e| e.phi_s)),
                rho: ErrorSummary::from_errors(&pick(|e| e.rho)),
                n_failed,
            });
        }
    }
    Ok(SweepReport { axis: cfg.axis, rows })
}
