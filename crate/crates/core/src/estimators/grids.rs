use crate::error::{Error, Result};
use crate::model::RttSeries;
use crate::scalar::Real;

pub const DEFAULT_PHASE_POINTS: usize = 512;

/// Local refinement searches a grid this many times finer than the coarse one.
pub const REFINE_FACTOR: usize = 10;

/// Uniform frequency and phase search grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrids<T> {
    /// Largest searched `|f_d|`, Hz.
    pub f_max: T,
    /// Frequency spacing, Hz.
    pub freq_step: T,
    /// Number of phases in `[0, 2π)`.
    pub phase_points: usize,
    /// Re-search a `REFINE_FACTOR`-times finer local grid around the coarse optimum.
    pub refine: bool,
}

impl<T: Real> SearchGrids<T> {
    /// Defaults for a record: spacing `1/(4·N·Ts)`, Nyquist `f_max`, 512 phases, refinement on.
    pub fn for_series(series: &RttSeries<T>) -> Result<Self> {
        let ts = sampling_period(series)?;
        let n = T::from_usize_lossy(series.len());
        Ok(SearchGrids {
            f_max: (T::lit(2.0) * ts).recip(),
            freq_step: (T::lit(4.0) * n * ts).recip(),
            phase_points: DEFAULT_PHASE_POINTS,
            refine: true,
        })
    }

    pub fn with_f_max(mut self, f_max: T) -> Self {
        self.f_max = f_max;
        self
    }

    pub fn with_phase_points(mut self, points: usize) -> Self {
        self.phase_points = points;
        self
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    /// Checks spacings and that `f_max` stays at or below the record's Nyquist frequency.
    pub fn validate_for(&self, series: &RttSeries<T>) -> Result<()> {
        if !(self.freq_step > T::zero()) || !self.freq_step.is_finite() {
            return Err(Error::config("frequency step must be positive"));
        }
        if !(self.f_max >= self.freq_step) || !self.f_max.is_finite() {
            return Err(Error::config("f_max must be at least one frequency step"));
        }
        if self.phase_points < 2 {
            return Err(Error::config("phase grid needs at least 2 points"));
        }
        let nyquist = (T::lit(2.0) * sampling_period(series)?).recip();
        if self.f_max > nyquist * (T::one() + T::lit(1e-9)) {
            return Err(Error::config(format!(
                "f_max = {} exceeds the Nyquist frequency {}",
                self.f_max, nyquist
            )));
        }
        Ok(())
    }

    /// Number of positive grid frequencies, `⌊f_max / step⌋`.
    pub fn freq_count(&self) -> usize {
        (self.f_max / self.freq_step + T::lit(1e-9)).floor().to_usize().unwrap_or(0)
    }

    /// Grid over `[-f_max, f_max]`, ascending, including zero.
    pub fn symmetric_frequencies(&self) -> Vec<T> {
        let k = self.freq_count() as i64;
        (-k..=k).map(|i| T::lit(i as f64) * self.freq_step).collect()
    }

    /// Grid over `(0, f_max]`, ascending; the zero bin is left out.
    pub fn positive_frequencies(&self) -> Vec<T> {
        (1..=self.freq_count()).map(|i| T::from_usize_lossy(i) * self.freq_step).collect()
    }

    pub fn phase_step(&self) -> T {
        T::TAU() / T::from_usize_lossy(self.phase_points)
    }

    pub fn phases(&self) -> Vec<T> {
        let step = self.phase_step();
        (0..self.phase_points).map(|j| T::from_usize_lossy(j) * step).collect()
    }

    /// Frequency resolution delivered by the search, coarse or refined.
    pub fn effective_freq_step(&self) -> T {
        if self.refine {
            self.freq_step / T::from_usize_lossy(REFINE_FACTOR)
        } else {
            self.freq_step
        }
    }

    pub fn effective_phase_step(&self) -> T {
        if self.refine {
            self.phase_step() / T::from_usize_lossy(REFINE_FACTOR)
        } else {
            self.phase_step()
        }
    }
}

/// Uniform step when there is one, otherwise the mean spacing.
pub(crate) fn sampling_period<T: Real>(series: &RttSeries<T>) -> Result<T> {
    if series.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: series.len() });
    }
    Ok(series.uniform_step().unwrap_or_else(|| {
        let t = series.times();
        (t[t.len() - 1] - t[0]) / T::from_usize_lossy(t.len() - 1)
    }))
}

/// Offsets `-1, -0.9, …, 0.9, 1` (in units of one coarse step) for local refinement.
pub(crate) fn refine_offsets<T: Real>() -> impl Iterator<Item = T> {
    let r = REFINE_FACTOR as i64;
    (-r..=r).map(move |k| T::lit(k as f64) / T::lit(r as f64))
}
