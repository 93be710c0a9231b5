use crate::error::{Error, Result};
use crate::model::{model_residuals, sawtooth, KnownParams, RttSeries};
use crate::scalar::{wrap_two_pi, Real, SPEED_OF_LIGHT};

use super::grids::{refine_offsets, SearchGrids, REFINE_FACTOR};
use super::robust::WeightVector;
use super::{Diagnostics, Estimate, Method};

/// Concentrated weighted cost `‖w^½ ⊙ r‖² - (wᵀr)²/(1ᵀw)` with
/// `r = y - h(f_d, φ, 0) - δ₀`, i.e. the weighted cost after the range has
/// been minimized out.
///
/// Evaluated as the weighted sum of squares about the weighted mean of `r`,
/// which is the same quantity without the cancellation of the two-term form.
pub fn wls_cost<T: Real>(
    f_d: T,
    phi: T,
    series: &RttSeries<T>,
    known: &KnownParams<T>,
    w: &WeightVector<T>,
) -> Result<T> {
    check_weights(series, w)?;
    Ok(direct_cost(f_d, phi, series.times(), series.values(), known, w.as_slice(), w.sum()))
}

fn check_weights<T: Real>(series: &RttSeries<T>, w: &WeightVector<T>) -> Result<()> {
    if w.len() != series.len() {
        return Err(Error::config(format!(
            "{} weights for {} samples",
            w.len(),
            series.len()
        )));
    }
    if !(w.sum() > T::zero()) {
        return Err(Error::ZeroWeights);
    }
    Ok(())
}

fn direct_cost<T: Real>(
    f_d: T,
    phi: T,
    t: &[T],
    y: &[T],
    known: &KnownParams<T>,
    w: &[T],
    w_sum: T,
) -> T {
    let residual =
        |i: usize| y[i] - sawtooth(t[i], f_d, phi, known.master_period) - known.delta0;
    let mean = (0..t.len()).map(|i| w[i] * residual(i)).sum::<T>() / w_sum;
    (0..t.len())
        .map(|i| {
            let d = residual(i) - mean;
            w[i] * d * d
        })
        .sum()
}

/// Robust weighted least squares over the frequency/phase grid.
///
/// `(f̂_d, φ̂)` minimize [`wls_cost`] over `[-f_max, f_max] × [0, 2π)` with
/// lowest-index tie breaking (lowest frequency, then lowest phase); with
/// `grids.refine` set the optimum is then re-searched on a ten-times finer
/// local grid. The range follows in closed form as the weighted mean
/// residual scaled by `c/2`.
pub fn wls_estimate<T: Real>(
    series: &RttSeries<T>,
    known: &KnownParams<T>,
    grids: &SearchGrids<T>,
    w: &WeightVector<T>,
) -> Result<Estimate<T>> {
    if series.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: series.len() });
    }
    grids.validate_for(series)?;
    check_weights(series, w)?;

    let t = series.times();
    let y = series.values();
    let w_sum = w.sum();
    let freqs = grids.symmetric_frequencies();
    let phase_step = grids.phase_step();

    let mut sweep = PhaseSweep::new(t, y, w.as_slice(), known, grids.phase_points);
    let mut best = (T::infinity(), 0usize, 0usize);
    for (fi, &f) in freqs.iter().enumerate() {
        let (j, cost) = sweep.best_phase(f, phase_step);
        if cost < best.0 {
            best = (cost, fi, j);
        }
    }
    let mut f_hat = freqs[best.1];
    let mut phi_hat = T::from_usize_lossy(best.2) * phase_step;

    if grids.refine {
        // frequency and phase errors are coupled (a frequency offset tilts the
        // best phase by about 2π·δf·t_mid), so every refined frequency gets a
        // full sweep over the finer phase grid
        let fine_points = grids.phase_points * REFINE_FACTOR;
        let fine_step = T::TAU() / T::from_usize_lossy(fine_points);
        let mut fine = PhaseSweep::new(t, y, w.as_slice(), known, fine_points);
        let f0 = f_hat;
        let mut best_cost = T::infinity();
        for df in refine_offsets::<T>() {
            let f = f0 + df * grids.freq_step;
            let (j, cost) = fine.best_phase(f, fine_step);
            if cost < best_cost {
                best_cost = cost;
                f_hat = f;
                phi_hat = T::from_usize_lossy(j) * fine_step;
            }
        }
    }

    let weighted_residual = t
        .iter()
        .zip(y)
        .zip(w.as_slice())
        .map(|((&ti, &yi), &wi)| {
            wi * (yi - sawtooth(ti, f_hat, phi_hat, known.master_period) - known.delta0)
        })
        .sum::<T>();
    let rho_hat = T::lit(SPEED_OF_LIGHT) * weighted_residual / (T::lit(2.0) * w_sum);

    let n_used = w.count_nonzero();
    let residuals = model_residuals(series, f_hat, phi_hat, rho_hat, known);
    Ok(Estimate {
        f_d_hat: f_hat,
        phi_hat,
        rho_hat,
        method: Method::Wls,
        diagnostics: Diagnostics {
            residuals,
            weights: Some(w.clone()),
            n_used,
            n_downweighted: series.len() - n_used,
            degenerate: w.is_fallback(),
        },
    })
}

/// Index of the first phase-grid point at which `theta + j·step` reaches `2π`,
/// for `theta` in `[0, 2π)`. Ranges over `0..=points`.
pub(super) fn wrap_index<T: Real>(theta: T, step: T, points: usize) -> usize {
    ((T::TAU() - theta) / step).ceil().to_usize().unwrap_or(0).min(points)
}

/// Evaluates the concentrated cost over the whole phase grid for one
/// frequency in `O(N + P)`.
///
/// With `θᵢ = 2π·f·tᵢ mod 2π` and `φⱼ = j·Δφ`, the sawtooth at sample `i` is
/// `θᵢ + φⱼ` until `φⱼ` crosses `2π - θᵢ`, after which it drops by `2π`. The
/// residual is therefore affine in `φⱼ` plus a `T_m` step, and the weighted
/// first and second moments follow from running sums over the samples that
/// have wrapped.
struct PhaseSweep<'a, T> {
    t: &'a [T],
    w: &'a [T],
    /// `y - δ₀` minus its weighted mean, for conditioning.
    base: Vec<T>,
    master_period: T,
    w_sum: T,
    w_bins: Vec<T>,
    a_bins: Vec<T>,
}

impl<'a, T: Real> PhaseSweep<'a, T> {
    fn new(t: &'a [T], y: &[T], w: &'a [T], known: &KnownParams<T>, points: usize) -> Self {
        let w_sum: T = w.iter().copied().sum();
        let shift = y
            .iter()
            .zip(w)
            .map(|(&yi, &wi)| wi * (yi - known.delta0))
            .sum::<T>()
            / w_sum;
        let base = y.iter().map(|&yi| yi - known.delta0 - shift).collect();
        PhaseSweep {
            t,
            w,
            base,
            master_period: known.master_period,
            w_sum,
            w_bins: vec![T::zero(); points + 1],
            a_bins: vec![T::zero(); points + 1],
        }
    }

    /// Lowest-index minimizing phase index and its cost at frequency `f`.
    fn best_phase(&mut self, f: T, step: T) -> (usize, T) {
        let points = self.w_bins.len() - 1;
        let tm = self.master_period;
        let b = tm / T::TAU();
        self.w_bins.iter_mut().for_each(|x| *x = T::zero());
        self.a_bins.iter_mut().for_each(|x| *x = T::zero());

        let (mut sa, mut saa) = (T::zero(), T::zero());
        for i in 0..self.t.len() {
            let theta = wrap_two_pi(T::TAU() * f * self.t[i]);
            let a = self.base[i] - b * theta;
            let wi = self.w[i];
            if wi == T::zero() {
                continue;
            }
            sa = sa + wi * a;
            saa = saa + wi * a * a;
            let k = wrap_index(theta, step, points);
            self.w_bins[k] = self.w_bins[k] + wi;
            self.a_bins[k] = self.a_bins[k] + wi * a;
        }

        let sw = self.w_sum;
        let two = T::lit(2.0);
        let (mut ws, mut as_) = (T::zero(), T::zero());
        let mut best = (0usize, T::infinity());
        for j in 0..points {
            // no sample wraps at this step: the cost equals the previous one exactly
            if j > 0 && self.w_bins[j] == T::zero() {
                continue;
            }
            ws = ws + self.w_bins[j];
            as_ = as_ + self.a_bins[j];
            let bp = b * T::from_usize_lossy(j) * step;
            let s1 = sa - bp * sw + tm * ws;
            let s2 = saa - two * bp * sa + bp * bp * sw + two * tm * (as_ - bp * ws) + tm * tm * ws;
            let cost = s2 - s1 * s1 / sw;
            if cost < best.1 {
                best = (j, cost);
            }
        }
        best
    }
}
