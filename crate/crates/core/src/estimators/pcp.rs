use log::debug;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{model_residuals, sawtooth, KnownParams, RttSeries};
use crate::scalar::{wrap_two_pi, Real, SPEED_OF_LIGHT};

use super::grids::{refine_offsets, sampling_period, SearchGrids};
use super::wls::wrap_index;
use super::{Diagnostics, Estimate, Method};

/// `|Σ xᵢ e^{-j2π f tᵢ}|²` at each frequency by direct summation.
pub fn periodogram_direct<T: Real>(times: &[T], x: &[T], freqs: &[T]) -> Vec<T> {
    freqs
        .iter()
        .map(|&f| {
            let (re, im) = times.iter().zip(x).fold((T::zero(), T::zero()), |(re, im), (&t, &v)| {
                let arg = T::TAU() * f * t;
                (re + v * arg.cos(), im - v * arg.sin())
            });
            re * re + im * im
        })
        .collect()
}

/// Periodogram of the mean-removed record on the positive frequency grid.
/// Returns `(frequencies, power)`.
///
/// Uniformly sampled records whose grid spacing is `1/(L·Ts)` for an integer
/// `L ≥ N` go through a zero-padded FFT of length `L`; anything else is summed
/// directly.
pub fn periodogram<T: Real>(series: &RttSeries<T>, grids: &SearchGrids<T>) -> (Vec<T>, Vec<T>) {
    let x = centered(series);
    let freqs = grids.positive_frequencies();
    let power = match fft_length(series, grids) {
        Some(len) => {
            let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
            buf.resize(len, Complex::new(T::zero(), T::zero()));
            FftPlanner::new().plan_fft_forward(len).process(&mut buf);
            (1..=freqs.len()).map(|k| buf[k].norm_sqr()).collect()
        }
        None => {
            debug!("periodogram: direct summation over {} frequencies", freqs.len());
            periodogram_direct(series.times(), &x, &freqs)
        }
    };
    (freqs, power)
}

fn fft_length<T: Real>(series: &RttSeries<T>, grids: &SearchGrids<T>) -> Option<usize> {
    let ts = series.uniform_step()?;
    let ratio = (grids.freq_step * ts).recip();
    let len = ratio.round();
    if (ratio - len).abs() > T::lit(1e-9) * len {
        return None;
    }
    let len = len.to_usize()?;
    (len >= series.len() && grids.freq_count() <= len / 2).then_some(len)
}

fn centered<T: Real>(series: &RttSeries<T>) -> Vec<T> {
    let mean = series.mean();
    series.values().iter().map(|&y| y - mean).collect()
}

/// Periodogram and correlation peaks.
///
/// 1. `|f̂_d|` is the periodogram peak of the mean-removed record over
///    `(0, f_max]`.
/// 2. The phase and the sign of `f_d` maximize the correlation between the
///    mean-removed record and the sawtooth `mod_2π(2π·s·|f̂_d|·t + φ)`. The
///    signed correlation is used: on mean-removed data a sawtooth of the wrong
///    slope anti-correlates as strongly as the right one correlates.
/// 3. The range is the mean residual once the fitted sawtooth and `δ₀` are
///    removed.
///
/// A record with no variation at all has an empty spectrum; it yields
/// `f̂_d = φ̂ = 0` with `diagnostics.degenerate` set.
pub fn pcp_estimate<T: Real>(
    series: &RttSeries<T>,
    known: &KnownParams<T>,
    grids: &SearchGrids<T>,
) -> Result<Estimate<T>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    grids.validate_for(series)?;
    sampling_period(series)?;

    let t = series.times();
    let x = centered(series);
    let degenerate = series.values().iter().all(|&y| y == series.values()[0]);

    let (f_hat, phi_hat) = if degenerate {
        (T::zero(), T::zero())
    } else {
        let f_abs = peak_frequency(series, &x, grids);
        let (sign, phi) = correlation_peak(t, &x, f_abs, grids);
        (sign * f_abs, phi)
    };

    let offset = t
        .iter()
        .zip(series.values())
        .map(|(&ti, &yi)| yi - sawtooth(ti, f_hat, phi_hat, known.master_period) - known.delta0)
        .sum::<T>()
        / T::from_usize_lossy(n);
    let rho_hat = T::lit(SPEED_OF_LIGHT) / T::lit(2.0) * offset;

    let residuals = model_residuals(series, f_hat, phi_hat, rho_hat, known);
    Ok(Estimate {
        f_d_hat: f_hat,
        phi_hat,
        rho_hat,
        method: Method::Pcp,
        diagnostics: Diagnostics {
            residuals,
            weights: None,
            n_used: n,
            n_downweighted: 0,
            degenerate,
        },
    })
}

fn argmax<T: Real>(xs: impl IntoIterator<Item = T>) -> usize {
    let mut best = (0usize, T::neg_infinity());
    for (i, v) in xs.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn peak_frequency<T: Real>(series: &RttSeries<T>, x: &[T], grids: &SearchGrids<T>) -> T {
    let (freqs, power) = periodogram(series, grids);
    let coarse = freqs[argmax(power.iter().copied())];
    if !grids.refine {
        return coarse;
    }
    let local: Vec<T> = refine_offsets::<T>()
        .map(|d| coarse + d * grids.freq_step)
        .filter(|&f| f > T::zero())
        .collect();
    let power = periodogram_direct(series.times(), x, &local);
    local[argmax(power.iter().copied())]
}

/// Correlation `Σ xᵢ · mod_2π(θᵢ + φⱼ)` for every grid phase in `O(N + P)`.
fn phase_correlations<T: Real>(t: &[T], x: &[T], f: T, step: T, points: usize) -> Vec<T> {
    let mut bins = vec![T::zero(); points + 1];
    let mut base = T::zero();
    let mut total = T::zero();
    for (&ti, &xi) in t.iter().zip(x) {
        let theta = wrap_two_pi(T::TAU() * f * ti);
        base = base + xi * theta;
        total = total + xi;
        let k = wrap_index(theta, step, points);
        bins[k] = bins[k] + xi;
    }
    let mut wrapped = T::zero();
    (0..points)
        .map(|j| {
            wrapped = wrapped + bins[j];
            base + T::from_usize_lossy(j) * step * total - T::TAU() * wrapped
        })
        .collect()
}

fn direct_correlation<T: Real>(t: &[T], x: &[T], f: T, phi: T) -> T {
    t.iter().zip(x).map(|(&ti, &xi)| xi * wrap_two_pi(T::TAU() * f * ti + phi)).sum()
}

/// Returns `(ŝ, φ̂)`; signs are tried in the order `-1, +1`.
fn correlation_peak<T: Real>(t: &[T], x: &[T], f_abs: T, grids: &SearchGrids<T>) -> (T, T) {
    let step = grids.phase_step();
    let mut best = (T::neg_infinity(), -T::one(), T::zero());
    for sign in [-T::one(), T::one()] {
        let corr = phase_correlations(t, x, sign * f_abs, step, grids.phase_points);
        let j = argmax(corr.iter().copied());
        if corr[j] > best.0 {
            best = (corr[j], sign, T::from_usize_lossy(j) * step);
        }
    }
    let (_, sign, mut phi) = best;
    if grids.refine {
        let coarse = phi;
        let mut best_corr = T::neg_infinity();
        for d in refine_offsets::<T>() {
            let p = wrap_two_pi(coarse + d * step);
            let c = direct_correlation(t, x, sign * f_abs, p);
            if c > best_corr {
                best_corr = c;
                phi = p;
            }
        }
    }
    (sign, phi)
}
