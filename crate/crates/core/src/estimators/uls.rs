use crate::error::{Error, Result};
use crate::model::{model_residuals, KnownParams, RttSeries};
use crate::scalar::{wrap_two_pi, Real, SPEED_OF_LIGHT};

use super::{Diagnostics, Estimate, Method};

/// Removes `2π` jumps: the output starts at `z[0]`, stays congruent to `z`
/// modulo `2π`, and its consecutive differences lie in `(-π, π]`.
pub fn unwrap<T: Real>(z: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(z.len());
    let Some(&first) = z.first() else {
        return out;
    };
    let tau = T::TAU();
    let pi = T::PI();
    let mut acc = first;
    out.push(acc);
    for w in z.windows(2) {
        let d = w[1] - w[0];
        acc = acc + d - tau * ((d - pi) / tau).ceil();
        out.push(acc);
    }
    out
}

/// Unwrapped least squares.
///
/// The range comes from the record mean under the assumption that the
/// sawtooth averages to `T_m/2`. When the window does not span a whole number
/// of periods (or `f_d = 0`) that assumption fails and both `ρ̂` and `φ̂` pick up
/// a bias of up to `c·T_m/4` in range and `π` in phase.
pub fn uls_estimate<T: Real>(series: &RttSeries<T>, known: &KnownParams<T>) -> Result<Estimate<T>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let two = T::lit(2.0);
    let c = T::lit(SPEED_OF_LIGHT);
    let t_m = known.master_period;

    let mean = series.mean();
    let rho_hat = c / two * (mean - t_m / two - known.delta0);

    let scale = T::TAU() / t_m;
    let z: Vec<T> = series.values().iter().map(|&y| scale * (y - mean)).collect();
    let u = unwrap(&z);

    let (slope, intercept) = fit_line(series.times(), &u);
    let f_d_hat = slope / T::TAU();
    // centering subtracted the assumed mean phase π; add it back
    let phi_hat = wrap_two_pi(intercept + T::PI());

    let residuals = model_residuals(series, f_d_hat, phi_hat, rho_hat, known);
    Ok(Estimate {
        f_d_hat,
        phi_hat,
        rho_hat,
        method: Method::Uls,
        diagnostics: Diagnostics {
            residuals,
            weights: None,
            n_used: n,
            n_downweighted: 0,
            degenerate: false,
        },
    })
}

/// Ordinary least-squares line `u ≈ slope·t + intercept`, intercept at `t = 0`.
fn fit_line<T: Real>(t: &[T], u: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(t.len());
    let t_mean = t.iter().copied().sum::<T>() / n;
    let u_mean = u.iter().copied().sum::<T>() / n;
    let (sxy, sxx) = t.iter().zip(u).fold((T::zero(), T::zero()), |(sxy, sxx), (&ti, &ui)| {
        let dt = ti - t_mean;
        (sxy + dt * (ui - u_mean), sxx + dt * dt)
    });
    let slope = sxy / sxx;
    (slope, u_mean - slope * t_mean)
}
