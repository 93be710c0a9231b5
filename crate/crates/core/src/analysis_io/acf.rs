use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::model::{model_residuals, KnownParams, RttSeries};
use crate::scalar::Real;

/// Two-sided 99% normal quantile used for the white-noise bounds.
pub const ACF_BOUND_Z: f64 = 2.576;

/// Share of lags that must fall inside the bounds for a record to pass.
pub const ACF_PASS_FRACTION: f64 = 0.95;

/// Sample autocorrelation of a residual sequence against white-noise bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfReport<T> {
    /// Lags `0..=max_lag`.
    pub lags: Vec<usize>,
    /// Normalized autocorrelation; `acf[0] = 1`.
    pub acf: Vec<T>,
    /// Half-width `2.576/√N` of the white-noise band.
    pub bound: T,
    /// Share of lags `1..=max_lag` with `|acf| ≤ bound`.
    pub fraction_inside: T,
    pub n_samples: usize,
}

impl<T: Real> AcfReport<T> {
    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn is_inside(&self, lag: usize) -> bool {
        self.acf[lag].abs() <= self.bound
    }

    /// At least 95% of the nonzero lags fall inside the bounds.
    pub fn passes(&self) -> bool {
        self.fraction_inside >= T::lit(ACF_PASS_FRACTION)
    }
}

/// Biased (divide-by-`N`) autocorrelation of `x` after mean removal.
///
/// A sequence with no variation has no defined correlation; its lags beyond
/// zero are reported as 0.
pub fn acf<T: Real>(x: &[T], max_lag: usize) -> Result<AcfReport<T>> {
    let n = x.len();
    if max_lag == 0 || max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let nf = T::from_usize_lossy(n);
    let mean = x.iter().copied().sum::<T>() / nf;
    let d: Vec<T> = x.iter().map(|&v| v - mean).collect();
    let c0 = d.iter().map(|&v| v * v).sum::<T>() / nf;
    let acf: Vec<T> = (0..=max_lag)
        .map(|k| {
            if k == 0 {
                T::one()
            } else if c0 == T::zero() {
                T::zero()
            } else {
                d.iter().zip(&d[k..]).map(|(&a, &b)| a * b).sum::<T>() / nf / c0
            }
        })
        .collect();
    let bound = T::lit(ACF_BOUND_Z) / nf.sqrt();
    let inside = acf[1..].iter().filter(|a| a.abs() <= bound).count();
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        acf,
        bound,
        fraction_inside: T::from_usize_lossy(inside) / T::from_usize_lossy(max_lag),
        n_samples: n,
    })
}

/// ACF of the residuals left after subtracting the jitter-free template with
/// the estimated parameters.
pub fn residual_acf<T: Real>(
    series: &RttSeries<T>,
    estimate: &Estimate<T>,
    known: &KnownParams<T>,
    max_lag: usize,
) -> Result<AcfReport<T>> {
    let r = model_residuals(series, estimate.f_d_hat, estimate.phi_hat, estimate.rho_hat, known);
    acf(&r, max_lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn lag_zero_is_one_and_values_bounded() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 11) as f64).collect();
        let r = acf(&x, 40).unwrap();
        assert_eq!(r.acf[0], 1.0);
        assert!(r.acf.iter().all(|a| a.abs() <= 1.0));
        assert_eq!(r.lags.len(), 41);
    }

    #[test]
    fn lag_must_be_below_length() {
        assert!(matches!(acf(&[1.0, 2.0, 3.0], 3), Err(Error::LagTooLarge { .. })));
        assert!(acf(&[1.0, 2.0, 3.0], 2).is_ok());
    }

    #[test]
    fn matches_textbook_formula() {
        let x = [1.0_f64, 3.0, 2.0, 5.0, 4.0];
        let r = acf(&x, 2).unwrap();
        // mean 3, deviations -2 0 -1 2 1, c0 = 10/5
        let c1 = (0.0 + 0.0 - 2.0 + 2.0) / 5.0;
        let c2 = (2.0 + 0.0 - 1.0) / 5.0;
        assert!((r.acf[1] - c1 / 2.0).abs() < 1e-15);
        assert!((r.acf[2] - c2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn white_noise_mostly_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut total = 0.0;
        for _ in 0..50 {
            let x: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
            total += acf(&x, 50).unwrap().fraction_inside;
        }
        assert!(total / 50.0 >= 0.97, "{}", total / 50.0);
    }

    #[test]
    fn sinusoid_is_outside() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.2).sin()).collect();
        let r = acf(&x, 50).unwrap();
        assert!(!r.passes());
        assert!(r.fraction_inside < 0.5);
    }

    #[test]
    fn constant_sequence_reports_zero_correlation() {
        let r = acf(&[2.0; 10], 3).unwrap();
        assert_eq!(r.acf, vec![1.0, 0.0, 0.0, 0.0]);
    }
}
