use log::warn;

use crate::error::{Error, Result};
use crate::model::RttSeries;
use crate::scalar::Real;

/// Consistency factor turning the MAD into a Gaussian standard deviation.
pub const NMAD_SCALE: f64 = 1.483;

/// Samples farther than this many nMADs from the median are outliers.
pub const OUTLIER_THRESHOLD: f64 = 3.0;

/// Nonnegative per-sample weights with at least one nonzero entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
    fallback: bool,
}

impl<T: Real> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(Error::config("weights must be finite and non-negative"));
        }
        if !w.iter().any(|&x| x > T::zero()) {
            return Err(Error::ZeroWeights);
        }
        Ok(WeightVector { w, fallback: false })
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector { w: vec![T::one(); n], fallback: false }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn sum(&self) -> T {
        self.w.iter().copied().sum()
    }

    pub fn count_nonzero(&self) -> usize {
        self.w.iter().filter(|&&x| x > T::zero()).count()
    }

    /// True when the robust rule could not discriminate and uniform weights were substituted.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }
}

/// Sample median; the mean of the two central values for even lengths.
pub fn median<T: Real>(xs: &[T]) -> T {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Normalized median absolute deviation `1.483 · median(|x - median(x)|)`.
pub fn nmad<T: Real>(xs: &[T]) -> T {
    let m = median(xs);
    let dev: Vec<T> = xs.iter().map(|&x| (x - m).abs()).collect();
    T::lit(NMAD_SCALE) * median(&dev)
}

/// `true` at indices lying more than three nMADs from the median. All `false`
/// when the nMAD is zero.
pub fn outlier_mask<T: Real>(values: &[T]) -> Vec<bool> {
    let m = median(values);
    let scale = nmad(values);
    if scale == T::zero() {
        return vec![false; values.len()];
    }
    let limit = T::lit(OUTLIER_THRESHOLD) * scale;
    values.iter().map(|&y| (y - m).abs() > limit).collect()
}

/// 0/1 weights: one for samples within three nMADs of the median.
///
/// A zero nMAD with nonzero deviations leaves the rule undefined; uniform
/// weights are returned with [`WeightVector::is_fallback`] set.
pub fn robust_weights<T: Real>(series: &RttSeries<T>) -> Result<WeightVector<T>> {
    if series.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: series.len() });
    }
    let y = series.values();
    let m = median(y);
    let scale = nmad(y);
    if scale == T::zero() {
        let spread = y.iter().any(|&v| v != m);
        if spread {
            warn!("nMAD is zero but samples deviate from the median; using uniform weights");
        }
        return Ok(WeightVector { w: vec![T::one(); y.len()], fallback: spread });
    }
    let limit = T::lit(OUTLIER_THRESHOLD) * scale;
    let w = y
        .iter()
        .map(|&v| if (v - m).abs() <= limit { T::one() } else { T::zero() })
        .collect();
    WeightVector::new(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed<T> {
    pub series: RttSeries<T>,
    /// Indices whose values were substituted.
    pub replaced: Vec<usize>,
}

/// Coarse outlier cleanup ahead of ULS and PCP.
///
/// An outlier with clean samples on both sides becomes the mean of its two
/// neighbours. Any other outlier (adjacent to another one, or at either end
/// of the record) becomes the median of the whole record.
pub fn preprocess_outliers<T: Real>(series: &RttSeries<T>) -> Result<Preprocessed<T>> {
    if series.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: series.len() });
    }
    let y = series.values();
    let mask = outlier_mask(y);
    let record_median = median(y);
    let n = y.len();
    let mut out = y.to_vec();
    let mut replaced = Vec::new();
    for k in (0..n).filter(|&k| mask[k]) {
        let isolated = k > 0 && k + 1 < n && !mask[k - 1] && !mask[k + 1];
        out[k] = if isolated {
            (y[k - 1] + y[k + 1]) / T::lit(2.0)
        } else {
            record_median
        };
        replaced.push(k);
    }
    Ok(Preprocessed { series: series.with_values(out)?, replaced })
}
