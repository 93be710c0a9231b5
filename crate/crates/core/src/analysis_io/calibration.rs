use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const DEGREE: usize = 5;

/// Fifth-order polynomial mapping mean RTT (s) to range (m).
///
/// The abscissa is normalized to `u = (rtt - center) / half_width`, which maps
/// the fit domain onto `[-1, 1]`; `coefficients[k]` multiplies `u^k`. RTTs span
/// nanoseconds around a microsecond offset, so powers of the raw value would
/// be numerically useless.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    pub coefficients: [f64; DEGREE + 1],
    pub center: f64,
    pub half_width: f64,
    /// Fit domain `[min, max]` of the training RTTs, seconds.
    pub domain: (f64, f64),
    /// Training residuals `range - fit`, meters, in input order.
    pub residuals: Vec<f64>,
}

/// Calibrated range with a flag for RTTs outside the fit domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedRange {
    pub range: f64,
    pub in_domain: bool,
}

impl CalibrationCurve {
    pub const DEGREE: usize = DEGREE;

    pub fn normalize(&self, rtt: f64) -> f64 {
        (rtt - self.center) / self.half_width
    }

    pub fn evaluate(&self, rtt: f64) -> f64 {
        let u = self.normalize(rtt);
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn in_domain(&self, rtt: f64) -> bool {
        rtt >= self.domain.0 && rtt <= self.domain.1
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Least-squares fifth-order fit of range against mean RTT.
///
/// `pairs` holds `(true range m, mean RTT s)`. At least seven distinct RTTs
/// are needed.
pub fn calibrate_range(pairs: &[(f64, f64)]) -> Result<CalibrationCurve> {
    if let Some(p) = pairs.iter().find(|(r, x)| !r.is_finite() || !x.is_finite()) {
        return Err(Error::config(format!("non-finite calibration pair {p:?}")));
    }
    let mut rtts: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    rtts.sort_by(f64::total_cmp);
    rtts.dedup();
    if rtts.len() < DEGREE + 2 {
        return Err(Error::RankDeficient(format!(
            "{} distinct RTTs; a degree-{DEGREE} fit needs at least {}",
            rtts.len(),
            DEGREE + 2
        )));
    }
    let (lo, hi) = (rtts[0], rtts[rtts.len() - 1]);
    let center = 0.5 * (lo + hi);
    let half_width = 0.5 * (hi - lo);
    if !(half_width > 0.0) || center + half_width == center {
        return Err(Error::RankDeficient("RTT spread below floating-point resolution".into()));
    }

    let a = DMatrix::from_fn(pairs.len(), DEGREE + 1, |i, k| {
        ((pairs[i].1 - center) / half_width).powi(k as i32)
    });
    let b = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.0));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(Error::RankDeficient(format!("condition {:.3e}", smax / smin)));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let residuals = (&b - &a * &x).iter().copied().collect();
    let mut coefficients = [0.0; DEGREE + 1];
    coefficients.copy_from_slice(x.as_slice());
    Ok(CalibrationCurve { coefficients, center, half_width, domain: (lo, hi), residuals })
}

/// Evaluates the curve; RTTs outside the fit domain are still evaluated but
/// flagged and logged.
pub fn apply_calibration(curve: &CalibrationCurve, rtt_mean: f64) -> CalibratedRange {
    let in_domain = curve.in_domain(rtt_mean);
    if !in_domain {
        warn!(
            "RTT {rtt_mean:e} s outside calibration domain [{:e}, {:e}] s",
            curve.domain.0, curve.domain.1
        );
    }
    CalibratedRange { range: curve.evaluate(rtt_mean), in_domain }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::SPEED_OF_LIGHT;

    fn survey_distances() -> Vec<f64> {
        (1..=9).map(|k| 0.5 * k as f64).collect()
    }

    #[test]
    fn linear_pairs_give_vanishing_higher_orders() {
        let pairs: Vec<(f64, f64)> =
            survey_distances().iter().map(|&r| (r, 5e-6 + 2.0 * r / SPEED_OF_LIGHT)).collect();
        let curve = calibrate_range(&pairs).unwrap();
        let c1 = curve.coefficients[1].abs();
        for c in &curve.coefficients[2..] {
            assert!(c.abs() < 1e-6 * c1, "{:?}", curve.coefficients);
        }
        assert_eq!(curve.domain.0, pairs[0].1);
        assert_eq!(curve.domain.1, pairs[8].1);
    }

    #[test]
    fn reproduces_training_ranges() {
        // a cubic front-end distortion on top of the propagation delay
        let pairs: Vec<(f64, f64)> = survey_distances()
            .iter()
            .map(|&r| (r, 5e-6 + 2.0 * r / SPEED_OF_LIGHT + 1e-10 * (r - 2.5).powi(3)))
            .collect();
        let curve = calibrate_range(&pairs).unwrap();
        for &(r, x) in &pairs {
            let out = apply_calibration(&curve, x);
            assert!(out.in_domain);
            assert!((out.range - r).abs() <= curve.max_abs_residual() + 1e-12);
        }
    }

    #[test]
    fn flags_extrapolation() {
        let pairs: Vec<(f64, f64)> =
            survey_distances().iter().map(|&r| (r, 2.0 * r / SPEED_OF_LIGHT)).collect();
        let curve = calibrate_range(&pairs).unwrap();
        let out = apply_calibration(&curve, 20.0 / SPEED_OF_LIGHT);
        assert!(!out.in_domain);
        assert!((out.range - 10.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_distinct_rtts_rejected() {
        let mut pairs: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, k as f64 * 1e-9)).collect();
        assert!(matches!(calibrate_range(&pairs), Err(Error::RankDeficient(_))));
        pairs.push((2.0, 2e-9));
        assert!(calibrate_range(&pairs).is_err());
        pairs.push((9.0, 9e-9));
        assert!(calibrate_range(&pairs).is_ok());
    }
}
