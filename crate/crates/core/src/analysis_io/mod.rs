//! Residual whiteness analysis, range calibration, file formats,
//! experiment configuration files and the command-line interface.

mod acf;
mod calibration;
pub mod cli;
mod config;
mod files;

pub use acf::{acf, residual_acf, AcfReport, ACF_BOUND_Z, ACF_PASS_FRACTION};
pub use calibration::{apply_calibration, calibrate_range, CalibratedRange, CalibrationCurve};
pub use config::{parse_experiment_config, read_experiment_config, KeyValues};
pub use files::{
    read_calibration_curve, read_calibration_pairs, read_estimate_record, read_series,
    write_acf_report, write_atomic, write_calibration_curve, write_estimate_record, write_series,
    EstimateRecord,
};

/// Decimal text with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
