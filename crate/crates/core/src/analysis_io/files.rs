use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Method};
use crate::model::RttSeries;
use crate::scalar::Real;

use super::acf::AcfReport;
use super::calibration::CalibrationCurve;
use super::config::KeyValues;
use super::fmt_f64;

const SERIES_HEADER: [&str; 2] = ["t_seconds", "y_seconds"];
const ESTIMATE_HEADER: [&str; 6] =
    ["method", "f_d_hat_hz", "phi_hat_rad", "rho_hat_m", "n_used", "n_downweighted"];
const PAIRS_HEADER: [&str; 2] = ["range_m", "rtt_mean_s"];

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn parse_field<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("cannot parse {what} from '{s}'") })
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    if header.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty file".into() });
    }
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header '{}'", expected.join(",")),
        });
    }
    Ok(())
}

/// Writes the two-column `t_seconds,y_seconds` format.
pub fn write_series<T: Real, W: Write>(series: &RttSeries<T>, mut out: W) -> Result<()> {
    writeln!(out, "{}", SERIES_HEADER.join(","))?;
    for (t, y) in series.iter() {
        writeln!(out, "{t:.16e},{y:.16e}")?;
    }
    Ok(())
}

/// Reads the `t_seconds,y_seconds` format; an empty record is an error.
pub fn read_series<T: Real, R: Read>(input: R) -> Result<RttSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut rdr, &SERIES_HEADER)?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 2 fields, got {}", rec.len()) });
        }
        times.push(parse_field(&rec[0], line, "time")?);
        values.push(parse_field(&rec[1], line, "RTT")?);
    }
    if times.is_empty() {
        return Err(Error::series("record has no samples"));
    }
    RttSeries::new(times, values)
}

/// Flat estimate record as written by the `estimate` command.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub method: Method,
    pub f_d_hat_hz: f64,
    pub phi_hat_rad: f64,
    pub rho_hat_m: f64,
    pub n_used: usize,
    pub n_downweighted: usize,
}

impl From<&Estimate<f64>> for EstimateRecord {
    fn from(e: &Estimate<f64>) -> Self {
        EstimateRecord {
            method: e.method,
            f_d_hat_hz: e.f_d_hat,
            phi_hat_rad: e.phi_hat,
            rho_hat_m: e.rho_hat,
            n_used: e.diagnostics.n_used,
            n_downweighted: e.diagnostics.n_downweighted,
        }
    }
}

pub fn write_estimate_record<W: Write>(rec: &EstimateRecord, mut out: W) -> Result<()> {
    writeln!(out, "{}", ESTIMATE_HEADER.join(","))?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        rec.method,
        fmt_f64(rec.f_d_hat_hz),
        fmt_f64(rec.phi_hat_rad),
        fmt_f64(rec.rho_hat_m),
        rec.n_used,
        rec.n_downweighted
    )?;
    Ok(())
}

/// Reads the first data row of an estimate record file.
pub fn read_estimate_record<R: Read>(input: R) -> Result<EstimateRecord> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut rdr, &ESTIMATE_HEADER)?;
    let rec = rdr
        .records()
        .next()
        .ok_or(Error::Parse { line: 2, msg: "no estimate row".into() })??;
    if rec.len() != ESTIMATE_HEADER.len() {
        return Err(Error::Parse { line: 2, msg: format!("expected 6 fields, got {}", rec.len()) });
    }
    Ok(EstimateRecord {
        method: parse_field(&rec[0], 2, "method")?,
        f_d_hat_hz: parse_field(&rec[1], 2, "f_d_hat_hz")?,
        phi_hat_rad: parse_field(&rec[2], 2, "phi_hat_rad")?,
        rho_hat_m: parse_field(&rec[3], 2, "rho_hat_m")?,
        n_used: parse_field(&rec[4], 2, "n_used")?,
        n_downweighted: parse_field(&rec[5], 2, "n_downweighted")?,
    })
}

/// Reads `range_m,rtt_mean_s` calibration pairs.
pub fn read_calibration_pairs<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(&mut rdr, &PAIRS_HEADER)?;
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 2 fields, got {}", rec.len()) });
        }
        pairs.push((parse_field(&rec[0], line, "range")?, parse_field(&rec[1], line, "RTT")?));
    }
    Ok(pairs)
}

/// Key-value curve file, readable by [`read_calibration_curve`].
pub fn write_calibration_curve<W: Write>(curve: &CalibrationCurve, mut out: W) -> Result<()> {
    writeln!(out, "# range_m = sum_k c_k * ((rtt_s - center_s) / half_width_s)^k")?;
    writeln!(out, "degree = {}", CalibrationCurve::DEGREE)?;
    writeln!(out, "center_s = {}", fmt_f64(curve.center))?;
    writeln!(out, "half_width_s = {}", fmt_f64(curve.half_width))?;
    writeln!(out, "domain_min_s = {}", fmt_f64(curve.domain.0))?;
    writeln!(out, "domain_max_s = {}", fmt_f64(curve.domain.1))?;
    for (k, c) in curve.coefficients.iter().enumerate() {
        writeln!(out, "c{k} = {}", fmt_f64(*c))?;
    }
    writeln!(out, "max_abs_residual_m = {}", fmt_f64(curve.max_abs_residual()))?;
    Ok(())
}

/// Reads a curve file; training residuals are not stored, so the returned
/// curve has none.
pub fn read_calibration_curve(text: &str) -> Result<CalibrationCurve> {
    let mut kv = KeyValues::parse(text)?;
    let degree: usize = kv.take_or("degree", CalibrationCurve::DEGREE)?;
    if degree != CalibrationCurve::DEGREE {
        return Err(Error::config(format!("unsupported curve degree {degree}")));
    }
    let mut coefficients = [0.0; CalibrationCurve::DEGREE + 1];
    for (k, c) in coefficients.iter_mut().enumerate() {
        *c = kv.take_required(&format!("c{k}"))?;
    }
    let curve = CalibrationCurve {
        coefficients,
        center: kv.take_required("center_s")?,
        half_width: kv.take_required("half_width_s")?,
        domain: (kv.take_required("domain_min_s")?, kv.take_required("domain_max_s")?),
        residuals: Vec::new(),
    };
    let _: Option<f64> = kv.take("max_abs_residual_m")?;
    kv.finish()?;
    Ok(curve)
}

/// `lag,acf,bound,inside` rows, one per lag.
pub fn write_acf_report<W: Write>(report: &AcfReport<f64>, mut out: W) -> Result<()> {
    writeln!(out, "lag,acf,bound,inside")?;
    for (&lag, &a) in report.lags.iter().zip(&report.acf) {
        writeln!(out, "{lag},{},{},{}", fmt_f64(a), fmt_f64(report.bound), report.is_inside(lag))?;
    }
    Ok(())
}
