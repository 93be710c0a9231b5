//! `rttsync` command-line interface.
//!
//! Every command writes its result to `--out` (atomically) or to stdout, and
//! exits with status 2 on any usage, input or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::edge_sim::{simulate_campaign, slave_offset_for_phase, ExchangeConfig, Oscillator};
use crate::error::Result;
use crate::estimators::{Method, SearchGrids};
use crate::model::{
    generate_series, model_residuals, ClockTruth, KnownParams, LinkTruth, NoiseSpec, RttSeries,
    SampleSchedule,
};
use crate::montecarlo::{inject_outliers_seeded, run_estimator, run_sweep, OutlierSpec, OUTLIER_INTERVAL};

use super::{
    acf, calibrate_range, read_calibration_pairs, read_estimate_record, read_experiment_config,
    read_series, write_acf_report, write_atomic, write_calibration_curve, write_estimate_record,
    write_series, EstimateRecord,
};

/// Exit status for usage, input and configuration errors.
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rttsync", version, about = "Joint ranging and clock synchronization from RTT records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic RTT record as `t_seconds,y_seconds` CSV.
    Simulate(SimulateArgs),
    /// Estimate frequency difference, phase and range from an RTT record.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo sweep described by a key-value config file.
    Sweep(SweepArgs),
    /// Autocorrelation of the residuals left by an estimate.
    Residuals(ResidualsArgs),
    /// Fit a fifth-order range calibration curve to `range_m,rtt_mean_s` pairs.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    /// Sawtooth measurement model with jitter and channel noise.
    Model,
    /// Clock-edge simulation of the PING/RESPOND exchange (noiseless).
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Uls,
    Pcp,
    Wls,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Uls => Method::Uls,
            MethodArg::Pcp => Method::Pcp,
            MethodArg::Wls => Method::Wls,
        }
    }
}

#[derive(Debug, Args)]
pub struct KnownArgs {
    /// Master clock frequency, Hz.
    #[arg(long, default_value_t = 1e8)]
    pub f_m: f64,
    /// Fixed slave processing delay, s.
    #[arg(long, default_value_t = 5e-6)]
    pub delta0: f64,
}

impl KnownArgs {
    fn known(&self) -> Result<KnownParams<f64>> {
        KnownParams::new(self.f_m.recip(), self.delta0)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Generator::Model)]
    pub generator: Generator,
    #[command(flatten)]
    pub known: KnownArgs,
    /// Frequency difference f_m - f_s, Hz.
    #[arg(long, default_value_t = -32.0, allow_hyphen_values = true)]
    pub f_d: f64,
    /// Relative clock phase, rad in [0, 2π).
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
    /// Range, m.
    #[arg(long, default_value_t = 2.0)]
    pub rho: f64,
    /// First sample time, s.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    /// Sampling period, s.
    #[arg(long, default_value_t = 1e-3)]
    pub ts: f64,
    /// Number of samples.
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    /// Channel SNR, dB (`inf` for none). Model generator only.
    #[arg(long, default_value_t = 40.0)]
    pub snr_c: f64,
    /// Jitter SNR, dB (`inf` for none). Model generator only.
    #[arg(long, default_value_t = 40.0)]
    pub snr_j: f64,
    /// Fraction of samples replaced by uniform outliers.
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Slave delay in slave cycles for the edge generator; defaults to round(delta0·f_m).
    #[arg(long)]
    pub k_cycles: Option<u32>,
    /// TDC quantization step for the edge generator, s.
    #[arg(long)]
    pub tdc_resolution: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Phase grid points in [0, 2π).
    #[arg(long, default_value_t = crate::estimators::DEFAULT_PHASE_POINTS)]
    pub phase_points: usize,
    /// Largest searched |f_d|, Hz; Nyquist when omitted.
    #[arg(long)]
    pub f_max: Option<f64>,
    /// Skip the local refinement around the coarse grid optimum.
    #[arg(long)]
    pub no_refine: bool,
}

impl GridArgs {
    fn grids(&self, series: &RttSeries<f64>) -> Result<SearchGrids<f64>> {
        let mut g = SearchGrids::for_series(series)?
            .with_phase_points(self.phase_points)
            .with_refine(!self.no_refine);
        if let Some(f) = self.f_max {
            g = g.with_f_max(f);
        }
        Ok(g)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// RTT record CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long, value_enum, default_value_t = MethodArg::Wls)]
    pub method: MethodArg,
    #[command(flatten)]
    pub known: KnownArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Key-value experiment file.
    #[arg(short, long)]
    pub config: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResidualsArgs {
    /// RTT record CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Estimate record written by `estimate`.
    #[arg(short, long)]
    pub estimate: PathBuf,
    #[command(flatten)]
    pub known: KnownArgs,
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// `range_m,rtt_mean_s` CSV.
    #[arg(short, long)]
    pub pairs: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Residuals(a) => residuals(a),
        Command::Calibrate(a) => calibrate(a),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn read_series_file(path: &Path) -> Result<RttSeries<f64>> {
    read_series(std::fs::File::open(path)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let schedule = SampleSchedule::new(a.t0, a.ts, a.n)?;
    let clock = ClockTruth::new(a.known.f_m, a.f_d, a.phi)?;
    let link = LinkTruth::new(a.rho, a.known.delta0)?;
    let series = match a.generator {
        Generator::Model => {
            let noise = NoiseSpec::from_snr(a.snr_c, a.snr_j, clock.master_period());
            generate_series(&schedule, &clock, &link, &noise, a.seed)?
        }
        Generator::Edge => {
            let k = match a.k_cycles {
                Some(k) => k,
                None => (a.known.delta0 * a.known.f_m).round() as u32,
            };
            let master = Oscillator::with_frequency(a.known.f_m, a.known.f_m, 0.0)?;
            let f_s = clock.slave_frequency();
            let varphi = slave_offset_for_phase(&master, f_s, a.phi, a.rho);
            let slave = Oscillator::with_frequency(a.known.f_m, f_s, varphi)?;
            let mut cfg = ExchangeConfig::new(k, a.rho)?;
            if let Some(step) = a.tdc_resolution {
                cfg = cfg.with_tdc_resolution(step)?;
            }
            simulate_campaign(&master, &slave, &cfg, &schedule)?
        }
    };
    let spec = OutlierSpec::new(a.outlier_fraction, OUTLIER_INTERVAL.0, OUTLIER_INTERVAL.1)?;
    // a separate stream so outliers do not perturb the noise realization
    let (series, idx) = inject_outliers_seeded(&series, &spec, a.seed.wrapping_add(1))?;
    info!("simulated {} samples, {} outliers", series.len(), idx.len());
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let series = read_series_file(&a.input)?;
    let known = a.known.known()?;
    let grids = a.grid.grids(&series)?;
    let est = run_estimator(a.method.into(), &series, &known, &grids)?;
    info!(
        "{}: f_d = {} Hz, phi = {} rad, rho = {} m",
        est.method, est.f_d_hat, est.phi_hat, est.rho_hat
    );
    let mut buf = Vec::new();
    write_estimate_record(&EstimateRecord::from(&est), &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = read_experiment_config(&a.config)?;
    let report = run_sweep(&cfg)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn residuals(a: ResidualsArgs) -> Result<()> {
    let series = read_series_file(&a.input)?;
    let rec = read_estimate_record(std::fs::File::open(&a.estimate)?)?;
    let known = a.known.known()?;
    let r = model_residuals(&series, rec.f_d_hat_hz, rec.phi_hat_rad, rec.rho_hat_m, &known);
    let report = acf(&r, a.max_lag)?;
    info!(
        "{:.1}% of lags inside ±{:.4} ({})",
        100.0 * report.fraction_inside,
        report.bound,
        if report.passes() { "white" } else { "not white" }
    );
    let mut buf = Vec::new();
    write_acf_report(&report, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let pairs = read_calibration_pairs(std::fs::File::open(&a.pairs)?)?;
    let curve = calibrate_range(&pairs)?;
    info!("calibration fit: max |residual| = {:e} m", curve.max_abs_residual());
    let mut buf = Vec::new();
    write_calibration_curve(&curve, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}
