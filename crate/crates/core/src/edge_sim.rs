//! Clock-edge simulation of the PING/RESPOND exchange.
//!
//! Every event time is computed in closed form from edge indices, so the
//! simulation does not accumulate stepping error. It serves as an
//! independent check on the sawtooth model in [`crate::model`].

use crate::error::{Error, Result};
use crate::model::{ClockTruth, RttSeries, SampleSchedule};
use crate::scalar::{wrap_two_pi, Real, SPEED_OF_LIGHT};

/// Edges closer than this fraction of a period to an instant count as coincident with it.
const EDGE_TIE_CYCLES: f64 = 1e-9;

/// A free-running oscillator. Its rising edges fall at `varphi + k·alpha/f0` (true time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator<T> {
    pub f0: T,
    pub alpha: T,
    pub varphi: T,
}

impl<T: Real> Oscillator<T> {
    pub fn new(f0: T, alpha: T, varphi: T) -> Result<Self> {
        if !(f0 > T::zero()) || !f0.is_finite() {
            return Err(Error::config(format!("nominal frequency must be positive, got {f0}")));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::config(format!("skew must be positive, got {alpha}")));
        }
        if !(varphi >= T::zero() && varphi < f0.recip()) {
            return Err(Error::config(format!("initial phase must lie in [0, 1/f0), got {varphi}")));
        }
        Ok(Oscillator { f0, alpha, varphi })
    }

    /// Oscillator running at `freq` with nominal frequency `f0`.
    pub fn with_frequency(f0: T, freq: T, varphi: T) -> Result<Self> {
        Oscillator::new(f0, f0 / freq, varphi)
    }

    /// Actual frequency `f0/alpha`.
    pub fn frequency(&self) -> T {
        self.f0 / self.alpha
    }

    /// Edge spacing `alpha/f0`.
    pub fn period(&self) -> T {
        self.alpha / self.f0
    }

    pub fn edge(&self, k: T) -> T {
        self.varphi + k * self.period()
    }

    /// Earliest edge at or after `t`.
    pub fn next_edge(&self, t: T) -> T {
        let k = ((t - self.varphi) / self.period() - T::lit(EDGE_TIE_CYCLES)).ceil();
        self.edge(k)
    }
}

/// Free function form of [`Oscillator::next_edge`].
pub fn next_edge<T: Real>(osc: &Oscillator<T>, t: T) -> T {
    osc.next_edge(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeConfig<T> {
    /// Slave delay in whole slave-clock cycles.
    pub k_cycles: u32,
    /// Range, m.
    pub rho: T,
    /// Optional TDC quantization step, s. `None` models an ideal TDC.
    pub tdc_resolution: Option<T>,
}

impl<T: Real> ExchangeConfig<T> {
    pub fn new(k_cycles: u32, rho: T) -> Result<Self> {
        if k_cycles < 1 {
            return Err(Error::config("slave delay must be at least one cycle"));
        }
        if !(rho >= T::zero()) || !rho.is_finite() {
            return Err(Error::config(format!("range must be non-negative, got {rho}")));
        }
        Ok(ExchangeConfig { k_cycles, rho, tdc_resolution: None })
    }

    pub fn with_tdc_resolution(mut self, step: T) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::config("TDC resolution must be positive"));
        }
        self.tdc_resolution = Some(step);
        Ok(self)
    }

    fn one_way(&self) -> T {
        self.rho / T::lit(SPEED_OF_LIGHT)
    }
}

/// One exchange initiated at `ping_t` (snapped to the next master edge).
///
/// The slave starts its `K`-cycle count on the first slave edge at or after
/// the PING arrives; the master TDC stops when the RESPOND comes back.
pub fn simulate_exchange<T: Real>(
    master: &Oscillator<T>,
    slave: &Oscillator<T>,
    cfg: &ExchangeConfig<T>,
    ping_t: T,
) -> T {
    let emit = master.next_edge(ping_t);
    let arrival = emit + cfg.one_way();
    let start = slave.next_edge(arrival);
    let respond = start + T::from_usize_lossy(cfg.k_cycles as usize) * slave.period();
    let rtt = respond + cfg.one_way() - emit;
    match cfg.tdc_resolution {
        Some(step) => (rtt / step).round() * step,
        None => rtt,
    }
}

/// One exchange per scheduled epoch.
pub fn simulate_campaign<T: Real>(
    master: &Oscillator<T>,
    slave: &Oscillator<T>,
    cfg: &ExchangeConfig<T>,
    schedule: &SampleSchedule<T>,
) -> Result<RttSeries<T>> {
    schedule.validate()?;
    let times = schedule.times();
    let values = times.iter().map(|&t| simulate_exchange(master, slave, cfg, t)).collect();
    RttSeries::new(times, values)
}

/// Relative phase, in radians, that the sawtooth model needs to reproduce
/// this oscillator pair.
///
/// The slave sees the PING one flight time late, so the range enters the
/// phase alongside the two initial edge offsets.
pub fn equivalent_phase<T: Real>(master: &Oscillator<T>, slave: &Oscillator<T>, rho: T) -> T {
    let f_s = slave.frequency();
    let f_d = master.frequency() - f_s;
    let cycles = (slave.varphi - master.varphi - rho / T::lit(SPEED_OF_LIGHT)) * f_s
        - f_d * master.varphi;
    wrap_two_pi(T::TAU() * cycles)
}

/// Clock truth equivalent to the oscillator pair.
pub fn equivalent_clock<T: Real>(
    master: &Oscillator<T>,
    slave: &Oscillator<T>,
    rho: T,
) -> Result<ClockTruth<T>> {
    ClockTruth::new(
        master.frequency(),
        master.frequency() - slave.frequency(),
        equivalent_phase(master, slave, rho),
    )
}

/// Slave initial edge offset that realizes relative phase `phi` against
/// `master` at range `rho`. Inverse of [`equivalent_phase`] for the slave offset.
pub fn slave_offset_for_phase<T: Real>(
    master: &Oscillator<T>,
    slave_frequency: T,
    phi: T,
    rho: T,
) -> T {
    let f_d = master.frequency() - slave_frequency;
    let cycles = phi / T::TAU() + f_d * master.varphi;
    let offset = cycles / slave_frequency + master.varphi + rho / T::lit(SPEED_OF_LIGHT);
    let period = slave_frequency.recip();
    let r = offset - period * (offset / period).floor();
    if r >= period {
        T::zero()
    } else {
        r
    }
}
