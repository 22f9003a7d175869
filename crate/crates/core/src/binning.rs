//! Time binning, occupancy thresholding and bin-duration adaptation.
//!
//! Bin `i` covers the half-open interval `[start_i, start_i + delta_t)`; an
//! event stamped exactly on a boundary belongs to the later bin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitRow;
use crate::events::{Event, SensorGeometry};

/// Width of each per-pixel event counter.
pub const COUNTER_BITS: u32 = 8;
pub const COUNTER_MAX: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// The coordinate this axis keeps; the other one is collapsed.
    #[inline]
    pub fn coord(self, ev: &Event) -> u16 {
        match self {
            Axis::X => ev.x,
            Axis::Y => ev.y,
        }
    }

    pub fn len(self, geometry: SensorGeometry) -> usize {
        match self {
            Axis::X => geometry.nx as usize,
            Axis::Y => geometry.ny as usize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            other => Err(format!("unknown axis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BinError {
    #[error("invalid bin configuration: {0}")]
    Config(String),
    #[error("event at {t} us lies outside the open bin [{start}, {end})")]
    OutsideBin { t: u64, start: u64, end: u64 },
    #[error("{axis} coordinate {coord} outside axis length {len}")]
    Coordinate { axis: &'static str, coord: u16, len: usize },
}

/// Binning parameters. `delta_t_us` and `theta_e` are the reference pair
/// the adaptive controller rescales from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    pub delta_t_us: u64,
    pub theta_e: u32,
    #[serde(default)]
    pub adaptive: bool,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub delta_t_min_us: u64,
    pub delta_t_max_us: u64,
    pub hold_bins: u32,
}

impl BinConfig {
    /// A non-adaptive configuration.
    pub fn fixed(delta_t_us: u64, theta_e: u32) -> Self {
        Self {
            delta_t_us,
            theta_e,
            adaptive: false,
            rho_lo: 0.10,
            rho_hi: 0.40,
            delta_t_min_us: delta_t_us,
            delta_t_max_us: delta_t_us,
            hold_bins: 16,
        }
    }

    pub fn with_adaptation(mut self, rho_lo: f64, rho_hi: f64, min_us: u64, max_us: u64, hold_bins: u32) -> Self {
        self.adaptive = true;
        self.rho_lo = rho_lo;
        self.rho_hi = rho_hi;
        self.delta_t_min_us = min_us;
        self.delta_t_max_us = max_us;
        self.hold_bins = hold_bins;
        self
    }

    pub fn validate(&self) -> Result<(), BinError> {
        let fail = |m: String| Err(BinError::Config(m));
        if self.delta_t_us == 0 {
            return fail("delta_t must be positive".into());
        }
        if self.theta_e == 0 || self.theta_e > u32::from(COUNTER_MAX) {
            return fail(format!("theta_e = {} must lie in [1, 255]", self.theta_e));
        }
        if !(self.delta_t_min_us <= self.delta_t_us && self.delta_t_us <= self.delta_t_max_us) {
            return fail(format!(
                "delta_t = {} outside clamps [{}, {}]",
                self.delta_t_us, self.delta_t_min_us, self.delta_t_max_us
            ));
        }
        if self.delta_t_min_us == 0 {
            return fail("delta_t_min must be positive".into());
        }
        if !(0.0 < self.rho_lo && self.rho_lo < self.rho_hi && self.rho_hi < 1.0) {
            return fail(format!("density band needs 0 < rho_lo < rho_hi < 1, got [{}, {}]", self.rho_lo, self.rho_hi));
        }
        Ok(())
    }

    /// The reference timing.
    pub fn timing(&self) -> BinTiming {
        BinTiming {
            delta_t_us: self.delta_t_us,
            theta_e: self.theta_e,
        }
    }
}

/// The bin duration and threshold currently in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinTiming {
    pub delta_t_us: u64,
    pub theta_e: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdaptDecision {
    pub delta_t_us: u64,
    pub theta_e: u32,
    pub changed: bool,
}

/// One-bit-per-pixel occupancy for one axis and one bin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyVector {
    pub bits: BitRow,
    pub bin_index: u64,
}

impl OccupancyVector {
    pub fn new(bits: BitRow, bin_index: u64) -> Self {
        Self { bits, bin_index }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> bool {
        self.bits.get(x)
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn popcount(&self) -> usize {
        self.bits.count_ones()
    }

    /// Fraction of set bits.
    pub fn density(&self) -> f64 {
        occupancy_density(self)
    }
}

pub fn occupancy_density(vec: &OccupancyVector) -> f64 {
    if vec.is_empty() {
        return 0.0;
    }
    vec.popcount() as f64 / vec.len() as f64
}

/// Bit `x` is set iff `counts[x] >= theta_e`.
pub fn threshold_counts(counts: &[u8], theta_e: u32) -> BitRow {
    BitRow::from_bools(counts.iter().map(|&c| u32::from(c) >= theta_e))
}

/// A bank of saturating 8-bit event counters along one axis.
#[derive(Clone, Debug)]
pub struct AxisAccumulator {
    axis: Axis,
    counts: Vec<u8>,
    bin_index: u64,
    bin_start: u64,
    delta_t: u64,
}

impl AxisAccumulator {
    pub fn new(axis: Axis, len: usize, bin_start: u64, delta_t: u64) -> Self {
        assert!(delta_t > 0, "bin duration must be positive");
        Self {
            axis,
            counts: vec![0; len],
            bin_index: 0,
            bin_start,
            delta_t,
        }
    }

    /// An accumulator whose first bin carries index `bin_index`.
    pub fn starting_at(axis: Axis, len: usize, bin_index: u64, bin_start: u64, delta_t: u64) -> Self {
        let mut acc = Self::new(axis, len, bin_start, delta_t);
        acc.bin_index = bin_index;
        acc
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    pub fn bin_index(&self) -> u64 {
        self.bin_index
    }

    pub fn bin_start(&self) -> u64 {
        self.bin_start
    }

    pub fn bin_end(&self) -> u64 {
        self.bin_start + self.delta_t
    }

    pub fn delta_t(&self) -> u64 {
        self.delta_t
    }

    /// Changes the duration of the currently open bin and all later ones.
    pub fn set_delta_t(&mut self, delta_t: u64) {
        assert!(delta_t > 0, "bin duration must be positive");
        self.delta_t = delta_t;
    }

    /// Counts one event at its axis coordinate; polarity and the other
    /// coordinate are ignored.
    pub fn accumulate(&mut self, ev: &Event) -> Result<(), BinError> {
        if ev.t < self.bin_start || ev.t >= self.bin_end() {
            return Err(BinError::OutsideBin {
                t: ev.t,
                start: self.bin_start,
                end: self.bin_end(),
            });
        }
        let coord = self.axis.coord(ev);
        let len = self.counts.len();
        let slot = self.counts.get_mut(coord as usize).ok_or(BinError::Coordinate {
            axis: self.axis.name(),
            coord,
            len,
        })?;
        *slot = slot.saturating_add(1);
        Ok(())
    }

    /// Thresholds the open bin, clears the counters and opens the next bin.
    pub fn close_bin(&mut self, theta_e: u32) -> OccupancyVector {
        let bits = threshold_counts(&self.counts, theta_e);
        let vec = OccupancyVector::new(bits, self.bin_index);
        self.counts.fill(0);
        self.bin_index += 1;
        self.bin_start += self.delta_t;
        vec
    }
}

/// Density feedback controller step.
///
/// Outside the hold period, a density below `rho_lo` doubles the bin
/// duration and one above `rho_hi` halves it, clamped to the configured
/// range. The event threshold follows the duration linearly from the
/// reference pair in `cfg`, rounded, within `[1, 255]`.
pub fn adapt_bin_duration(cfg: &BinConfig, current: BinTiming, density: f64, bins_since_last_change: u32) -> AdaptDecision {
    let unchanged = AdaptDecision {
        delta_t_us: current.delta_t_us,
        theta_e: current.theta_e,
        changed: false,
    };
    if bins_since_last_change < cfg.hold_bins {
        return unchanged;
    }
    let target = if density < cfg.rho_lo {
        current.delta_t_us.saturating_mul(2).min(cfg.delta_t_max_us)
    } else if density > cfg.rho_hi {
        (current.delta_t_us >> 1).max(cfg.delta_t_min_us)
    } else {
        current.delta_t_us
    };
    if target == current.delta_t_us {
        return unchanged;
    }
    AdaptDecision {
        delta_t_us: target,
        theta_e: scaled_threshold(cfg, target),
        changed: true,
    }
}

/// `round(theta_e_ref * delta_t / delta_t_ref)` clamped to `[1, 255]`.
pub fn scaled_threshold(cfg: &BinConfig, delta_t_us: u64) -> u32 {
    let num = 2 * u128::from(cfg.theta_e) * u128::from(delta_t_us) + u128::from(cfg.delta_t_us);
    let den = 2 * u128::from(cfg.delta_t_us);
    (num / den).clamp(1, u128::from(COUNTER_MAX)) as u32
}
