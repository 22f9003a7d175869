//! Hypothesis scoring.
//!
//! Every active pixel `x0` is tested against `2J+1` integer velocity
//! hypotheses `j` (pixels per bin). A hypothesis is scored by walking the
//! diagonal that ends at `x0`'s newest cell: step `h` reads pixel `x0 - j*h`
//! from `h` bins ago, for `h = 0..L` or until the pixel leaves the sensor.
//! `R` counts occupied cells, `H` counts in-bounds steps.
//!
//! The datapath files (`trace`, `compare`, `incremental`) use only add,
//! subtract, compare, shift, popcount and multiplies of values bounded by
//! `L`. See `DATAPATH_AUDIT.md` at the crate root.

mod compare;
mod host;
mod incremental;
mod trace;

use thiserror::Error;

pub use compare::{compare_normalized, compare_raw, passes_threshold, prefer, select_winner};
pub use host::jump_to_velocity;
pub use incremental::ScoreArray;
pub use trace::{score_all, trace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerMode {
    /// Compare raw coincidence counts `R`; threshold `R > theta_s`.
    RawPopcount,
    /// Compare `R/H` by cross-multiplication; threshold `R*L > theta_s*H`.
    #[default]
    NormalizedCrossmul,
}

/// Which cells a trace visits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceIndexing {
    /// `h = 0..L`, cell `(x0 - j*h, slot L-1-h)`: the diagonal ending at the
    /// active pixel's own newest cell.
    #[default]
    Canonical,
    /// `h = 1..=L`, cell `(x0 - j*h, slot L-h)`. Kept for comparison; its
    /// first step reads the newest bin at `x0 - j`, one bin out of phase with
    /// the hypothesis.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("invalid hypothesis parameters: {0}")]
    Params(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Mismatch { expected: usize, got: usize },
    #[error("the incremental scorer only supports canonical trace indexing")]
    IncrementalNeedsCanonical,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct HypothesisParams {
    /// `J`: hypotheses run over `-J..=J`.
    pub j_max: u32,
    /// `L`: temporal depth.
    pub depth: u32,
    /// `beta`: minimum in-bounds steps.
    pub beta: u32,
    /// `theta_s` in raw-score units, `0..=L`.
    pub theta_s: u32,
    #[serde(default)]
    pub mode: ScorerMode,
    #[serde(default)]
    pub indexing: TraceIndexing,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        Self {
            j_max: 15,
            depth: 16,
            beta: 4,
            theta_s: 5,
            mode: ScorerMode::default(),
            indexing: TraceIndexing::default(),
        }
    }
}

impl HypothesisParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let fail = |m: String| Err(ScoringError::Params(m));
        if self.depth == 0 || self.depth as usize > crate::grid::MAX_DEPTH {
            return fail(format!("L = {} must lie in [1, 64]", self.depth));
        }
        if self.j_max == 0 {
            return fail("J must be at least 1".into());
        }
        if self.beta == 0 || self.beta > self.depth {
            return fail(format!("beta = {} must lie in [1, L = {}]", self.beta, self.depth));
        }
        if self.theta_s > self.depth {
            return fail(format!("theta_s = {} exceeds L = {}", self.theta_s, self.depth));
        }
        Ok(())
    }

    /// A warning when `J * L > N`, i.e. `J` exceeds `floor(N/L)` and the
    /// fastest hypotheses cannot stay in bounds for `L` steps.
    pub fn j_bound_warning(&self, width: usize) -> Option<String> {
        let reach = self.j_max as usize * self.depth as usize;
        (reach > width).then(|| {
            format!(
                "J = {} with L = {} reaches {reach} px, beyond N = {width}",
                self.j_max, self.depth
            )
        })
    }

    /// Number of hypothesis lanes, `2J+1`.
    pub fn lanes(&self) -> usize {
        2 * self.j_max as usize + 1
    }

    pub fn jumps(&self) -> impl Iterator<Item = i32> + Clone {
        let j = self.j_max as i32;
        -j..=j
    }

    /// Score register width `ceil(log2(L+1))`.
    pub fn score_bits(&self) -> u32 {
        ceil_log2(u64::from(self.depth) + 1)
    }

    /// Width of the cross-multiplication and threshold products.
    pub fn product_bits(&self) -> u32 {
        2 * self.score_bits()
    }

    /// `theta_s` from a fraction of `L`, rounded to nearest.
    pub fn theta_s_from_fraction(depth: u32, fraction: f64) -> u32 {
        (fraction * f64::from(depth)).round().clamp(0.0, f64::from(depth)) as u32
    }
}

/// `ceil(log2(n))` for `n >= 1`; `0` for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// One hypothesis at one pixel: raw coincidence count `r` and in-bounds
/// step count `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HypothesisScore {
    pub j: i32,
    pub r: u8,
    pub h: u8,
}

impl HypothesisScore {
    pub fn new(j: i32, r: u8, h: u8) -> Self {
        Self { j, r, h }
    }
}

/// The selected hypothesis at an active pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PixelWinner {
    pub x0: usize,
    pub j: i32,
    pub r: u8,
    pub h: u8,
}

impl PixelWinner {
    pub fn score(&self) -> HypothesisScore {
        HypothesisScore::new(self.j, self.r, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_for_default_params() {
        let p = HypothesisParams::default();
        assert_eq!(p.score_bits(), 5);
        assert_eq!(p.product_bits(), 10);
        assert_eq!(p.lanes(), 31);
        assert_eq!(ceil_log2(31), 5);
        assert_eq!(ceil_log2(32), 5);
        assert_eq!(ceil_log2(33), 6);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
    }

    #[test]
    fn theta_s_presets_round_to_nearest() {
        assert_eq!(HypothesisParams::theta_s_from_fraction(16, 0.3), 5);
        assert_eq!(HypothesisParams::theta_s_from_fraction(16, 0.5), 8);
    }

    #[test]
    fn validation() {
        assert!(HypothesisParams::default().validate().is_ok());
        let bad = |f: fn(&mut HypothesisParams)| {
            let mut p = HypothesisParams::default();
            f(&mut p);
            p.validate().is_err()
        };
        assert!(bad(|p| p.depth = 0));
        assert!(bad(|p| p.depth = 65));
        assert!(bad(|p| p.j_max = 0));
        assert!(bad(|p| p.beta = 0));
        assert!(bad(|p| p.beta = 17));
        assert!(bad(|p| p.theta_s = 17));
    }

    #[test]
    fn j_bound_warning() {
        let p = HypothesisParams::default();
        assert!(p.j_bound_warning(240).is_none());
        assert!(p.j_bound_warning(200).is_some());
    }
}
