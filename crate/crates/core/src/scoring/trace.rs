//! Trace-based scorer: walks each hypothesis diagonal through the grid.

use super::{HypothesisParams, HypothesisScore, TraceIndexing};
use crate::audit::check_width;
use crate::grid::OccupancyGrid;

/// Unmasked `(R, H)` for one hypothesis. The index register starts at `x0`
/// (canonical) or `x0 - j` (literal) and is decremented by `j` per step;
/// the walk stops at the first out-of-bounds index.
pub(crate) fn trace_counts(grid: &OccupancyGrid, x0: usize, j: i32, params: &HypothesisParams) -> (u8, u8) {
    let width = grid.width() as i64;
    let depth = params.depth as usize;
    let step = i64::from(j);
    // literal step h (1-based) reads slot L-h, i.e. h-1 bins ago, at x0 - j*h
    let mut index = match params.indexing {
        TraceIndexing::Canonical => x0 as i64,
        TraceIndexing::Literal => x0 as i64 - step,
    };
    let mut r: u8 = 0;
    let mut h: u8 = 0;
    for age in 0..depth {
        if index < 0 || index >= width {
            break;
        }
        h += 1;
        r += u8::from(grid.bit_at(index as usize, age));
        index -= step;
    }
    (r, h)
}

/// Scores hypothesis `j` at pixel `x0`. `R` is forced to zero when fewer
/// than `beta` steps were in bounds.
pub fn trace(grid: &OccupancyGrid, x0: usize, j: i32, params: &HypothesisParams) -> HypothesisScore {
    debug_assert_eq!(grid.depth(), params.depth as usize, "grid depth differs from L");
    let (raw, h) = trace_counts(grid, x0, j, params);
    let bits = params.score_bits();
    check_width(u32::from(raw), bits);
    check_width(u32::from(h), bits);
    let r = if u32::from(h) < params.beta { 0 } else { raw };
    HypothesisScore::new(j, r, h)
}

/// All `2J+1` hypotheses at `x0`, ordered `j = -J..=J`.
pub fn score_all(grid: &OccupancyGrid, x0: usize, params: &HypothesisParams) -> Vec<HypothesisScore> {
    params.jumps().map(|j| trace(grid, x0, j, params)).collect()
}
