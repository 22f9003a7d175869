//! Incremental scorer.
//!
//! Keeps a running unmasked score per (pixel, hypothesis). Between bins the
//! canonical trace at `x0` equals the previous bin's trace at `x0 - j`,
//! advanced one bin: the cell at `(x0 - j*L, oldest slot)` falls off the far
//! end and the new bit at `x0` enters the near end. So
//!
//! ```text
//! R[x0][j] <- R[x0 - j][j] - G_old[x0 - j*L, 0] + v_new[x0]
//! ```
//!
//! with an out-of-bounds source contributing zero and an out-of-bounds
//! aged-out cell (never part of the old trace) contributing zero. `H` depends
//! only on geometry and is held in a constant table; the `beta` mask is
//! applied on read, never stored.

use super::{HypothesisParams, HypothesisScore, ScoringError, TraceIndexing};
use crate::audit::check_width;
use crate::binning::OccupancyVector;
use crate::grid::OccupancyGrid;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreArray {
    width: usize,
    lanes: usize,
    j_max: i32,
    depth: usize,
    scores: Vec<u8>,
    steps: Vec<u8>,
    scratch: Vec<u8>,
}

impl ScoreArray {
    /// An all-zero array, consistent with an empty grid.
    pub fn new(width: usize, params: &HypothesisParams) -> Result<Self, ScoringError> {
        params.validate()?;
        if params.indexing != TraceIndexing::Canonical {
            return Err(ScoringError::IncrementalNeedsCanonical);
        }
        if width == 0 {
            return Err(ScoringError::Mismatch { expected: 1, got: 0 });
        }
        let lanes = params.lanes();
        let j_max = params.j_max as i32;
        let depth = params.depth as usize;
        let mut steps = vec![0u8; width * lanes];
        for x0 in 0..width {
            for (lane, j) in params.jumps().enumerate() {
                steps[x0 * lanes + lane] = in_bounds_steps(x0 as i64, i64::from(j), width as i64, depth);
            }
        }
        Ok(Self {
            width,
            lanes,
            j_max,
            depth,
            scores: vec![0; width * lanes],
            steps,
            scratch: vec![0; width * lanes],
        })
    }

    /// Rebuilds every running score from the grid by full traces.
    pub fn rebuild(&mut self, grid: &OccupancyGrid, params: &HypothesisParams) -> Result<(), ScoringError> {
        self.check_grid(grid)?;
        for x0 in 0..self.width {
            for (lane, j) in params.jumps().enumerate() {
                let (r, _) = super::trace::trace_counts(grid, x0, j, params);
                self.scores[x0 * self.lanes + lane] = r;
            }
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.scores.fill(0);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Score-array payload in bits: `N * (2J+1) * ceil(log2(L+1))`.
    pub fn storage_bits(&self) -> usize {
        self.width * self.lanes * super::ceil_log2(self.depth as u64 + 1) as usize
    }

    /// Advances every running score by one bin. `grid_before` is the grid
    /// before `new_vec` is shift-inserted.
    pub fn update(&mut self, grid_before: &OccupancyGrid, new_vec: &OccupancyVector) -> Result<(), ScoringError> {
        self.check_grid(grid_before)?;
        if new_vec.len() != self.width {
            return Err(ScoringError::Mismatch {
                expected: self.width,
                got: new_vec.len(),
            });
        }
        let width = self.width as i64;
        let lanes = self.lanes;
        let oldest = self.depth - 1;
        let depth = self.depth as i64;
        let bits = super::ceil_log2(self.depth as u64 + 1);
        for lane in 0..lanes {
            let j = lane as i64 - i64::from(self.j_max);
            // fixed per-lane address offsets
            let aged_offset = j * depth;
            for x0 in 0..self.width {
                let src = x0 as i64 - j;
                let carried = if (0..width).contains(&src) {
                    let old = self.scores[src as usize * lanes + lane];
                    let aged = x0 as i64 - aged_offset;
                    let falling = (0..width).contains(&aged) && grid_before.bit_at(aged as usize, oldest);
                    old - u8::from(falling)
                } else {
                    0
                };
                let next = carried + u8::from(new_vec.get(x0));
                check_width(u32::from(next), bits);
                self.scratch[x0 * lanes + lane] = next;
            }
        }
        std::mem::swap(&mut self.scores, &mut self.scratch);
        Ok(())
    }

    /// Running unmasked count for `(x0, j)`.
    pub fn raw(&self, x0: usize, j: i32) -> u8 {
        self.scores[x0 * self.lanes + self.lane(j)]
    }

    /// The score as the trace scorer would report it.
    pub fn score(&self, x0: usize, j: i32, params: &HypothesisParams) -> HypothesisScore {
        let idx = x0 * self.lanes + self.lane(j);
        let h = self.steps[idx];
        let r = if u32::from(h) < params.beta { 0 } else { self.scores[idx] };
        HypothesisScore::new(j, r, h)
    }

    /// All hypotheses at `x0`, ordered `j = -J..=J`.
    pub fn score_all(&self, x0: usize, params: &HypothesisParams) -> Vec<HypothesisScore> {
        params.jumps().map(|j| self.score(x0, j, params)).collect()
    }

    fn lane(&self, j: i32) -> usize {
        assert!(j.abs() <= self.j_max, "jump {j} outside +/-{}", self.j_max);
        (j + self.j_max) as usize
    }

    fn check_grid(&self, grid: &OccupancyGrid) -> Result<(), ScoringError> {
        if grid.width() != self.width {
            return Err(ScoringError::Mismatch {
                expected: self.width,
                got: grid.width(),
            });
        }
        if grid.depth() != self.depth {
            return Err(ScoringError::Mismatch {
                expected: self.depth,
                got: grid.depth(),
            });
        }
        Ok(())
    }
}

/// Step counter for the canonical trace: in-bounds steps before the first
/// exit, at most `depth`.
fn in_bounds_steps(x0: i64, j: i64, width: i64, depth: usize) -> u8 {
    let mut index = x0;
    let mut h = 0u8;
    for _ in 0..depth {
        if !(0..width).contains(&index) {
            break;
        }
        h += 1;
        index -= j;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitRow;
    use crate::scoring::{score_all, trace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(depth: u32, j_max: u32, beta: u32) -> HypothesisParams {
        HypothesisParams {
            j_max,
            depth,
            beta,
            theta_s: 0,
            ..Default::default()
        }
    }

    fn random_vec(rng: &mut ChaCha8Rng, width: usize, density: f64) -> OccupancyVector {
        OccupancyVector::new(BitRow::from_bools((0..width).map(|_| rng.random_bool(density))), 0)
    }

    /// Runs both scorers over a random stream; returns the first mismatch.
    fn first_mismatch(seed: u64) -> Option<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = rng.random_range(8..=64);
        let depth = rng.random_range(2..=8u32);
        let j_max = rng.random_range(1..=4u32);
        let beta = rng.random_range(1..=depth);
        let p = params(depth, j_max, beta);
        let density = rng.random_range(0.0..0.8);
        let mut grid = OccupancyGrid::new(width, depth as usize).unwrap();
        let mut arr = ScoreArray::new(width, &p).unwrap();
        let bins = rng.random_range(1..3 * depth as usize);
        for bin in 0..bins {
            let v = random_vec(&mut rng, width, density);
            arr.update(&grid, &v).unwrap();
            grid.shift_insert(&v).unwrap();
            for x0 in 0..width {
                let a = score_all(&grid, x0, &p);
                let b = arr.score_all(x0, &p);
                if a != b {
                    return Some(format!("seed {seed} bin {bin} x0 {x0}: trace {a:?} incremental {b:?}"));
                }
            }
        }
        None
    }

    #[test]
    fn matches_trace_on_random_streams() {
        for seed in 0..1000 {
            if let Some(m) = first_mismatch(seed) {
                panic!("{m}");
            }
        }
    }

    #[test]
    fn zero_stream_stays_zero() {
        let p = params(8, 4, 1);
        let mut grid = OccupancyGrid::new(32, 8).unwrap();
        let mut arr = ScoreArray::new(32, &p).unwrap();
        let zero = OccupancyVector::new(BitRow::zeros(32), 0);
        for _ in 0..20 {
            arr.update(&grid, &zero).unwrap();
            grid.shift_insert(&zero).unwrap();
        }
        assert!((0..32).all(|x| p.jumps().all(|j| arr.raw(x, j) == 0)));
    }

    #[test]
    fn full_stream_saturates_at_h() {
        let p = params(8, 4, 1);
        let mut grid = OccupancyGrid::new(32, 8).unwrap();
        let mut arr = ScoreArray::new(32, &p).unwrap();
        let full = OccupancyVector::new(BitRow::ones(32), 0);
        for _ in 0..20 {
            arr.update(&grid, &full).unwrap();
            grid.shift_insert(&full).unwrap();
        }
        for x0 in 0..32 {
            for s in arr.score_all(x0, &p) {
                assert_eq!(s.r, s.h);
            }
        }
    }

    #[test]
    fn rebuild_agrees_with_trace() {
        let p = params(6, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut grid = OccupancyGrid::new(40, 6).unwrap();
        for _ in 0..9 {
            grid.shift_insert(&random_vec(&mut rng, 40, 0.3)).unwrap();
        }
        let mut arr = ScoreArray::new(40, &p).unwrap();
        arr.rebuild(&grid, &p).unwrap();
        for x0 in 0..40 {
            for j in p.jumps() {
                assert_eq!(arr.score(x0, j, &p), trace(&grid, x0, j, &p));
            }
        }
    }

    #[test]
    fn storage_for_reference_configuration() {
        let p = params(16, 15, 4);
        assert_eq!(ScoreArray::new(240, &p).unwrap().storage_bits(), 37_200);
    }

    #[test]
    fn rejects_mismatch_and_literal_indexing() {
        let p = params(4, 2, 1);
        let mut arr = ScoreArray::new(8, &p).unwrap();
        let grid = OccupancyGrid::new(9, 4).unwrap();
        let v = OccupancyVector::new(BitRow::zeros(9), 0);
        assert!(arr.update(&grid, &v).is_err());
        let grid = OccupancyGrid::new(8, 4).unwrap();
        assert!(arr.update(&grid, &v).is_err());
        let lit = HypothesisParams {
            indexing: TraceIndexing::Literal,
            ..p
        };
        assert_eq!(ScoreArray::new(8, &lit), Err(ScoringError::IncrementalNeedsCanonical));
    }

    /// The recurrence with the source at `x0 + j` does not reproduce the
    /// trace scores; `x0 - j` does (see `matches_trace_on_random_streams`).
    #[test]
    fn source_at_x0_plus_j_breaks_equivalence() {
        let p = params(4, 2, 1);
        let width = 16usize;
        let lanes = p.lanes();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut grid = OccupancyGrid::new(width, 4).unwrap();
        let mut flipped = vec![0i32; width * lanes];
        let mut mismatches = 0;
        for _ in 0..12 {
            let v = random_vec(&mut rng, width, 0.4);
            let mut next = vec![0i32; width * lanes];
            for (lane, j) in p.jumps().enumerate() {
                for x0 in 0..width as i64 {
                    let src = x0 + i64::from(j);
                    let aged = x0 - i64::from(j) * 4;
                    let mut val = if (0..width as i64).contains(&src) { flipped[src as usize * lanes + lane] } else { 0 };
                    if (0..width as i64).contains(&aged) && grid.bit_at(aged as usize, 3) {
                        val -= 1;
                    }
                    next[x0 as usize * lanes + lane] = val + i32::from(v.get(x0 as usize));
                }
            }
            flipped = next;
            grid.shift_insert(&v).unwrap();
            for x0 in 0..width {
                for (lane, j) in p.jumps().enumerate() {
                    let expected = i32::from(super::super::trace::trace_counts(&grid, x0, j, &p).0);
                    mismatches += usize::from(flipped[x0 * lanes + lane] != expected);
                }
            }
        }
        assert!(mismatches > 0);
    }
}
