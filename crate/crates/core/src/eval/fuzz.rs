//! Randomized equivalence checks: incremental against trace scoring, and
//! the production winner against the brute-force oracle.
//!
//! Every case draws from its own ChaCha stream keyed by the case index, so
//! results do not depend on execution order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binning::{Axis, AxisAccumulator, OccupancyVector};
use crate::bits::BitRow;
use crate::events::{Event, Polarity};
use crate::grid::OccupancyGrid;
use crate::par::{self, Execution};
use crate::scoring::{score_all, select_winner, HypothesisParams, ScoreArray, ScorerMode, TraceIndexing};

use super::oracle::{oracle_winner, EventHistory};

/// Recorded mismatches are capped; the count is not.
const MAX_RECORDED: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub cases: usize,
    pub comparisons: u64,
    pub mismatch_count: u64,
    pub mismatches: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0
    }

    fn merge(mut self, other: CaseResult) -> Self {
        self.cases += 1;
        self.comparisons += other.comparisons;
        self.mismatch_count += other.mismatches.len() as u64;
        let room = MAX_RECORDED.saturating_sub(self.mismatches.len());
        self.mismatches.extend(other.mismatches.into_iter().take(room));
        self
    }
}

#[derive(Default)]
struct CaseResult {
    comparisons: u64,
    mismatches: Vec<String>,
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

/// `N` in `[8, 64]`, `L` in `[2, 8]`, `J` in `[1, 4]`, and random `beta`,
/// `theta_s` and scorer mode.
fn random_params(rng: &mut ChaCha8Rng) -> (usize, HypothesisParams) {
    let width = rng.random_range(8..=64);
    let depth = rng.random_range(2..=8u32);
    let params = HypothesisParams {
        j_max: rng.random_range(1..=4),
        depth,
        beta: rng.random_range(1..=depth),
        theta_s: rng.random_range(0..=depth),
        mode: if rng.random() {
            ScorerMode::RawPopcount
        } else {
            ScorerMode::NormalizedCrossmul
        },
        indexing: TraceIndexing::Canonical,
    };
    (width, params)
}

fn run_cases(cases: usize, exec: Execution, f: impl Fn(usize) -> CaseResult + Sync + Send) -> FuzzReport {
    par::map_range(exec, 0..cases, f)
        .into_iter()
        .fold(FuzzReport::default(), FuzzReport::merge)
}

/// Streams random occupancy vectors through both scorers and compares every
/// `(pixel, hypothesis)` score after each bin.
pub fn variant_equivalence(cases: usize, seed: u64, exec: Execution) -> FuzzReport {
    run_cases(cases, exec, |case| {
        let mut rng = case_rng(seed, case);
        let (width, params) = random_params(&mut rng);
        let mut grid = OccupancyGrid::new(width, params.depth as usize).expect("valid dims");
        let mut arr = ScoreArray::new(width, &params).expect("valid params");
        let bins = rng.random_range(1..=3 * params.depth as usize);
        let mut out = CaseResult::default();
        for bin in 0..bins {
            let p: f64 = rng.random_range(0.0..0.7);
            let vec = OccupancyVector::new(BitRow::from_bools((0..width).map(|_| rng.random_bool(p))), bin as u64);
            arr.update(&grid, &vec).expect("matching widths");
            grid.shift_insert(&vec).expect("matching widths");
            for x0 in 0..width {
                let expect = score_all(&grid, x0, &params);
                let got = arr.score_all(x0, &params);
                out.comparisons += expect.len() as u64;
                if expect != got {
                    out.mismatches.push(format!(
                        "case {case} bin {bin} N={width} {params:?} x0={x0}: trace {expect:?} incremental {got:?}"
                    ));
                }
            }
        }
        out
    })
}

/// Builds random per-bin event sets, runs them through the accumulator,
/// grid and comparator tree, and compares each pixel's winner with the
/// oracle's after every bin.
pub fn oracle_equivalence(cases: usize, seed: u64, exec: Execution) -> FuzzReport {
    run_cases(cases, exec, |case| {
        let mut rng = case_rng(seed, case);
        let (width, params) = random_params(&mut rng);
        // mostly small thresholds; sometimes near saturation
        let theta_e: u32 = if rng.random_bool(0.1) {
            rng.random_range(200..=255)
        } else {
            rng.random_range(1..=4)
        };
        let mut grid = OccupancyGrid::new(width, params.depth as usize).expect("valid dims");
        let mut hist = EventHistory::new(width);
        let bins = rng.random_range(1..=2 * params.depth as usize);
        let mut out = CaseResult::default();
        for bin in 0..bins as u64 {
            let p: f64 = rng.random_range(0.0..0.6);
            let mut coords = Vec::new();
            for x in 0..width as u16 {
                if rng.random_bool(p) {
                    let n = rng.random_range(1..=2 * theta_e);
                    coords.extend(std::iter::repeat_n(x, n as usize));
                }
            }
            let mut acc = AxisAccumulator::starting_at(Axis::X, width, bin, bin * 100, 100);
            for &x in &coords {
                acc.accumulate(&Event::new(bin * 100, x, 0, Polarity::On)).expect("in range");
            }
            let vec = acc.close_bin(theta_e);
            grid.shift_insert(&vec).expect("matching widths");
            hist.push_bin(coords);
            for x0 in 0..width {
                let got = select_winner(x0, &score_all(&grid, x0, &params), &params);
                let expect = oracle_winner(&hist, theta_e, x0, &params);
                out.comparisons += 1;
                if got != expect {
                    out.mismatches.push(format!(
                        "case {case} bin {bin} N={width} theta_e={theta_e} {params:?} x0={x0}: scorer {got:?} oracle {expect:?}"
                    ));
                }
            }
        }
        out
    })
}
