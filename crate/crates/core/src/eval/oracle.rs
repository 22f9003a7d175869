//! Brute-force reference scorer.
//!
//! Works from the raw event coordinates of each bin: occupancy is recounted
//! from scratch and the diagonal is walked with signed arithmetic. It shares
//! no code with the grid or the scorers, so agreement is evidence rather
//! than tautology.

use num_rational::Ratio;

use crate::scoring::{HypothesisParams, HypothesisScore, PixelWinner, ScorerMode};

/// Raw per-bin event coordinates along one axis, oldest bin first.
#[derive(Clone, Debug, Default)]
pub struct EventHistory {
    pub len: usize,
    pub bins: Vec<Vec<u16>>,
}

impl EventHistory {
    pub fn new(len: usize) -> Self {
        Self { len, bins: Vec::new() }
    }

    pub fn push_bin(&mut self, coords: Vec<u16>) {
        self.bins.push(coords);
    }

    /// Occupancy of the bin `age` bins before the newest. Bins older than
    /// the history are empty.
    pub fn occupancy(&self, age: usize, theta_e: u32) -> Vec<bool> {
        let mut counts = vec![0u64; self.len];
        if age < self.bins.len() {
            for &c in &self.bins[self.bins.len() - 1 - age] {
                counts[c as usize] += 1;
            }
        }
        counts.iter().map(|&c| c.min(255) >= u64::from(theta_e)).collect()
    }
}

/// Walks `x0 - j*h` over ages `h = 0..L`, stopping at the sensor edge.
pub fn oracle_score(history: &EventHistory, theta_e: u32, x0: usize, j: i32, params: &HypothesisParams) -> HypothesisScore {
    let frames: Vec<Vec<bool>> = (0..params.depth as usize).map(|h| history.occupancy(h, theta_e)).collect();
    score_frames(&frames, x0, j, params)
}

fn score_frames(frames: &[Vec<bool>], x0: usize, j: i32, params: &HypothesisParams) -> HypothesisScore {
    let (mut r, mut h) = (0u32, 0u32);
    for (age, frame) in frames.iter().enumerate() {
        let x = x0 as i64 - i64::from(j) * age as i64;
        if x < 0 || x >= frame.len() as i64 {
            break;
        }
        h += 1;
        if frame[x as usize] {
            r += 1;
        }
    }
    if h < params.beta {
        r = 0;
    }
    HypothesisScore::new(j, r as u8, h as u8)
}

/// Best hypothesis by exact rational (or raw) score, then smaller `|j|`,
/// then positive `j`; `None` if nothing clears the threshold.
pub fn oracle_winner(history: &EventHistory, theta_e: u32, x0: usize, params: &HypothesisParams) -> Option<PixelWinner> {
    let frames: Vec<Vec<bool>> = (0..params.depth as usize).map(|h| history.occupancy(h, theta_e)).collect();
    let l = i64::from(params.depth);
    let theta = i64::from(params.theta_s);
    params
        .jumps()
        .map(|j| score_frames(&frames, x0, j, params))
        .filter(|s| {
            let (r, h) = (i64::from(s.r), i64::from(s.h));
            h >= i64::from(params.beta)
                && match params.mode {
                    ScorerMode::RawPopcount => r > theta,
                    ScorerMode::NormalizedCrossmul => Ratio::new(r, h) > Ratio::new(theta, l),
                }
        })
        .max_by_key(|s| {
            let primary = match params.mode {
                ScorerMode::RawPopcount => Ratio::from_integer(i64::from(s.r)),
                ScorerMode::NormalizedCrossmul => Ratio::new(i64::from(s.r), i64::from(s.h)),
            };
            (primary, std::cmp::Reverse(s.j.unsigned_abs()), s.j > 0)
        })
        .map(|s| PixelWinner {
            x0,
            j: s.j,
            r: s.r,
            h: s.h,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::TraceIndexing;

    fn params() -> HypothesisParams {
        HypothesisParams {
            j_max: 2,
            depth: 4,
            beta: 1,
            theta_s: 0,
            mode: ScorerMode::RawPopcount,
            indexing: TraceIndexing::Canonical,
        }
    }

    #[test]
    fn moving_bar_instance() {
        let mut hist = EventHistory::new(8);
        for x in [2u16, 3, 4, 5] {
            hist.push_bin(vec![x]);
        }
        let s = oracle_score(&hist, 1, 5, 1, &params());
        assert_eq!((s.r, s.h), (4, 4));
        let s = oracle_score(&hist, 1, 5, 0, &params());
        assert_eq!((s.r, s.h), (1, 4));
        assert_eq!(oracle_winner(&hist, 1, 5, &params()).unwrap().j, 1);
    }

    #[test]
    fn empty_history_scores_only_the_newest_bit() {
        let mut hist = EventHistory::new(8);
        hist.push_bin(vec![6, 6]);
        for j in -2..=2 {
            let s = oracle_score(&hist, 2, 6, j, &params());
            assert_eq!(s.r, 1);
        }
        // all five hypotheses tie; j = 0 wins
        assert_eq!(oracle_winner(&hist, 2, 6, &params()).unwrap().j, 0);
    }

    #[test]
    fn saturation_caps_counts() {
        let mut hist = EventHistory::new(4);
        hist.push_bin(vec![1; 400]);
        assert!(hist.occupancy(0, 255)[1]);
        assert!(!hist.occupancy(1, 1)[1]);
    }
}
