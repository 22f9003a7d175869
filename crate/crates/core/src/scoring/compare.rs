//! Comparators, the score threshold and the winner-selection tree.
//!
//! Tie rules, shared by both comparators: when the primary key is equal the
//! hypothesis with smaller `|j|` wins; at equal `|j|` the positive jump wins.

use super::{HypothesisParams, HypothesisScore, PixelWinner, ScorerMode};
use crate::audit::check_width;

/// Winner of two equally scored hypotheses.
#[inline]
fn tie_break(a: HypothesisScore, b: HypothesisScore) -> HypothesisScore {
    let (ma, mb) = (a.j.unsigned_abs(), b.j.unsigned_abs());
    if ma != mb {
        return if ma < mb { a } else { b };
    }
    if b.j > a.j {
        b
    } else {
        a
    }
}

/// Higher `R` wins.
pub fn compare_raw(a: HypothesisScore, b: HypothesisScore) -> HypothesisScore {
    match a.r.cmp(&b.r) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => tie_break(a, b),
    }
}

/// Higher `R/H` wins, decided as `R_a * H_b` against `R_b * H_a`.
pub fn compare_normalized(a: HypothesisScore, b: HypothesisScore) -> HypothesisScore {
    compare_normalized_with_width(a, b, u32::MAX)
}

fn compare_normalized_with_width(a: HypothesisScore, b: HypothesisScore, product_bits: u32) -> HypothesisScore {
    let lhs = u32::from(a.r) * u32::from(b.h);
    let rhs = u32::from(b.r) * u32::from(a.h);
    if product_bits != u32::MAX {
        check_width(lhs, product_bits);
        check_width(rhs, product_bits);
    }
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => tie_break(a, b),
    }
}

/// The configured comparator.
#[inline]
pub fn prefer(a: HypothesisScore, b: HypothesisScore, params: &HypothesisParams) -> HypothesisScore {
    match params.mode {
        ScorerMode::RawPopcount => compare_raw(a, b),
        ScorerMode::NormalizedCrossmul => compare_normalized_with_width(a, b, params.product_bits()),
    }
}

/// Score threshold plus the `beta` step test. Strict in both modes:
/// raw `R > theta_s`; normalized `R * L > theta_s * H`.
pub fn passes_threshold(s: HypothesisScore, params: &HypothesisParams) -> bool {
    if u32::from(s.h) < params.beta {
        return false;
    }
    match params.mode {
        ScorerMode::RawPopcount => u32::from(s.r) > params.theta_s,
        ScorerMode::NormalizedCrossmul => {
            let lhs = u32::from(s.r) * params.depth;
            let rhs = params.theta_s * u32::from(s.h);
            let bits = params.product_bits();
            check_width(lhs, bits);
            check_width(rhs, bits);
            lhs > rhs
        }
    }
}

/// Picks the winning hypothesis with a pairwise comparator tree over all
/// lanes; lanes failing the threshold or `beta` test are empty inputs.
pub fn select_winner(x0: usize, scores: &[HypothesisScore], params: &HypothesisParams) -> Option<PixelWinner> {
    let mut layer: Vec<Option<HypothesisScore>> = scores
        .iter()
        .map(|&s| passes_threshold(s, params).then_some(s))
        .collect();
    while layer.len() > 1 {
        layer = layer
            .chunks(2)
            .map(|pair| match *pair {
                [Some(a), Some(b)] => Some(prefer(a, b, params)),
                [a, None] | [None, a] => a,
                [a] => a,
                _ => unreachable!(),
            })
            .collect();
    }
    layer.pop().flatten().map(|s| PixelWinner {
        x0,
        j: s.j,
        r: s.r,
        h: s.h,
    })
}
