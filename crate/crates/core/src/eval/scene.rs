//! Per-object scoring for synthetic scenes with several objects.
//!
//! A detection is attributed to the object whose `x` footprint, swept over
//! the bins a trace can reach back through, covers the detection's pixel. A
//! bin in which two swept footprints meet is an overlap bin; its detections
//! are reported separately because the `x` projection mixes both objects.

use crate::pipeline::BinOutput;
use crate::synth::SceneObject;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SceneAccuracy {
    pub clean_bins: usize,
    pub overlap_bins: usize,
    pub clean_total: usize,
    pub clean_correct: usize,
    pub overlap_total: usize,
    /// Overlap detections whose sign matches at least one covering object.
    pub overlap_correct: usize,
    /// Detections outside every footprint (noise or edges of the sweep).
    pub unattributed: usize,
}

impl SceneAccuracy {
    pub fn clean_accuracy(&self) -> Option<f64> {
        (self.clean_total > 0).then(|| 100.0 * self.clean_correct as f64 / self.clean_total as f64)
    }

    pub fn overlap_accuracy(&self) -> Option<f64> {
        (self.overlap_total > 0).then(|| 100.0 * self.overlap_correct as f64 / self.overlap_total as f64)
    }
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `x` range covered by `obj` between `t0` and `t1`, sampled every `step`
/// microseconds and widened by `margin` pixels.
fn swept_x(obj: &SceneObject, t0: u64, t1: u64, step: u64, margin: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut t = t0;
    loop {
        let b = obj.bounds_at(t as f64);
        lo = lo.min(b[0]);
        hi = hi.max(b[1]);
        if t >= t1 {
            break;
        }
        t = (t + step.max(1)).min(t1);
    }
    (lo - margin, hi + margin)
}

/// Scores `x` detections per object. `window_bins` is the trace depth `L`.
pub fn scene_accuracy(objects: &[SceneObject], bins: &[BinOutput], window_bins: u64, margin_px: f64) -> SceneAccuracy {
    let mut acc = SceneAccuracy::default();
    for b in bins.iter().filter(|b| !b.detections.is_empty()) {
        let t0 = b.t_end_us.saturating_sub(window_bins * b.delta_t_us);
        let spans: Vec<(f64, f64)> = objects
            .iter()
            .map(|o| swept_x(o, t0, b.t_end_us, b.delta_t_us, margin_px))
            .collect();
        let overlap = spans
            .iter()
            .enumerate()
            .any(|(i, a)| spans[i + 1..].iter().any(|c| a.0 <= c.1 && c.0 <= a.1));
        if overlap {
            acc.overlap_bins += 1;
        } else {
            acc.clean_bins += 1;
        }
        let mid = (b.t_start_us + b.t_end_us) as f64 / 2.0;
        for d in &b.detections {
            let x = d.x as f64;
            let covering: Vec<&SceneObject> = objects
                .iter()
                .zip(&spans)
                .filter(|(_, s)| s.0 <= x && x <= s.1)
                .map(|(o, _)| o)
                .collect();
            if covering.is_empty() {
                acc.unattributed += 1;
                continue;
            }
            let ok = covering.iter().any(|o| sign(o.velocity_at(mid)[0]) == d.jx.signum());
            if overlap {
                acc.overlap_total += 1;
                acc.overlap_correct += usize::from(ok);
            } else {
                acc.clean_total += 1;
                acc.clean_correct += usize::from(ok);
            }
        }
    }
    acc
}
