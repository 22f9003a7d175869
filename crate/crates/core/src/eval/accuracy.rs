//! Directional accuracy against piecewise-constant ground-truth segments.
//!
//! A detection is assigned to the segment containing its bin midpoint and
//! is correct when the sign of its jump matches the segment's expected sign.
//! A zero prediction is correct only when the expected jump is zero.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::EvalError;
use crate::binning::Axis;
use crate::pipeline::Detection;
use crate::synth::GroundTruthSegment;

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct SegmentRecord {
    t_start_s: Option<f64>,
    t_end_s: Option<f64>,
    t_start_us: Option<u64>,
    t_end_us: Option<u64>,
    axis: String,
    expected_j: f64,
    object_id: Option<u32>,
}

/// Reads segments from CSV with either `t_start_s,t_end_s` (seconds) or
/// `t_start_us,t_end_us` columns, plus `axis,expected_j` and an optional
/// `object_id`. Lines starting with `#` are ignored.
pub fn read_segments<R: Read>(reader: R) -> Result<Vec<GroundTruthSegment>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<SegmentRecord>().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let to_us = |s: f64| -> Result<u64, EvalError> {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(EvalError::Segments(format!("row {line}: bad time {s}")));
            }
            Ok((s * 1e6).round() as u64)
        };
        let (t0, t1) = match (rec.t_start_us, rec.t_end_us, rec.t_start_s, rec.t_end_s) {
            (Some(a), Some(b), _, _) => (a, b),
            (_, _, Some(a), Some(b)) => (to_us(a)?, to_us(b)?),
            _ => return Err(EvalError::Segments(format!("row {line}: missing start/end times"))),
        };
        if t0 >= t1 {
            return Err(EvalError::Segments(format!("row {line}: start {t0} not before end {t1}")));
        }
        let axis: Axis = rec
            .axis
            .parse()
            .map_err(|e| EvalError::Segments(format!("row {line}: {e}")))?;
        out.push(GroundTruthSegment {
            t_start_us: t0,
            t_end_us: t1,
            axis,
            expected_j: rec.expected_j,
            object_id: rec.object_id,
        });
    }
    Ok(out)
}

pub fn load_segments(path: impl AsRef<Path>) -> Result<Vec<GroundTruthSegment>, EvalError> {
    read_segments(std::fs::File::open(path)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentRow {
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub expected_j: f64,
    /// Lower median of the predicted jumps.
    pub median_pred_j: Option<i32>,
    pub n: usize,
    pub correct: usize,
    /// Predictions equal to `expected_j`.
    pub exact: usize,
}

impl SegmentRow {
    /// Percent correct, or `None` without detections.
    pub fn accuracy(&self) -> Option<f64> {
        percent(self.correct, self.n)
    }
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub axis: Axis,
    pub rows: Vec<SegmentRow>,
    /// Detections whose midpoint falls outside every segment.
    pub excluded: usize,
}

impl AccuracyReport {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.n).sum()
    }

    pub fn correct(&self) -> usize {
        self.rows.iter().map(|r| r.correct).sum()
    }

    pub fn exact(&self) -> usize {
        self.rows.iter().map(|r| r.exact).sum()
    }

    /// Pooled over all detections, not averaged over segments.
    pub fn overall(&self) -> Option<f64> {
        percent(self.correct(), self.total())
    }

    pub fn exact_fraction(&self) -> Option<f64> {
        percent(self.exact(), self.total())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>10} {:>12} {:>10} {:>6}", "time (s)", "GT avg j", "median pred", "dir acc %", "n");
        for r in &self.rows {
            let span = format!("{:.2}-{:.2}", r.t_start_us as f64 / 1e6, r.t_end_us as f64 / 1e6);
            let med = r.median_pred_j.map_or("-".into(), |j| j.to_string());
            let acc = r.accuracy().map_or("-".into(), |a| format!("{a:.1}"));
            let _ = writeln!(s, "{span:<14} {:>10.2} {med:>12} {acc:>10} {:>6}", r.expected_j, r.n);
        }
        let overall = self.overall().map_or("-".into(), |a| format!("{a:.1}"));
        let _ = writeln!(s, "overall {overall}% over {} detections ({} outside segments)", self.total(), self.excluded);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_start_us,t_end_us,axis,expected_j,median_pred_j,accuracy_pct,n\n");
        for r in &self.rows {
            let med = r.median_pred_j.map_or(String::new(), |j| j.to_string());
            let acc = r.accuracy().map_or(String::new(), |a| format!("{a:.2}"));
            let _ = writeln!(s, "{},{},{},{},{med},{acc},{}", r.t_start_us, r.t_end_us, self.axis.name(), r.expected_j, r.n);
        }
        s
    }
}

/// Scores detections on `axis` against the segments for that axis. On `y`
/// only associated detections count.
pub fn directional_accuracy(detections: &[Detection], segments: &[GroundTruthSegment], axis: Axis) -> Result<AccuracyReport, EvalError> {
    let mut segs: Vec<&GroundTruthSegment> = segments.iter().filter(|s| s.axis == axis).collect();
    segs.sort_by_key(|s| s.t_start_us);
    if let Some(w) = segs.windows(2).find(|w| w[0].t_end_us > w[1].t_start_us) {
        return Err(EvalError::Segments(format!(
            "overlapping {} segments [{}, {}) and [{}, {})",
            axis.name(),
            w[0].t_start_us,
            w[0].t_end_us,
            w[1].t_start_us,
            w[1].t_end_us
        )));
    }
    let mut preds: Vec<Vec<i32>> = vec![Vec::new(); segs.len()];
    let mut excluded = 0;
    for d in detections {
        let j = match axis {
            Axis::X => d.jx,
            Axis::Y if d.associated => d.jy,
            Axis::Y => continue,
        };
        let mid = d.midpoint_us();
        match segs.iter().position(|s| s.contains(mid)) {
            Some(i) => preds[i].push(j),
            None => excluded += 1,
        }
    }
    let rows = segs
        .iter()
        .zip(preds)
        .map(|(seg, mut p)| {
            let sign = seg.expected_sign();
            let correct = p.iter().filter(|&&j| j.signum() == sign).count();
            let exact = p.iter().filter(|&&j| f64::from(j) == seg.expected_j).count();
            p.sort_unstable();
            SegmentRow {
                t_start_us: seg.t_start_us,
                t_end_us: seg.t_end_us,
                expected_j: seg.expected_j,
                median_pred_j: (!p.is_empty()).then(|| p[(p.len() - 1) / 2]),
                n: p.len(),
                correct,
                exact,
            }
        })
        .collect();
    Ok(AccuracyReport { axis, rows, excluded })
}
