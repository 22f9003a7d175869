//! Fixed-parameter sweeps over bin duration and event threshold.
//!
//! Each cell runs the full pipeline with adaptation off. Cells own their
//! pipeline state, so they are evaluated independently and in any order.

use std::fmt::Write as _;

use crate::binning::BinConfig;
use crate::events::Event;
use crate::par::{self, Execution};
use crate::pipeline::{run_events, BinOutput, PipelineConfig, PipelineError};

/// Detections needed before a cell's accuracy is reported.
pub const N_MIN: usize = 50;
/// Density splitting the two insufficient-detection bands.
pub const DENSE_RHO: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    /// Enough detections, accuracy at least 90%.
    Green,
    /// Enough detections, accuracy in [75, 90)%.
    Yellow,
    /// Enough detections, accuracy below 75%.
    Poor,
    /// Too few detections at density >= 10%.
    Red,
    /// Too few detections at density < 10%.
    Grey,
}

impl Band {
    pub fn classify(n: usize, accuracy: Option<f64>, density: f64) -> Self {
        match accuracy {
            Some(a) if n >= N_MIN => {
                if a >= 90.0 {
                    Band::Green
                } else if a >= 75.0 {
                    Band::Yellow
                } else {
                    Band::Poor
                }
            }
            _ if density >= DENSE_RHO => Band::Red,
            _ => Band::Grey,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Green => "green",
            Band::Yellow => "yellow",
            Band::Poor => "poor",
            Band::Red => "red",
            Band::Grey => "grey",
        }
    }

    fn fill(self) -> &'static str {
        match self {
            Band::Green => "#4caf50",
            Band::Yellow => "#ffd54f",
            Band::Poor => "#ff9800",
            Band::Red => "#e53935",
            Band::Grey => "#9e9e9e",
        }
    }
}

/// Correct and total counts from one cell's run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Scored {
    pub correct: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub delta_t_us: u64,
    pub theta_e: u32,
    /// Mean `x` occupancy density over all closed bins.
    pub mean_density: f64,
    pub n: usize,
    /// Percent correct; present iff `n >= N_MIN`.
    pub accuracy: Option<f64>,
    pub band: Band,
}

/// Runs every `(delta_t, theta_e)` pair. `evaluate` scores one run's bins.
pub fn sweep<F>(
    events: &[Event],
    delta_ts: &[u64],
    thetas: &[u32],
    base: &PipelineConfig,
    evaluate: F,
    exec: Execution,
) -> Result<Vec<SweepCell>, PipelineError>
where
    F: Fn(&[BinOutput]) -> Scored + Sync,
{
    let pairs: Vec<(u64, u32)> = delta_ts
        .iter()
        .flat_map(|&dt| thetas.iter().map(move |&th| (dt, th)))
        .collect();
    par::map_slice(exec, &pairs, |&(dt, th)| {
        let mut cfg = base.clone();
        cfg.bins = BinConfig::fixed(dt, th);
        cfg.execution = Execution::Sequential;
        let bins = run_events(&cfg, events)?;
        let mean_density = if bins.is_empty() {
            0.0
        } else {
            bins.iter().map(|b| b.density_x).sum::<f64>() / bins.len() as f64
        };
        let scored = evaluate(&bins);
        let accuracy = (scored.total >= N_MIN).then(|| 100.0 * scored.correct as f64 / scored.total as f64);
        Ok(SweepCell {
            delta_t_us: dt,
            theta_e: th,
            mean_density,
            n: scored.total,
            accuracy,
            band: Band::classify(scored.total, accuracy, mean_density),
        })
    })
    .into_iter()
    .collect()
}

pub fn cells_to_csv(cells: &[SweepCell]) -> String {
    let mut s = String::from("delta_t_us,theta_e,density,n,accuracy_pct,band\n");
    for c in cells {
        let acc = c.accuracy.map_or(String::new(), |a| format!("{a:.2}"));
        let _ = writeln!(s, "{},{},{:.4},{},{acc},{}", c.delta_t_us, c.theta_e, c.mean_density, c.n, c.band.name());
    }
    s
}

/// Heat map with bin duration across and threshold down.
pub fn cells_to_svg(cells: &[SweepCell]) -> String {
    let mut dts: Vec<u64> = cells.iter().map(|c| c.delta_t_us).collect();
    let mut ths: Vec<u32> = cells.iter().map(|c| c.theta_e).collect();
    dts.sort_unstable();
    dts.dedup();
    ths.sort_unstable();
    ths.dedup();
    let (cw, ch, left, top) = (90.0, 50.0, 60.0, 30.0);
    let w = left + cw * dts.len() as f64 + 10.0;
    let h = top + ch * ths.len() as f64 + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="monospace" font-size="10">"#
    );
    for (i, dt) in dts.iter().enumerate() {
        let x = left + cw * (i as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">dt={dt}</text>"#, top - 8.0);
    }
    for (k, th) in ths.iter().enumerate() {
        let y = top + ch * (k as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">th={th}</text>"#, left - 4.0);
    }
    for c in cells {
        let i = dts.binary_search(&c.delta_t_us).expect("listed");
        let k = ths.binary_search(&c.theta_e).expect("listed");
        let (x, y) = (left + cw * i as f64, top + ch * k as f64);
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{}" stroke="white"/>"#,
            c.band.fill()
        );
        let acc = c.accuracy.map_or("-".to_string(), |a| format!("{a:.1}%"));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{acc}</text>"#, x + cw / 2.0, y + 18.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">rho={:.1}% n={}</text>"#,
            x + cw / 2.0,
            y + 34.0,
            c.mean_density * 100.0,
            c.n
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::SensorGeometry;
    use crate::pipeline::detections;
    use crate::scoring::{HypothesisParams, ScorerMode};
    use crate::synth::{generate_scene, NoiseConfig, SceneObject};

    #[test]
    fn band_rules() {
        assert_eq!(Band::classify(50, Some(90.0), 0.0), Band::Green);
        assert_eq!(Band::classify(80, Some(89.9), 0.2), Band::Yellow);
        assert_eq!(Band::classify(80, Some(10.0), 0.2), Band::Poor);
        assert_eq!(Band::classify(49, None, 0.10), Band::Red);
        assert_eq!(Band::classify(0, None, 0.099), Band::Grey);
    }

    fn setup() -> (Vec<Event>, PipelineConfig) {
        let g = SensorGeometry::new(120, 60).unwrap();
        let bar = SceneObject::bar(1, [20.0, 30.0], [0.01, 0.0], 4.0, 30.0, 90.0);
        let out = generate_scene(&[bar], g, 60_000, &NoiseConfig::relative(0.05, 1), 200).unwrap();
        let params = HypothesisParams {
            j_max: 6,
            depth: 8,
            beta: 4,
            theta_s: 4,
            mode: ScorerMode::RawPopcount,
            ..HypothesisParams::default()
        };
        (out.events, PipelineConfig::new(g, BinConfig::fixed(200, 10), params))
    }

    fn positive(bins: &[BinOutput]) -> Scored {
        let d: Vec<_> = detections(bins).collect();
        Scored {
            correct: d.iter().filter(|d| d.jx > 0).count(),
            total: d.len(),
        }
    }

    #[test]
    fn single_cell_equals_plain_run() {
        let (evs, cfg) = setup();
        let cells = sweep(&evs, &[200], &[10], &cfg, positive, Execution::Sequential).unwrap();
        let plain = positive(&run_events(&cfg, &evs).unwrap());
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].n, plain.total);
        assert!(cells[0].accuracy.is_some());
    }

    #[test]
    fn unreachable_threshold_is_grey() {
        let (evs, cfg) = setup();
        let cells = sweep(&evs, &[200], &[255], &cfg, positive, Execution::Sequential).unwrap();
        assert_eq!(cells[0].mean_density, 0.0);
        assert_eq!(cells[0].band, Band::Grey);
    }

    #[test]
    fn cell_order_does_not_matter() {
        let (evs, cfg) = setup();
        let a = sweep(&evs, &[100, 200], &[5, 10], &cfg, positive, Execution::Sequential).unwrap();
        let b = sweep(&evs, &[200, 100], &[10, 5], &cfg, positive, Execution::Parallel).unwrap();
        for c in &a {
            assert!(b.contains(c));
        }
        assert_eq!(cells_to_svg(&a).matches("<rect").count(), 4);
        assert!(cells_to_csv(&a).starts_with("delta_t_us,theta_e,density,n,accuracy_pct,band\n"));
    }
}
