//! Two-axis streaming estimator.
//!
//! Each axis runs its own accumulator, grid and scorer; the two share no
//! state until the `y` association step. Events are consumed strictly in
//! order with no lookahead. A bin is closed when the first event at or past
//! its end arrives; the trailing partial bin at end of stream is dropped,
//! since no bin-complete pulse ever fires for it.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binning::{adapt_bin_duration, Axis, AxisAccumulator, BinConfig, BinError, BinTiming, OccupancyVector};
use crate::bits::BitRow;
use crate::events::{Event, SensorGeometry};
use crate::grid::{GridError, OccupancyGrid};
use crate::par::{self, Execution};
use crate::scoring::{
    jump_to_velocity, score_all, select_winner, HypothesisParams, PixelWinner, ScoreArray, ScoringError, TraceIndexing,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerVariant {
    /// Re-walk every trace each bin.
    #[default]
    Trace,
    /// Keep running scores updated once per bin.
    Incremental,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Bin(#[from] BinError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("event at {t} us precedes the open bin starting at {bin_start} us")]
    Regression { t: u64, bin_start: u64 },
    #[error("x = {0} has no associated y pixels in this bin")]
    EmptyAssociation(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub geometry: SensorGeometry,
    pub bins: BinConfig,
    #[serde(default)]
    pub hypotheses: HypothesisParams,
    #[serde(default)]
    pub variant: ScorerVariant,
    /// Run the `y` axis and attach `v_y` to detections.
    #[serde(default = "default_true")]
    pub y_pipeline: bool,
    #[serde(skip)]
    pub execution: Execution,
}

fn default_true() -> bool {
    true
}

impl PipelineConfig {
    pub fn new(geometry: SensorGeometry, bins: BinConfig, hypotheses: HypothesisParams) -> Self {
        Self {
            geometry,
            bins,
            hypotheses,
            variant: ScorerVariant::Trace,
            y_pipeline: true,
            execution: Execution::Sequential,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.geometry
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.bins.validate()?;
        self.hypotheses.validate()?;
        if self.variant == ScorerVariant::Incremental && self.hypotheses.indexing != TraceIndexing::Canonical {
            return Err(ScoringError::IncrementalNeedsCanonical.into());
        }
        Ok(())
    }

    /// Human-readable `key = value` lines describing the resolved setup.
    pub fn describe(&self) -> Vec<String> {
        let b = &self.bins;
        let h = &self.hypotheses;
        let mut lines = vec![
            format!("geometry = {}x{}", self.geometry.nx, self.geometry.ny),
            format!("delta_t_us = {}", b.delta_t_us),
            format!("theta_e = {}", b.theta_e),
            format!("L = {}", h.depth),
            format!("J = {}", h.j_max),
            format!("beta = {}", h.beta),
            format!("theta_s = {}", h.theta_s),
            format!("scorer_mode = {:?}", h.mode),
            format!("indexing = {:?}", h.indexing),
            format!("variant = {:?}", self.variant),
            format!("y_pipeline = {}", self.y_pipeline),
            format!("adaptive = {}", b.adaptive),
        ];
        if b.adaptive {
            lines.push(format!("rho_band = [{}, {}]", b.rho_lo, b.rho_hi));
            lines.push(format!("delta_t_clamp_us = [{}, {}]", b.delta_t_min_us, b.delta_t_max_us));
            lines.push(format!("hold_bins = {}", b.hold_bins));
        }
        lines
    }
}

/// For each `x` pixel, the set of `y` pixels that saw events at that `x`
/// during the open bin.
#[derive(Clone, Debug)]
pub struct YAssociationTable {
    rows: Vec<BitRow>,
}

impl YAssociationTable {
    pub fn new(geometry: SensorGeometry) -> Self {
        Self {
            rows: vec![BitRow::zeros(geometry.ny as usize); geometry.nx as usize],
        }
    }

    pub fn insert(&mut self, x: u16, y: u16) {
        self.rows[x as usize].set(y as usize, true);
    }

    /// `y` pixels seen at `x`, ascending.
    pub fn ys(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[x].iter_ones()
    }

    pub fn clear(&mut self) {
        for r in &mut self.rows {
            r.clear();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct YAssociation {
    pub j_y: i32,
    /// Lower median of the associated `y` coordinates.
    pub y_med: usize,
    /// False when no `y` pixel in the set produced a winner.
    pub associated: bool,
}

/// Lower median of the `y` winners at the pixels in `Y(x0)`, plus the lower
/// median `y` coordinate of `Y(x0)`.
pub fn associate_y(x0: usize, table: &YAssociationTable, y_winners: &[Option<PixelWinner>]) -> Result<YAssociation, PipelineError> {
    let ys: Vec<usize> = table.ys(x0).collect();
    if ys.is_empty() {
        return Err(PipelineError::EmptyAssociation(x0));
    }
    let y_med = ys[(ys.len() - 1) / 2];
    let mut jumps: Vec<i32> = ys
        .iter()
        .filter_map(|&y| y_winners.get(y).copied().flatten())
        .map(|w| w.j)
        .collect();
    if jumps.is_empty() {
        return Ok(YAssociation {
            j_y: 0,
            y_med,
            associated: false,
        });
    }
    jumps.sort_unstable();
    Ok(YAssociation {
        j_y: jumps[(jumps.len() - 1) / 2],
        y_med,
        associated: true,
    })
}

/// One 2D velocity estimate at an active `x` pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub bin_index: u64,
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub x: usize,
    pub y_med: usize,
    pub jx: i32,
    pub jy: i32,
    pub vx: f64,
    pub vy: f64,
    pub r: u8,
    pub h: u8,
    pub associated: bool,
}

impl Detection {
    pub fn midpoint_us(&self) -> u64 {
        self.t_start_us + (self.t_end_us - self.t_start_us) / 2
    }
}

/// Everything produced when one bin closes.
#[derive(Clone, Debug, PartialEq)]
pub struct BinOutput {
    pub bin_index: u64,
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub delta_t_us: u64,
    pub theta_e: u32,
    pub density_x: f64,
    pub density_y: f64,
    /// True if this bin triggered a bin-duration change (its vectors were
    /// discarded and both grids cleared).
    pub adapted: bool,
    pub warming_up: bool,
    pub detections: Vec<Detection>,
}

struct AxisPipeline {
    acc: AxisAccumulator,
    grid: OccupancyGrid,
    scores: Option<ScoreArray>,
}

impl AxisPipeline {
    fn new(axis: Axis, cfg: &PipelineConfig, bin_index: u64, bin_start: u64, delta_t: u64) -> Result<Self, PipelineError> {
        let len = axis.len(cfg.geometry);
        let grid = OccupancyGrid::new(len, cfg.hypotheses.depth as usize)?;
        let scores = match cfg.variant {
            ScorerVariant::Trace => None,
            ScorerVariant::Incremental => Some(ScoreArray::new(len, &cfg.hypotheses)?),
        };
        Ok(Self {
            acc: AxisAccumulator::starting_at(axis, len, bin_index, bin_start, delta_t),
            grid,
            scores,
        })
    }

    fn insert(&mut self, vec: &OccupancyVector) -> Result<(), PipelineError> {
        if let Some(arr) = &mut self.scores {
            arr.update(&self.grid, vec)?;
        }
        self.grid.shift_insert(vec)?;
        Ok(())
    }

    fn reset(&mut self) {
        self.grid.reset();
        if let Some(arr) = &mut self.scores {
            arr.reset();
        }
    }

    /// Winner per pixel (None where inactive or nothing passed).
    fn winners(&self, vec: &OccupancyVector, params: &HypothesisParams, exec: Execution) -> Vec<Option<PixelWinner>> {
        let active: Vec<usize> = vec.active().collect();
        let found = par::map_slice(exec, &active, |&x0| {
            let scores = match &self.scores {
                Some(arr) => arr.score_all(x0, params),
                None => score_all(&self.grid, x0, params),
            };
            select_winner(x0, &scores, params)
        });
        let mut out = vec![None; vec.len()];
        for (x0, w) in active.into_iter().zip(found) {
            out[x0] = w;
        }
        out
    }
}

struct Running {
    x: AxisPipeline,
    y: Option<AxisPipeline>,
    table: YAssociationTable,
    timing: BinTiming,
    bins_since_change: u32,
}

/// The streaming two-axis estimator.
pub struct FlowEstimator {
    config: PipelineConfig,
    state: Option<Running>,
}

impl FlowEstimator {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self { config, state: None })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Current bin duration and threshold (the reference pair before the
    /// first event).
    pub fn timing(&self) -> BinTiming {
        self.state.as_ref().map_or(self.config.bins.timing(), |s| s.timing)
    }

    /// Feeds one event, returning any bins it closed.
    pub fn push(&mut self, ev: &Event) -> Result<Vec<BinOutput>, PipelineError> {
        if !self.config.geometry.contains(ev.x, ev.y) {
            return Err(BinError::Coordinate {
                axis: if ev.x >= self.config.geometry.nx { "x" } else { "y" },
                coord: if ev.x >= self.config.geometry.nx { ev.x } else { ev.y },
                len: if ev.x >= self.config.geometry.nx {
                    self.config.geometry.nx as usize
                } else {
                    self.config.geometry.ny as usize
                },
            }
            .into());
        }
        if self.state.is_none() {
            self.state = Some(self.start(ev.t)?);
        }
        let mut closed = Vec::new();
        loop {
            let state = self.state.as_mut().expect("started");
            if ev.t < state.x.acc.bin_start() {
                return Err(PipelineError::Regression {
                    t: ev.t,
                    bin_start: state.x.acc.bin_start(),
                });
            }
            if ev.t < state.x.acc.bin_end() {
                break;
            }
            closed.push(self.close_bin()?);
        }
        let state = self.state.as_mut().expect("started");
        state.x.acc.accumulate(ev)?;
        if let Some(y) = &mut state.y {
            y.acc.accumulate(ev)?;
            state.table.insert(ev.x, ev.y);
        }
        Ok(closed)
    }

    /// Runs a whole event sequence and returns every closed bin.
    pub fn run<'a, I>(&mut self, events: I) -> Result<Vec<BinOutput>, PipelineError>
    where
        I: IntoIterator<Item = &'a Event>,
    {
        let mut bins = Vec::new();
        for ev in events {
            bins.extend(self.push(ev)?);
        }
        Ok(bins)
    }

    /// The first bin is aligned to a multiple of `delta_t` so bin `i`
    /// covers `[i*dt, (i+1)*dt)`.
    fn start(&self, t0: u64) -> Result<Running, PipelineError> {
        let cfg = &self.config;
        let dt = cfg.bins.delta_t_us;
        let index = t0 / dt;
        let start = index * dt;
        let x = AxisPipeline::new(Axis::X, cfg, index, start, dt)?;
        let y = if cfg.y_pipeline {
            Some(AxisPipeline::new(Axis::Y, cfg, index, start, dt)?)
        } else {
            None
        };
        Ok(Running {
            x,
            y,
            table: YAssociationTable::new(cfg.geometry),
            timing: cfg.bins.timing(),
            bins_since_change: 0,
        })
    }

    fn close_bin(&mut self) -> Result<BinOutput, PipelineError> {
        let cfg = &self.config;
        let state = self.state.as_mut().expect("started");
        let theta = state.timing.theta_e;
        let t_start = state.x.acc.bin_start();
        let t_end = state.x.acc.bin_end();
        let delta_t = state.timing.delta_t_us;
        let vx = state.x.acc.close_bin(theta);
        let vy = state.y.as_mut().map(|y| y.acc.close_bin(theta));
        let mut out = BinOutput {
            bin_index: vx.bin_index,
            t_start_us: t_start,
            t_end_us: t_end,
            delta_t_us: delta_t,
            theta_e: theta,
            density_x: vx.density(),
            density_y: vy.as_ref().map_or(0.0, |v| v.density()),
            adapted: false,
            warming_up: false,
            detections: Vec::new(),
        };

        if cfg.bins.adaptive {
            let d = adapt_bin_duration(&cfg.bins, state.timing, out.density_x, state.bins_since_change);
            if d.changed {
                state.timing = BinTiming {
                    delta_t_us: d.delta_t_us,
                    theta_e: d.theta_e,
                };
                state.bins_since_change = 0;
                state.x.acc.set_delta_t(d.delta_t_us);
                state.x.reset();
                if let Some(y) = &mut state.y {
                    y.acc.set_delta_t(d.delta_t_us);
                    y.reset();
                }
                state.table.clear();
                out.adapted = true;
                out.warming_up = true;
                return Ok(out);
            }
        }
        state.bins_since_change = state.bins_since_change.saturating_add(1);

        state.x.insert(&vx)?;
        if let (Some(y), Some(vy)) = (&mut state.y, &vy) {
            y.insert(vy)?;
        }
        if !state.x.grid.is_full() {
            out.warming_up = true;
            state.table.clear();
            return Ok(out);
        }

        let params = &cfg.hypotheses;
        let x_winners = state.x.winners(&vx, params, cfg.execution);
        let y_winners = match (&state.y, &vy) {
            (Some(y), Some(vy)) => y.winners(vy, params, cfg.execution),
            _ => Vec::new(),
        };
        for w in x_winners.iter().flatten() {
            let assoc = if state.y.is_some() {
                associate_y(w.x0, &state.table, &y_winners)?
            } else {
                YAssociation {
                    j_y: 0,
                    y_med: 0,
                    associated: false,
                }
            };
            out.detections.push(Detection {
                bin_index: out.bin_index,
                t_start_us: t_start,
                t_end_us: t_end,
                x: w.x0,
                y_med: assoc.y_med,
                jx: w.j,
                jy: assoc.j_y,
                vx: jump_to_velocity(w.j, delta_t),
                vy: jump_to_velocity(assoc.j_y, delta_t),
                r: w.r,
                h: w.h,
                associated: assoc.associated,
            });
        }
        state.table.clear();
        Ok(out)
    }
}

/// Convenience: run a fixed event slice through a fresh estimator.
pub fn run_events(config: &PipelineConfig, events: &[Event]) -> Result<Vec<BinOutput>, PipelineError> {
    FlowEstimator::new(config.clone())?.run(events)
}

pub fn detections(bins: &[BinOutput]) -> impl Iterator<Item = &Detection> {
    bins.iter().flat_map(|b| b.detections.iter())
}

pub const DETECTION_CSV_HEADER: &str = "bin,t_us,x,y_med,jx,jy,vx_px_s,vy_px_s,R,H,assoc";

/// Writes detections as CSV. `comments` become leading `# ` lines.
pub fn write_detections_csv<'a, W, I>(mut out: W, comments: &[String], detections: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Detection>,
{
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{DETECTION_CSV_HEADER}")?;
    for d in detections {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{:.3},{},{},{}",
            d.bin_index,
            d.t_end_us,
            d.x,
            d.y_med,
            d.jx,
            d.jy,
            d.vx,
            d.vy,
            d.r,
            d.h,
            u8::from(d.associated)
        )?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct DetectionRow {
    bin: u64,
    t_us: u64,
    x: usize,
    y_med: usize,
    jx: i32,
    jy: i32,
    vx_px_s: f64,
    vy_px_s: f64,
    #[serde(rename = "R")]
    r: u8,
    #[serde(rename = "H")]
    h: u8,
    assoc: u8,
}

/// Reads a detections CSV. The bin start is not stored, so `t_start_us`
/// is set equal to `t_end_us`.
pub fn read_detections_csv(path: impl AsRef<Path>) -> Result<Vec<Detection>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    rdr.deserialize::<DetectionRow>()
        .map(|row| {
            row.map(|r| Detection {
                bin_index: r.bin,
                t_start_us: r.t_us,
                t_end_us: r.t_us,
                x: r.x,
                y_med: r.y_med,
                jx: r.jx,
                jy: r.jy,
                vx: r.vx_px_s,
                vy: r.vy_px_s,
                r: r.r,
                h: r.h,
                associated: r.assoc != 0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;
    use crate::scoring::ScorerMode;

    fn table_with(geometry: SensorGeometry, x: u16, ys: &[u16]) -> YAssociationTable {
        let mut t = YAssociationTable::new(geometry);
        for &y in ys {
            t.insert(x, y);
        }
        t
    }

    fn winner_at(y: usize, j: i32) -> Option<PixelWinner> {
        Some(PixelWinner { x0: y, j, r: 4, h: 4 })
    }

    #[test]
    fn odd_count_median() {
        let g = SensorGeometry::new(8, 8).unwrap();
        let t = table_with(g, 3, &[1, 2, 5]);
        let mut w = vec![None; 8];
        w[1] = winner_at(1, 2);
        w[2] = winner_at(2, 3);
        w[5] = winner_at(5, 3);
        let a = associate_y(3, &t, &w).unwrap();
        assert_eq!(a, YAssociation { j_y: 3, y_med: 2, associated: true });
    }

    #[test]
    fn even_count_takes_lower_median() {
        let g = SensorGeometry::new(8, 8).unwrap();
        let t = table_with(g, 3, &[1, 6]);
        let mut w = vec![None; 8];
        w[1] = winner_at(1, 3);
        w[6] = winner_at(6, 2);
        let a = associate_y(3, &t, &w).unwrap();
        assert_eq!(a.j_y, 2);
        assert_eq!(a.y_med, 1);
    }

    #[test]
    fn no_winners_is_unassociated() {
        let g = SensorGeometry::new(8, 8).unwrap();
        let t = table_with(g, 3, &[4]);
        let a = associate_y(3, &t, &vec![None; 8]).unwrap();
        assert_eq!(a, YAssociation { j_y: 0, y_med: 4, associated: false });
        assert!(matches!(associate_y(2, &t, &[]), Err(PipelineError::EmptyAssociation(2))));
    }

    fn small_config(adaptive: bool) -> PipelineConfig {
        let mut bins = BinConfig::fixed(100, 2);
        if adaptive {
            bins = bins.with_adaptation(0.1, 0.4, 25, 400, 4);
        }
        PipelineConfig::new(
            SensorGeometry::new(32, 16).unwrap(),
            bins,
            HypothesisParams {
                j_max: 3,
                depth: 4,
                beta: 2,
                theta_s: 1,
                mode: ScorerMode::RawPopcount,
                indexing: TraceIndexing::Canonical,
            },
        )
    }

    /// A vertical edge over rows 0..8 stepping +2 px per 100 us bin.
    fn edge_events(bins: u64) -> Vec<Event> {
        let mut evs = Vec::new();
        for b in 0..bins {
            let x = (2 * b) as u16 + 1;
            for y in 0..8u16 {
                for k in 0..2 {
                    evs.push(Event::new(b * 100 + 10 + k, x, y, Polarity::On));
                }
            }
        }
        evs
    }

    #[test]
    fn moving_edge_yields_its_jump() {
        let cfg = small_config(false);
        let bins = run_events(&cfg, &edge_events(12)).unwrap();
        let dets: Vec<&Detection> = detections(&bins).collect();
        assert!(!dets.is_empty());
        for d in dets {
            assert_eq!(d.jx, 2, "{d:?}");
            assert_eq!(d.jy, 0);
            assert_eq!(d.vx, 2.0 * 1e6 / 100.0);
        }
    }

    #[test]
    fn warm_up_suppresses_first_bins() {
        let cfg = small_config(false);
        let bins = run_events(&cfg, &edge_events(12)).unwrap();
        // bins close on the next event, so 11 of 12 bins close
        assert_eq!(bins.len(), 11);
        for b in &bins[..3] {
            assert!(b.warming_up && b.detections.is_empty());
        }
        assert!(!bins[3].warming_up);
    }

    #[test]
    fn empty_bins_produce_nothing() {
        let cfg = small_config(false);
        let mut evs = edge_events(6);
        evs.push(Event::new(5_000, 0, 0, Polarity::On));
        let bins = run_events(&cfg, &evs).unwrap();
        for b in bins.iter().filter(|b| b.t_start_us >= 600) {
            assert!(b.detections.is_empty());
        }
        assert!(run_events(&cfg, &[]).unwrap().is_empty());
    }

    #[test]
    fn first_bin_aligned_to_multiple_of_delta_t() {
        let cfg = small_config(false);
        let evs = vec![Event::new(1_234, 0, 0, Polarity::On), Event::new(1_500, 0, 0, Polarity::On)];
        let bins = run_events(&cfg, &evs).unwrap();
        assert_eq!(bins[0].bin_index, 12);
        assert_eq!(bins[0].t_start_us, 1_200);
        assert_eq!(bins.len(), 3);
    }

    #[test]
    fn rejects_regression_and_out_of_bounds() {
        let mut est = FlowEstimator::new(small_config(false)).unwrap();
        est.push(&Event::new(500, 0, 0, Polarity::On)).unwrap();
        assert!(matches!(est.push(&Event::new(399, 0, 0, Polarity::On)), Err(PipelineError::Regression { .. })));
        assert!(est.push(&Event::new(600, 40, 0, Polarity::On)).is_err());
    }

    #[test]
    fn disabling_y_keeps_x_winners() {
        let mut cfg = small_config(false);
        let evs = edge_events(12);
        let with_y: Vec<(u64, usize, i32, u8)> = detections(&run_events(&cfg, &evs).unwrap())
            .map(|d| (d.bin_index, d.x, d.jx, d.r))
            .collect();
        cfg.y_pipeline = false;
        let without_y: Vec<(u64, usize, i32, u8)> = detections(&run_events(&cfg, &evs).unwrap())
            .map(|d| (d.bin_index, d.x, d.jx, d.r))
            .collect();
        assert_eq!(with_y, without_y);
    }

    #[test]
    fn incremental_variant_matches_trace_end_to_end() {
        let mut cfg = small_config(false);
        let evs = edge_events(14);
        let a = run_events(&cfg, &evs).unwrap();
        cfg.variant = ScorerVariant::Incremental;
        let b = run_events(&cfg, &evs).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_execution_is_identical() {
        let mut cfg = small_config(false);
        let evs = edge_events(14);
        let a = run_events(&cfg, &evs).unwrap();
        cfg.execution = Execution::Parallel;
        assert_eq!(a, run_events(&cfg, &evs).unwrap());
    }

    #[test]
    fn adaptation_resets_and_rewarms() {
        // one active column per 100 us bin over 32 pixels: density 1/32 < 0.1
        let cfg = small_config(true);
        let evs: Vec<Event> = edge_events(30)
            .into_iter()
            .map(|e| Event::new(e.t, e.x % 32, e.y, e.polarity))
            .collect();
        let bins = run_events(&cfg, &evs).unwrap();
        let first = bins.iter().position(|b| b.adapted).expect("an adaptation happens");
        assert_eq!(first, 4, "hold period of 4 bins");
        let after = &bins[first + 1];
        assert_eq!(after.delta_t_us, 200);
        assert_eq!(after.theta_e, 4);
        // warm-up restarts: L bins after the change carry no detections
        for b in &bins[first + 1..(first + 4).min(bins.len())] {
            assert!(b.warming_up && b.detections.is_empty());
        }
    }

    #[test]
    fn csv_round_trip() {
        let cfg = small_config(false);
        let bins = run_events(&cfg, &edge_events(12)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let file = std::fs::File::create(&path).unwrap();
        write_detections_csv(file, &cfg.describe(), detections(&bins)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# geometry = 32x16\n"));
        assert!(text.contains(&format!("\n{DETECTION_CSV_HEADER}\n")));
        let back = read_detections_csv(&path).unwrap();
        let orig: Vec<&Detection> = detections(&bins).collect();
        assert_eq!(back.len(), orig.len());
        for (a, b) in back.iter().zip(orig) {
            assert_eq!((a.bin_index, a.x, a.jx, a.jy, a.r, a.h), (b.bin_index, b.x, b.jx, b.jy, b.r, b.h));
            assert_eq!(a.t_end_us, b.t_end_us);
        }
    }
}
