//! Closed-form storage and latency model of the hardware datapath.

use std::fmt::Write as _;

use crate::binning::COUNTER_BITS;
use crate::pipeline::ScorerVariant;
use crate::scoring::ceil_log2;

/// Step-counter width as printed in the published resource table. Holding
/// `H = L` needs `ceil(log2(L+1))` bits, which is 5 for `L = 16`.
pub const PRINTED_STEP_COUNTER_BITS: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostParams {
    pub nx: u64,
    pub ny: u64,
    pub depth: u64,
    pub j_max: u64,
    pub clock_hz: u64,
    pub variant: ScorerVariant,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), String> {
        if [self.nx, self.ny, self.depth, self.j_max, self.clock_hz].contains(&0) {
            return Err("cost model parameters must all be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AxisStorage {
    pub pixels: u64,
    pub grid_bits: u64,
    pub counter_bits: u64,
    pub accumulator_bits: u64,
    pub step_counter_bits: u64,
    /// Per-pixel score registers of the incremental scorer.
    pub incremental_extra_bits: u64,
}

impl AxisStorage {
    fn new(pixels: u64, p: &CostParams, lanes: u64, score_bits: u64) -> Self {
        Self {
            pixels,
            grid_bits: pixels * p.depth,
            counter_bits: pixels * u64::from(COUNTER_BITS),
            accumulator_bits: lanes * score_bits,
            step_counter_bits: lanes * PRINTED_STEP_COUNTER_BITS,
            incremental_extra_bits: pixels * lanes * score_bits,
        }
    }

    /// Core datapath total for the trace scorer.
    pub fn total_bits(&self) -> u64 {
        self.grid_bits + self.counter_bits + self.accumulator_bits + self.step_counter_bits
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    pub params: CostParams,
    pub lanes: u64,
    pub score_bits: u64,
    pub comparator_stages: u64,
    pub x: AxisStorage,
    pub y: AxisStorage,
    pub trace_cycles_per_pixel: u64,
    pub incremental_cycles_per_pixel: u64,
}

impl CostReport {
    /// `x` plus `y` with their true pixel counts.
    pub fn both_axes_bits(&self) -> u64 {
        self.x.total_bits() + self.y.total_bits()
    }

    /// Twice the `x` axis, the basis of the published two-axis estimate.
    pub fn doubled_axis_bits(&self) -> u64 {
        2 * self.x.total_bits()
    }

    pub fn cycles_per_pixel(&self) -> u64 {
        match self.params.variant {
            ScorerVariant::Trace => self.trace_cycles_per_pixel,
            ScorerVariant::Incremental => self.incremental_cycles_per_pixel,
        }
    }

    /// Every `x` pixel active, processed sequentially.
    pub fn worst_case_cycles(&self) -> u64 {
        self.cycles_per_pixel() * self.params.nx
    }

    pub fn worst_case_us(&self) -> f64 {
        self.worst_case_cycles() as f64 * 1e6 / self.params.clock_hz as f64
    }

    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("nx", p.nx.to_string()),
            ("ny", p.ny.to_string()),
            ("L", p.depth.to_string()),
            ("J", p.j_max.to_string()),
            ("clock_hz", p.clock_hz.to_string()),
            ("variant", format!("{:?}", p.variant).to_lowercase()),
            ("lanes", self.lanes.to_string()),
            ("score_bits", self.score_bits.to_string()),
            ("comparator_stages", self.comparator_stages.to_string()),
            ("x_grid_bits", self.x.grid_bits.to_string()),
            ("x_counter_bits", self.x.counter_bits.to_string()),
            ("x_accumulator_bits", self.x.accumulator_bits.to_string()),
            ("x_step_counter_bits", self.x.step_counter_bits.to_string()),
            ("x_total_bits", self.x.total_bits().to_string()),
            ("y_total_bits", self.y.total_bits().to_string()),
            ("both_axes_bits", self.both_axes_bits().to_string()),
            ("doubled_axis_bits", self.doubled_axis_bits().to_string()),
            ("x_incremental_extra_bits", self.x.incremental_extra_bits.to_string()),
            ("trace_cycles_per_pixel", self.trace_cycles_per_pixel.to_string()),
            ("incremental_cycles_per_pixel", self.incremental_cycles_per_pixel.to_string()),
            ("worst_case_cycles", self.worst_case_cycles().to_string()),
            ("worst_case_us", format!("{:.1}", self.worst_case_us())),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,value\n");
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let x = &self.x;
        let mut s = String::new();
        let _ = writeln!(s, "Storage, one axis (N = {}, L = {}, J = {})", p.nx, p.depth, p.j_max);
        let _ = writeln!(s, "  occupancy grid      {:>7} bits  ({} x {} x 1)", x.grid_bits, p.nx, p.depth);
        let _ = writeln!(s, "  event counters      {:>7} bits  ({} x {}-bit)", x.counter_bits, p.nx, COUNTER_BITS);
        let _ = writeln!(s, "  score accumulators  {:>7} bits  ({} x {}-bit)", x.accumulator_bits, self.lanes, self.score_bits);
        let _ = writeln!(
            s,
            "  step counters       {:>7} bits  ({} x {PRINTED_STEP_COUNTER_BITS}-bit; H = L needs {} bits)",
            x.step_counter_bits, self.lanes, self.score_bits
        );
        let _ = writeln!(s, "  comparator tree     {:>7} stages", self.comparator_stages);
        let _ = writeln!(s, "  total (one axis)    {:>7} bits  ({:.0} bytes)", x.total_bits(), x.total_bits() as f64 / 8.0);
        let _ = writeln!(
            s,
            "  total (x + y)       {:>7} bits  (N_y = {}: {} bits)",
            self.both_axes_bits(),
            p.ny,
            self.y.total_bits()
        );
        let _ = writeln!(s, "  total (2 x axis)    {:>7} bits", self.doubled_axis_bits());
        let _ = writeln!(s, "Incremental scorer extra storage {} bits", x.incremental_extra_bits);
        let _ = writeln!(s, "Latency");
        let _ = writeln!(s, "  trace        {} cycles/pixel", self.trace_cycles_per_pixel);
        let _ = writeln!(s, "  incremental  {} cycles/pixel", self.incremental_cycles_per_pixel);
        let _ = writeln!(
            s,
            "  worst case ({:?})  {} cycles = {:.1} us at {} MHz",
            p.variant,
            self.worst_case_cycles(),
            self.worst_case_us(),
            p.clock_hz as f64 / 1e6
        );
        s
    }
}

pub fn cost_model(params: CostParams) -> CostReport {
    let lanes = 2 * params.j_max + 1;
    let score_bits = u64::from(ceil_log2(params.depth + 1));
    let stages = u64::from(ceil_log2(lanes));
    CostReport {
        params,
        lanes,
        score_bits,
        comparator_stages: stages,
        x: AxisStorage::new(params.nx, &params, lanes, score_bits),
        y: AxisStorage::new(params.ny, &params, lanes, score_bits),
        trace_cycles_per_pixel: params.depth + stages,
        incremental_cycles_per_pixel: 1 + stages,
    }
}
