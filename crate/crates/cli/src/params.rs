//! Estimator parameters shared by `run` and `sweep`, from flags, a TOML
//! file and presets, in that order of precedence.

use clap::{Args, ValueEnum};
use serde::Deserialize;
use shiftflow::binning::BinConfig;
use shiftflow::events::SensorGeometry;
use shiftflow::par::Execution;
use shiftflow::pipeline::{PipelineConfig, ScorerVariant};
use shiftflow::scoring::{HypothesisParams, ScorerMode, TraceIndexing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// dt = 20 ms, theta_e = 50, L = 16, J = 15, beta = 4, theta_s = 0.3L.
    Typical,
    /// dt = 40 ms, theta_e = 80, L = 16, J = 15, beta = 4, theta_s = 0.5L.
    ShapesRotation,
    /// dt = 200 us, theta_e = 20, raw scorer, beta = theta_s = L/2.
    Synthetic,
}

struct PresetValues {
    dt_us: u64,
    theta_e: u32,
    depth: u32,
    j_max: u32,
    beta: u32,
    theta_s: u32,
    mode: ScorerMode,
}

impl Preset {
    fn values(self) -> PresetValues {
        match self {
            Preset::Typical => PresetValues {
                dt_us: 20_000,
                theta_e: 50,
                depth: 16,
                j_max: 15,
                beta: 4,
                theta_s: 5,
                mode: ScorerMode::NormalizedCrossmul,
            },
            Preset::ShapesRotation => PresetValues {
                dt_us: 40_000,
                theta_e: 80,
                depth: 16,
                j_max: 15,
                beta: 4,
                theta_s: 8,
                mode: ScorerMode::NormalizedCrossmul,
            },
            Preset::Synthetic => PresetValues {
                dt_us: 200,
                theta_e: 20,
                depth: 16,
                j_max: 15,
                beta: 8,
                theta_s: 8,
                mode: ScorerMode::RawPopcount,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// Raw popcount `R`.
    Raw,
    /// `R/H` by cross-multiplication.
    Normalized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Trace,
    Incremental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexingArg {
    Canonical,
    Literal,
}

/// Every estimator parameter. Unset values fall back to the config file,
/// then the preset, then the defaults noted per flag.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamArgs {
    /// Typical parameter set to start from.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Sensor width in pixels [default: 240].
    #[arg(long)]
    pub nx: Option<u16>,
    /// Sensor height in pixels [default: 180].
    #[arg(long)]
    pub ny: Option<u16>,
    /// dt: time bin duration in microseconds. No default without a preset.
    #[arg(long)]
    pub dt_us: Option<u64>,
    /// theta_e: events per pixel and bin needed to set occupancy, 1..=255.
    /// No default without a preset.
    #[arg(long)]
    pub theta_e: Option<u32>,
    /// L: temporal depth in bins [default: 16].
    #[arg(long = "L", visible_alias = "l")]
    #[serde(rename = "L")]
    pub depth: Option<u32>,
    /// J: largest hypothesis magnitude in px/bin [default: 15].
    #[arg(long = "J", visible_alias = "j")]
    #[serde(rename = "J")]
    pub j_max: Option<u32>,
    /// beta: minimum in-bounds trace steps [default: 4].
    #[arg(long)]
    pub beta: Option<u32>,
    /// theta_s: score threshold in raw-score units, 0..=L [default: round(0.3 L)].
    #[arg(long, conflicts_with = "theta_s_frac")]
    pub theta_s: Option<u32>,
    /// theta_s as a fraction of L, rounded to the nearest integer.
    #[arg(long)]
    pub theta_s_frac: Option<f64>,
    /// Scorer mode [default: normalized].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Scoring implementation [default: trace].
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Trace indexing [default: canonical].
    #[arg(long, value_enum)]
    pub indexing: Option<IndexingArg>,
    /// Enable density-driven bin adaptation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub adaptive: Option<bool>,
    /// rho_lo: double dt below this x-axis density [default: 0.10].
    #[arg(long)]
    pub rho_lo: Option<f64>,
    /// rho_hi: halve dt above this x-axis density [default: 0.40].
    #[arg(long)]
    pub rho_hi: Option<f64>,
    /// Smallest adapted dt [default: dt / 4].
    #[arg(long)]
    pub dt_min_us: Option<u64>,
    /// Largest adapted dt [default: 4 dt].
    #[arg(long)]
    pub dt_max_us: Option<u64>,
    /// Bins to wait after a dt change [default: L].
    #[arg(long)]
    pub hold_bins: Option<u32>,
    /// Skip the y pipeline; detections carry jy = 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_y: Option<bool>,
    /// Score pixels on all cores.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub parallel: Option<bool>,
}

macro_rules! prefer_flags {
    ($a:expr, $b:expr, $($f:ident),+) => {
        ParamArgs { $($f: $a.$f.or($b.$f)),+ }
    };
}

impl ParamArgs {
    /// Flags in `self` win over `file`.
    pub fn over(self, file: ParamArgs) -> ParamArgs {
        prefer_flags!(
            self,
            file,
            preset,
            nx,
            ny,
            dt_us,
            theta_e,
            depth,
            j_max,
            beta,
            theta_s,
            theta_s_frac,
            mode,
            variant,
            indexing,
            adaptive,
            rho_lo,
            rho_hi,
            dt_min_us,
            dt_max_us,
            hold_bins,
            no_y,
            parallel
        )
    }

    /// Builds and validates a pipeline configuration. With `timing` false,
    /// `dt` and `theta_e` may be missing (a sweep supplies them per cell).
    pub fn resolve(&self, timing: bool) -> Result<PipelineConfig, String> {
        let preset = self.preset.map(Preset::values);
        let dt = self.dt_us.or(preset.as_ref().map(|p| p.dt_us));
        let theta_e = self.theta_e.or(preset.as_ref().map(|p| p.theta_e));
        let (dt, theta_e) = match (dt, theta_e) {
            (Some(d), Some(t)) => (d, t),
            _ if timing => {
                return Err("--dt-us and --theta-e are required (or pick a --preset); they are coupled and have no default".into())
            }
            (d, t) => (d.unwrap_or(1_000), t.unwrap_or(1)),
        };
        let depth = self
            .depth
            .or(preset.as_ref().map(|p| p.depth))
            .unwrap_or(16);
        if self.theta_s.is_some() && self.theta_s_frac.is_some() {
            return Err("give either --theta-s or --theta-s-frac, not both".into());
        }
        let theta_s = match (self.theta_s, self.theta_s_frac) {
            (Some(t), _) => t,
            (None, Some(f)) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(format!("--theta-s-frac {f} must lie in [0, 1]"));
                }
                HypothesisParams::theta_s_from_fraction(depth, f)
            }
            (None, None) => preset
                .as_ref()
                .map(|p| p.theta_s)
                .unwrap_or_else(|| HypothesisParams::theta_s_from_fraction(depth, 0.3)),
        };
        let mode = match self.mode {
            Some(ModeArg::Raw) => ScorerMode::RawPopcount,
            Some(ModeArg::Normalized) => ScorerMode::NormalizedCrossmul,
            None => preset
                .as_ref()
                .map_or(ScorerMode::NormalizedCrossmul, |p| p.mode),
        };
        let hypotheses = HypothesisParams {
            j_max: self
                .j_max
                .or(preset.as_ref().map(|p| p.j_max))
                .unwrap_or(15),
            depth,
            beta: self.beta.or(preset.as_ref().map(|p| p.beta)).unwrap_or(4),
            theta_s,
            mode,
            indexing: match self.indexing {
                Some(IndexingArg::Literal) => TraceIndexing::Literal,
                _ => TraceIndexing::Canonical,
            },
        };
        let mut bins = BinConfig::fixed(dt, theta_e);
        if self.adaptive.unwrap_or(false) {
            bins = bins.with_adaptation(
                self.rho_lo.unwrap_or(0.10),
                self.rho_hi.unwrap_or(0.40),
                self.dt_min_us.unwrap_or((dt / 4).max(1)),
                self.dt_max_us.unwrap_or(dt.saturating_mul(4)),
                self.hold_bins.unwrap_or(depth),
            );
        }
        let geometry = SensorGeometry::new(self.nx.unwrap_or(240), self.ny.unwrap_or(180))
            .map_err(|e| e.to_string())?;
        let mut cfg = PipelineConfig::new(geometry, bins, hypotheses);
        cfg.variant = match self.variant {
            Some(VariantArg::Incremental) => ScorerVariant::Incremental,
            _ => ScorerVariant::Trace,
        };
        cfg.y_pipeline = !self.no_y.unwrap_or(false);
        cfg.execution = if self.parallel.unwrap_or(false) {
            Execution::Parallel
        } else {
            Execution::Sequential
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}
