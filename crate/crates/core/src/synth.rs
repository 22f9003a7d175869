//! Synthetic event scenes with exact ground truth.
//!
//! Objects move in continuous sensor coordinates with pixel centers at
//! integer positions. An event fires at the first microsecond a pixel center
//! changes from outside to inside an object (`On`) or back (`Off`). Each
//! object is simulated on a coarse step no larger than a quarter pixel of
//! motion, and every state change found on the coarse step is located to
//! the exact microsecond by bisection.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binning::Axis;
use crate::events::{Event, Polarity, SensorGeometry};

/// Largest motion of any object point per coarse step, in pixels.
const MAX_STEP_MOTION_PX: f64 = 0.25;
const MAX_COARSE_STEP_US: u64 = 10_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    Config(String),
    #[error("object {0} never intersects the sensor")]
    NeverVisible(u32),
    #[error("scene file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// A filled rectangle; `length` runs along `orientation_deg`, measured
    /// from +x towards +y. A vertical bar has orientation 90.
    Bar {
        width: f64,
        length: f64,
        #[serde(default)]
        orientation_deg: f64,
    },
    /// `#` cells are solid. Rows run down the sensor, columns across, before
    /// rotation by `orientation_deg`. Each cell is `scale` pixels square.
    Bitmap {
        rows: Vec<String>,
        #[serde(default = "unit_scale")]
        scale: f64,
        #[serde(default)]
        orientation_deg: f64,
    },
}

fn unit_scale() -> f64 {
    1.0
}

impl Shape {
    fn orientation_rad(&self) -> f64 {
        let deg = match self {
            Shape::Bar { orientation_deg, .. } | Shape::Bitmap { orientation_deg, .. } => *orientation_deg,
        };
        deg * PI / 180.0
    }

    /// Half extents `(along, across)` of the unrotated footprint.
    fn half_extents(&self) -> (f64, f64) {
        match self {
            Shape::Bar { width, length, .. } => (length / 2.0, width / 2.0),
            Shape::Bitmap { rows, scale, .. } => {
                let cols = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
                (cols as f64 * scale / 2.0, rows.len() as f64 * scale / 2.0)
            }
        }
    }

    /// Membership in shape-local coordinates.
    fn contains_local(&self, u: f64, w: f64) -> bool {
        match self {
            Shape::Bar { width, length, .. } => {
                let (hl, hw) = (length / 2.0, width / 2.0);
                -hl <= u && u < hl && -hw <= w && w < hw
            }
            Shape::Bitmap { rows, scale, .. } => {
                let (hu, hw) = self.half_extents();
                let c = ((u + hu) / scale).floor();
                let r = ((w + hw) / scale).floor();
                if c < 0.0 || r < 0.0 {
                    return false;
                }
                rows.get(r as usize)
                    .and_then(|row| row.as_bytes().get(c as usize))
                    .is_some_and(|&b| b == b'#')
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Bar { width, length, .. } => {
                if !(*width > 0.0 && *length > 0.0) {
                    return Err(format!("bar needs positive width and length, got {width} x {length}"));
                }
            }
            Shape::Bitmap { rows, scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(format!("bitmap scale must be positive, got {scale}"));
                }
                if !rows.iter().any(|r| r.contains('#')) {
                    return Err("bitmap has no solid cells".into());
                }
                if let Some(r) = rows.iter().find(|r| r.chars().any(|c| c != '#' && c != '.')) {
                    return Err(format!("bitmap rows may only contain '#' and '.', got {r:?}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    #[serde(default)]
    pub id: u32,
    pub shape: Shape,
    /// Center at `t = 0`, pixels.
    pub position: [f64; 2],
    /// px/us.
    #[serde(default)]
    pub velocity: [f64; 2],
    /// rad/us.
    #[serde(default)]
    pub angular_velocity: f64,
    /// px/us^2.
    #[serde(default)]
    pub acceleration: [f64; 2],
}

impl SceneObject {
    pub fn bar(id: u32, position: [f64; 2], velocity: [f64; 2], width: f64, length: f64, orientation_deg: f64) -> Self {
        Self {
            id,
            shape: Shape::Bar {
                width,
                length,
                orientation_deg,
            },
            position,
            velocity,
            angular_velocity: 0.0,
            acceleration: [0.0, 0.0],
        }
    }

    /// Center and rotation angle at `t` us.
    pub fn pose_at(&self, t: f64) -> ([f64; 2], f64) {
        let c = [
            self.position[0] + self.velocity[0] * t + 0.5 * self.acceleration[0] * t * t,
            self.position[1] + self.velocity[1] * t + 0.5 * self.acceleration[1] * t * t,
        ];
        (c, self.shape.orientation_rad() + self.angular_velocity * t)
    }

    /// `sin_cos` of the pose angle, with values within rounding of 0 or 1
    /// snapped so axis-aligned shapes have exact edges.
    fn trig_at(&self, angle: f64) -> (f64, f64) {
        let snap = |v: f64| if (v - v.round()).abs() < 1e-12 { v.round() } else { v };
        let (s, c) = angle.sin_cos();
        (snap(s), snap(c))
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        [
            self.velocity[0] + self.acceleration[0] * t,
            self.velocity[1] + self.acceleration[1] * t,
        ]
    }

    /// Whether the pixel center `(px, py)` lies inside the object at `t` us.
    pub fn contains(&self, t: u64, px: f64, py: f64) -> bool {
        let ([cx, cy], a) = self.pose_at(t as f64);
        let (dx, dy) = (px - cx, py - cy);
        let (s, c) = self.trig_at(a);
        self.shape.contains_local(dx * c + dy * s, -dx * s + dy * c)
    }

    /// Axis-aligned bounds `[x_min, x_max, y_min, y_max]` at `t` us.
    pub fn bounds_at(&self, t: f64) -> [f64; 4] {
        let ([cx, cy], a) = self.pose_at(t);
        let (hu, hw) = self.shape.half_extents();
        let (s, c) = self.trig_at(a);
        let ex = (hu * c).abs() + (hw * s).abs();
        let ey = (hu * s).abs() + (hw * c).abs();
        [cx - ex, cx + ex, cy - ey, cy + ey]
    }

    fn radius(&self) -> f64 {
        let (hu, hw) = self.shape.half_extents();
        hu.hypot(hw)
    }

    fn visible_at(&self, t: f64, geometry: SensorGeometry) -> bool {
        let [x0, x1, y0, y1] = self.bounds_at(t);
        x1 >= -0.5 && x0 <= f64::from(geometry.nx) - 0.5 && y1 >= -0.5 && y0 <= f64::from(geometry.ny) - 0.5
    }

    /// Coarse simulation step for which no point moves more than a quarter
    /// pixel, or `None` for a static object.
    fn coarse_step(&self, duration_us: u64) -> Option<u64> {
        let d = duration_us as f64;
        let speed = self.velocity[0].hypot(self.velocity[1])
            + self.acceleration[0].hypot(self.acceleration[1]) * d
            + self.angular_velocity.abs() * self.radius();
        if speed <= 0.0 {
            return None;
        }
        Some(((MAX_STEP_MOTION_PX / speed).floor() as u64).clamp(1, MAX_COARSE_STEP_US))
    }

    fn validate(&self) -> Result<(), String> {
        self.shape.validate().map_err(|e| format!("object {}: {e}", self.id))?;
        let finite = self
            .position
            .iter()
            .chain(&self.velocity)
            .chain(&self.acceleration)
            .chain([&self.angular_velocity])
            .all(|v| v.is_finite());
        if !finite {
            return Err(format!("object {}: non-finite motion parameter", self.id));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// `rate` is a fraction of the signal event count.
    #[default]
    Relative,
    /// `rate` is events per microsecond.
    Absolute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub mode: NoiseMode,
    #[serde(default)]
    pub jitter_sigma_us: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::relative(0.0, 0)
    }
}

impl NoiseConfig {
    pub fn relative(rate: f64, seed: u64) -> Self {
        Self {
            rate,
            mode: NoiseMode::Relative,
            jitter_sigma_us: 0.0,
            seed,
        }
    }

    pub fn with_jitter(mut self, sigma_us: f64) -> Self {
        self.jitter_sigma_us = sigma_us;
        self
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(format!("noise rate must be >= 0, got {}", self.rate));
        }
        if !(self.jitter_sigma_us >= 0.0 && self.jitter_sigma_us.is_finite()) {
            return Err(format!("jitter sigma must be >= 0, got {}", self.jitter_sigma_us));
        }
        Ok(())
    }

    /// Number of noise events to inject next to `signal` signal events over
    /// `span_us` microseconds. Products within float noise of an integer
    /// count as that integer, so 0.07 * 100 gives 7, not 8.
    pub fn noise_count(&self, signal: usize, span_us: u64) -> usize {
        let x = match self.mode {
            NoiseMode::Relative => self.rate * signal as f64,
            NoiseMode::Absolute => self.rate * span_us as f64,
        };
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }
}

/// A stretch of constant expected jump for one object along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthSegment {
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub axis: Axis,
    /// Pixels per bin; may be fractional.
    pub expected_j: f64,
    pub object_id: Option<u32>,
}

impl GroundTruthSegment {
    pub fn expected_sign(&self) -> i32 {
        if self.expected_j > 0.0 {
            1
        } else if self.expected_j < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn contains(&self, t_us: u64) -> bool {
        self.t_start_us <= t_us && t_us < self.t_end_us
    }
}

pub const GROUND_TRUTH_CSV_HEADER: &str = "t_start_us,t_end_us,axis,expected_j,object_id";

pub fn write_ground_truth_csv<W: Write>(mut out: W, segments: &[GroundTruthSegment]) -> io::Result<()> {
    writeln!(out, "{GROUND_TRUTH_CSV_HEADER}")?;
    for s in segments {
        let id = s.object_id.map(|i| i.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", s.t_start_us, s.t_end_us, s.axis.name(), s.expected_j, id)?;
    }
    Ok(())
}

/// A complete scene description, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub geometry: SensorGeometry,
    pub duration_us: u64,
    /// Interval used to express ground truth as jumps per bin.
    pub gt_bin_us: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let scene: Scene = toml::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.geometry.validate().map_err(|e| SynthError::Config(e.to_string()))?;
        if self.duration_us == 0 {
            return Err(SynthError::Config("duration must be positive".into()));
        }
        if self.gt_bin_us == 0 {
            return Err(SynthError::Config("gt_bin_us must be positive".into()));
        }
        self.noise.validate().map_err(SynthError::Config)?;
        for o in &self.objects {
            o.validate().map_err(SynthError::Config)?;
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SynthOutput, SynthError> {
        generate_scene(&self.objects, self.geometry, self.duration_us, &self.noise, self.gt_bin_us)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub events: Vec<Event>,
    pub segments: Vec<GroundTruthSegment>,
    pub signal_count: usize,
    pub noise_count: usize,
}

/// Simulates every object, applies jitter and injects noise.
pub fn generate_scene(
    objects: &[SceneObject],
    geometry: SensorGeometry,
    duration_us: u64,
    noise: &NoiseConfig,
    gt_bin_us: u64,
) -> Result<SynthOutput, SynthError> {
    if duration_us == 0 {
        return Err(SynthError::Config("duration must be positive".into()));
    }
    if gt_bin_us == 0 {
        return Err(SynthError::Config("gt_bin_us must be positive".into()));
    }
    geometry.validate().map_err(|e| SynthError::Config(e.to_string()))?;
    noise.validate().map_err(SynthError::Config)?;
    let mut signal = Vec::new();
    for obj in objects {
        obj.validate().map_err(SynthError::Config)?;
        signal.extend(signal_events(obj, geometry, duration_us)?);
    }
    signal.sort_by_key(|e| e.t);
    let signal_count = signal.len();

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    jitter(&mut signal, noise.jitter_sigma_us, duration_us - 1, &mut rng);
    let n_noise = noise.noise_count(signal_count, duration_us);
    let events = inject_noise(signal, n_noise, geometry, 0, duration_us - 1, &mut rng);
    Ok(SynthOutput {
        events,
        segments: ground_truth(objects, geometry, duration_us, gt_bin_us),
        signal_count,
        noise_count: n_noise,
    })
}

/// Jitters and adds noise to an existing time-ordered stream, drawing noise
/// uniformly over its time span.
pub fn add_noise(events: &[Event], geometry: SensorGeometry, noise: &NoiseConfig) -> Vec<Event> {
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return Vec::new();
    };
    let (t0, t1) = (first.t, last.t);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = events.to_vec();
    jitter(&mut out, noise.jitter_sigma_us, t1, &mut rng);
    for e in &mut out {
        e.t = e.t.max(t0);
    }
    let n = noise.noise_count(events.len(), t1 - t0 + 1);
    inject_noise(out, n, geometry, t0, t1, &mut rng)
}

fn jitter(events: &mut [Event], sigma_us: f64, t_max: u64, rng: &mut ChaCha8Rng) {
    if sigma_us <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma_us).expect("sigma validated");
    for e in events.iter_mut() {
        let t = (e.t as f64 + normal.sample(rng)).round();
        e.t = t.clamp(0.0, t_max as f64) as u64;
    }
    events.sort_by_key(|e| e.t);
}

fn inject_noise(
    mut events: Vec<Event>,
    count: usize,
    geometry: SensorGeometry,
    t_min: u64,
    t_max: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<Event> {
    if count == 0 {
        return events;
    }
    events.reserve(count);
    for _ in 0..count {
        let t = rng.random_range(t_min..=t_max);
        let x = rng.random_range(0..geometry.nx);
        let y = rng.random_range(0..geometry.ny);
        let p = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
        events.push(Event::new(t, x, y, p));
    }
    events.sort_by_key(|e| e.t);
    events
}

/// Noise-free events for one object, time-ordered.
pub fn signal_events(obj: &SceneObject, geometry: SensorGeometry, duration_us: u64) -> Result<Vec<Event>, SynthError> {
    let visible = (0..=64).any(|k| obj.visible_at(duration_us as f64 * f64::from(k) / 64.0, geometry));
    if !visible {
        return Err(SynthError::NeverVisible(obj.id));
    }
    let Some(step) = obj.coarse_step(duration_us) else {
        return Ok(Vec::new());
    };
    let (nx, ny) = (geometry.nx as usize, geometry.ny as usize);
    let mut inside = vec![false; nx * ny];
    let region = |b: [f64; 4]| -> Option<(usize, usize, usize, usize)> {
        let clip = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
            let lo = (lo.floor() - 1.0).max(0.0);
            let hi = (hi.ceil() + 1.0).min(n as f64 - 1.0);
            (lo <= hi).then_some((lo as usize, hi as usize))
        };
        let (x0, x1) = clip(b[0], b[1], nx)?;
        let (y0, y1) = clip(b[2], b[3], ny)?;
        Some((x0, x1, y0, y1))
    };

    if let Some((x0, x1, y0, y1)) = region(obj.bounds_at(0.0)) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                inside[y * nx + x] = obj.contains(0, x as f64, y as f64);
            }
        }
    }

    let mut events = Vec::new();
    let last = duration_us - 1;
    let mut ta = 0;
    while ta < last {
        let tb = (ta + step).min(last);
        let a = obj.bounds_at(ta as f64);
        let b = obj.bounds_at(tb as f64);
        let union = [a[0].min(b[0]), a[1].max(b[1]), a[2].min(b[2]), a[3].max(b[3])];
        if let Some((x0, x1, y0, y1)) = region(union) {
            let mut found = Vec::new();
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let now = obj.contains(tb, x as f64, y as f64);
                    let cell = &mut inside[y * nx + x];
                    if now != *cell {
                        *cell = now;
                        let t = first_time_in_state(obj, x as f64, y as f64, ta, tb, now);
                        let p = if now { Polarity::On } else { Polarity::Off };
                        found.push(Event::new(t, x as u16, y as u16, p));
                    }
                }
            }
            found.sort_by_key(|e| e.t);
            events.extend(found);
        }
        ta = tb;
    }
    Ok(events)
}

/// Smallest `t` in `(lo, hi]` at which the pixel is in `state`, given that
/// it is not at `lo` and is at `hi`.
fn first_time_in_state(obj: &SceneObject, px: f64, py: f64, mut lo: u64, mut hi: u64, state: bool) -> u64 {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if obj.contains(mid, px, py) == state {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Expected jumps per object and axis, sampled at the midpoint of each
/// `bin_us` interval while the object is visible. Consecutive intervals with
/// equal jumps are merged.
pub fn ground_truth(objects: &[SceneObject], geometry: SensorGeometry, duration_us: u64, bin_us: u64) -> Vec<GroundTruthSegment> {
    let mut out = Vec::new();
    for obj in objects {
        for axis in [Axis::X, Axis::Y] {
            let mut open: Option<GroundTruthSegment> = None;
            let mut start = 0;
            while start + bin_us <= duration_us {
                let mid = start as f64 + bin_us as f64 / 2.0;
                let end = start + bin_us;
                if obj.visible_at(mid, geometry) {
                    let v = obj.velocity_at(mid);
                    let j = match axis {
                        Axis::X => v[0],
                        Axis::Y => v[1],
                    } * bin_us as f64;
                    match &mut open {
                        Some(seg) if seg.t_end_us == start && seg.expected_j == j => seg.t_end_us = end,
                        _ => {
                            out.extend(open.take());
                            open = Some(GroundTruthSegment {
                                t_start_us: start,
                                t_end_us: end,
                                axis,
                                expected_j: j,
                                object_id: Some(obj.id),
                            });
                        }
                    }
                }
                start = end;
            }
            out.extend(open);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom() -> SensorGeometry {
        SensorGeometry::new(240, 180).unwrap()
    }

    fn vertical_bar(v: f64) -> SceneObject {
        SceneObject::bar(1, [60.0, 90.0], [v, 0.0], 6.0, 40.0, 90.0)
    }

    #[test]
    fn bar_footprint_is_exact() {
        let bar = vertical_bar(0.0);
        let cols: Vec<i32> = (50..70).filter(|&x| bar.contains(0, f64::from(x), 90.0)).collect();
        assert_eq!(cols, vec![58, 59, 60, 61, 62, 63]);
        let rows = (60..120).filter(|&y| bar.contains(0, 60.0, f64::from(y))).count();
        assert_eq!(rows, 40);
    }

    #[test]
    fn bitmap_matches_rows() {
        let obj = SceneObject {
            id: 3,
            shape: Shape::Bitmap {
                rows: vec!["#.".into(), ".#".into()],
                scale: 2.0,
                orientation_deg: 0.0,
            },
            position: [10.0, 10.0],
            velocity: [0.0; 2],
            angular_velocity: 0.0,
            acceleration: [0.0; 2],
        };
        // cells of 2 px: top-left covers x, y in [8, 10)
        assert!(obj.contains(0, 8.0, 8.0));
        assert!(obj.contains(0, 9.0, 9.0));
        assert!(!obj.contains(0, 10.0, 8.0));
        assert!(obj.contains(0, 11.0, 11.0));
        assert!(!obj.contains(0, 12.0, 12.0));
    }

    #[test]
    fn moving_bar_emits_one_event_per_edge_crossing() {
        // 0.01 px/us: each edge crosses a column every 100 us
        let out = generate_scene(&[vertical_bar(0.01)], geom(), 1_000, &NoiseConfig::default(), 1_000).unwrap();
        // crossings at t = 100, 200, ..., 900: 9 columns per edge, 40 rows
        assert_eq!(out.signal_count, 9 * 40 * 2);
        for e in &out.events {
            assert_eq!(e.t % 100, 0, "{e:?}");
            let k = (e.t / 100) as u16;
            match e.polarity {
                Polarity::On => assert_eq!(e.x, 63 + k),
                Polarity::Off => assert_eq!(e.x, 57 + k),
            }
        }
    }

    #[test]
    fn static_object_emits_only_noise() {
        let cfg = NoiseConfig::relative(0.0, 1);
        let out = generate_scene(&[vertical_bar(0.0)], geom(), 5_000, &cfg, 1_000).unwrap();
        assert!(out.events.is_empty());
        let abs = NoiseConfig {
            mode: NoiseMode::Absolute,
            rate: 0.01,
            ..cfg
        };
        let out = generate_scene(&[vertical_bar(0.0)], geom(), 5_000, &abs, 1_000).unwrap();
        assert_eq!(out.signal_count, 0);
        assert_eq!(out.events.len(), 50);
    }

    #[test]
    fn ground_truth_jump_is_velocity_times_bin() {
        let out = generate_scene(&[vertical_bar(0.005)], geom(), 10_000, &NoiseConfig::default(), 1_000).unwrap();
        let x: Vec<_> = out.segments.iter().filter(|s| s.axis == Axis::X).collect();
        assert_eq!(x.len(), 1);
        assert_eq!(x[0].expected_j, 5.0);
        assert_eq!((x[0].t_start_us, x[0].t_end_us), (0, 10_000));
        let y: Vec<_> = out.segments.iter().filter(|s| s.axis == Axis::Y).collect();
        assert_eq!(y[0].expected_j, 0.0);
    }

    #[test]
    fn invisible_object_is_an_error() {
        let far = SceneObject::bar(9, [1_000.0, 1_000.0], [0.0, 0.0], 2.0, 2.0, 0.0);
        assert!(matches!(
            generate_scene(&[far], geom(), 1_000, &NoiseConfig::default(), 100),
            Err(SynthError::NeverVisible(9))
        ));
    }

    #[test]
    fn noise_count_arithmetic() {
        let cfg = NoiseConfig::relative(0.05, 0);
        assert_eq!(cfg.noise_count(10_000, 0), 500);
        assert_eq!(NoiseConfig::relative(0.07, 0).noise_count(100, 0), 7);
        assert_eq!(NoiseConfig::relative(0.05, 0).noise_count(11, 0), 1);
        let evs: Vec<Event> = (0..10_000).map(|i| Event::new(i, 5, 5, Polarity::On)).collect();
        let noisy = add_noise(&evs, geom(), &cfg);
        assert_eq!(noisy.len(), 10_500);
        assert!(noisy.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(add_noise(&evs, geom(), &NoiseConfig::default()), evs);
    }

    #[test]
    fn jitter_keeps_order() {
        let cfg = NoiseConfig::relative(0.05, 7).with_jitter(30.0);
        let out = generate_scene(&[vertical_bar(0.02)], geom(), 4_000, &cfg, 200).unwrap();
        assert!(out.events.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(out.events.len(), out.signal_count + out.noise_count);
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = NoiseConfig::relative(0.05, 42).with_jitter(10.0);
        let objs = [vertical_bar(0.015), SceneObject::bar(2, [150.0, 40.0], [-0.01, 0.004], 4.0, 30.0, 30.0)];
        let a = generate_scene(&objs, geom(), 20_000, &cfg, 400).unwrap();
        let b = generate_scene(&objs, geom(), 20_000, &cfg, 400).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&objs, geom(), 20_000, &NoiseConfig { seed: 43, ..cfg }, 400).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn scene_toml_round_trip() {
        let text = r###"
duration_us = 5000
gt_bin_us = 500

[geometry]
nx = 64
ny = 48

[noise]
rate = 0.05
seed = 3

[[objects]]
id = 1
position = [10.0, 20.0]
velocity = [0.01, 0.0]
shape = { kind = "bar", width = 3.0, length = 12.0, orientation_deg = 90.0 }

[[objects]]
id = 2
position = [40.0, 20.0]
velocity = [-0.004, 0.002]
angular_velocity = 0.0001
shape = { kind = "bitmap", rows = ["##", "#."], scale = 3.0 }
"###;
        let scene = Scene::from_toml_str(text).unwrap();
        assert_eq!(scene.objects.len(), 2);
        assert_eq!(scene.noise.mode, NoiseMode::Relative);
        let back = Scene::from_toml_str(&toml::to_string(&scene).unwrap()).unwrap();
        assert_eq!(back, scene);
        let out = scene.generate().unwrap();
        assert!(out.signal_count > 0);
        assert!(Scene::from_toml_str("duration_us = 0\ngt_bin_us = 1\nobjects = []").is_err());
    }

    #[test]
    fn ground_truth_csv_format() {
        let segs = vec![GroundTruthSegment {
            t_start_us: 0,
            t_end_us: 400,
            axis: Axis::X,
            expected_j: -2.5,
            object_id: Some(4),
        }];
        let mut buf = Vec::new();
        write_ground_truth_csv(&mut buf, &segs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t_start_us,t_end_us,axis,expected_j,object_id\n0,400,x,-2.5,4\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Without noise or jitter, each event marks the exact microsecond its
        /// pixel changed membership.
        #[test]
        fn events_lie_on_object_boundary(
            vx in -0.03f64..0.03, vy in -0.03f64..0.03,
            w in 1.0f64..8.0, len in 4.0f64..30.0,
            orient in 0.0f64..180.0, omega in -2e-4f64..2e-4,
        ) {
            let obj = SceneObject {
                angular_velocity: omega,
                ..SceneObject::bar(0, [120.0, 90.0], [vx, vy], w, len, orient)
            };
            let evs = signal_events(&obj, geom(), 2_000).unwrap();
            for e in &evs {
                let (x, y) = (f64::from(e.x), f64::from(e.y));
                let now = obj.contains(e.t, x, y);
                prop_assert_eq!(now, e.polarity == Polarity::On);
                prop_assert_ne!(obj.contains(e.t - 1, x, y), now);
            }
            prop_assert!(evs.windows(2).all(|p| p[0].t <= p[1].t));
        }
    }
}
