//! SVG flow-field rendering.
//!
//! Each sensor pixel is drawn as a `pixel_scale` square. Events are grey
//! dots; each detection is an arrow from `(x, y_med)` along `(jx, jy)`,
//! `arrow_px_per_jump` sensor pixels long per pixel-per-bin of speed. Hue
//! follows `atan2(vy, vx)` around the HSV wheel with 0 degrees = +x.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::events::{Event, SensorGeometry};
use crate::pipeline::Detection;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub pixel_scale: u32,
    pub arrow_px_per_jump: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            pixel_scale: 3,
            arrow_px_per_jump: 3.0,
        }
    }
}

/// Fully saturated HSV colour as `#rrggbb`; `hue` in degrees.
pub fn hue_to_hex(hue: f64) -> String {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let c = |v: f64| (v * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(r), c(g), c(b))
}

/// Direction of `(vx, vy)` in degrees, `[0, 360)`.
pub fn flow_hue(vx: f64, vy: f64) -> f64 {
    vy.atan2(vx).to_degrees().rem_euclid(360.0)
}

pub fn render_flow(events: &[Event], detections: &[Detection], geometry: SensorGeometry, opts: RenderOptions) -> String {
    let k = f64::from(opts.pixel_scale);
    let (w, h) = (f64::from(geometry.nx) * k, f64::from(geometry.ny) * k);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="black"/>"#);
    let pixels: BTreeSet<(u16, u16)> = events.iter().map(|e| (e.y, e.x)).collect();
    let _ = writeln!(s, r##"<g fill="#808080">"##);
    for (y, x) in pixels {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{k}" height="{k}"/>"#,
            f64::from(x) * k,
            f64::from(y) * k
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke-width="{:.2}" stroke-linecap="round">"#, k * 0.5);
    for d in detections {
        let cx = (d.x as f64 + 0.5) * k;
        let cy = (d.y_med as f64 + 0.5) * k;
        if d.jx == 0 && d.jy == 0 {
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="white"/>"#, k * 0.5);
            continue;
        }
        let colour = hue_to_hex(flow_hue(d.vx, d.vy));
        let ex = cx + f64::from(d.jx) * opts.arrow_px_per_jump * k;
        let ey = cy + f64::from(d.jy) * opts.arrow_px_per_jump * k;
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{cy:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="{colour}"/>"#
        );
        let _ = writeln!(s, r#"<circle cx="{ex:.2}" cy="{ey:.2}" r="{:.2}" fill="{colour}"/>"#, k * 0.6);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Polarity;

    fn det(x: usize, jx: i32, jy: i32) -> Detection {
        Detection {
            bin_index: 1,
            t_start_us: 0,
            t_end_us: 100,
            x,
            y_med: 10,
            jx,
            jy,
            vx: f64::from(jx) * 1e4,
            vy: f64::from(jy) * 1e4,
            r: 4,
            h: 4,
            associated: true,
        }
    }

    fn geom() -> SensorGeometry {
        SensorGeometry::new(32, 24).unwrap()
    }

    #[test]
    fn hue_wheel() {
        assert_eq!(hue_to_hex(0.0), "#ff0000");
        assert_eq!(hue_to_hex(120.0), "#00ff00");
        assert_eq!(hue_to_hex(240.0), "#0000ff");
        assert_eq!(flow_hue(-1.0, 0.0), 180.0);
        assert_eq!(flow_hue(0.0, -1.0), 270.0);
    }

    #[test]
    fn raster_only_without_detections() {
        let evs = vec![Event::new(0, 3, 4, Polarity::On), Event::new(1, 3, 4, Polarity::Off)];
        let svg = render_flow(&evs, &[], geom(), RenderOptions::default());
        assert_eq!(svg.matches("<rect x=").count(), 1);
        assert!(!svg.contains("<line"));
    }

    #[test]
    fn horizontal_motion_has_one_hue() {
        let dets = vec![det(3, 2, 0), det(8, 5, 0)];
        let svg = render_flow(&[], &dets, geom(), RenderOptions::default());
        assert_eq!(svg.matches(r##"stroke="#ff0000""##).count(), 2);
        for line in svg.lines().filter(|l| l.starts_with("<line")) {
            let y1 = line.split("y1=\"").nth(1).unwrap().split('"').next().unwrap();
            let y2 = line.split("y2=\"").nth(1).unwrap().split('"').next().unwrap();
            assert_eq!(y1, y2);
        }
    }

    #[test]
    fn deterministic() {
        let evs = vec![Event::new(0, 9, 4, Polarity::On), Event::new(1, 3, 4, Polarity::Off)];
        let dets = vec![det(3, 2, -1), det(8, -5, 3), det(1, 0, 0)];
        let a = render_flow(&evs, &dets, geom(), RenderOptions::default());
        assert_eq!(a, render_flow(&evs, &dets, geom(), RenderOptions::default()));
    }
}
