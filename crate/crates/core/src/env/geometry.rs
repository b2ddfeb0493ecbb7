//! Camera projection model: pan/tilt/zoom map to an annular wedge of the
//! camera's range circle, with line-of-sight occlusion by pillars.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{field} = {value} outside [{min}, {max})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
}

pub const PAN_MIN: f64 = 0.0;
pub const PAN_MAX: f64 = 360.0;
pub const TILT_MIN: f64 = 120.0;
pub const TILT_MAX: f64 = 180.0;
pub const ZOOM_MIN: f64 = 12.0;
pub const ZOOM_MAX: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Axis-aligned rectangle given by center and full width/height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.cx).abs() <= self.w / 2.0 && (p.y - self.cy).abs() <= self.h / 2.0
    }
}

/// Pan/tilt/zoom alignment of one camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameraConfig {
    pub pan: f64,
    pub tilt: f64,
    pub zoom: f64,
}

impl CameraConfig {
    pub fn new(pan: f64, tilt: f64, zoom: f64) -> Result<CameraConfig, GeometryError> {
        if !(PAN_MIN..PAN_MAX).contains(&pan) {
            return Err(GeometryError::OutOfRange {
                field: "pan",
                value: pan,
                min: PAN_MIN,
                max: PAN_MAX,
            });
        }
        if !(TILT_MIN..=TILT_MAX).contains(&tilt) {
            return Err(GeometryError::OutOfRange {
                field: "tilt",
                value: tilt,
                min: TILT_MIN,
                max: TILT_MAX,
            });
        }
        if !(ZOOM_MIN..=ZOOM_MAX).contains(&zoom) {
            return Err(GeometryError::OutOfRange {
                field: "zoom",
                value: zoom,
                min: ZOOM_MIN,
                max: ZOOM_MAX,
            });
        }
        Ok(CameraConfig { pan, tilt, zoom })
    }
}

/// Fixed placement of one camera.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CameraGeometry {
    pub position: Point,
    pub range_radius: f64,
}

/// The region a configured camera observes: an angular wedge around the pan
/// direction intersected with one of three equal radial bands selected by
/// tilt (tilt 180 -> nearest band, 120 -> farthest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldOfView {
    pub pan_center: f64,
    pub half_angle: f64,
    pub r_near: f64,
    pub r_far: f64,
}

/// Wedge half-angle in degrees as a function of zoom: 360 / (2 * zoom),
/// so zoom 12 -> 15 degrees and zoom 18 -> 10 degrees.
pub fn zoom_half_angle(zoom: f64) -> f64 {
    360.0 / (2.0 * zoom)
}

/// Radial band index selected by tilt: 0 = nearest third, 2 = farthest.
pub fn tilt_band(tilt: f64) -> usize {
    let toward_far = ((tilt - TILT_MIN) / 20.0).floor() as isize;
    (2 - toward_far.clamp(0, 2)) as usize
}

pub fn camera_fov(
    config: &CameraConfig,
    geom: &CameraGeometry,
) -> Result<FieldOfView, GeometryError> {
    // Re-validate so raw struct literals cannot smuggle bad values through.
    let config = CameraConfig::new(config.pan, config.tilt, config.zoom)?;
    let band = tilt_band(config.tilt);
    let third = geom.range_radius / 3.0;
    Ok(FieldOfView {
        pan_center: config.pan,
        half_angle: zoom_half_angle(config.zoom),
        r_near: band as f64 * third,
        r_far: (band + 1) as f64 * third,
    })
}

/// Absolute angular difference in degrees, wrap-aware, in [0, 180].
fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

impl FieldOfView {
    /// Whether `target` lies inside the wedge seen from `camera`, with the
    /// sight line unobstructed by any pillar.
    pub fn sees(&self, camera: Point, target: Point, pillars: &[Rect]) -> bool {
        let d = camera.distance(target);
        if d < self.r_near || d > self.r_far {
            return false;
        }
        if d > 0.0 {
            let azimuth = (target.y - camera.y)
                .atan2(target.x - camera.x)
                .to_degrees()
                .rem_euclid(360.0);
            if angle_distance(azimuth, self.pan_center) > self.half_angle {
                return false;
            }
        }
        pillars
            .iter()
            .all(|p| !segment_hits_rect(camera, target, p))
    }
}

/// Segment-rectangle intersection via the slab method.
fn segment_hits_rect(a: Point, b: Point, rect: &Rect) -> bool {
    let (min_x, max_x) = (rect.cx - rect.w / 2.0, rect.cx + rect.w / 2.0);
    let (min_y, max_y) = (rect.cy - rect.h / 2.0, rect.cy + rect.h / 2.0);
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (d, lo, hi, start) in [(dx, min_x, max_x, a.x), (dy, min_y, max_y, a.y)] {
        if d.abs() < 1e-12 {
            if start < lo || start > hi {
                return false;
            }
        } else {
            let mut ta = (lo - start) / d;
            let mut tb = (hi - start) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}
