//! Scenario layouts: camera placements, pillars, target streams and
//! configuration grids, loadable from (and dumpable to) a flat text format.
//!
//! The canonical layouts are chosen so that, under uniform-random
//! configurations, the influencing camera's pan and tilt are detectable
//! within a few hundred steps:
//!
//! * `scn1`/`scn2`: cameras 1 and 2 almost coincide (their range circles
//!   overlap nearly fully), camera 3 is far away and isolated. `scn1` routes
//!   a bundle of streams through the area south of the pair, so co-observed
//!   targets cluster in one direction; `scn2` surrounds the pair with
//!   streams from north and south, which flattens the marginal signal and
//!   makes conditioning on the other components necessary.
//! * `scn3`: six cameras in two columns whose range circles overlap exactly
//!   in the pairs (1,2), (2,4), (3,4), (3,5), (5,6), with four pillars and
//!   streams crossing every shared region.

use super::geometry::{CameraGeometry, Point, Rect};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("layout line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How agents realize configurations: full intervals or the discrete grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigMode {
    Continuous,
    Discrete,
}

/// A straight-line target stream: spawned at `entry`, advancing by
/// `velocity` per step, removed when it leaves the arena. A nonzero
/// `jitter` displaces each spawn laterally (perpendicular to the velocity)
/// by a deterministic offset in [-jitter, jitter], spreading targets over a
/// band instead of a fixed line.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub entry: Point,
    pub velocity: Point,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutKind {
    /// Two robots with a joint reward rule on their binary configurations.
    Robots { rule: RobotRule },
    /// A smart-camera network with moving targets.
    Cameras {
        cameras: Vec<CameraGeometry>,
        pillars: Vec<Rect>,
        streams: Vec<StreamSpec>,
        /// Targets outside this rectangle are removed.
        arena: Rect,
        /// A target is spawned per stream every this many steps.
        spawn_every: u64,
        mode: ConfigMode,
        pan_grid: Vec<f64>,
        tilt_grid: Vec<f64>,
        zoom_grid: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobotRule {
    /// Reward 1 for both iff both push.
    BothPush,
    /// Reward 1 for both iff the two directions differ.
    Opposite,
    /// Rewards independent of all configurations (null scenario).
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub name: String,
    pub agent_names: Vec<String>,
    pub kind: LayoutKind,
}

pub const CANONICAL_NAMES: [&str; 6] = ["box", "saw", "noise", "scn1", "scn2", "scn3"];

/// Builds a canonical layout by name. Camera scenarios accept a mode suffix
/// handled by the caller; grids are part of the layout.
pub fn canonical_layout(name: &str) -> Result<Layout, LayoutError> {
    match name {
        "box" => Ok(robot_layout("box", RobotRule::BothPush)),
        "saw" => Ok(robot_layout("saw", RobotRule::Opposite)),
        "noise" => Ok(robot_layout("noise", RobotRule::Independent)),
        "scn1" => Ok(scn12_layout("scn1", scn1_streams())),
        "scn2" => Ok(scn12_layout("scn2", scn2_streams())),
        "scn3" => Ok(scn3_layout()),
        other => Err(LayoutError::UnknownScenario(other.to_string())),
    }
}

fn robot_layout(name: &str, rule: RobotRule) -> Layout {
    Layout {
        name: name.to_string(),
        agent_names: vec!["robotA".to_string(), "robotB".to_string()],
        kind: LayoutKind::Robots { rule },
    }
}

fn cam(x: f64, y: f64, r: f64) -> CameraGeometry {
    CameraGeometry {
        position: Point::new(x, y),
        range_radius: r,
    }
}

fn stream(ex: f64, ey: f64, vx: f64, vy: f64) -> StreamSpec {
    StreamSpec {
        entry: Point::new(ex, ey),
        velocity: Point::new(vx, vy),
        jitter: 0.0,
    }
}

fn spread_stream(ex: f64, ey: f64, vx: f64, vy: f64, jitter: f64) -> StreamSpec {
    StreamSpec {
        entry: Point::new(ex, ey),
        velocity: Point::new(vx, vy),
        jitter,
    }
}

fn scn1_streams() -> (Vec<StreamSpec>, Rect, u64) {
    // Two bundles of near-parallel lanes: one passing south of cameras 1
    // and 2 heading east, one passing west of them heading south. The lanes
    // are spread so different pan angles capture different subsets, and
    // they all sit in the farthest radial band of camera 2, which makes its
    // tilt signal a clean step.
    let mut streams: Vec<StreamSpec> = (0..28)
        .map(|i| stream(-9.0, -4.8 - 0.115 * i as f64, 1.0, 0.05))
        .collect();
    streams.extend((0..24).map(|i| stream(-4.7 - 0.15 * i as f64, 2.0, 0.05, -1.0)));
    let arena = Rect {
        cx: 0.0,
        cy: 0.0,
        w: 21.0,
        h: 23.5,
    };
    (streams, arena, 1)
}

fn scn2_streams() -> (Vec<StreamSpec>, Rect, u64) {
    // Streams from the north and the south plus east-west cross traffic, so
    // targets appear on the entire area around cameras 1 and 2 and no
    // viewing direction is privileged.
    let xs = [-8.0, -4.0, 0.0, 4.0, 8.0];
    let ys = [-7.0, -3.0, 1.0, 5.0, 9.0];
    let mut streams: Vec<StreamSpec> = xs
        .iter()
        .map(|&x| spread_stream(x, -11.0, 0.0, 1.0, 2.0))
        .collect();
    streams.extend(xs.iter().map(|&x| spread_stream(x, 13.0, 0.0, -1.0, 2.0)));
    streams.extend(ys.iter().map(|&y| spread_stream(-11.0, y, 1.0, 0.0, 2.0)));
    streams.extend(ys.iter().map(|&y| spread_stream(11.0, y, -1.0, 0.0, 2.0)));
    let arena = Rect {
        cx: 0.0,
        cy: 1.0,
        w: 23.5,
        h: 25.0,
    };
    (streams, arena, 1)
}

fn scn12_layout(name: &str, (streams, arena, spawn_every): (Vec<StreamSpec>, Rect, u64)) -> Layout {
    Layout {
        name: name.to_string(),
        agent_names: (1..=3).map(|i| format!("camera{i}")).collect(),
        kind: LayoutKind::Cameras {
            cameras: vec![cam(0.0, 0.0, 10.0), cam(0.0, 2.0, 10.0), cam(30.0, 0.0, 10.0)],
            pillars: vec![],
            streams,
            arena,
            spawn_every,
            mode: ConfigMode::Continuous,
            pan_grid: standard_pan_grid(),
            tilt_grid: vec![120.0, 150.0, 180.0],
            zoom_grid: vec![12.0, 18.0],
        },
    }
}

fn scn3_layout() -> Layout {
    // Radii are tuned so the range circles overlap in exactly the pairs
    // (1,2), (2,4), (3,4), (3,5), (5,6): rows are 14 apart, columns 12, so
    // pair sums must exceed their distance while (1,3) and (4,6) stay below
    // 14 and all diagonals below sqrt(12^2 + 14^2).
    // Each shared region carries two lanes, one on each side of the
    // camera-pair axis. The sides are visible at different pan values, so a
    // pair is only rewarded when both cameras watch the same side.
    let mut streams = Vec::new();
    for lane in [-2.5, 2.5] {
        streams.push(spread_stream(-7.0, 28.0 + lane, 0.5, 0.0, 0.6));
        streams.push(spread_stream(12.0 + lane, 37.0, 0.0, -0.5, 0.6));
        streams.push(spread_stream(20.0, 14.0 + lane, -0.5, 0.0, 0.6));
        streams.push(spread_stream(lane, -9.0, 0.0, 0.5, 0.6));
        streams.push(spread_stream(-8.0, lane, 0.5, 0.0, 0.6));
    }
    Layout {
        name: "scn3".to_string(),
        agent_names: (1..=6).map(|i| format!("camera{i}")).collect(),
        kind: LayoutKind::Cameras {
            cameras: vec![
                cam(0.0, 28.0, 6.5),
                cam(12.0, 28.0, 8.5),
                cam(0.0, 14.0, 7.0),
                cam(12.0, 14.0, 7.5),
                cam(0.0, 0.0, 8.5),
                cam(12.0, 0.0, 6.0),
            ],
            pillars: vec![
                Rect { cx: 4.0, cy: 21.0, w: 1.2, h: 1.2 },
                Rect { cx: 8.0, cy: 21.0, w: 1.2, h: 1.2 },
                Rect { cx: 4.0, cy: 7.0, w: 1.2, h: 1.2 },
                Rect { cx: 8.0, cy: 7.0, w: 1.2, h: 1.2 },
            ],
            streams,
            arena: Rect {
                cx: 6.5,
                cy: 14.0,
                w: 30.0,
                h: 47.0,
            },
            spawn_every: 1,
            mode: ConfigMode::Discrete,
            pan_grid: standard_pan_grid(),
            tilt_grid: vec![120.0, 150.0, 180.0],
            zoom_grid: vec![12.0, 18.0],
        },
    }
}

pub fn standard_pan_grid() -> Vec<f64> {
    (0..12).map(|i| 30.0 * i as f64).collect()
}

impl Layout {
    /// Circle-overlap pairs (0-based indices), the ground truth for which
    /// cameras can influence each other.
    pub fn overlap_pairs(&self) -> Vec<(usize, usize)> {
        match &self.kind {
            LayoutKind::Robots { .. } => vec![(0, 1)],
            LayoutKind::Cameras { cameras, .. } => {
                let mut pairs = Vec::new();
                for i in 0..cameras.len() {
                    for j in i + 1..cameras.len() {
                        let d = cameras[i].position.distance(cameras[j].position);
                        if d < cameras[i].range_radius + cameras[j].range_radius {
                            pairs.push((i, j));
                        }
                    }
                }
                pairs
            }
        }
    }

    pub fn with_mode(mut self, new_mode: ConfigMode) -> Layout {
        if let LayoutKind::Cameras { mode, .. } = &mut self.kind {
            *mode = new_mode;
        }
        self
    }

    /// Replaces the discrete grids, e.g. to scale an experiment down.
    pub fn with_grids(mut self, pan: Vec<f64>, tilt: Vec<f64>, zoom: Vec<f64>) -> Layout {
        if let LayoutKind::Cameras {
            pan_grid,
            tilt_grid,
            zoom_grid,
            ..
        } = &mut self.kind
        {
            *pan_grid = pan;
            *tilt_grid = tilt;
            *zoom_grid = zoom;
        }
        self
    }

    /// Serializes to the flat text format accepted by [`Layout::parse`].
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("name = {}", self.name));
        match &self.kind {
            LayoutKind::Robots { rule } => {
                line("kind = robots".to_string());
                let rule = match rule {
                    RobotRule::BothPush => "both_push",
                    RobotRule::Opposite => "opposite",
                    RobotRule::Independent => "independent",
                };
                line(format!("rule = {rule}"));
                for name in &self.agent_names {
                    line(format!("agent = {name}"));
                }
            }
            LayoutKind::Cameras {
                cameras,
                pillars,
                streams,
                arena,
                spawn_every,
                mode,
                pan_grid,
                tilt_grid,
                zoom_grid,
            } => {
                line("kind = cameras".to_string());
                line(format!(
                    "mode = {}",
                    match mode {
                        ConfigMode::Continuous => "continuous",
                        ConfigMode::Discrete => "discrete",
                    }
                ));
                line(format!("spawn_every = {spawn_every}"));
                for (name, c) in self.agent_names.iter().zip(cameras) {
                    line(format!(
                        "camera = {name} {} {} {}",
                        c.position.x, c.position.y, c.range_radius
                    ));
                }
                for p in pillars {
                    line(format!("pillar = {} {} {} {}", p.cx, p.cy, p.w, p.h));
                }
                for s in streams {
                    line(format!(
                        "stream = {} {} {} {} {}",
                        s.entry.x, s.entry.y, s.velocity.x, s.velocity.y, s.jitter
                    ));
                }
                line(format!(
                    "arena = {} {} {} {}",
                    arena.cx, arena.cy, arena.w, arena.h
                ));
                line(format!("pan_grid = {}", join(pan_grid)));
                line(format!("tilt_grid = {}", join(tilt_grid)));
                line(format!("zoom_grid = {}", join(zoom_grid)));
            }
        }
        out
    }

    /// Parses the flat text format produced by [`Layout::to_config_string`].
    pub fn parse(text: &str) -> Result<Layout, LayoutError> {
        let mut name = String::new();
        let mut kind = String::new();
        let mut rule = RobotRule::BothPush;
        let mut agent_names = Vec::new();
        let mut cameras = Vec::new();
        let mut pillars = Vec::new();
        let mut streams = Vec::new();
        let mut arena = None;
        let mut spawn_every = 1u64;
        let mut mode = ConfigMode::Continuous;
        let mut pan_grid = standard_pan_grid();
        let mut tilt_grid = vec![120.0, 150.0, 180.0];
        let mut zoom_grid = vec![12.0, 18.0];

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| LayoutError::Parse {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".to_string()))?;
            let key = key.trim();
            let value = value.trim();
            let floats = |v: &str| -> Result<Vec<f64>, LayoutError> {
                v.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(format!("bad number `{t}`")))
                    })
                    .collect()
            };
            match key {
                "name" => name = value.to_string(),
                "kind" => kind = value.to_string(),
                "rule" => {
                    rule = match value {
                        "both_push" => RobotRule::BothPush,
                        "opposite" => RobotRule::Opposite,
                        "independent" => RobotRule::Independent,
                        other => return Err(err(format!("unknown rule `{other}`"))),
                    }
                }
                "agent" => agent_names.push(value.to_string()),
                "mode" => {
                    mode = match value {
                        "continuous" => ConfigMode::Continuous,
                        "discrete" => ConfigMode::Discrete,
                        other => return Err(err(format!("unknown mode `{other}`"))),
                    }
                }
                "spawn_every" => {
                    spawn_every = value
                        .parse()
                        .map_err(|_| err(format!("bad integer `{value}`")))?
                }
                "camera" => {
                    let mut parts = value.split_whitespace();
                    let cam_name = parts
                        .next()
                        .ok_or_else(|| err("camera needs a name".to_string()))?;
                    let nums = floats(&parts.collect::<Vec<_>>().join(" "))?;
                    if nums.len() != 3 {
                        return Err(err("camera needs name x y radius".to_string()));
                    }
                    agent_names.push(cam_name.to_string());
                    cameras.push(cam(nums[0], nums[1], nums[2]));
                }
                "pillar" => {
                    let nums = floats(value)?;
                    if nums.len() != 4 {
                        return Err(err("pillar needs cx cy w h".to_string()));
                    }
                    pillars.push(Rect {
                        cx: nums[0],
                        cy: nums[1],
                        w: nums[2],
                        h: nums[3],
                    });
                }
                "stream" => {
                    let nums = floats(value)?;
                    if !(nums.len() == 4 || nums.len() == 5) {
                        return Err(err(
                            "stream needs entry_x entry_y vel_x vel_y [jitter]".to_string(),
                        ));
                    }
                    streams.push(spread_stream(
                        nums[0],
                        nums[1],
                        nums[2],
                        nums[3],
                        nums.get(4).copied().unwrap_or(0.0),
                    ));
                }
                "arena" => {
                    let nums = floats(value)?;
                    if nums.len() != 4 {
                        return Err(err("arena needs cx cy w h".to_string()));
                    }
                    arena = Some(Rect {
                        cx: nums[0],
                        cy: nums[1],
                        w: nums[2],
                        h: nums[3],
                    });
                }
                "pan_grid" => pan_grid = floats(value)?,
                "tilt_grid" => tilt_grid = floats(value)?,
                "zoom_grid" => zoom_grid = floats(value)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        let kind = match kind.as_str() {
            "robots" => LayoutKind::Robots { rule },
            "cameras" => LayoutKind::Cameras {
                cameras,
                pillars,
                streams,
                arena: arena.ok_or(LayoutError::Parse {
                    line: 0,
                    message: "camera layout needs an arena".to_string(),
                })?,
                spawn_every,
                mode,
                pan_grid,
                tilt_grid,
                zoom_grid,
            },
            other => {
                return Err(LayoutError::Parse {
                    line: 0,
                    message: format!("unknown kind `{other}`"),
                })
            }
        };
        Ok(Layout {
            name,
            agent_names,
            kind,
        })
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
