//! Deterministic, seedable simulators for the evaluation scenarios: the
//! collaborative box, the two-man saw, and the smart-camera networks.
//!
//! A scenario exposes one configuration space per agent and a step function
//! from the joint configuration to per-agent local rewards. Target motion is
//! fully deterministic; the seed only staggers stream spawn phases, so a
//! fixed seed and configuration sequence reproduce rewards bit-exactly.

pub mod geometry;
pub mod layout;

pub use geometry::{
    camera_fov, tilt_band, zoom_half_angle, CameraConfig, CameraGeometry, FieldOfView,
    GeometryError, Point, Rect,
};
pub use layout::{
    canonical_layout, standard_pan_grid, ConfigMode, Layout, LayoutError, LayoutKind, RobotRule,
    StreamSpec, CANONICAL_NAMES,
};

use crate::config::{ComponentDescriptor, ConfigurationSpace};
use crate::depmeasures::SampleKind;

/// Push/pull configuration of the robot scenarios, coded 1/0 for the
/// numeric estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Pull,
    Push,
}

impl Direction {
    pub fn code(self) -> f64 {
        match self {
            Direction::Pull => 0.0,
            Direction::Push => 1.0,
        }
    }

    pub fn from_code(code: f64) -> Direction {
        if code >= 0.5 {
            Direction::Push
        } else {
            Direction::Pull
        }
    }
}

/// The box only moves if both robots push.
pub fn box_step(a: Direction, b: Direction) -> (f64, f64) {
    let moved = a == Direction::Push && b == Direction::Push;
    let r = if moved { 1.0 } else { 0.0 };
    (r, r)
}

/// The saw only moves if one robot pushes and the other pulls.
pub fn saw_step(a: Direction, b: Direction) -> (f64, f64) {
    let r = if a != b { 1.0 } else { 0.0 };
    (r, r)
}

#[derive(Debug, Clone, PartialEq)]
struct Target {
    position: Point,
    velocity: Point,
}

/// A running scenario instance: layout plus mutable world state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub layout: Layout,
    spaces: Vec<ConfigurationSpace>,
    targets: Vec<Target>,
    step_count: u64,
    seed: u64,
}

impl Scenario {
    pub fn new(layout: Layout, seed: u64) -> Scenario {
        let spaces = build_spaces(&layout);
        Scenario {
            layout,
            spaces,
            targets: Vec::new(),
            step_count: 0,
            seed,
        }
    }

    pub fn from_name(name: &str, seed: u64) -> Result<Scenario, LayoutError> {
        Ok(Scenario::new(canonical_layout(name)?, seed))
    }

    pub fn agent_count(&self) -> usize {
        self.layout.agent_names.len()
    }

    pub fn agent_name(&self, index: usize) -> &str {
        &self.layout.agent_names[index]
    }

    pub fn spaces(&self) -> &[ConfigurationSpace] {
        &self.spaces
    }

    /// Rewards in every scenario are counts, hence discrete for estimation.
    pub fn reward_kind(&self) -> SampleKind {
        SampleKind::DiscreteNumeric
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_count
    }

    pub fn alive_targets(&self) -> usize {
        self.targets.len()
    }

    /// Advances the world one step under the given joint configuration and
    /// returns each agent's local reward.
    pub fn step(&mut self, joint: &[Vec<f64>]) -> Result<Vec<f64>, GeometryError> {
        assert_eq!(joint.len(), self.agent_count(), "one configuration per agent");
        let rewards = match &self.layout.kind {
            LayoutKind::Robots { rule } => {
                let a = Direction::from_code(joint[0][0]);
                let b = Direction::from_code(joint[1][0]);
                match rule {
                    RobotRule::BothPush => {
                        let (ra, rb) = box_step(a, b);
                        vec![ra, rb]
                    }
                    RobotRule::Opposite => {
                        let (ra, rb) = saw_step(a, b);
                        vec![ra, rb]
                    }
                    RobotRule::Independent => {
                        let bits = noise_bits(self.seed, self.step_count);
                        vec![(bits & 1) as f64, ((bits >> 1) & 1) as f64]
                    }
                }
            }
            LayoutKind::Cameras {
                cameras,
                pillars,
                streams,
                arena,
                spawn_every,
                ..
            } => {
                // Advance and cull targets, then spawn this step's arrivals.
                for t in &mut self.targets {
                    t.position.x += t.velocity.x;
                    t.position.y += t.velocity.y;
                }
                let arena = *arena;
                let spawn_every = (*spawn_every).max(1);
                self.targets.retain(|t| arena.contains(t.position));
                for (i, s) in streams.iter().enumerate() {
                    let phase = (self.seed.wrapping_add(i as u64)) % spawn_every;
                    if self.step_count % spawn_every == phase {
                        let mut position = s.entry;
                        let speed = (s.velocity.x.powi(2) + s.velocity.y.powi(2)).sqrt();
                        if s.jitter > 0.0 && speed > 0.0 {
                            let bits =
                                noise_bits(self.seed ^ ((i as u64) << 32), self.step_count);
                            let u = (bits >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                            let offset = 2.0 * s.jitter * u;
                            position.x += -s.velocity.y / speed * offset;
                            position.y += s.velocity.x / speed * offset;
                        }
                        self.targets.push(Target {
                            position,
                            velocity: s.velocity,
                        });
                    }
                }

                let mut fovs = Vec::with_capacity(cameras.len());
                for (cam, values) in cameras.iter().zip(joint) {
                    let config = CameraConfig::new(values[0], values[1], values[2])?;
                    fovs.push(camera_fov(&config, cam)?);
                }
                // visible[c] = bitset of targets camera c sees.
                let visible: Vec<Vec<bool>> = cameras
                    .iter()
                    .zip(&fovs)
                    .map(|(cam, fov)| {
                        self.targets
                            .iter()
                            .map(|t| fov.sees(cam.position, t.position, pillars))
                            .collect()
                    })
                    .collect();
                (0..cameras.len())
                    .map(|c| {
                        (0..self.targets.len())
                            .filter(|&t| {
                                visible[c][t]
                                    && (0..cameras.len()).any(|o| o != c && visible[o][t])
                            })
                            .count() as f64
                    })
                    .collect()
            }
        };
        self.step_count += 1;
        Ok(rewards)
    }
}

fn build_spaces(layout: &Layout) -> Vec<ConfigurationSpace> {
    match &layout.kind {
        LayoutKind::Robots { .. } => {
            let space = ConfigurationSpace::new(vec![(
                "direction",
                ComponentDescriptor::discrete(vec![0.0, 1.0]),
            )]);
            vec![space.clone(), space]
        }
        LayoutKind::Cameras {
            cameras,
            mode,
            pan_grid,
            tilt_grid,
            zoom_grid,
            ..
        } => {
            let space = match mode {
                ConfigMode::Continuous => ConfigurationSpace::new(vec![
                    ("pan", ComponentDescriptor::continuous(0.0, 360.0)),
                    ("tilt", ComponentDescriptor::continuous(120.0, 180.0)),
                    ("zoom", ComponentDescriptor::continuous(12.0, 18.0)),
                ]),
                ConfigMode::Discrete => ConfigurationSpace::new(vec![
                    ("pan", ComponentDescriptor::discrete(pan_grid.clone())),
                    ("tilt", ComponentDescriptor::discrete(tilt_grid.clone())),
                    ("zoom", ComponentDescriptor::discrete(zoom_grid.clone())),
                ]),
            };
            vec![space; cameras.len()]
        }
    }
}

fn noise_bits(seed: u64, step: u64) -> u64 {
    let mut z = seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
