//! Experiment specification files: flat key = value text, hand-editable and
//! diffable. Unknown keys are errors so typos fail fast.

use crate::depmeasures::{Measure, DEFAULT_KNN_K, DEFAULT_MIC_EXPONENT};
use crate::influence::{
    ConditioningMode, DEFAULT_EXPLORATION_THRESHOLD, DEFAULT_FACTOR, DEFAULT_MIN_BUCKET_SAMPLES,
    DEFAULT_PARTS,
};
use crate::rl::EpsilonSchedule;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunMode {
    /// Configurations drawn uniformly at random every step.
    Random,
    /// Q-learning with relative (increase/keep/decrease) actions.
    QRelative,
    /// Q-learning with absolute (jump-anywhere) actions.
    QAbsolute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adaptation {
    None,
    AtStart,
    Dynamic,
}

/// An at-start integration: `from` integrates `component` of `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtStartIntegration {
    pub from: String,
    pub to: String,
    pub component: String,
}

/// Everything a detection or reward experiment needs, loadable from a flat
/// key = value file. Run r uses seed_base + r.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: String,
    pub layout_file: Option<String>,
    pub discrete_mode: bool,
    pub n_runs: usize,
    pub n_steps: u64,
    pub mode: RunMode,
    pub adaptation: Adaptation,
    pub measures: Vec<Measure>,
    pub conditioning: ConditioningMode,
    pub parts: usize,
    pub min_bucket_samples: usize,
    pub window: usize,
    pub seed_base: u64,
    pub grid: Vec<usize>,
    pub target: String,
    pub source: String,
    pub rival: Option<String>,
    pub component: String,
    pub factor: f64,
    pub detect_every: u64,
    pub detect_min_samples: usize,
    pub epsilon: EpsilonSchedule,
    pub alpha: f64,
    pub gamma: f64,
    pub smoothing_window: usize,
    pub knn_k: usize,
    pub mic_exponent: f64,
    pub exploration_filter: bool,
    pub exploration_threshold: f64,
    pub p_value_permutations: usize,
    pub pan_grid: Option<Vec<f64>>,
    pub tilt_grid: Option<Vec<f64>>,
    pub zoom_grid: Option<Vec<f64>>,
    pub at_start: Vec<AtStartIntegration>,
    pub decision_measure: Option<Measure>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            scenario: "box".to_string(),
            layout_file: None,
            discrete_mode: false,
            n_runs: 100,
            n_steps: 100,
            mode: RunMode::Random,
            adaptation: Adaptation::None,
            measures: Measure::ALL.to_vec(),
            conditioning: ConditioningMode::Off,
            parts: DEFAULT_PARTS,
            min_bucket_samples: DEFAULT_MIN_BUCKET_SAMPLES,
            window: 10_000,
            seed_base: 1000,
            grid: Vec::new(),
            target: String::new(),
            source: String::new(),
            rival: None,
            component: String::new(),
            factor: DEFAULT_FACTOR,
            detect_every: 10_000,
            detect_min_samples: 10_000,
            epsilon: EpsilonSchedule::standard(),
            alpha: 0.1,
            gamma: 0.9,
            smoothing_window: 1000,
            knn_k: DEFAULT_KNN_K,
            mic_exponent: DEFAULT_MIC_EXPONENT,
            exploration_filter: false,
            exploration_threshold: DEFAULT_EXPLORATION_THRESHOLD,
            p_value_permutations: 0,
            pan_grid: None,
            tilt_grid: None,
            zoom_grid: None,
            at_start: Vec::new(),
            decision_measure: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("spec line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<ExperimentSpec, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        ExperimentSpec::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ExperimentSpec, SpecError> {
        let mut spec = ExperimentSpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| SpecError {
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
            let parse_f64 = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(format!("bad number `{v}`")))
            };
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| err(format!("bad integer `{v}`")))
            };
            let parse_u64 = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| err(format!("bad integer `{v}`")))
            };
            match key {
                "scenario" => spec.scenario = value.to_string(),
                "layout_file" => spec.layout_file = Some(value.to_string()),
                "config_mode" => {
                    spec.discrete_mode = match value {
                        "discrete" => true,
                        "continuous" => false,
                        other => return Err(err(format!("unknown config_mode `{other}`"))),
                    }
                }
                "runs" => spec.n_runs = parse_usize(value)?,
                "steps" => spec.n_steps = parse_u64(value)?,
                "mode" => {
                    spec.mode = match value {
                        "random" => RunMode::Random,
                        "q_relative" => RunMode::QRelative,
                        "q_absolute" => RunMode::QAbsolute,
                        other => return Err(err(format!("unknown mode `{other}`"))),
                    }
                }
                "adaptation" => {
                    spec.adaptation = match value {
                        "none" => Adaptation::None,
                        "at_start" => Adaptation::AtStart,
                        "dynamic" => Adaptation::Dynamic,
                        other => return Err(err(format!("unknown adaptation `{other}`"))),
                    }
                }
                "measures" => {
                    spec.measures = value
                        .split_whitespace()
                        .map(|m| {
                            Measure::parse(m).ok_or_else(|| err(format!("unknown measure `{m}`")))
                        })
                        .collect::<Result<_, _>>()?;
                }
                "decision_measure" => {
                    spec.decision_measure = Some(
                        Measure::parse(value)
                            .ok_or_else(|| err(format!("unknown measure `{value}`")))?,
                    )
                }
                "conditioning" => {
                    spec.conditioning = match value {
                        "off" => ConditioningMode::Off,
                        "own" => ConditioningMode::Own,
                        "own_and_source_peers" => ConditioningMode::OwnAndSourcePeers,
                        other => return Err(err(format!("unknown conditioning `{other}`"))),
                    }
                }
                "parts" => spec.parts = parse_usize(value)?,
                "min_bucket_samples" => spec.min_bucket_samples = parse_usize(value)?,
                "window" => spec.window = parse_usize(value)?,
                "seed_base" => spec.seed_base = parse_u64(value)?,
                "grid" => {
                    spec.grid = value
                        .split_whitespace()
                        .map(parse_usize)
                        .collect::<Result<_, _>>()?;
                }
                "target" => spec.target = value.to_string(),
                "source" => spec.source = value.to_string(),
                "rival" => {
                    spec.rival = if value.is_empty() {
                        None
                    } else {
                        Some(value.to_string())
                    }
                }
                "component" => spec.component = value.to_string(),
                "factor" => spec.factor = parse_f64(value)?,
                "detect_every" => spec.detect_every = parse_u64(value)?,
                "detect_min_samples" => spec.detect_min_samples = parse_usize(value)?,
                "epsilon_start" => spec.epsilon.start = parse_f64(value)?,
                "epsilon_factor" => spec.epsilon.decay_factor = parse_f64(value)?,
                "epsilon_interval" => spec.epsilon.decay_interval_steps = parse_u64(value)?,
                "epsilon_floor" => spec.epsilon.floor = parse_f64(value)?,
                "alpha" => spec.alpha = parse_f64(value)?,
                "gamma" => spec.gamma = parse_f64(value)?,
                "smoothing_window" => spec.smoothing_window = parse_usize(value)?,
                "knn_k" => spec.knn_k = parse_usize(value)?,
                "mic_exponent" => spec.mic_exponent = parse_f64(value)?,
                "exploration_filter" => {
                    spec.exploration_filter = match value {
                        "on" => true,
                        "off" => false,
                        other => return Err(err(format!("unknown flag `{other}`"))),
                    }
                }
                "exploration_threshold" => spec.exploration_threshold = parse_f64(value)?,
                "p_value_permutations" => spec.p_value_permutations = parse_usize(value)?,
                "pan_grid" => spec.pan_grid = Some(parse_grid(value).map_err(err)?),
                "tilt_grid" => spec.tilt_grid = Some(parse_grid(value).map_err(err)?),
                "zoom_grid" => spec.zoom_grid = Some(parse_grid(value).map_err(err)?),
                "at_start" => {
                    spec.at_start = value
                        .split_whitespace()
                        .map(|triple| {
                            let parts: Vec<&str> = triple.split(':').collect();
                            if parts.len() != 3 {
                                return Err(err(format!(
                                    "at_start entry `{triple}` is not from:to:component"
                                )));
                            }
                            Ok(AtStartIntegration {
                                from: parts[0].to_string(),
                                to: parts[1].to_string(),
                                component: parts[2].to_string(),
                            })
                        })
                        .collect::<Result<_, _>>()?;
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(spec)
    }
}

fn parse_grid(value: &str) -> Result<Vec<f64>, String> {
    value
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect()
}
