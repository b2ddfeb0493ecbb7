//! Experiment runners: detection-rate curves over sample counts and reward
//! curves for the learning variants, both fully determined by (spec, seed).

use super::spec::{Adaptation, ExperimentSpec, RunMode};
use super::HarnessError;
use crate::agent::{
    DetectionSettings, MultiAgentSystem, StructuralEvent, SystemConfig,
};
use crate::config::{AgentId, ComponentRef, ConfigurationSpace};
use crate::depmeasures::{DependencyEstimate, EstimatorParams, Measure};
use crate::derive_seed;
use crate::env::{canonical_layout, ConfigMode, Layout, Scenario};
use crate::influence::{
    conditioned_estimate, filter_exploration, notional_baseline, random_joint_config,
    ObservationRecord, ObservationWindow, ReportConfig,
};
use crate::rl::ActionMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// One detection-rate measurement: the fraction of runs in which the real
/// source scored strictly higher than the comparator at this sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub samples: u64,
    pub measure: Measure,
    pub detection_rate: f64,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionCurve {
    pub rows: Vec<DetectionRow>,
}

impl DetectionCurve {
    pub fn rate_at(&self, samples: u64, measure: Measure) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.samples == samples && r.measure == measure)
            .map(|r| r.detection_rate)
    }

    /// Mean rate across the given measures at one grid point.
    pub fn mean_rate_at(&self, samples: u64, measures: &[Measure]) -> Option<f64> {
        let rates: Vec<f64> = measures
            .iter()
            .filter_map(|&m| self.rate_at(samples, m))
            .collect();
        (rates.len() == measures.len())
            .then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    pub fn sample_points(&self) -> Vec<u64> {
        let mut points: Vec<u64> = self.rows.iter().map(|r| r.samples).collect();
        points.sort_unstable();
        points.dedup();
        points
    }
}

/// Reward trajectory averaged across runs, plus the structural events and
/// final cooperation networks of every run.
#[derive(Debug, Clone, Default)]
pub struct RewardCurve {
    /// Per-step reward, averaged over agents within a run and over runs.
    pub mean_reward: Vec<f64>,
    pub n_runs: usize,
    pub smoothing_window: usize,
    pub events: Vec<(usize, StructuralEvent)>,
    /// Per run: (from, to, components) integration edges at the end.
    pub networks: Vec<Vec<(String, String, String)>>,
}

impl RewardCurve {
    /// Trailing-mean smoothed value at each step.
    pub fn smoothed(&self) -> Vec<f64> {
        let w = self.smoothing_window.max(1);
        let mut out = Vec::with_capacity(self.mean_reward.len());
        let mut acc = 0.0;
        for (i, &v) in self.mean_reward.iter().enumerate() {
            acc += v;
            if i >= w {
                acc -= self.mean_reward[i - w];
            }
            out.push(acc / (i + 1).min(w) as f64);
        }
        out
    }

    /// Mean reward over the final `tail` steps (the plateau estimate).
    pub fn plateau(&self, tail: usize) -> f64 {
        let n = self.mean_reward.len();
        let from = n.saturating_sub(tail);
        let slice = &self.mean_reward[from..];
        slice.iter().sum::<f64>() / slice.len().max(1) as f64
    }
}

pub(crate) fn resolve_layout(spec: &ExperimentSpec) -> Result<Layout, HarnessError> {
    let mut layout = match &spec.layout_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Spec(format!("cannot read layout {path}: {e}")))?;
            Layout::parse(&text).map_err(|e| HarnessError::Spec(e.to_string()))?
        }
        None => canonical_layout(&spec.scenario).map_err(|e| HarnessError::Spec(e.to_string()))?,
    };
    let needs_discrete = spec.discrete_mode || spec.mode != RunMode::Random;
    if needs_discrete {
        layout = layout.with_mode(ConfigMode::Discrete);
    }
    if spec.pan_grid.is_some() || spec.tilt_grid.is_some() || spec.zoom_grid.is_some() {
        let current = match &layout.kind {
            crate::env::LayoutKind::Cameras {
                pan_grid,
                tilt_grid,
                zoom_grid,
                ..
            } => (pan_grid.clone(), tilt_grid.clone(), zoom_grid.clone()),
            crate::env::LayoutKind::Robots { .. } => {
                return Err(HarnessError::Spec(
                    "grid overrides only apply to camera scenarios".to_string(),
                ))
            }
        };
        layout = layout.with_grids(
            spec.pan_grid.clone().unwrap_or(current.0),
            spec.tilt_grid.clone().unwrap_or(current.1),
            spec.zoom_grid.clone().unwrap_or(current.2),
        );
    }
    Ok(layout)
}

fn agent_index(layout: &Layout, name: &str) -> Result<usize, HarnessError> {
    layout
        .agent_names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| HarnessError::Spec(format!("unknown agent `{name}`")))
}

fn component_index(space: &ConfigurationSpace, name: &str) -> Result<usize, HarnessError> {
    space
        .names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| HarnessError::Spec(format!("unknown component `{name}`")))
}

pub(crate) fn report_config(spec: &ExperimentSpec) -> ReportConfig {
    ReportConfig {
        measures: spec.measures.clone(),
        decision_measure: spec.decision_measure,
        conditioning: spec.conditioning,
        parts_per_continuous_component: spec.parts,
        min_bucket_samples: spec.min_bucket_samples,
        factor: spec.factor,
        params: EstimatorParams {
            knn_k: spec.knn_k,
            mic_exponent: spec.mic_exponent,
        },
        p_value_permutations: spec.p_value_permutations,
    }
}

struct DetectionTask {
    target: AgentId,
    source: ComponentRef,
    rival: Option<ComponentRef>,
    report_cfg: ReportConfig,
}

fn detection_task(spec: &ExperimentSpec, layout: &Layout) -> Result<DetectionTask, HarnessError> {
    let scenario = Scenario::new(layout.clone(), 0);
    let spaces = scenario.spaces();
    let target = agent_index(layout, &spec.target)?;
    let source_agent = agent_index(layout, &spec.source)?;
    let comp = component_index(&spaces[source_agent], &spec.component)?;
    let source = ComponentRef::new(
        AgentId(source_agent as u32),
        comp,
        spaces[source_agent].components[comp].clone(),
    );
    let rival = spec
        .rival
        .as_deref()
        .map(|name| -> Result<ComponentRef, HarnessError> {
            let rival_agent = agent_index(layout, name)?;
            let rival_comp = component_index(&spaces[rival_agent], &spec.component)?;
            Ok(ComponentRef::new(
                AgentId(rival_agent as u32),
                rival_comp,
                spaces[rival_agent].components[rival_comp].clone(),
            ))
        })
        .transpose()?;
    Ok(DetectionTask {
        target: AgentId(target as u32),
        source,
        rival,
        report_cfg: report_config(spec),
    })
}

/// Runs the detection experiment: `n_runs` seeded runs, and at every grid
/// point each measure's real-vs-comparator outcome. Equal scores never
/// count as a win.
pub fn run_detection_experiment(spec: &ExperimentSpec) -> Result<DetectionCurve, HarnessError> {
    let layout = resolve_layout(spec)?;
    let task = detection_task(spec, &layout)?;
    if spec.measures.is_empty() {
        return Err(HarnessError::Spec("no measures configured".to_string()));
    }
    if spec.mode == RunMode::Random && spec.grid.is_empty() {
        return Err(HarnessError::Spec(
            "random-mode detection needs a sample grid".to_string(),
        ));
    }

    let outcomes: Result<Vec<Vec<(u64, Measure, bool)>>, HarnessError> = (0..spec.n_runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = spec.seed_base + run as u64;
            match spec.mode {
                RunMode::Random => detection_run_random(spec, &layout, &task, run_seed),
                RunMode::QRelative | RunMode::QAbsolute => {
                    detection_run_q(spec, &layout, &task, run_seed)
                }
            }
        })
        .collect();
    let outcomes = outcomes?;

    let mut wins: BTreeMap<(u64, Measure), usize> = BTreeMap::new();
    let mut totals: BTreeMap<(u64, Measure), usize> = BTreeMap::new();
    for run in &outcomes {
        for &(samples, measure, win) in run {
            *totals.entry((samples, measure)).or_insert(0) += 1;
            if win {
                *wins.entry((samples, measure)).or_insert(0) += 1;
            }
        }
    }
    let rows = totals
        .iter()
        .map(|(&(samples, measure), &total)| DetectionRow {
            samples,
            measure,
            detection_rate: *wins.get(&(samples, measure)).unwrap_or(&0) as f64 / total as f64,
            n_runs: total,
        })
        .collect();
    Ok(DetectionCurve { rows })
}

/// Evaluates all measures at one window state: real source estimate versus
/// the notional baseline or the rival agent's same component.
fn evaluate_window(
    window: &ObservationWindow,
    spaces: &[ConfigurationSpace],
    task: &DetectionTask,
    spec: &ExperimentSpec,
    samples_label: u64,
    run_seed: u64,
) -> Result<Vec<(u64, Measure, bool)>, HarnessError> {
    let reward_kind = crate::depmeasures::SampleKind::DiscreteNumeric;
    let scheme = task
        .report_cfg
        .scheme_for(task.target, spaces, &task.source);
    let mut out = Vec::with_capacity(spec.measures.len());
    for &measure in &spec.measures {
        let real = conditioned_estimate(
            window,
            &task.source,
            &scheme,
            measure,
            &task.report_cfg.params,
            reward_kind,
        )
        .map_err(run_err)?;
        let comparator: DependencyEstimate = match &task.rival {
            Some(rival) => {
                let rival_scheme = task.report_cfg.scheme_for(task.target, spaces, rival);
                conditioned_estimate(
                    window,
                    rival,
                    &rival_scheme,
                    measure,
                    &task.report_cfg.params,
                    reward_kind,
                )
                .map_err(run_err)?
            }
            None => notional_baseline(
                window,
                &task.source,
                &scheme,
                measure,
                &task.report_cfg.params,
                reward_kind,
                derive_seed(run_seed, measure.name(), samples_label),
            )
            .map_err(run_err)?,
        };
        out.push((samples_label, measure, real.beats(&comparator)));
    }
    Ok(out)
}

fn run_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Run(e.to_string())
}

fn detection_run_random(
    spec: &ExperimentSpec,
    layout: &Layout,
    task: &DetectionTask,
    run_seed: u64,
) -> Result<Vec<(u64, Measure, bool)>, HarnessError> {
    let mut scenario = Scenario::new(layout.clone(), run_seed);
    let spaces = scenario.spaces().to_vec();
    let max_samples = *spec.grid.iter().max().unwrap();
    let mut window = ObservationWindow::new(max_samples);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, "config", 0));
    for t in 0..max_samples as u64 {
        let joint = random_joint_config(&spaces, &mut rng);
        let rewards = scenario.step(&joint).map_err(run_err)?;
        window.push(ObservationRecord {
            step: t,
            configs: joint,
            reward: rewards[task.target.index()],
            explored: true,
        });
    }
    let mut out = Vec::new();
    for &s in &spec.grid {
        let prefix = window.prefix(s);
        out.extend(evaluate_window(
            &prefix, &spaces, task, spec, s as u64, run_seed,
        )?);
    }
    Ok(out)
}

fn detection_run_q(
    spec: &ExperimentSpec,
    layout: &Layout,
    task: &DetectionTask,
    run_seed: u64,
) -> Result<Vec<(u64, Measure, bool)>, HarnessError> {
    let scenario = Scenario::new(layout.clone(), run_seed);
    let cfg = SystemConfig {
        alpha: spec.alpha,
        gamma: spec.gamma,
        action_mode: if spec.mode == RunMode::QAbsolute {
            ActionMode::Absolute
        } else {
            ActionMode::Relative
        },
        schedule: spec.epsilon,
        log_window: spec.window,
        detection: None,
        seed: run_seed,
    };
    let mut system = MultiAgentSystem::new(scenario, &cfg).map_err(run_err)?;
    let spaces = system.scenario.spaces().to_vec();
    let mut out = Vec::new();
    for t in 0..spec.n_steps {
        system.step().map_err(run_err)?;
        let log = &system.agents[task.target.index()].log;
        if (t + 1) % spec.detect_every == 0 && log.len() >= spec.detect_min_samples {
            let window = if spec.exploration_filter {
                filter_exploration(
                    log,
                    spec.exploration_threshold,
                    derive_seed(run_seed, "filter", t),
                )
                .map_err(run_err)?
            } else {
                log.clone()
            };
            out.extend(evaluate_window(&window, &spaces, task, spec, t + 1, run_seed)?);
        }
    }
    Ok(out)
}

/// Runs a reward experiment over the configured adaptation variant and
/// averages per-step rewards across runs.
pub fn run_reward_experiment(spec: &ExperimentSpec) -> Result<RewardCurve, HarnessError> {
    if spec.mode == RunMode::Random {
        return Err(HarnessError::Spec(
            "reward experiments need a q-learning mode".to_string(),
        ));
    }
    let layout = resolve_layout(spec)?;

    let per_run: Result<Vec<(Vec<f64>, Vec<StructuralEvent>, Vec<(String, String, String)>)>, HarnessError> =
        (0..spec.n_runs)
            .into_par_iter()
            .map(|run| reward_run(spec, &layout, spec.seed_base + run as u64))
            .collect();
    let per_run = per_run?;

    let steps = spec.n_steps as usize;
    let mut mean_reward = vec![0.0; steps];
    for (rewards, _, _) in &per_run {
        for (i, &r) in rewards.iter().enumerate() {
            mean_reward[i] += r;
        }
    }
    for v in &mut mean_reward {
        *v /= per_run.len() as f64;
    }
    let mut events = Vec::new();
    let mut networks = Vec::new();
    for (run, (_, run_events, network)) in per_run.into_iter().enumerate() {
        events.extend(run_events.into_iter().map(|e| (run, e)));
        networks.push(network);
    }
    Ok(RewardCurve {
        mean_reward,
        n_runs: spec.n_runs,
        smoothing_window: spec.smoothing_window,
        events,
        networks,
    })
}

pub(crate) fn system_config(spec: &ExperimentSpec, run_seed: u64) -> SystemConfig {
    SystemConfig {
        alpha: spec.alpha,
        gamma: spec.gamma,
        action_mode: if spec.mode == RunMode::QAbsolute {
            ActionMode::Absolute
        } else {
            ActionMode::Relative
        },
        schedule: spec.epsilon,
        log_window: spec.window,
        detection: if spec.adaptation == Adaptation::Dynamic {
            Some(DetectionSettings {
                detect_every: spec.detect_every,
                min_samples: spec.detect_min_samples,
                report: report_config(spec),
                exploration_threshold: spec.exploration_threshold,
                reversion_rounds: 3,
            })
        } else {
            None
        },
        seed: run_seed,
    }
}

pub(crate) fn build_system(
    spec: &ExperimentSpec,
    layout: &Layout,
    run_seed: u64,
) -> Result<MultiAgentSystem, HarnessError> {
    let scenario = Scenario::new(layout.clone(), run_seed);
    let cfg = system_config(spec, run_seed);
    let mut system = MultiAgentSystem::new(scenario, &cfg).map_err(run_err)?;
    if spec.adaptation == Adaptation::AtStart {
        for integration in &spec.at_start {
            let from = agent_index(layout, &integration.from)?;
            let to = agent_index(layout, &integration.to)?;
            let spaces = system.scenario.spaces().to_vec();
            let comp = component_index(&spaces[to], &integration.component)?;
            let source =
                ComponentRef::new(AgentId(to as u32), comp, spaces[to].components[comp].clone());
            system.integrate_now(from, source).map_err(run_err)?;
        }
    }
    Ok(system)
}

fn reward_run(
    spec: &ExperimentSpec,
    layout: &Layout,
    run_seed: u64,
) -> Result<(Vec<f64>, Vec<StructuralEvent>, Vec<(String, String, String)>), HarnessError> {
    let mut system = build_system(spec, layout, run_seed)?;
    let mut rewards = Vec::with_capacity(spec.n_steps as usize);
    for _ in 0..spec.n_steps {
        let out = system.step().map_err(run_err)?;
        rewards.push(out.rewards.iter().sum::<f64>() / out.rewards.len() as f64);
    }
    let events = system
        .agents
        .iter()
        .flat_map(|a| a.events.clone())
        .collect();
    let network = system.network_edges();
    Ok((rewards, events, network))
}
