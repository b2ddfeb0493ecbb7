//! Per-agent runtime loop: observe, distribute, estimate influences on a
//! cadence, adapt the learning algorithm (state-space expansion or
//! reversion), select an action, and update the policy.
//!
//! Agents step under a global per-step barrier: all configurations are
//! published before rewards are computed, so an agent that integrated a
//! peer's component always finds the peer's current-step value in the
//! exchange. Integrations across agents must form an acyclic directed graph.

use crate::config::{AgentId, ComponentRef, ConfigurationSpace};
use crate::depmeasures::SampleKind;
use crate::derive_seed;
use crate::env::{GeometryError, LayoutKind, Scenario};
use crate::influence::{
    build_report, filter_exploration, InfluenceError, InfluenceReport, ObservationRecord,
    ObservationWindow, ReportConfig, DEFAULT_EXPLORATION_THRESHOLD,
};
use crate::rl::{
    expand_state_space, merge_state_space, ActionMode, ActionSpace, EpsilonSchedule, QPolicy,
    RlError, StateAxis, StateSpace,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("q-learning requires a discrete configuration space")]
    ContinuousSpace,
    #[error("agent {agent} is missing peer value for agent {peer} component {component}")]
    MissingPeerValue {
        agent: AgentId,
        peer: AgentId,
        component: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
}

/// Detection cadence and evaluation settings for one agent.
#[derive(Debug, Clone)]
pub struct DetectionSettings {
    /// Run the estimation/evaluation phase every this many steps.
    pub detect_every: u64,
    /// Minimum observations before the first estimation.
    pub min_samples: usize,
    pub report: ReportConfig,
    /// Required exploration share; greedy records beyond it are dropped
    /// before estimation.
    pub exploration_threshold: f64,
    /// Revert an integrated axis after this many consecutive rounds below
    /// the factor rule.
    pub reversion_rounds: u32,
}

impl DetectionSettings {
    pub fn new(detect_every: u64, min_samples: usize, report: ReportConfig) -> Self {
        DetectionSettings {
            detect_every,
            min_samples,
            report,
            exploration_threshold: DEFAULT_EXPLORATION_THRESHOLD,
            reversion_rounds: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StructuralEventKind {
    Expanded,
    Merged,
    RefusedCycle,
}

/// A state-space change (or refused change) of one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralEvent {
    pub step: u64,
    pub agent: AgentId,
    pub source: ComponentRef,
    pub kind: StructuralEventKind,
}

/// Directed integration graph: an edge A -> B means A integrated one or
/// more components of B (A waits on B's decision). Kept acyclic.
#[derive(Debug, Clone, Default)]
pub struct CoordinationGraph {
    edges: BTreeMap<(u32, u32), u32>,
}

impl CoordinationGraph {
    pub fn new() -> CoordinationGraph {
        CoordinationGraph::default()
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.edges.keys().map(|&(a, b)| (AgentId(a), AgentId(b)))
    }

    /// Would adding from -> to close a directed cycle?
    pub fn would_close_cycle(&self, from: AgentId, to: AgentId) -> bool {
        if from == to {
            return true;
        }
        // DFS from `to` along existing edges looking for `from`.
        let mut stack = vec![to.0];
        let mut seen = std::collections::BTreeSet::new();
        while let Some(node) = stack.pop() {
            if node == from.0 {
                return true;
            }
            if !seen.insert(node) {
                continue;
            }
            for &(a, b) in self.edges.keys() {
                if a == node {
                    stack.push(b);
                }
            }
        }
        false
    }

    pub fn add_edge(&mut self, from: AgentId, to: AgentId) {
        *self.edges.entry((from.0, to.0)).or_insert(0) += 1;
    }

    pub fn remove_edge(&mut self, from: AgentId, to: AgentId) {
        if let Some(count) = self.edges.get_mut(&(from.0, to.0)) {
            *count -= 1;
            if *count == 0 {
                self.edges.remove(&(from.0, to.0));
            }
        }
    }

    pub fn is_acyclic(&self) -> bool {
        // The insert path refuses cycles, so this recomputes from scratch
        // as an independent check.
        let nodes: std::collections::BTreeSet<u32> =
            self.edges.keys().flat_map(|&(a, b)| [a, b]).collect();
        let mut visiting = std::collections::BTreeSet::new();
        let mut done = std::collections::BTreeSet::new();
        for &n in &nodes {
            if !self.visit(n, &mut visiting, &mut done) {
                return false;
            }
        }
        true
    }

    fn visit(
        &self,
        node: u32,
        visiting: &mut std::collections::BTreeSet<u32>,
        done: &mut std::collections::BTreeSet<u32>,
    ) -> bool {
        if done.contains(&node) {
            return true;
        }
        if !visiting.insert(node) {
            return false;
        }
        for &(a, b) in self.edges.keys() {
            if a == node && !self.visit(b, visiting, done) {
                return false;
            }
        }
        visiting.remove(&node);
        done.insert(node);
        true
    }
}

struct PendingUpdate {
    axis_values: Vec<usize>,
    action: usize,
}

/// One learning agent: policy, expandable state space, observation log, and
/// the detection settings driving runtime adaptation.
pub struct AgentRuntime {
    pub id: AgentId,
    pub policy: QPolicy,
    pub space: StateSpace,
    pub actions: ActionSpace,
    pub log: ObservationWindow,
    pub schedule: EpsilonSchedule,
    pub detection: Option<DetectionSettings>,
    pub events: Vec<StructuralEvent>,
    own_config: Vec<usize>,
    pending: Option<PendingUpdate>,
    last_explored: bool,
    below_factor_streak: u32,
    action_rng: ChaCha8Rng,
    detect_seed: u64,
}

impl AgentRuntime {
    /// Current own configuration as component values.
    pub fn own_values(&self, space: &ConfigurationSpace) -> Vec<f64> {
        self.own_config
            .iter()
            .enumerate()
            .map(|(axis, &idx)| match &space.components[axis] {
                crate::config::ComponentDescriptor::Discrete { values } => values[idx],
                crate::config::ComponentDescriptor::Continuous { .. } => {
                    unreachable!("q-learning agents only run on discrete spaces")
                }
            })
            .collect()
    }

    /// Full state tuple (own values plus integrated peer values) for traces.
    pub fn state_values(&self, joint: &[Vec<f64>]) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .own_config
            .iter()
            .zip(&self.space.axes)
            .map(|(&idx, axis)| axis.values[idx])
            .collect();
        for axis in self.space.axes.iter().skip(self.space.base_axis_count()) {
            let source = axis.source.as_ref().expect("integrated axis has a source");
            out.push(joint[source.agent.index()][source.component]);
        }
        out
    }

    pub fn integrated_sources(&self) -> Vec<ComponentRef> {
        self.space.integrated_sources().into_iter().cloned().collect()
    }

    fn axis_values_for(
        &self,
        own: &[usize],
        joint: &[Vec<f64>],
    ) -> Result<Vec<usize>, AgentError> {
        let mut values = own.to_vec();
        for (axis_idx, axis) in self
            .space
            .axes
            .iter()
            .enumerate()
            .skip(self.space.base_axis_count())
        {
            let source = axis.source.as_ref().expect("integrated axis has a source");
            let value = joint
                .get(source.agent.index())
                .and_then(|c| c.get(source.component))
                .copied()
                .ok_or(AgentError::MissingPeerValue {
                    agent: self.id,
                    peer: source.agent,
                    component: source.component,
                })?;
            let idx = self.space.value_index(axis_idx, value).ok_or(
                AgentError::MissingPeerValue {
                    agent: self.id,
                    peer: source.agent,
                    component: source.component,
                },
            )?;
            values.push(idx);
        }
        Ok(values)
    }
}

/// System-wide settings for a multi-agent run.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub action_mode: ActionMode,
    pub schedule: EpsilonSchedule,
    pub log_window: usize,
    pub detection: Option<DetectionSettings>,
    pub seed: u64,
}

/// What one global step produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub step: u64,
    pub rewards: Vec<f64>,
    pub joint: Vec<Vec<f64>>,
    pub epsilon: f64,
    /// Per-agent selected action index for the next step.
    pub actions: Vec<usize>,
    /// Whether each agent's selection was an exploration step.
    pub explored: Vec<bool>,
    /// Total source-component estimates across agents when a detection
    /// round fired at this step.
    pub round_estimates: Option<usize>,
}

/// All agents plus the scenario and the shared integration graph.
pub struct MultiAgentSystem {
    pub scenario: Scenario,
    pub agents: Vec<AgentRuntime>,
    pub graph: CoordinationGraph,
    step: u64,
}

impl MultiAgentSystem {
    pub fn new(scenario: Scenario, cfg: &SystemConfig) -> Result<MultiAgentSystem, AgentError> {
        let spaces = scenario.spaces().to_vec();
        let mut agents = Vec::with_capacity(spaces.len());
        for (i, space) in spaces.iter().enumerate() {
            let arities: Vec<usize> = space
                .components
                .iter()
                .map(|c| c.cardinality().ok_or(AgentError::ContinuousSpace))
                .collect::<Result<_, _>>()?;
            let axes: Vec<StateAxis> = space
                .components
                .iter()
                .map(|c| match c {
                    crate::config::ComponentDescriptor::Discrete { values } => StateAxis {
                        values: values.clone(),
                        source: None,
                    },
                    crate::config::ComponentDescriptor::Continuous { .. } => unreachable!(),
                })
                .collect();
            let state_space = StateSpace::new(axes);
            let actions = ActionSpace::new(cfg.action_mode, arities.clone());
            let policy = QPolicy::new(state_space.state_count(), actions.action_count(), cfg.alpha, cfg.gamma);
            let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "init", i as u64));
            let own_config: Vec<usize> = arities
                .iter()
                .map(|&n| rand::Rng::gen_range(&mut init_rng, 0..n))
                .collect();
            agents.push(AgentRuntime {
                id: AgentId(i as u32),
                policy,
                space: state_space,
                actions,
                log: ObservationWindow::new(cfg.log_window),
                schedule: cfg.schedule,
                detection: cfg.detection.clone(),
                events: Vec::new(),
                own_config,
                pending: None,
                last_explored: true,
                below_factor_streak: 0,
                action_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "action", i as u64)),
                detect_seed: derive_seed(cfg.seed, "detect", i as u64),
            });
        }
        Ok(MultiAgentSystem {
            scenario,
            agents,
            graph: CoordinationGraph::new(),
            step: 0,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Integrates `source` into `agent`'s state space up front (the
    /// designed-in variant of adaptation).
    pub fn integrate_now(&mut self, agent: usize, source: ComponentRef) -> Result<(), AgentError> {
        let values = match &source.descriptor {
            crate::config::ComponentDescriptor::Discrete { values } => values.clone(),
            crate::config::ComponentDescriptor::Continuous { .. } => {
                return Err(AgentError::ContinuousSpace)
            }
        };
        let a = &mut self.agents[agent];
        expand_state_space(&mut a.policy, &mut a.space, source.clone(), values, self.step)?;
        self.graph.add_edge(a.id, source.agent);
        a.events.push(StructuralEvent {
            step: self.step,
            agent: a.id,
            source,
            kind: StructuralEventKind::Expanded,
        });
        Ok(())
    }

    /// Executes one global step: rewards under the current joint
    /// configuration, observation, detection/adaptation on cadence, action
    /// selection and policy updates.
    pub fn step(&mut self) -> Result<StepOutcome, AgentError> {
        let t = self.step;
        let spaces = self.scenario.spaces().to_vec();
        let reward_kind = self.scenario.reward_kind();

        // Distribution: every agent's configuration is published for this
        // step before any reward or estimation work.
        let joint: Vec<Vec<f64>> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.own_values(&spaces[i]))
            .collect();
        let rewards = self.scenario.step(&joint)?;

        // Observation.
        for (i, agent) in self.agents.iter_mut().enumerate() {
            agent.log.push(ObservationRecord {
                step: t,
                configs: joint.clone(),
                reward: rewards[i],
                explored: agent.last_explored,
            });
        }

        // Estimation / evaluation / adaptation on the detection cadence.
        let mut round_estimates = None;
        let detection_due = self.agents.iter().any(|a| {
            a.detection
                .as_ref()
                .is_some_and(|d| (t + 1) % d.detect_every == 0 && a.log.len() >= d.min_samples)
        });
        if detection_due {
            let mut total = 0usize;
            for i in 0..self.agents.len() {
                total += self.run_detection_round(i, t, &spaces, reward_kind)?;
            }
            round_estimates = Some(total);
        }

        // Action selection, application, and the pending Q update.
        let epsilon = self.agents[0].schedule.epsilon_at(t);
        let mut actions = Vec::with_capacity(self.agents.len());
        let mut explored_flags = Vec::with_capacity(self.agents.len());
        for agent in self.agents.iter_mut() {
            let state_values = agent.axis_values_for(&agent.own_config, &joint)?;
            let state_idx = agent.space.index_of(&state_values);
            let (action, explored) =
                agent
                    .policy
                    .select_action(state_idx, agent.schedule.epsilon_at(t), &mut agent.action_rng);
            agent.own_config = agent.actions.apply(action, &agent.own_config);
            if let Some(pending) = agent.pending.take() {
                let prev_idx = agent.space.index_of(&pending.axis_values);
                agent
                    .policy
                    .update(prev_idx, pending.action, rewards[agent.id.index()], state_idx);
            }
            agent.pending = Some(PendingUpdate {
                axis_values: state_values,
                action,
            });
            agent.last_explored = explored;
            actions.push(action);
            explored_flags.push(explored);
        }

        self.step += 1;
        Ok(StepOutcome {
            step: t,
            rewards,
            joint,
            epsilon,
            actions,
            explored: explored_flags,
            round_estimates,
        })
    }

    /// Runs one agent's estimation round; returns how many source
    /// components were estimated.
    fn run_detection_round(
        &mut self,
        agent_idx: usize,
        t: u64,
        spaces: &[ConfigurationSpace],
        reward_kind: SampleKind,
    ) -> Result<usize, AgentError> {
        let Some(settings) = self.agents[agent_idx].detection.clone() else {
            return Ok(0);
        };
        if (t + 1) % settings.detect_every != 0
            || self.agents[agent_idx].log.len() < settings.min_samples
        {
            return Ok(0);
        }

        let id = self.agents[agent_idx].id;
        let sources: Vec<ComponentRef> = spaces
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != agent_idx)
            .flat_map(|(j, space)| {
                space
                    .components
                    .iter()
                    .enumerate()
                    .map(move |(c, d)| ComponentRef::new(AgentId(j as u32), c, d.clone()))
            })
            .collect();
        let estimated = sources.len();

        let window = filter_exploration(
            &self.agents[agent_idx].log,
            settings.exploration_threshold,
            derive_seed(self.agents[agent_idx].detect_seed, "filter", t),
        )?;
        let report = build_report(
            &window,
            spaces,
            id,
            &sources,
            &settings.report,
            reward_kind,
            derive_seed(self.agents[agent_idx].detect_seed, "report", t),
        )?;

        self.apply_adaptation(agent_idx, t, &settings, &report)?;
        Ok(estimated)
    }

    fn apply_adaptation(
        &mut self,
        agent_idx: usize,
        t: u64,
        settings: &DetectionSettings,
        report: &InfluenceReport,
    ) -> Result<(), AgentError> {
        // Reversion bookkeeping for the most recent integration: when its
        // influence stops beating factor * notional for several consecutive
        // rounds, merge it back (expansions revert in LIFO order).
        let last_source = self.agents[agent_idx]
            .space
            .lineage
            .last()
            .map(|r| r.source.clone());
        if let Some(source) = last_source {
            let still_supported = report.candidates.iter().any(|c| c.key() == source.key());
            let agent = &mut self.agents[agent_idx];
            if still_supported {
                agent.below_factor_streak = 0;
            } else {
                agent.below_factor_streak += 1;
                if agent.below_factor_streak >= settings.reversion_rounds {
                    merge_state_space(&mut agent.policy, &mut agent.space, &source)?;
                    if let Some(pending) = agent.pending.as_mut() {
                        pending.axis_values.pop();
                    }
                    agent.events.push(StructuralEvent {
                        step: t,
                        agent: agent.id,
                        source: source.clone(),
                        kind: StructuralEventKind::Merged,
                    });
                    self.graph.remove_edge(self.agents[agent_idx].id, source.agent);
                    self.agents[agent_idx].below_factor_streak = 0;
                }
            }
        }

        // Integration: the highest-ranked candidate not yet integrated;
        // only one integration per agent per round.
        let candidate = report
            .candidates
            .iter()
            .find(|c| !self.agents[agent_idx].space.is_integrated(c))
            .cloned();
        let Some(source) = candidate else {
            return Ok(());
        };
        let id = self.agents[agent_idx].id;
        if self.graph.would_close_cycle(id, source.agent) {
            self.agents[agent_idx].events.push(StructuralEvent {
                step: t,
                agent: id,
                source,
                kind: StructuralEventKind::RefusedCycle,
            });
            return Ok(());
        }
        let values = match &source.descriptor {
            crate::config::ComponentDescriptor::Discrete { values } => values.clone(),
            crate::config::ComponentDescriptor::Continuous { .. } => {
                return Err(AgentError::ContinuousSpace)
            }
        };
        // The previous step's peer value extends the pending state so the
        // delayed update lands in the right child state.
        let prev_value_idx = {
            let agent = &self.agents[agent_idx];
            if agent.pending.is_some() {
                let prev_record = agent.log.records().rev().nth(1);
                match prev_record {
                    Some(r) => {
                        let v = r.configs[source.agent.index()][source.component];
                        values.iter().position(|&x| (x - v).abs() <= 1e-9)
                    }
                    None => None,
                }
            } else {
                None
            }
        };
        let agent = &mut self.agents[agent_idx];
        expand_state_space(&mut agent.policy, &mut agent.space, source.clone(), values, t)?;
        if let Some(pending) = agent.pending.as_mut() {
            pending.axis_values.push(prev_value_idx.unwrap_or(0));
        }
        agent.below_factor_streak = 0;
        agent.events.push(StructuralEvent {
            step: t,
            agent: id,
            source: source.clone(),
            kind: StructuralEventKind::Expanded,
        });
        self.graph.add_edge(id, source.agent);
        Ok(())
    }

    /// Integrated edges grouped per (from, to) with the component names,
    /// for the cooperation-network output.
    pub fn network_edges(&self) -> Vec<(String, String, String)> {
        let spaces = self.scenario.spaces();
        let mut grouped: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
        for agent in &self.agents {
            for source in agent.space.integrated_sources() {
                grouped
                    .entry((agent.id.0, source.agent.0))
                    .or_default()
                    .push(source.component);
            }
        }
        grouped
            .into_iter()
            .map(|((from, to), mut comps)| {
                comps.sort_unstable();
                let names: Vec<String> = comps
                    .iter()
                    .map(|&c| spaces[to as usize].component_name(c).to_uppercase())
                    .collect();
                (
                    self.scenario.agent_name(from as usize).to_string(),
                    self.scenario.agent_name(to as usize).to_string(),
                    names.join(","),
                )
            })
            .collect()
    }

    /// True influence pairs of the underlying layout (range-circle overlaps).
    pub fn true_overlap_pairs(&self) -> Vec<(usize, usize)> {
        self.scenario.layout.overlap_pairs()
    }

    pub fn is_camera_scenario(&self) -> bool {
        matches!(self.scenario.layout.kind, LayoutKind::Cameras { .. })
    }
}

#[cfg(test)]
mod tests;
