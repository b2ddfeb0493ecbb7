//! Tabular Q-learning over an expandable discrete state space.
//!
//! A state is a tuple of per-axis value indices. Axes can be appended at
//! runtime to integrate an influencing peer's configuration component: every
//! new state inherits the Q-row of its parent, so greedy behavior in
//! unaffected states is preserved. The expansion can be reverted by averaging
//! the child rows back into the parent.

use crate::config::ComponentRef;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("component {agent}/{component} is already a state axis")]
    DuplicateAxis { agent: u32, component: usize },
    #[error("axis arity must be at least 2, got {0}")]
    DegenerateAxis(usize),
    #[error("only the most recent expansion can be merged back")]
    NotLastExpansion,
    #[error("state space has no expansion to merge")]
    NothingToMerge,
    #[error("state index {state} out of range {states}")]
    BadState { state: usize, states: usize },
}

/// One discrete axis of the state space: its value list and, for axes that
/// were added by integration, the peer component the values came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateAxis {
    pub values: Vec<f64>,
    pub source: Option<ComponentRef>,
}

/// Record of one state-space expansion, kept for reversion and replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRecord {
    pub source: ComponentRef,
    pub arity: usize,
    pub step: u64,
}

/// Ordered list of discrete axes; the state index is the mixed-radix number
/// over per-axis value indices with the last axis fastest-varying.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpace {
    pub axes: Vec<StateAxis>,
    pub lineage: Vec<ExpansionRecord>,
    base_axes: usize,
}

impl StateSpace {
    pub fn new(own_axes: Vec<StateAxis>) -> StateSpace {
        let base_axes = own_axes.len();
        StateSpace {
            axes: own_axes,
            lineage: Vec::new(),
            base_axes,
        }
    }

    pub fn state_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn base_axis_count(&self) -> usize {
        self.base_axes
    }

    /// Flattens per-axis value indices into a state index.
    pub fn index_of(&self, axis_values: &[usize]) -> usize {
        debug_assert_eq!(axis_values.len(), self.axes.len());
        let mut idx = 0;
        for (axis, &v) in self.axes.iter().zip(axis_values) {
            debug_assert!(v < axis.values.len());
            idx = idx * axis.values.len() + v;
        }
        idx
    }

    /// Index of `value` on axis `axis`, matching with a small tolerance.
    pub fn value_index(&self, axis: usize, value: f64) -> Option<usize> {
        self.axes[axis]
            .values
            .iter()
            .position(|&v| (v - value).abs() <= 1e-9)
    }

    /// Sources of all integrated axes, in integration order.
    pub fn integrated_sources(&self) -> Vec<&ComponentRef> {
        self.lineage.iter().map(|r| &r.source).collect()
    }

    pub fn is_integrated(&self, source: &ComponentRef) -> bool {
        self.lineage.iter().any(|r| r.source.key() == source.key())
    }
}

/// Action list semantics: relative actions adjust each own component by
/// -1/0/+1 grid positions; absolute actions jump straight to any own
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionMode {
    Relative,
    Absolute,
}

/// Finite action set over an agent's own configuration grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSpace {
    pub mode: ActionMode,
    /// Cardinality of each own configuration axis.
    pub own_arities: Vec<usize>,
}

impl ActionSpace {
    pub fn new(mode: ActionMode, own_arities: Vec<usize>) -> ActionSpace {
        ActionSpace { mode, own_arities }
    }

    pub fn action_count(&self) -> usize {
        match self.mode {
            ActionMode::Relative => 3usize.pow(self.own_arities.len() as u32),
            ActionMode::Absolute => self.own_arities.iter().product(),
        }
    }

    /// Applies an action to the agent's own configuration indices.
    ///
    /// Relative moves wrap on the first axis (a pan angle is circular) and
    /// clamp on the others; absolute actions decode directly to a
    /// configuration tuple.
    pub fn apply(&self, action: usize, own: &[usize]) -> Vec<usize> {
        match self.mode {
            ActionMode::Relative => {
                let mut out = own.to_vec();
                let mut rest = action;
                for axis in (0..self.own_arities.len()).rev() {
                    let delta = (rest % 3) as isize - 1;
                    rest /= 3;
                    let len = self.own_arities[axis] as isize;
                    let cur = out[axis] as isize;
                    let next = if axis == 0 {
                        (cur + delta).rem_euclid(len)
                    } else {
                        (cur + delta).clamp(0, len - 1)
                    };
                    out[axis] = next as usize;
                }
                out
            }
            ActionMode::Absolute => {
                let mut out = vec![0usize; self.own_arities.len()];
                let mut rest = action;
                for axis in (0..self.own_arities.len()).rev() {
                    out[axis] = rest % self.own_arities[axis];
                    rest /= self.own_arities[axis];
                }
                out
            }
        }
    }
}

/// Exploration schedule: epsilon(t) = max(floor, start * factor^(t / interval)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub decay_factor: f64,
    pub decay_interval_steps: u64,
    pub floor: f64,
}

impl EpsilonSchedule {
    /// The schedule used in the camera experiments: 1.0 decaying by 10%
    /// every 10k steps down to 0.05.
    pub fn standard() -> EpsilonSchedule {
        EpsilonSchedule {
            start: 1.0,
            decay_factor: 0.9,
            decay_interval_steps: 10_000,
            floor: 0.05,
        }
    }

    pub fn constant(eps: f64) -> EpsilonSchedule {
        EpsilonSchedule {
            start: eps,
            decay_factor: 1.0,
            decay_interval_steps: 1,
            floor: eps,
        }
    }

    pub fn epsilon_at(&self, step: u64) -> f64 {
        let k = (step / self.decay_interval_steps.max(1)) as i32;
        (self.start * self.decay_factor.powi(k)).max(self.floor)
    }
}

/// Tabular Q-function with learning rate alpha and discount gamma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QPolicy {
    q: Vec<f64>,
    pub n_states: usize,
    pub n_actions: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub init_value: f64,
}

impl QPolicy {
    pub fn new(n_states: usize, n_actions: usize, alpha: f64, gamma: f64) -> QPolicy {
        QPolicy {
            q: vec![0.0; n_states * n_actions],
            n_states,
            n_actions,
            alpha,
            gamma,
            init_value: 0.0,
        }
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// Greedy action with deterministic tie-breaking (lowest index wins).
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_q(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Epsilon-greedy selection; the flag reports whether the random branch
    /// was taken (even if it picked the greedy action).
    pub fn select_action<R: Rng>(
        &self,
        state: usize,
        epsilon: f64,
        rng: &mut R,
    ) -> (usize, bool) {
        if rng.gen::<f64>() < epsilon {
            (rng.gen_range(0..self.n_actions), true)
        } else {
            (self.greedy_action(state), false)
        }
    }

    /// One-cell update:
    /// Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
    pub fn update(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        let target = reward + self.gamma * self.max_q(next_state);
        let cell = &mut self.q[state * self.n_actions + action];
        *cell += self.alpha * (target - *cell);
        debug_assert!(cell.is_finite());
    }
}

/// Appends a new axis for `source` with `values.len()` states per parent;
/// every new state inherits its parent's full Q-row.
pub fn expand_state_space(
    policy: &mut QPolicy,
    space: &mut StateSpace,
    source: ComponentRef,
    values: Vec<f64>,
    step: u64,
) -> Result<(), RlError> {
    if space.is_integrated(&source) {
        return Err(RlError::DuplicateAxis {
            agent: source.agent.0,
            component: source.component,
        });
    }
    let k = values.len();
    if k < 2 {
        return Err(RlError::DegenerateAxis(k));
    }
    let old_states = policy.n_states;
    let n_actions = policy.n_actions;
    let mut q = vec![0.0; old_states * k * n_actions];
    for parent in 0..old_states {
        let row = &policy.q[parent * n_actions..(parent + 1) * n_actions];
        for child in 0..k {
            let dst = (parent * k + child) * n_actions;
            q[dst..dst + n_actions].copy_from_slice(row);
        }
    }
    policy.q = q;
    policy.n_states = old_states * k;
    space.lineage.push(ExpansionRecord {
        source: source.clone(),
        arity: k,
        step,
    });
    space.axes.push(StateAxis {
        values,
        source: Some(source),
    });
    Ok(())
}

/// Reverts the most recent expansion: the parent row becomes the arithmetic
/// mean of its child rows.
pub fn merge_state_space(
    policy: &mut QPolicy,
    space: &mut StateSpace,
    source: &ComponentRef,
) -> Result<(), RlError> {
    let last = space.lineage.last().ok_or(RlError::NothingToMerge)?;
    if last.source.key() != source.key() {
        return Err(RlError::NotLastExpansion);
    }
    let k = last.arity;
    let n_actions = policy.n_actions;
    let parents = policy.n_states / k;
    let mut q = vec![0.0; parents * n_actions];
    for parent in 0..parents {
        for action in 0..n_actions {
            let mut sum = 0.0;
            for child in 0..k {
                sum += policy.q[(parent * k + child) * n_actions + action];
            }
            q[parent * n_actions + action] = sum / k as f64;
        }
    }
    policy.q = q;
    policy.n_states = parents;
    space.lineage.pop();
    space.axes.pop();
    Ok(())
}
