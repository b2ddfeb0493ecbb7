//! Influence estimation: assembling paired samples from observation logs,
//! conditioned estimation over configuration buckets, notional (independent)
//! baselines, and ranking the results into a report.
//!
//! The detection question is always "does the configuration component of
//! some other agent carry information about my reward". Estimates are
//! compared through [`DependencyEstimate::beats`], i.e. by magnitude for
//! signed measures, and a component only becomes an integration candidate
//! when its score exceeds `factor` times the notional baseline.

use crate::config::{AgentId, ComponentRef, ConfigurationSpace};
use crate::depmeasures::{
    estimate, DependencyEstimate, EstimatorParams, Measure, MeasureError, PairedSamples,
    SampleKind, SampleSeries,
};
use crate::derive_seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfluenceError {
    #[error("empty observation window")]
    EmptyWindow,
    #[error("record {record} has no value for agent {agent} component {component}")]
    MissingComponent {
        record: usize,
        agent: AgentId,
        component: usize,
    },
    #[error("conditioning scheme must exclude the source component itself")]
    SourceInConditioning,
    #[error("exploration fraction must be in (0, 1], got {0}")]
    BadExplorationFraction(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One step of one agent's experience: every agent's configuration at that
/// step, the observing agent's own reward, and whether its action was an
/// exploration step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservationRecord {
    pub step: u64,
    pub configs: Vec<Vec<f64>>,
    pub reward: f64,
    pub explored: bool,
}

/// Sliding window holding at most `window_len` most recent records.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    records: VecDeque<ObservationRecord>,
    window_len: usize,
}

impl ObservationWindow {
    pub fn new(window_len: usize) -> ObservationWindow {
        ObservationWindow {
            records: VecDeque::new(),
            window_len,
        }
    }

    pub fn from_records(records: Vec<ObservationRecord>, window_len: usize) -> ObservationWindow {
        let mut w = ObservationWindow::new(window_len);
        for r in records {
            w.push(r);
        }
        w
    }

    pub fn push(&mut self, record: ObservationRecord) {
        if self.records.len() == self.window_len {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn records(
        &self,
    ) -> impl DoubleEndedIterator<Item = &ObservationRecord> + ExactSizeIterator {
        self.records.iter()
    }

    /// The first `n` records as their own window (used for detection curves
    /// over growing sample counts).
    pub fn prefix(&self, n: usize) -> ObservationWindow {
        ObservationWindow {
            records: self.records.iter().take(n).cloned().collect(),
            window_len: self.window_len,
        }
    }

    pub fn exploration_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.explored).count() as f64 / self.records.len() as f64
    }
}

/// Which other components to condition on, and how to bucket them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningScheme {
    pub conditioned_on: Vec<ComponentRef>,
    pub parts_per_continuous_component: usize,
    pub min_bucket_samples: usize,
}

impl ConditioningScheme {
    pub fn none() -> ConditioningScheme {
        ConditioningScheme {
            conditioned_on: Vec::new(),
            parts_per_continuous_component: DEFAULT_PARTS,
            min_bucket_samples: DEFAULT_MIN_BUCKET_SAMPLES,
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.conditioned_on
            .iter()
            .map(|c| c.descriptor.bucket_count(self.parts_per_continuous_component))
            .product()
    }
}

pub const DEFAULT_PARTS: usize = 2;
pub const DEFAULT_MIN_BUCKET_SAMPLES: usize = 5;
pub const DEFAULT_FACTOR: f64 = 1.5;
pub const DEFAULT_EXPLORATION_THRESHOLD: f64 = 0.66;

/// How build_report derives the per-source conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditioningMode {
    /// No conditioning: plain estimates over the window.
    Off,
    /// Condition on the target agent's own components.
    Own,
    /// Condition on the target's own components plus the source agent's
    /// other components.
    OwnAndSourcePeers,
}

/// Extracts reward/source-component paired samples from a window.
/// Pairing is positional: same record, same time step.
pub fn assemble_pairs(
    window: &ObservationWindow,
    source: &ComponentRef,
    reward_kind: SampleKind,
) -> Result<PairedSamples, InfluenceError> {
    let y = extract_component(window, source)?;
    let x: Vec<f64> = window.records().map(|r| r.reward).collect();
    let y_kind = if source.descriptor.is_discrete() {
        SampleKind::DiscreteNumeric
    } else {
        SampleKind::Continuous
    };
    Ok(PairedSamples::new(
        SampleSeries {
            values: x,
            kind: reward_kind,
        },
        SampleSeries {
            values: y,
            kind: y_kind,
        },
    )?)
}

fn extract_component(
    window: &ObservationWindow,
    comp: &ComponentRef,
) -> Result<Vec<f64>, InfluenceError> {
    if window.is_empty() {
        return Err(InfluenceError::EmptyWindow);
    }
    window
        .records()
        .enumerate()
        .map(|(i, r)| {
            r.configs
                .get(comp.agent.index())
                .and_then(|c| c.get(comp.component))
                .copied()
                .ok_or(InfluenceError::MissingComponent {
                    record: i,
                    agent: comp.agent,
                    component: comp.component,
                })
        })
        .collect()
}

/// Conditioned estimate: partitions the window into buckets by the
/// conditioned components' values, estimates the measure per bucket with at
/// least `min_bucket_samples` records, and sums the per-bucket values
/// (absolute values for signed measures, so opposite-sign buckets do not
/// cancel). With an empty conditioning set this is exactly the plain
/// estimate on the whole window.
pub fn conditioned_estimate(
    window: &ObservationWindow,
    source: &ComponentRef,
    scheme: &ConditioningScheme,
    measure: Measure,
    params: &EstimatorParams,
    reward_kind: SampleKind,
) -> Result<DependencyEstimate, InfluenceError> {
    let y = extract_component(window, source)?;
    let y_kind = if source.descriptor.is_discrete() {
        SampleKind::DiscreteNumeric
    } else {
        SampleKind::Continuous
    };
    estimate_against_series(window, source, &y, y_kind, scheme, measure, params, reward_kind)
}

/// Replaces the real source series by a uniform resample from its
/// descriptor (an independent system with the same configuration space) and
/// runs the same conditioned estimate. Deterministic given the seed.
pub fn notional_baseline(
    window: &ObservationWindow,
    source: &ComponentRef,
    scheme: &ConditioningScheme,
    measure: Measure,
    params: &EstimatorParams,
    reward_kind: SampleKind,
    rng_seed: u64,
) -> Result<DependencyEstimate, InfluenceError> {
    if window.is_empty() {
        return Err(InfluenceError::EmptyWindow);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let y: Vec<f64> = (0..window.len())
        .map(|_| source.descriptor.sample_uniform(&mut rng))
        .collect();
    let y_kind = if source.descriptor.is_discrete() {
        SampleKind::DiscreteNumeric
    } else {
        SampleKind::Continuous
    };
    estimate_against_series(window, source, &y, y_kind, scheme, measure, params, reward_kind)
}

#[allow(clippy::too_many_arguments)]
fn estimate_against_series(
    window: &ObservationWindow,
    source: &ComponentRef,
    y: &[f64],
    y_kind: SampleKind,
    scheme: &ConditioningScheme,
    measure: Measure,
    params: &EstimatorParams,
    reward_kind: SampleKind,
) -> Result<DependencyEstimate, InfluenceError> {
    if window.is_empty() {
        return Err(InfluenceError::EmptyWindow);
    }
    if scheme
        .conditioned_on
        .iter()
        .any(|c| c.key() == source.key())
    {
        return Err(InfluenceError::SourceInConditioning);
    }
    // The discrete mutual information is simply not applicable to
    // continuous series; report it as undefined rather than failing the
    // whole report.
    if measure == Measure::DiscreteMi && (!reward_kind.is_discrete() || !y_kind.is_discrete()) {
        return Ok(DependencyEstimate::undefined(measure, window.len()));
    }

    let rewards: Vec<f64> = window.records().map(|r| r.reward).collect();
    let pair_of = |idx: &[usize]| -> Result<PairedSamples, MeasureError> {
        PairedSamples::new(
            SampleSeries {
                values: idx.iter().map(|&i| rewards[i]).collect(),
                kind: reward_kind,
            },
            SampleSeries {
                values: idx.iter().map(|&i| y[i]).collect(),
                kind: y_kind,
            },
        )
    };

    if scheme.conditioned_on.is_empty() {
        let all: Vec<usize> = (0..window.len()).collect();
        let est = match estimate(measure, &pair_of(&all)?, params) {
            Ok(e) => e,
            Err(MeasureError::TooFewSamples { .. }) => {
                DependencyEstimate::undefined(measure, window.len())
            }
            Err(e) => return Err(e.into()),
        };
        return Ok(est);
    }

    let mut buckets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, r) in window.records().enumerate() {
        let mut key = Vec::with_capacity(scheme.conditioned_on.len());
        for c in &scheme.conditioned_on {
            let value = r
                .configs
                .get(c.agent.index())
                .and_then(|cfg| cfg.get(c.component))
                .copied()
                .ok_or(InfluenceError::MissingComponent {
                    record: i,
                    agent: c.agent,
                    component: c.component,
                })?;
            key.push(
                c.descriptor
                    .bucket_of(value, scheme.parts_per_continuous_component),
            );
        }
        buckets.entry(key).or_default().push(i);
    }

    let mut sum = 0.0;
    let mut samples = 0usize;
    let mut any = false;
    for idx in buckets.values() {
        if idx.len() < scheme.min_bucket_samples.max(2) {
            continue;
        }
        let est = match estimate(measure, &pair_of(idx)?, params) {
            Ok(e) => e,
            Err(MeasureError::TooFewSamples { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if !est.defined {
            continue;
        }
        sum += if measure.is_signed() {
            est.value.abs()
        } else {
            est.value
        };
        samples += idx.len();
        any = true;
    }
    if !any {
        return Ok(DependencyEstimate::undefined(measure, 0));
    }
    Ok(DependencyEstimate {
        measure,
        value: sum,
        raw_value: sum,
        sample_count: samples,
        defined: true,
    })
}

/// Ensures at least `min_random_fraction` of the window's records are
/// exploration steps by removing uniformly chosen greedy records; a window
/// already above the threshold is returned unchanged.
pub fn filter_exploration(
    window: &ObservationWindow,
    min_random_fraction: f64,
    rng_seed: u64,
) -> Result<ObservationWindow, InfluenceError> {
    if !(min_random_fraction > 0.0 && min_random_fraction <= 1.0) {
        return Err(InfluenceError::BadExplorationFraction(min_random_fraction));
    }
    if window.exploration_fraction() >= min_random_fraction {
        return Ok(window.clone());
    }
    let explored_count = window.records().filter(|r| r.explored).count();
    let keep_greedy =
        ((explored_count as f64) * (1.0 - min_random_fraction) / min_random_fraction).floor()
            as usize;
    let greedy_indices: Vec<usize> = window
        .records()
        .enumerate()
        .filter(|(_, r)| !r.explored)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut chosen = greedy_indices;
    chosen.shuffle(&mut rng);
    chosen.truncate(keep_greedy);
    let keep: std::collections::BTreeSet<usize> = chosen.into_iter().collect();
    let records: Vec<ObservationRecord> = window
        .records()
        .enumerate()
        .filter(|(i, r)| r.explored || keep.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    Ok(ObservationWindow::from_records(records, window.window_len()))
}

/// One (source component, measure) influence measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceScore {
    pub target: AgentId,
    pub source: ComponentRef,
    pub measure: Measure,
    pub real: DependencyEstimate,
    pub notional: DependencyEstimate,
    pub p_value: Option<f64>,
}

/// All scores for one detection round, the induced ranking, and the
/// integration decision (highest ranked candidate beating the factor rule).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceReport {
    pub target: AgentId,
    pub scores: Vec<InfluenceScore>,
    pub ranking: Vec<ComponentRef>,
    /// Sources whose real decision score beat factor * notional, in ranking
    /// order.
    pub candidates: Vec<ComponentRef>,
    pub decision: Option<ComponentRef>,
}

/// Settings for building a report.
#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub measures: Vec<Measure>,
    /// Measure driving the ranking/decision; `None` picks the discrete MI
    /// for discrete sources and the distance correlation for continuous.
    pub decision_measure: Option<Measure>,
    pub conditioning: ConditioningMode,
    pub parts_per_continuous_component: usize,
    pub min_bucket_samples: usize,
    pub factor: f64,
    pub params: EstimatorParams,
    /// Permutations for p-values; 0 skips the permutation test.
    pub p_value_permutations: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            measures: Measure::ALL.to_vec(),
            decision_measure: None,
            conditioning: ConditioningMode::OwnAndSourcePeers,
            parts_per_continuous_component: DEFAULT_PARTS,
            min_bucket_samples: DEFAULT_MIN_BUCKET_SAMPLES,
            factor: DEFAULT_FACTOR,
            params: EstimatorParams::default(),
            p_value_permutations: 0,
        }
    }
}

impl ReportConfig {
    pub fn decision_measure_for(&self, source: &ComponentRef, reward_kind: SampleKind) -> Measure {
        self.decision_measure.unwrap_or({
            if source.descriptor.is_discrete() && reward_kind.is_discrete() {
                Measure::DiscreteMi
            } else {
                Measure::DistanceCorrelation
            }
        })
    }

    /// Conditioning set for one source under the configured mode.
    pub fn scheme_for(
        &self,
        target: AgentId,
        spaces: &[ConfigurationSpace],
        source: &ComponentRef,
    ) -> ConditioningScheme {
        let mut conditioned_on = Vec::new();
        if matches!(
            self.conditioning,
            ConditioningMode::Own | ConditioningMode::OwnAndSourcePeers
        ) {
            let own = &spaces[target.index()];
            for (i, d) in own.components.iter().enumerate() {
                conditioned_on.push(ComponentRef::new(target, i, d.clone()));
            }
        }
        if self.conditioning == ConditioningMode::OwnAndSourcePeers && source.agent != target {
            let peer = &spaces[source.agent.index()];
            for (i, d) in peer.components.iter().enumerate() {
                if i != source.component {
                    conditioned_on.push(ComponentRef::new(source.agent, i, d.clone()));
                }
            }
        }
        ConditioningScheme {
            conditioned_on,
            parts_per_continuous_component: self.parts_per_continuous_component,
            min_bucket_samples: self.min_bucket_samples,
        }
    }
}

/// Builds the full influence report for `target` over the given candidate
/// source components. For each source and measure the real and notional
/// estimates are computed under the same conditioning; a source becomes a
/// candidate iff its real decision-measure score strictly exceeds
/// `factor * notional`. The ranking orders sources by real decision score,
/// ties broken by (agent, component); the decision is the highest-ranked
/// candidate.
pub fn build_report(
    window: &ObservationWindow,
    spaces: &[ConfigurationSpace],
    target: AgentId,
    sources: &[ComponentRef],
    cfg: &ReportConfig,
    reward_kind: SampleKind,
    rng_seed: u64,
) -> Result<InfluenceReport, InfluenceError> {
    let mut scores = Vec::new();
    let mut decision_scores: Vec<(ComponentRef, Option<f64>, bool)> = Vec::new();

    for source in sources {
        let scheme = cfg.scheme_for(target, spaces, source);
        let decision_measure = cfg.decision_measure_for(source, reward_kind);
        let mut real_decision: Option<DependencyEstimate> = None;
        let mut notional_decision: Option<DependencyEstimate> = None;
        for &measure in &cfg.measures {
            let notional_seed = derive_seed(
                rng_seed,
                measure.name(),
                (u64::from(source.agent.0) << 16) ^ source.component as u64,
            );
            let real =
                conditioned_estimate(window, source, &scheme, measure, &cfg.params, reward_kind)?;
            let notional = notional_baseline(
                window,
                source,
                &scheme,
                measure,
                &cfg.params,
                reward_kind,
                notional_seed,
            )?;
            let p_value = if cfg.p_value_permutations > 0 {
                Some(conditioned_permutation_p_value(
                    window,
                    source,
                    &scheme,
                    measure,
                    &cfg.params,
                    reward_kind,
                    cfg.p_value_permutations,
                    derive_seed(rng_seed, "perm", u64::from(source.agent.0)),
                )?)
            } else {
                None
            };
            if measure == decision_measure {
                real_decision = Some(real);
                notional_decision = Some(notional);
            }
            scores.push(InfluenceScore {
                target,
                source: source.clone(),
                measure,
                real,
                notional,
                p_value,
            });
        }
        // If the decision measure was not among the configured measures,
        // compute it on the side.
        let (real, notional) = match (real_decision, notional_decision) {
            (Some(r), Some(n)) => (r, n),
            _ => {
                let scheme_seed = derive_seed(
                    rng_seed,
                    decision_measure.name(),
                    (u64::from(source.agent.0) << 16) ^ source.component as u64,
                );
                (
                    conditioned_estimate(
                        window,
                        source,
                        &scheme,
                        decision_measure,
                        &cfg.params,
                        reward_kind,
                    )?,
                    notional_baseline(
                        window,
                        source,
                        &scheme,
                        decision_measure,
                        &cfg.params,
                        reward_kind,
                        scheme_seed,
                    )?,
                )
            }
        };
        let real_rank = real.ranking_value();
        let candidate = match real_rank {
            Some(r) => r > cfg.factor * notional.ranking_value().unwrap_or(0.0),
            None => false,
        };
        decision_scores.push((source.clone(), real_rank, candidate));
    }

    decision_scores.sort_by(|a, b| {
        let ra = a.1.unwrap_or(f64::NEG_INFINITY);
        let rb = b.1.unwrap_or(f64::NEG_INFINITY);
        rb.total_cmp(&ra).then_with(|| a.0.key().cmp(&b.0.key()))
    });
    let ranking: Vec<ComponentRef> = decision_scores.iter().map(|(c, _, _)| c.clone()).collect();
    let candidates: Vec<ComponentRef> = decision_scores
        .iter()
        .filter(|(_, _, candidate)| *candidate)
        .map(|(c, _, _)| c.clone())
        .collect();
    let decision = candidates.first().cloned();

    Ok(InfluenceReport {
        target,
        scores,
        ranking,
        candidates,
        decision,
    })
}

#[allow(clippy::too_many_arguments)]
fn conditioned_permutation_p_value(
    window: &ObservationWindow,
    source: &ComponentRef,
    scheme: &ConditioningScheme,
    measure: Measure,
    params: &EstimatorParams,
    reward_kind: SampleKind,
    n_perm: usize,
    seed: u64,
) -> Result<f64, InfluenceError> {
    let observed =
        conditioned_estimate(window, source, scheme, measure, params, reward_kind)?;
    if !observed.defined {
        return Ok(1.0);
    }
    let obs = observed.value.abs();
    let y_kind = if source.descriptor.is_discrete() {
        SampleKind::DiscreteNumeric
    } else {
        SampleKind::Continuous
    };
    let mut y = extract_component(window, source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        y.shuffle(&mut rng);
        let est = estimate_against_series(
            window,
            source,
            &y,
            y_kind,
            scheme,
            measure,
            params,
            reward_kind,
        )?;
        if est.defined && est.value.abs() >= obs {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (1 + n_perm) as f64)
}

/// CSV header for influence report rows.
pub const REPORT_CSV_HEADER: &str =
    "step,target_agent,source_agent,component,measure,value,notional,p_value,decision_flag";

impl InfluenceReport {
    /// Serializes the report, one row per (source, measure).
    /// `names[i]` is the display name of agent i; component names come from
    /// the agent's configuration space.
    pub fn csv_rows(&self, step: u64, spaces: &[ConfigurationSpace], names: &[String]) -> Vec<String> {
        self.scores
            .iter()
            .map(|s| {
                let decision_flag = self
                    .decision
                    .as_ref()
                    .is_some_and(|d| d.key() == s.source.key());
                format!(
                    "{step},{target},{source},{component},{measure},{value},{notional},{p},{flag}",
                    target = names[self.target.index()],
                    source = names[s.source.agent.index()],
                    component = spaces[s.source.agent.index()].component_name(s.source.component),
                    measure = s.measure,
                    value = s.real.value,
                    notional = s.notional.value,
                    p = s
                        .p_value
                        .map(|p| p.to_string())
                        .unwrap_or_default(),
                    flag = decision_flag as u8,
                )
            })
            .collect()
    }
}

/// Uniform random joint configuration for every agent, used by the
/// random-configuration experiments and tests.
pub fn random_joint_config<R: Rng>(spaces: &[ConfigurationSpace], rng: &mut R) -> Vec<Vec<f64>> {
    spaces.iter().map(|s| s.sample_uniform(rng)).collect()
}
