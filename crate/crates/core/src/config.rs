//! Configuration spaces: the adjustable components of an agent and references
//! to individual components of other agents.

use rand::Rng;
use serde::Serialize;

/// Index of an agent within a scenario. Agents are displayed by name; the
/// numeric id is the canonical identity used for deterministic ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One axis of a configuration space: either a finite value set or a real
/// interval with declared bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ComponentDescriptor {
    Discrete { values: Vec<f64> },
    Continuous { min: f64, max: f64 },
}

impl ComponentDescriptor {
    pub fn discrete(values: impl Into<Vec<f64>>) -> Self {
        ComponentDescriptor::Discrete {
            values: values.into(),
        }
    }

    pub fn continuous(min: f64, max: f64) -> Self {
        ComponentDescriptor::Continuous { min, max }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ComponentDescriptor::Discrete { .. })
    }

    /// Number of distinct values for a discrete component.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            ComponentDescriptor::Discrete { values } => Some(values.len()),
            ComponentDescriptor::Continuous { .. } => None,
        }
    }

    /// Draws one realization uniformly from the component's range.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ComponentDescriptor::Discrete { values } => values[rng.gen_range(0..values.len())],
            ComponentDescriptor::Continuous { min, max } => rng.gen_range(*min..*max),
        }
    }

    /// Maps a realization to a bucket index for conditioned estimation.
    ///
    /// Discrete components bucket by exact value; continuous components are
    /// split into `parts` equal-width intervals over the declared range.
    pub fn bucket_of(&self, value: f64, parts: usize) -> usize {
        match self {
            ComponentDescriptor::Discrete { values } => values
                .iter()
                .position(|&v| (v - value).abs() <= 1e-9)
                .unwrap_or(0),
            ComponentDescriptor::Continuous { min, max } => {
                let span = max - min;
                if span <= 0.0 || parts == 0 {
                    return 0;
                }
                let part = ((value - min) / span * parts as f64).floor();
                (part.max(0.0) as usize).min(parts - 1)
            }
        }
    }

    /// Bucket count contributed by this component under a conditioning scheme.
    pub fn bucket_count(&self, parts: usize) -> usize {
        match self {
            ComponentDescriptor::Discrete { values } => values.len(),
            ComponentDescriptor::Continuous { .. } => parts.max(1),
        }
    }
}

/// The full configuration space of one agent: the Cartesian product of its
/// component descriptors, with display names per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationSpace {
    pub components: Vec<ComponentDescriptor>,
    pub names: Vec<String>,
}

impl ConfigurationSpace {
    pub fn new(parts: Vec<(&str, ComponentDescriptor)>) -> Self {
        let names = parts.iter().map(|(n, _)| n.to_string()).collect();
        let components = parts.into_iter().map(|(_, c)| c).collect();
        ConfigurationSpace { components, names }
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    pub fn component_name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.sample_uniform(rng))
            .collect()
    }
}

/// Reference to one configuration component of one agent, carrying the
/// component's descriptor so estimators can bucket and resample it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRef {
    pub agent: AgentId,
    pub component: usize,
    pub descriptor: ComponentDescriptor,
}

impl ComponentRef {
    pub fn new(agent: AgentId, component: usize, descriptor: ComponentDescriptor) -> Self {
        ComponentRef {
            agent,
            component,
            descriptor,
        }
    }

    /// Identity without the descriptor, used for deterministic ordering and
    /// duplicate checks.
    pub fn key(&self) -> (u32, usize) {
        (self.agent.0, self.component)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_bucketing_is_equal_width_over_declared_range() {
        let c = ComponentDescriptor::continuous(0.0, 360.0);
        assert_eq!(c.bucket_of(0.0, 2), 0);
        assert_eq!(c.bucket_of(179.9, 2), 0);
        assert_eq!(c.bucket_of(180.0, 2), 1);
        assert_eq!(c.bucket_of(359.9, 2), 1);
        assert_eq!(c.bucket_of(360.0, 2), 1); // clamped at the top edge
    }

    #[test]
    fn discrete_bucketing_matches_exact_values() {
        let c = ComponentDescriptor::discrete(vec![120.0, 150.0, 180.0]);
        assert_eq!(c.bucket_of(150.0, 2), 1);
        assert_eq!(c.bucket_of(180.0, 7), 2);
        assert_eq!(c.bucket_count(2), 3);
    }
}
