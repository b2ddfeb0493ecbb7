//! Experiment harness: spec files, seeded experiment runners, CSV outputs
//! and the command-line interface.

mod cli;
mod experiments;
mod spec;

pub use cli::cli_main;
pub use experiments::{
    run_detection_experiment, run_reward_experiment, DetectionCurve, DetectionRow, RewardCurve,
};
pub use spec::{Adaptation, AtStartIntegration, ExperimentSpec, RunMode, SpecError};

use crate::agent::StructuralEvent;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid spec, layout, or arguments (CLI exit code 2).
    #[error("spec error: {0}")]
    Spec(String),
    /// Runtime failure while executing an experiment (CLI exit code 1).
    #[error("run error: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SpecError> for HarnessError {
    fn from(e: SpecError) -> Self {
        HarnessError::Spec(e.to_string())
    }
}

pub const DETECTION_CSV_HEADER: &str = "samples,measure,detection_rate,n_runs";
pub const REWARD_CSV_HEADER: &str = "step,mean_reward,n_runs,smoothing_window";
pub const EVENTS_CSV_HEADER: &str = "run,step,agent,kind,source_agent,component";
pub const NETWORK_CSV_HEADER: &str = "from_agent,to_agent,components";

/// Detection curve as CSV text: deterministic row order, LF endings,
/// '.' decimal separator.
pub fn detection_csv(curve: &DetectionCurve) -> String {
    let mut out = String::from(DETECTION_CSV_HEADER);
    out.push('\n');
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.samples, row.measure, row.detection_rate, row.n_runs
        ));
    }
    out
}

/// Reward curve as CSV text; the mean_reward column is the trailing-mean
/// smoothed value with the window recorded per row.
pub fn reward_csv(curve: &RewardCurve) -> String {
    let mut out = String::from(REWARD_CSV_HEADER);
    out.push('\n');
    for (step, value) in curve.smoothed().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            step, value, curve.n_runs, curve.smoothing_window
        ));
    }
    out
}

pub fn events_csv(
    events: &[(usize, StructuralEvent)],
    agent_names: &[String],
    component_names: impl Fn(u32, usize) -> String,
) -> String {
    let mut out = String::from(EVENTS_CSV_HEADER);
    out.push('\n');
    for (run, e) in events {
        let kind = match e.kind {
            crate::agent::StructuralEventKind::Expanded => "expand",
            crate::agent::StructuralEventKind::Merged => "merge",
            crate::agent::StructuralEventKind::RefusedCycle => "refused_cycle",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            run,
            e.step,
            agent_names[e.agent.index()],
            kind,
            agent_names[e.source.agent.index()],
            component_names(e.source.agent.0, e.source.component),
        ));
    }
    out
}

/// Cooperation-network edge list; the components field is quoted since it
/// joins names with commas (e.g. "PAN,TILT,ZOOM").
pub fn network_csv(edges: &[(String, String, String)]) -> String {
    let mut out = String::from(NETWORK_CSV_HEADER);
    out.push('\n');
    for (from, to, components) in edges {
        out.push_str(&format!("{from},{to},\"{components}\"\n"));
    }
    out
}
