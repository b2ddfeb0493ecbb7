//! Command-line interface: seeded simulation traces, detection and reward
//! experiments, layout dumps and CSV summaries.

use super::experiments::{build_system, resolve_layout};
use super::spec::{ExperimentSpec, RunMode};
use super::{
    detection_csv, events_csv, network_csv, reward_csv, run_detection_experiment,
    run_reward_experiment, HarnessError,
};
use crate::env::{canonical_layout, Scenario, CANONICAL_NAMES};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "influence-rl",
    about = "Mutual-influence detection and influence-aware Q-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded simulation and write a JSON-lines trace.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a detection experiment and write detection.csv.
    Detect {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a reward experiment and write reward.csv plus event/network files.
    Learn {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the canonical scenario layout files.
    Layout {
        /// Dump layouts to the output directory.
        #[arg(long)]
        dump: bool,
        /// Restrict to one scenario.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize the CSV outputs in a directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point used by the binary; returns the process exit code
/// (0 success, 2 spec/usage error, 1 runtime error).
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(HarnessError::Spec(message)) => {
            eprintln!("error: {message}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_spec(
    path: &Path,
    seed: Option<u64>,
    runs: Option<usize>,
    steps: Option<u64>,
) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::load(path)?;
    if let Some(seed) = seed {
        spec.seed_base = seed;
    }
    if let Some(runs) = runs {
        spec.n_runs = runs;
    }
    if let Some(steps) = steps {
        spec.n_steps = steps;
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate {
            spec,
            seed,
            steps,
            out,
        } => {
            let spec = load_spec(&spec, seed, None, steps)?;
            simulate(&spec, &out)
        }
        Command::Detect {
            spec,
            seed,
            runs,
            steps,
            out,
        } => {
            let spec = load_spec(&spec, seed, runs, steps)?;
            let curve = run_detection_experiment(&spec)?;
            write_file(&out.join("detection.csv"), &detection_csv(&curve))
        }
        Command::Learn {
            spec,
            seed,
            runs,
            steps,
            out,
        } => {
            let spec = load_spec(&spec, seed, runs, steps)?;
            let curve = run_reward_experiment(&spec)?;
            let layout = resolve_layout(&spec)?;
            let scenario = Scenario::new(layout.clone(), 0);
            let spaces = scenario.spaces().to_vec();
            write_file(&out.join("reward.csv"), &reward_csv(&curve))?;
            write_file(
                &out.join("events.csv"),
                &events_csv(&curve.events, &layout.agent_names, |agent, comp| {
                    spaces[agent as usize].component_name(comp).to_string()
                }),
            )?;
            for (run, network) in curve.networks.iter().enumerate() {
                write_file(
                    &out.join(format!("network_run{run}.csv")),
                    &network_csv(network),
                )?;
            }
            Ok(())
        }
        Command::Layout {
            dump,
            scenario,
            out,
        } => {
            if !dump {
                return Err(HarnessError::Spec(
                    "layout currently only supports --dump".to_string(),
                ));
            }
            let names: Vec<&str> = match &scenario {
                Some(name) => vec![name.as_str()],
                None => CANONICAL_NAMES.to_vec(),
            };
            for name in names {
                let layout =
                    canonical_layout(name).map_err(|e| HarnessError::Spec(e.to_string()))?;
                write_file(&out.join(format!("{name}.layout")), &layout.to_config_string())?;
            }
            Ok(())
        }
        Command::Report { out } => report(&out),
    }
}

#[derive(Serialize)]
struct TraceStep<'a> {
    step: u64,
    agent: &'a str,
    state: Vec<f64>,
    action: usize,
    reward: f64,
    epsilon: f64,
    explored: bool,
}

#[derive(Serialize)]
struct TraceEvent<'a> {
    step: u64,
    agent: &'a str,
    event: &'static str,
    source_agent: &'a str,
    component: String,
}

fn simulate(spec: &ExperimentSpec, out: &Path) -> Result<(), HarnessError> {
    if spec.mode == RunMode::Random {
        return Err(HarnessError::Spec(
            "simulate traces a q-learning run; use a q_relative or q_absolute spec".to_string(),
        ));
    }
    let layout = resolve_layout(spec)?;
    let mut system = build_system(spec, &layout, spec.seed_base)?;
    std::fs::create_dir_all(out)?;
    let file = std::fs::File::create(out.join("trace.jsonl"))?;
    let mut writer = std::io::BufWriter::new(file);
    let mut events_written = vec![0usize; system.agents.len()];
    for _ in 0..spec.n_steps {
        let outcome = system
            .step()
            .map_err(|e| HarnessError::Run(e.to_string()))?;
        for (i, agent) in system.agents.iter().enumerate() {
            let row = TraceStep {
                step: outcome.step,
                agent: system.scenario.agent_name(i),
                state: agent.state_values(&outcome.joint),
                action: outcome.actions[i],
                reward: outcome.rewards[i],
                epsilon: outcome.epsilon,
                explored: outcome.explored[i],
            };
            serde_json::to_writer(&mut writer, &row).map_err(std::io::Error::other)?;
            writer.write_all(b"\n")?;
            for event in &agent.events[events_written[i]..] {
                let kind = match event.kind {
                    crate::agent::StructuralEventKind::Expanded => "expand",
                    crate::agent::StructuralEventKind::Merged => "merge",
                    crate::agent::StructuralEventKind::RefusedCycle => "refused_cycle",
                };
                let row = TraceEvent {
                    step: event.step,
                    agent: system.scenario.agent_name(i),
                    event: kind,
                    source_agent: system.scenario.agent_name(event.source.agent.index()),
                    component: system.scenario.spaces()[event.source.agent.index()]
                        .component_name(event.source.component)
                        .to_string(),
                };
                serde_json::to_writer(&mut writer, &row).map_err(std::io::Error::other)?;
                writer.write_all(b"\n")?;
            }
            events_written[i] = agent.events.len();
        }
    }
    writer.flush()?;
    Ok(())
}

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)
        .map_err(|e| HarnessError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn report(dir: &Path) -> Result<(), HarnessError> {
    let detection = dir.join("detection.csv");
    if detection.exists() {
        let text = std::fs::read_to_string(&detection)?;
        println!("detection rates at the largest sample count:");
        let mut last: std::collections::BTreeMap<String, (u64, String)> = Default::default();
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 4 {
                let samples: u64 = fields[0].parse().unwrap_or(0);
                let entry = last
                    .entry(fields[1].to_string())
                    .or_insert((samples, fields[2].to_string()));
                if samples >= entry.0 {
                    *entry = (samples, fields[2].to_string());
                }
            }
        }
        for (measure, (samples, rate)) in last {
            println!("  {measure:<14} {rate} (at {samples} samples)");
        }
    }
    let reward = dir.join("reward.csv");
    if reward.exists() {
        let text = std::fs::read_to_string(&reward)?;
        if let Some(line) = text.lines().last() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 4 {
                println!(
                    "final smoothed reward: {} (step {}, {} runs, window {})",
                    fields[1], fields[0], fields[2], fields[3]
                );
            }
        }
    }
    if !detection.exists() && !reward.exists() {
        return Err(HarnessError::Spec(format!(
            "no detection.csv or reward.csv under {}",
            dir.display()
        )));
    }
    Ok(())
}
