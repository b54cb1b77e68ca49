//! Command-line runner for the simulated testbed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conet_core::northbound;
use conet_core::sim::{to_csv, to_jsonl, ScriptConfig, Sim, TopologyConfig};

#[derive(Parser)]
#[command(
    name = "conet",
    version,
    about = "Name-based networking testbed simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scripted experiment and write the traffic trace.
    Run {
        /// Topology description (JSON).
        #[arg(long)]
        topology: PathBuf,
        /// Experiment script (JSON).
        #[arg(long)]
        script: PathBuf,
        /// Where to write the per-interface trace (CSV).
        #[arg(long, value_name = "FILE")]
        trace_out: PathBuf,
        /// Also write the structured event log (JSON lines).
        #[arg(long, value_name = "FILE")]
        events_out: Option<PathBuf>,
        /// Serve the management HTTP interface while running, paced to the
        /// wall clock; keeps serving after the script ends.
        #[arg(long, value_name = "ADDR")]
        serve: Option<String>,
        /// Override the script's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a topology and script without running them.
    Validate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
}

fn load_configs(
    topology: &PathBuf,
    script: &PathBuf,
) -> Result<(TopologyConfig, ScriptConfig), String> {
    let topology_text = std::fs::read_to_string(topology)
        .map_err(|e| format!("read {}: {e}", topology.display()))?;
    let topology_cfg: TopologyConfig = serde_json::from_str(&topology_text)
        .map_err(|e| format!("parse {}: {e}", topology.display()))?;
    let script_text =
        std::fs::read_to_string(script).map_err(|e| format!("read {}: {e}", script.display()))?;
    let script_cfg: ScriptConfig = serde_json::from_str(&script_text)
        .map_err(|e| format!("parse {}: {e}", script.display()))?;
    Ok((topology_cfg, script_cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Validate { topology, script } => {
            let (topology_cfg, script_cfg) = load_configs(&topology, &script)?;
            Sim::build(topology_cfg, script_cfg).map_err(|e| e.to_string())?;
            println!("ok: topology and script are valid");
            Ok(())
        }
        Command::Run {
            topology,
            script,
            trace_out,
            events_out,
            serve,
            seed,
        } => {
            let (topology_cfg, mut script_cfg) = load_configs(&topology, &script)?;
            if let Some(seed) = seed {
                script_cfg.seed = seed;
            }
            let end_s = script_cfg.end_s;
            let mut sim = Sim::build(topology_cfg, script_cfg).map_err(|e| e.to_string())?;

            let report = match serve {
                None => sim.run(),
                Some(addr) => {
                    let (tx, rx) = std::sync::mpsc::channel();
                    let bound = northbound::start_http(&addr, tx).map_err(|e| e.to_string())?;
                    eprintln!(
                        "management interface on http://{bound} (paced to wall clock; Ctrl-C to stop)"
                    );
                    sim.run_paced(&rx)
                }
            };

            std::fs::write(&trace_out, to_csv(&report.trace))
                .map_err(|e| format!("write {}: {e}", trace_out.display()))?;
            if let Some(path) = events_out {
                std::fs::write(&path, to_jsonl(&report.log))
                    .map_err(|e| format!("write {}: {e}", path.display()))?;
            }
            eprintln!(
                "ran {end_s}s of virtual time: {} requests, {} answered ({} corrupt), {} trace rows, {} events",
                report.stats.requests_issued,
                report.stats.data_received_ok,
                report.stats.data_received_bad,
                report.trace.len(),
                report.log.len(),
            );
            Ok(())
        }
    }
}
