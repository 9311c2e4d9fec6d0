use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use passage_sim::config::{parse_experiment_as, ExperimentKind};
use passage_sim::presets;
use passage_sim::run::run_experiment;

/// Run an atom-cavity passage experiment and write `<out>.csv`,
/// `<out>.jsonl` and `<out>.manifest.json`.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Cli {
    /// spectrum | dark-states | landau-zener | trajectory | ensemble | master |
    /// sweep-detuning | correlate-ghz | correlate-atom-photon | photon-histogram
    kind: ExperimentKind,
    /// TOML config file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset instead of a config file.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed (overrides the config).
    #[arg(long, env = "SIMULATE_SEED")]
    seed: Option<u64>,
    /// Number of trajectories (overrides the config).
    #[arg(long)]
    traj: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "SIMULATE_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Output path prefix (defaults to `run.out` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match (&cli.config, &cli.preset) {
        (Some(path), _) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        (None, Some(name)) => {
            if presets::preset(name).is_none() {
                let names: Vec<_> = presets::names().collect();
                eprintln!("error: unknown preset `{name}` (available: {})", names.join(", "));
                return ExitCode::from(2);
            }
            format!("preset = {name:?}\n")
        }
        (None, None) => unreachable!("clap requires one of --config/--preset"),
    };
    let mut spec = match parse_experiment_as(&text, cli.kind) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        spec.base_seed = seed;
    }
    if let Some(n) = cli.traj {
        if n == 0 {
            eprintln!("error: --traj must be at least 1");
            return ExitCode::from(2);
        }
        spec.n_traj = n;
    }
    let Some(prefix) = cli.out.clone().or_else(|| spec.out.clone().map(PathBuf::from)) else {
        eprintln!("error: no output prefix (use --out or run.out)");
        return ExitCode::from(2);
    };
    spec.out = Some(prefix.display().to_string());
    match run_experiment(&spec, &prefix, cli.jobs) {
        Ok(m) => {
            for (k, v) in &m.results {
                println!("{k} = {v}");
            }
            for o in &m.outputs {
                println!("wrote {} ({} bytes)", o.path, o.bytes);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
