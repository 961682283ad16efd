use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use docrl::harness::{self, AlgoChoice, RunConfig};
use docrl::sim::scenario::ScenarioKind;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "docrl", version, about = "Train and evaluate double-critic recurrent navigation agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write checkpoints plus a JSONL log.
    Train(RunArgs),
    /// Evaluate a checkpoint (or the bba baseline) over repeated trials.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint directory containing agent.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Turn a trajectory CSV into polylines and per-medium totals.
    Replay {
        trajectory: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
        /// Step length (s).
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Finite-difference check of all four training losses.
    GradCheck {
        #[arg(long, default_value_t = 32)]
        hidden: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,8")]
        seq_len: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        coords: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// docrl-d, docrl-s or bba.
    #[arg(long)]
    algo: Option<AlgoChoice>,
    /// a2w, w2a, a2w-2 or w2a-2.
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    no_risers: bool,
    #[arg(long)]
    trials: Option<u32>,
    /// Training episodes.
    #[arg(long)]
    episodes: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = self.algo {
            cfg.algorithm = a;
        }
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if self.no_risers {
            cfg.risers = false;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(e) = self.episodes {
            cfg.hyperparams.max_eps = e;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let s = harness::cmd_train(&cfg)?;
            println!(
                "trained {} episodes ({} steps, {} goals reached); log {}; checkpoint {}",
                s.episodes,
                s.total_steps,
                s.goals_reached,
                s.log_path.display(),
                s.final_checkpoint.display()
            );
        }
        Command::Eval { run, checkpoint } => {
            let cfg = run.resolve()?;
            let r = harness::cmd_eval(&cfg, checkpoint.as_deref())?;
            let m = &r.metrics;
            println!(
                "{} {}: {}/{} successes, t_air {} ± {} s, t_water {} ± {} s (written to {})",
                r.algo,
                r.scenario,
                m.successes,
                m.trials,
                fmt_opt(m.t_air_mean),
                fmt_opt(m.t_air_std),
                fmt_opt(m.t_water_mean),
                fmt_opt(m.t_water_std),
                cfg.out.display()
            );
        }
        Command::Replay { trajectory, out, dt } => {
            let s = harness::cmd_replay(&trajectory, &out, dt)?;
            println!(
                "{} rows: {:.2} s in air, {:.2} s in water, {} medium change(s)",
                s.rows,
                s.t_air,
                s.t_water,
                s.medium_changes.len()
            );
        }
        Command::GradCheck {
            hidden,
            seq_len,
            coords,
            seed,
        } => {
            let rows = harness::run_grad_checks(hidden, &seq_len, coords, seed);
            let mut worst = 0.0f64;
            for r in &rows {
                println!(
                    "{:<16} seq_len {:>2}  coords {:>5}  max rel error {:.3e}{}",
                    r.loss,
                    r.seq_len,
                    r.coords,
                    r.max_rel_error,
                    r.worst
                        .as_ref()
                        .map(|(name, i)| format!("  (worst {name}[{i}])"))
                        .unwrap_or_default()
                );
                worst = worst.max(r.max_rel_error);
            }
            if worst > 1e-4 {
                bail!("gradient check failed: max relative error {worst:.3e} > 1e-4");
            }
        }
    }
    Ok(())
}
