//! Command-line interface of the `collabsense` binary.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::figures::reproduce_figure;
use super::run::run;
use crate::error::{Error, Result};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "COLLABSENSE_THREADS";

const SCHEMAS: &str = "\
CSV schemas (numbers carry 12 significant digits):
  snapshot-*  topology,x,strategy,sigma2,n_nodes,trials,mc_mean,mc_std_err,theory
              x is Q, the radius r or Q~; mc_mean is the mean Fisher information J
  ou-avar     topology,x,strategy,sigma2,n_nodes,trials,period,mc_mean,mc_std_err,theory_avar,var0
  ou-variance period,t,var        (rows with period 0 trace the Var0 line)
  ou-trace    period,t,theta,estimate

Config files hold one `key = value` per line; `#` starts a comment.
Per-trial seeds: mix(master + (i + 1) * 0x9E3779B97F4A7C15), with mix the
SplitMix64 finalizer.

Exit status: 0 success, 2 configuration error, 1 runtime error.
Set COLLABSENSE_THREADS to fix the number of worker threads.";

#[derive(Debug, Parser)]
#[command(name = "collabsense", version, about = "Collaborative linear coherent estimation experiments", after_help = SCHEMAS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output CSV; overrides the config's `output`. Defaults to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reproduce one of fig5a, fig5b, fig6, fig7a, fig7b.
    Figure {
        name: String,
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Single-snapshot Fisher information sweep.
    Snapshot {
        /// clique, nn or rgg.
        #[arg(long, default_value = "clique")]
        topology: String,
        #[arg(long)]
        energy: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ornstein–Uhlenbeck sampling experiments.
    Ou {
        /// variance, avar or trace.
        #[arg(long, default_value = "variance")]
        mode: String,
        /// Topology for `avar`, or for deriving c when `--power` is given.
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        power: Option<String>,
        #[arg(long)]
        cp_over_eta2: Option<String>,
        /// Comma-separated sampling periods.
        #[arg(long)]
        periods: Option<String>,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        t_obs: Option<String>,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        n_points: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Flags mirroring the config keys shared by all experiments.
#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub n_nodes: Option<String>,
    /// Comma-separated clique or neighborhood sizes.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub radius: Option<String>,
    #[arg(long)]
    pub expected_neighbors: Option<String>,
    /// optimal, equal or both.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub eta2: Option<String>,
    #[arg(long)]
    pub sigma2: Option<String>,
    #[arg(long)]
    pub xi2: Option<String>,
    /// rayleigh or constant.
    #[arg(long)]
    pub gain_model: Option<String>,
    #[arg(long)]
    pub alpha_h: Option<String>,
    #[arg(long)]
    pub alpha_g: Option<String>,
    #[arg(long)]
    pub h0: Option<String>,
    #[arg(long)]
    pub g0: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl CommonArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let fields = [
            ("n_nodes", &self.n_nodes),
            ("q", &self.q),
            ("radius", &self.radius),
            ("expected_neighbors", &self.expected_neighbors),
            ("strategy", &self.strategy),
            ("eta2", &self.eta2),
            ("sigma2", &self.sigma2),
            ("xi2", &self.xi2),
            ("gain_model", &self.gain_model),
            ("alpha_h", &self.alpha_h),
            ("alpha_g", &self.alpha_g),
            ("h0", &self.h0),
            ("g0", &self.g0),
            ("trials", &self.trials),
            ("seed", &self.seed),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        }
        if let Some(p) = &self.output {
            out.push(("output", p.display().to_string()));
        }
        out
    }
}

fn push_opt(pairs: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<String>) {
    if let Some(v) = v {
        pairs.push((key, v.clone()));
    }
}

fn emit(cfg: &ExperimentConfig, output: Option<PathBuf>) -> Result<()> {
    let table = run(cfg)?;
    match output.or_else(|| cfg.output.clone()) {
        Some(path) => {
            table.write_csv(&path)?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(table.to_csv().as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let text = std::fs::read_to_string(&config).map_err(|source| Error::Io {
                path: config.clone(),
                source,
            })?;
            emit(&ExperimentConfig::parse(&text)?, output)
        }
        Command::Figure {
            name,
            scale,
            out,
            seed,
        } => {
            for path in reproduce_figure(&name, scale.parse()?, &out, seed)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Snapshot {
            topology,
            energy,
            common,
        } => {
            let mut pairs = vec![("kind", format!("snapshot-{topology}"))];
            push_opt(&mut pairs, "energy", &energy);
            pairs.extend(common.pairs());
            emit(&ExperimentConfig::from_pairs(pairs)?, None)
        }
        Command::Ou {
            mode,
            topology,
            power,
            cp_over_eta2,
            periods,
            tau,
            t_obs,
            m,
            n_points,
            common,
        } => {
            let mut pairs = vec![("kind", format!("ou-{mode}"))];
            push_opt(&mut pairs, "topology", &topology);
            push_opt(&mut pairs, "power", &power);
            push_opt(&mut pairs, "cp_over_eta2", &cp_over_eta2);
            push_opt(&mut pairs, "periods", &periods);
            push_opt(&mut pairs, "tau", &tau);
            push_opt(&mut pairs, "t_obs", &t_obs);
            push_opt(&mut pairs, "m", &m);
            push_opt(&mut pairs, "n_points", &n_points);
            pairs.extend(common.pairs());
            emit(&ExperimentConfig::from_pairs(pairs)?, None)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Parses `args`, runs the command and maps the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| execute(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
