//! Command-line driver: loads a run configuration, applies flag overrides and
//! writes result tables as CSV.

pub mod commands;
pub mod config;
pub mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

use config::{ExecMode, McSection, ProblemTag};

#[derive(Debug, Parser)]
#[command(name = "lrpath", version, about = "Low-rank path-integral solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve once and write u on the final mesh.
    Solve,
    /// Sweep doubling step counts and tabulate error estimates and orders.
    Convergence,
    /// Compare Monte Carlo at one point with the low-rank solution.
    CompareMc,
    /// Time low-rank and dense solves over a range of step counts.
    Scaling,
    /// Singular values of reshaped Hermite functions.
    HermiteStudy,
}

/// Flags mirror the configuration fields and take precedence over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[arg(long, global = true, value_enum)]
    pub problem: Option<ProblemTag>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long = "t-final", global = true, value_name = "T")]
    pub t_final: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Custom potential V(x, t).
    #[arg(long, global = true, value_name = "EXPR")]
    pub potential: Option<String>,
    /// Custom initial density f(x).
    #[arg(long, global = true, value_name = "EXPR")]
    pub initial: Option<String>,

    /// Half-width a of the final domain [−a, a).
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
    /// N, with M = 2N points per window.
    #[arg(long, global = true)]
    pub half_count: Option<usize>,
    #[arg(long, short = 'n', global = true)]
    pub steps: Option<usize>,
    /// Comma-separated step counts.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,

    #[arg(long, global = true)]
    pub eps_c: Option<f64>,
    #[arg(long, global = true)]
    pub r0: Option<usize>,
    #[arg(long, global = true)]
    pub r_max: Option<usize>,
    #[arg(long, global = true)]
    pub dense_switch_k: Option<usize>,
    #[arg(long, global = true)]
    pub rank_trigger: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub exec: Option<ExecMode>,
    #[arg(long, global = true)]
    pub memory_budget_mb: Option<usize>,

    #[arg(long, global = true)]
    pub mc_samples: Option<u64>,
    #[arg(long, global = true)]
    pub mc_seed: Option<u64>,
    #[arg(long, global = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true)]
    pub antithetic: bool,

    /// Skip the dense reference in `scaling`.
    #[arg(long, global = true)]
    pub no_dense: bool,

    #[arg(long, global = true)]
    pub l_max: Option<usize>,
    #[arg(long, global = true)]
    pub nrows: Option<usize>,
    #[arg(long, global = true)]
    pub ncols: Option<usize>,
    #[arg(long, global = true)]
    pub hermite_eps: Option<f64>,

    /// CSV output file instead of standard output.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Leave timing columns empty.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Overrides {
    /// The file (or defaults) with flags applied on top. Sweep flags go to
    /// the scaling sweep for `scaling` and to the grid sweep otherwise.
    pub fn resolve(&self, command: Command) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.problem;
        set(&mut p.tag, self.problem);
        if self.sigma.is_some() {
            p.sigma = self.sigma;
        }
        if self.t_final.is_some() {
            p.t_final = self.t_final;
        }
        set(&mut p.beta, self.beta);
        if self.potential.is_some() {
            p.potential = self.potential.clone();
        }
        if self.initial.is_some() {
            p.initial = self.initial.clone();
        }

        let g = &mut cfg.grid;
        set(&mut g.half_width, self.half_width);
        set(&mut g.half_count, self.half_count);
        set(&mut g.n, self.steps);
        if command == Command::Scaling {
            set(&mut cfg.scaling.sweep, self.sweep.clone());
        } else {
            set(&mut g.sweep, self.sweep.clone());
        }
        if self.no_dense {
            cfg.scaling.dense = false;
        }

        let s = &mut cfg.solver;
        set(&mut s.eps_c, self.eps_c);
        set(&mut s.r0, self.r0);
        set(&mut s.r_max, self.r_max);
        set(&mut s.dense_switch_k, self.dense_switch_k);
        s.rank_trigger |= self.rank_trigger;
        set(&mut s.seed, self.seed);
        set(&mut s.exec, self.exec);
        set(&mut s.memory_budget_mb, self.memory_budget_mb);

        if self.mc_samples.is_some() || self.mc_seed.is_some() || self.x0.is_some() || self.antithetic {
            let mc = cfg.mc.get_or_insert_with(McSection::default);
            set(&mut mc.samples, self.mc_samples);
            set(&mut mc.seed, self.mc_seed);
            set(&mut mc.x0, self.x0);
            mc.antithetic |= self.antithetic;
        }

        let h = &mut cfg.hermite;
        set(&mut h.l_max, self.l_max);
        set(&mut h.nrows, self.nrows);
        set(&mut h.ncols, self.ncols);
        set(&mut h.eps, self.hermite_eps);

        if self.output.is_some() {
            cfg.output.csv = self.output.clone();
        }
        if self.no_timings {
            cfg.output.timings = false;
        }
        Ok(cfg)
    }
}

/// Runs `command` with output to `out`.
pub fn execute(command: Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Solve => commands::run_solve(cfg, out),
        Command::Convergence => commands::run_convergence(cfg, out).map(|_| ()),
        Command::CompareMc => commands::run_compare_mc(cfg, out),
        Command::Scaling => commands::run_scaling(cfg, out),
        Command::HermiteStudy => commands::run_hermite_study(cfg, out),
    }
}

/// Parses, resolves and runs; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = cli.overrides.resolve(cli.command).and_then(|cfg| {
        if cli.overrides.print_config {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        match &cfg.output.csv {
            Some(path) => {
                let file = File::create(path)
                    .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                execute(cli.command, &cfg, &mut w)?;
                w.flush().map_err(CliError::from)
            }
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                execute(cli.command, &cfg, &mut lock)
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lrpath: {e}");
            e.exit_code()
        }
    }
}
