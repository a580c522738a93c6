//! The five subcommands. Each writes one CSV table to `out` and a short
//! summary to standard error.

use std::io::Write;
use std::time::Instant;

use lrpath::analysis::{hermite_rank_study, ConvergenceTable, HermiteStudyConfig, SweepEntry};
use lrpath::monte_carlo::mc_estimate;
use lrpath::problems::{cauchy_exact, gaussian_density, OscillatorRecurrence};
use lrpath::solver::{Discretization, SolveReport};
use lrpath::Error;

use crate::config::{ProblemTag, RunConfig};
use crate::error::CliError;

type Exact = Box<dyn Fn(f64) -> f64>;

fn discretization(cfg: &RunConfig, n: usize) -> Result<Discretization, CliError> {
    Discretization::new(cfg.problem_spec()?, cfg.grid.half_width, cfg.grid.half_count, n).map_err(CliError::from)
}

/// Closed-form `u(x, T)` where one exists; for the oscillator this is the
/// exact solution of the discretized problem.
fn exact_solution(cfg: &RunConfig, d: &Discretization) -> Result<Option<Exact>, CliError> {
    let (sigma, t, beta) = (cfg.sigma(), cfg.t_final(), cfg.problem.beta);
    Ok(match cfg.problem.tag {
        ProblemTag::Cauchy => Some(Box::new(move |x| cauchy_exact(x, t))),
        ProblemTag::Harmonic => {
            let rec = OscillatorRecurrence::new(&d.time, sigma, beta)?;
            Some(Box::new(move |x| rec.solution(x)))
        }
        ProblemTag::FreeGaussian => {
            let b = beta / (1.0 + 4.0 * beta * sigma * t);
            Some(Box::new(move |x| gaussian_density(b, x)))
        }
        ProblemTag::Impurity | ProblemTag::Custom => None,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn seconds(cfg: &RunConfig, s: f64) -> String {
    if cfg.output.timings {
        format!("{s:.3}")
    } else {
        String::new()
    }
}

fn solve_one(cfg: &RunConfig, n: usize) -> Result<(Discretization, SolveReport), CliError> {
    let d = discretization(cfg, n)?;
    let r = d.solve(&cfg.solver_config())?;
    Ok((d, r))
}

/// `x,u[,u_exact]` on the base mesh.
pub fn run_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    let (d, r) = solve_one(cfg, cfg.grid.n)?;
    let exact = exact_solution(cfg, &d)?;
    let mut w = csv::Writer::from_writer(out);
    if exact.is_some() {
        w.write_record(["x", "u", "u_exact"])?;
    } else {
        w.write_record(["x", "u"])?;
    }
    for (x, u) in r.mesh.iter().zip(&r.u_final) {
        let mut rec = vec![format!("{x:e}"), format!("{u:e}")];
        if let Some(f) = &exact {
            rec.push(format!("{:e}", f(*x)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    eprintln!(
        "solved {} with n = {}, M = {}: max rank {}, {:.2}s",
        cfg.problem_spec()?.name,
        cfg.grid.n,
        2 * cfg.grid.half_count,
        r.max_rank(),
        r.wall_seconds
    );
    Ok(())
}

/// `T,n,dt,p2,eps2,p4,eps4,rank,wall_seconds` for a doubling sweep.
pub fn run_convergence(cfg: &RunConfig, out: &mut dyn Write) -> Result<ConvergenceTable, CliError> {
    cfg.validate()?;
    let sweep = cfg.doubling_sweep()?;
    let mut entries = Vec::with_capacity(sweep.len());
    for &n in &sweep {
        let (_, r) = solve_one(cfg, n)?;
        eprintln!("n = {n}: rank {}, {:.2}s", r.max_rank(), r.wall_seconds);
        entries.push(SweepEntry {
            n,
            rank: r.max_rank(),
            u: r.u_final,
            wall_seconds: r.wall_seconds,
        });
    }
    let table = ConvergenceTable::from_sweep(cfg.t_final(), &entries)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "n", "dt", "p2", "eps2", "p4", "eps4", "rank", "wall_seconds"])?;
    for row in &table.rows {
        w.write_record([
            format!("{}", table.t_final),
            row.n.to_string(),
            format!("{:e}", row.dt),
            opt(row.p2),
            opt(row.eps2),
            opt(row.p4),
            opt(row.eps4),
            row.rank.to_string(),
            seconds(cfg, row.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(table)
}

/// Monte Carlo at `x0` against the low-rank solution, per step count.
pub fn run_compare_mc(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    let mc = cfg.mc_config()?;
    let sweep = if cfg.grid.sweep.is_empty() {
        vec![cfg.grid.n]
    } else {
        cfg.grid.sweep.clone()
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "dt", "u_mc", "u_lr", "u_exact", "eps_mc", "eps_lr", "mc_seconds", "lr_seconds"])?;
    for n in sweep {
        let d = discretization(cfg, n)?;
        let t0 = Instant::now();
        let est = mc_estimate(&d.problem, &d.time, &mc)?;
        let mc_seconds = t0.elapsed().as_secs_f64();
        let r = d.solve(&cfg.solver_config())?;
        let u_lr = r.value_at(mc.x0).ok_or_else(|| {
            CliError::Config(format!(
                "mc.x0 = {} lies outside the spatial domain [−{a}, {a})",
                mc.x0,
                a = cfg.grid.half_width
            ))
        })?;
        let exact = exact_solution(cfg, &d)?.map(|f| f(mc.x0));
        let rel = |u: f64| exact.map(|e| (u - e).abs() / e.abs());
        eprintln!("n = {n}: u_mc = {:e} ± {:e} ({} paths)", est.mean, est.stderr, est.samples);
        w.write_record([
            n.to_string(),
            format!("{:e}", d.time.dt()),
            format!("{:e}", est.mean),
            format!("{u_lr:e}"),
            opt(exact),
            opt(rel(est.mean)),
            opt(rel(u_lr)),
            seconds(cfg, mc_seconds),
            seconds(cfg, r.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Low-rank and dense wall times per step count. A dense run that would
/// exceed the memory budget is reported as `skipped`.
pub fn run_scaling(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    let solver = cfg.solver_config();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n", "dt", "rank", "lowrank_seconds"];
    if cfg.scaling.dense {
        header.push("dense_seconds");
    }
    w.write_record(&header)?;
    for &n in &cfg.scaling.sweep {
        let d = discretization(cfg, n)?;
        let mut rec = vec![n.to_string(), format!("{:e}", d.time.dt())];
        match d.solve(&solver) {
            Ok(r) => {
                rec.push(r.max_rank().to_string());
                rec.push(seconds(cfg, r.wall_seconds));
            }
            Err(Error::Capacity(m)) => {
                eprintln!("n = {n}: low-rank skipped ({m})");
                rec.extend(["".into(), "skipped".into()]);
            }
            Err(e) => return Err(e.into()),
        }
        if cfg.scaling.dense {
            let t0 = Instant::now();
            match d.solve_dense(solver.memory_budget) {
                Ok(_) => rec.push(seconds(cfg, t0.elapsed().as_secs_f64())),
                Err(Error::Capacity(m)) => {
                    eprintln!("n = {n}: dense skipped ({m})");
                    rec.push("skipped".into());
                }
                Err(e) => return Err(e.into()),
            }
        }
        w.write_record(&rec)?;
        w.flush()?;
    }
    Ok(())
}

/// `l,eps_rank,sigma1,ratio2,…` for each Hermite function.
pub fn run_hermite_study(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let h = &cfg.hermite;
    let study = HermiteStudyConfig {
        l_max: h.l_max,
        nrows: h.nrows,
        ncols: h.ncols,
        half_width: h.half_width,
        eps: h.eps,
        keep: h.keep,
        exec: cfg.solver.exec.into(),
    };
    let rows = hermite_rank_study(&study)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["l".to_string(), "eps_rank".into(), "sigma1".into()];
    header.extend((2..=h.keep).map(|i| format!("ratio{i}")));
    w.write_record(&header)?;
    for row in &rows {
        let mut rec = vec![row.l.to_string(), row.eps_rank.to_string()];
        rec.push(opt(row.singular_values.first().copied()));
        rec.extend((1..h.keep).map(|i| opt(row.ratio(i))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let worst = rows.iter().map(|r| r.eps_rank).max().unwrap_or(0);
    eprintln!("{} Hermite functions, largest ε-rank {worst} at ε = {:e}", rows.len(), h.eps);
    Ok(())
}
