//! Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Run with `cargo test --release -p lrpath --test acceptance`.

use std::time::Instant;

use lrpath::analysis::{
    hermite_rank_study, relative_error, relative_error_max, ConvergenceTable, HermiteStudyConfig, SweepEntry,
};
use lrpath::convolution::{hankel_matvec_direct, BasisConvolutions, FftCorrelator, HankelSpec};
use lrpath::cross::{cross_approximate, zeta, zeta_rank, CrossConfig};
use lrpath::monte_carlo::{mc_estimate, McConfig};
use lrpath::problems::{cauchy_exact, oscillator_exact, ProblemSpec};
use lrpath::mesh::{QuadratureRule, TimeGrid};
use lrpath::solver::{Discretization, IterationState, SolveReport, SolverConfig};
use lrpath::Exec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn run(id: u32, name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    let o = Outcome {
        id,
        name,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    println!(
        "{} AC{:<2} {:<28} {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail,
        o.seconds
    );
    o
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn solve(d: &Discretization, cfg: &SolverConfig) -> Result<SolveReport, String> {
    d.solve(cfg).map_err(err)
}

fn cauchy(n: usize, half_count: usize) -> Result<Discretization, String> {
    let p = ProblemSpec::cauchy(0.5, 1.0).map_err(err)?;
    Discretization::new(p, 2.0, half_count, n).map_err(err)
}

fn sweep(make: impl Fn(usize) -> Result<Discretization, String>, ns: &[usize], cfg: &SolverConfig)
    -> Result<(Vec<SweepEntry>, Vec<SolveReport>), String> {
    let mut entries = Vec::new();
    let mut reports = Vec::new();
    for &n in ns {
        let r = solve(&make(n)?, cfg)?;
        entries.push(SweepEntry {
            n,
            u: r.u_final.clone(),
            rank: r.max_rank(),
            wall_seconds: r.wall_seconds,
        });
        reports.push(r);
    }
    Ok((entries, reports))
}

fn ac1() -> Result<(bool, String), String> {
    let p = ProblemSpec::harmonic(0.25, 10.0, 1.0).map_err(err)?;
    let d = Discretization::new(p, 2.0, 4000, 100).map_err(err)?;
    let r = solve(&d, &SolverConfig::default())?;
    let exact = oscillator_exact(&r.mesh, &d.time, 0.25, 1.0).map_err(err)?;
    let e = relative_error(&r.u_final, &exact).map_err(err)?;
    Ok((e <= 1e-12, format!("rel 2-norm error {e:.2e} (≤ 1e-12)")))
}

fn ac2() -> Result<(bool, String), String> {
    let targets = [(32, 2.8e-4), (64, 7.0e-5), (128, 1.8e-5), (256, 4.4e-6)];
    let (entries, reports) = sweep(|n| cauchy(n, 4000), &[16, 32, 64, 128, 256], &SolverConfig::default())?;
    let table = ConvergenceTable::from_sweep(1.0, &entries).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, target) in targets {
        let eps = table.row(n).and_then(|r| r.eps2).ok_or("missing eps")?;
        ok &= eps <= 3.0 * target && eps >= target / 3.0;
        parts.push(format!("ε({n})={eps:.2e}"));
    }
    let p = table.row(256).and_then(|r| r.p2).ok_or("missing order")?;
    ok &= (p - 2.0).abs() <= 0.05;
    let ranks: Vec<usize> = reports.iter().skip(1).flat_map(|r| r.lowrank_ranks()).collect();
    let (lo, hi) = (ranks.iter().min().copied().unwrap_or(0), ranks.iter().max().copied().unwrap_or(0));
    ok &= !ranks.is_empty() && lo >= 8 && hi <= 12;
    Ok((ok, format!("{} p(256)={p:.4} rank {lo}..{hi} (10±2)", parts.join(" "))))
}

/// Low-rank solves at n = 256 and 512 (best of two each, sequential), shared
/// by the point-value and scaling checks.
struct Scaling {
    u0_512: f64,
    lr: [f64; 2],
    dense: [f64; 2],
}

fn scaling_runs() -> Result<Scaling, String> {
    let cfg = SolverConfig {
        exec: Exec::Sequential,
        ..Default::default()
    };
    let mut lr = [f64::INFINITY; 2];
    let mut dense = [0.0; 2];
    let mut u0_512 = f64::NAN;
    for (i, n) in [256, 512].into_iter().enumerate() {
        let d = cauchy(n, 4000)?;
        for _ in 0..2 {
            let t = Instant::now();
            let r = solve(&d, &cfg)?;
            lr[i] = lr[i].min(t.elapsed().as_secs_f64());
            if n == 512 {
                u0_512 = r.value_at(0.0).ok_or("x = 0 outside mesh")?;
            }
        }
        let t = Instant::now();
        d.solve_dense(cfg.memory_budget).map_err(err)?;
        dense[i] = t.elapsed().as_secs_f64();
    }
    Ok(Scaling { u0_512, lr, dense })
}

fn ac3(s: &Result<Scaling, String>) -> Result<(bool, String), String> {
    let s = s.as_ref().map_err(Clone::clone)?;
    let diff = (s.u0_512 - 0.6366212).abs();
    Ok((
        diff <= 5e-6,
        format!("u(0,1)={:.7} exact {:.7} |Δ|={diff:.1e}", s.u0_512, cauchy_exact(0.0, 1.0)),
    ))
}

fn ac4() -> Result<(bool, String), String> {
    let make = |n| {
        let p = ProblemSpec::impurity(0.25, 20.0).map_err(err)?;
        Discretization::new(p, 2.0, 8000, n).map_err(err)
    };
    let cfg = SolverConfig {
        eps_c: 1e-12,
        ..Default::default()
    };
    let (entries, _) = sweep(make, &[256, 512, 1024, 2048], &cfg)?;
    let table = ConvergenceTable::from_sweep(20.0, &entries).map_err(err)?;
    let row = table.row(2048).ok_or("missing row")?;
    let (p2, p4) = (row.p2.ok_or("missing p2")?, row.p4.ok_or("missing p4")?);
    let trend: Vec<String> = table.rows.iter().filter_map(|r| r.p2.map(|p| format!("{p:.3}"))).collect();
    Ok((
        p2 >= 1.9 && p4 >= 3.4,
        format!("p2(2048)={p2:.3} (≥1.9) p4(2048)={p4:.3} (≥3.4) p2 trend [{}]", trend.join(", ")),
    ))
}

fn ac5() -> Result<(bool, String), String> {
    let eps_c = 1e-10;
    let problems: Vec<ProblemSpec> = vec![
        ProblemSpec::harmonic(0.25, 10.0, 1.0).map_err(err)?,
        ProblemSpec::cauchy(0.5, 1.0).map_err(err)?,
        ProblemSpec::impurity(0.25, 20.0).map_err(err)?,
    ];
    let cfg = SolverConfig {
        eps_c,
        dense_switch_k: 1,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for p in problems {
        let name = p.name.clone();
        let mut w = 0.0f64;
        for n in [8, 16, 32] {
            let d = Discretization::new(p.clone(), 2.0, 256, n).map_err(err)?;
            let lr = solve(&d, &cfg)?;
            let dense = d.solve_dense(cfg.memory_budget).map_err(err)?;
            w = w.max(relative_error_max(&lr.u_final, &dense.u_final).map_err(err)?);
        }
        parts.push(format!("{name} {w:.1e}"));
        worst = worst.max(w);
    }
    Ok((worst <= 50.0 * eps_c, format!("max-norm rel diff: {} (≤ 5e-9, M=512)", parts.join(", "))))
}

fn ac6(s: &Result<Scaling, String>) -> Result<(bool, String), String> {
    let s = s.as_ref().map_err(Clone::clone)?;
    let lr = s.lr[1] / s.lr[0];
    let dense = s.dense[1] / s.dense[0];
    Ok((
        (1.6..=2.6).contains(&lr) && (3.0..=5.0).contains(&dense),
        format!(
            "low-rank {:.1}s→{:.1}s ratio {lr:.2} [1.6,2.6]; dense {:.1}s→{:.1}s ratio {dense:.2} [3,5]",
            s.lr[0], s.lr[1], s.dense[0], s.dense[1]
        ),
    ))
}

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn ac7() -> Result<(bool, String), String> {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut split_ok, mut lin, mut suffix, mut beta_ok, mut recon) = (true, 0.0f64, 0.0f64, true, 0.0f64);
    for _ in 0..CASES {
        let m = rng.random_range(2..40);
        let r = rng.random_range(1..6usize).min(m - 1).max(1);
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let corr = FftCorrelator::new(&p, 2 * m - 1);

        // split identity
        let h = HankelSpec::new(random_vec(&mut rng, m), random_vec(&mut rng, m - 1)).map_err(err)?;
        let (upper, lower) = h.split();
        split_ok &= upper.to_dense() + lower.to_dense() == h.to_dense();

        // linearity on both anti-triangular sides
        let basis = random_matrix(&mut rng, m, r);
        let alpha = DVector::from_vec(random_vec(&mut rng, r));
        let conv = BasisConvolutions::compute(&basis, &corr, Exec::Sequential).map_err(err)?;
        let l: Vec<f64> = (&basis * &alpha).iter().copied().collect();
        let direct_u = hankel_matvec_direct(&HankelSpec::upper(l.clone()).map_err(err)?, &p).map_err(err)?;
        let direct_w = hankel_matvec_direct(&HankelSpec::lower(l[..m - 1].to_vec()).map_err(err)?, &p).map_err(err)?;
        let comb = |vs: &[Vec<f64>]| -> Vec<f64> { (0..m).map(|i| (0..r).map(|q| alpha[q] * vs[q][i]).sum()).collect() };
        lin = lin.max(max_rel(&comb(conv.k_vecs()), &direct_u)).max(max_rel(&comb(conv.t_vecs()), &direct_w));

        // suffix spanning: leading M − 1 entries of the span stay in the span
        if m > r + 1 {
            let s = rng.random_range(1..8);
            let ls = &basis * random_matrix(&mut rng, r, s);
            let w = basis.rows(0, m - 1).into_owned();
            let rr = ls.rows(0, m - 1).into_owned();
            let coef = w.clone().svd(true, true).solve(&rr, 1e-14).map_err(|e| e.to_string())?;
            suffix = suffix.max((&w * coef - &rr).norm() / rr.norm().max(1e-300));
        }

        // β/α identity and reconstruction against dense Hankel blocks
        let k = rng.random_range(1..8);
        let rank = r.min(k + 1);
        let phi = random_matrix(&mut rng, m, rank) * random_matrix(&mut rng, rank, k + 1);
        let f = cross_approximate(&phi, &CrossConfig { eps: 1e-14, ..Default::default() }).map_err(err)?;
        let conv = BasisConvolutions::compute(&f.basis, &corr, Exec::Sequential).map_err(err)?;
        let state = IterationState::new(k, &f, &conv).map_err(err)?;
        let approx = f.to_dense();
        let values = state.materialize(Exec::Sequential);
        for wdx in 0..k {
            beta_ok &= state.beta(wdx) == state.alpha(wdx + 1);
            let lm = approx.column(wdx).iter().copied().collect();
            let rm = approx.column(wdx + 1).iter().take(m - 1).copied().collect();
            let direct = hankel_matvec_direct(&HankelSpec::new(lm, rm).map_err(err)?, &p).map_err(err)?;
            recon = recon.max(max_rel(&values[wdx * m..(wdx + 1) * m], &direct));
        }
    }
    let ok = split_ok && lin < 1e-10 && suffix < 1e-10 && beta_ok && recon < 1e-11;
    Ok((
        ok,
        format!(
            "{CASES} cases: split {} linearity {lin:.1e} suffix {suffix:.1e} β=α {} reconstruction {recon:.1e}",
            if split_ok { "exact" } else { "broken" },
            if beta_ok { "exact" } else { "broken" },
        ),
    ))
}

/// Random spectrum whose ζ-rank at `eps` is unambiguous: the tail ratios on
/// either side of the cut stay at least 20% away from the threshold.
fn separated_spectrum(rng: &mut impl Rng, k: usize, eps: f64) -> Vec<f64> {
    loop {
        let mut sv: Vec<f64> = Vec::with_capacity(k);
        let mut s = 1.0;
        for _ in 0..k {
            sv.push(s);
            s *= rng.random_range(0.02..0.9);
        }
        let r = zeta_rank(&sv, eps);
        let prev = if r > 1 { zeta(&sv, r - 1) } else { f64::INFINITY };
        if zeta(&sv, r) < eps / 1.2 && prev > eps * 1.2 {
            return sv;
        }
    }
}

fn orthonormal(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    random_matrix(rng, r, c).qr().q()
}

fn ac8() -> Result<(bool, String), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = 1e-10;
    let shapes = [(2000, 100), (1500, 80), (1000, 100), (600, 40), (300, 60), (120, 30), (50, 12), (2000, 13)];
    let mut worst = 0.0f64;
    let mut rank_ok = true;
    let mut cases = 0;
    for (i, &(m, n)) in shapes.iter().enumerate() {
        for r in [1, 3, 6, 9, 12] {
            let a = random_matrix(&mut rng, m, r) * random_matrix(&mut rng, r, n);
            let cfg = CrossConfig { eps, seed: (i * 31 + r) as u64, ..Default::default() };
            let f = cross_approximate(&a, &cfg).map_err(err)?;
            worst = worst.max((f.to_dense() - &a).norm() / a.norm());
            rank_ok &= f.rank() == r;
            cases += 1;
        }
    }
    let recovery = worst <= 10.0 * eps && rank_ok;

    let eps_z = 1e-8;
    let mut mismatches = 0;
    for case in 0..200 {
        let (m, n) = (rng.random_range(60..300), rng.random_range(20..60));
        let sv = separated_spectrum(&mut rng, n, eps_z);
        let u = orthonormal(&mut rng, m, n);
        let v = orthonormal(&mut rng, n, n);
        let a = &u * DMatrix::from_diagonal(&DVector::from_vec(sv.clone())) * v.transpose();
        let f = cross_approximate(&a, &CrossConfig { eps: eps_z, seed: case, ..Default::default() }).map_err(err)?;
        if f.rank() != zeta_rank(&sv, eps_z) {
            mismatches += 1;
        }
    }
    Ok((
        recovery && mismatches == 0,
        format!(
            "{cases} rank-r recoveries worst {worst:.1e} (≤ 1e-9) ranks {}; ζ-rank mismatches {mismatches}/200",
            if rank_ok { "exact" } else { "wrong" }
        ),
    ))
}

fn ac9() -> Result<(bool, String), String> {
    let cfg = HermiteStudyConfig::default();
    let rows = hermite_rank_study(&cfg).map_err(err)?;
    let max_rank = rows.iter().map(|r| r.eps_rank).max().unwrap_or(0);
    let ratio = rows
        .iter()
        .find(|r| r.l == 0)
        .and_then(|r| r.ratio(1))
        .ok_or("no l = 0 row")?;
    Ok((
        max_rank <= 8 && (ratio - 0.96).abs() <= 0.02,
        format!(
            "{}×{} l≤{}: max ε-rank {max_rank} (≤ 8), σ2/σ1(l=0) {ratio:.4} (0.96±0.02)",
            cfg.nrows, cfg.ncols, cfg.l_max
        ),
    ))
}

fn ac10() -> Result<(bool, String), String> {
    let p = ProblemSpec::cauchy(0.5, 1.0).map_err(err)?;
    let tg = TimeGrid::new(1.0, 128, QuadratureRule::Trapezoid).map_err(err)?;
    let exact = cauchy_exact(0.0, 1.0);
    let mut scaled = Vec::new();
    let mut last = None;
    for k in [10_000u64, 100_000, 1_000_000] {
        let est = mc_estimate(&p, &tg, &McConfig { samples: k, ..Default::default() }).map_err(err)?;
        scaled.push(est.stderr * (k as f64).sqrt());
        last = Some(est);
    }
    let est = last.ok_or("no estimate")?;
    let dev = (est.mean - exact).abs();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    let ok = dev <= 4.0 * est.stderr && hi / lo <= 1.2;
    Ok((
        ok,
        format!(
            "u_MC={:.6} ± {:.1e} vs {exact:.6} ({:.2} stderr); stderr·√K spread {:.3}",
            est.mean,
            est.stderr,
            dev / est.stderr,
            hi / lo
        ),
    ))
}

fn main() {
    let mut outcomes = vec![run(1, "oscillator exactness", ac1), run(2, "Cauchy convergence table", ac2)];
    let scaling = scaling_runs();
    outcomes.push(run(3, "Cauchy point value n=512", || ac3(&scaling)));
    outcomes.push(run(4, "impurity extrapolated order", ac4));
    outcomes.push(run(5, "low-rank vs dense oracle", ac5));
    outcomes.push(run(6, "complexity scaling", || ac6(&scaling)));
    outcomes.push(run(7, "Hankel lemma properties", ac7));
    outcomes.push(run(8, "cross approximation", ac8));
    outcomes.push(run(9, "Hermite ε-ranks", ac9));
    outcomes.push(run(10, "Monte Carlo agreement", ac10));
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {}/{} passed{}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        if failed.is_empty() { String::new() } else { format!(", failed {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
