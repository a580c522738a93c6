//! Backward Feynman–Kac iteration on nested meshes.
//!
//! Step `k` (from `n` down to 1) turns `Φ_{k+1}`, sampled on level `k+1`, into
//! `F_k(x^(k)_i) = Σ_j p_j Φ_{k+1}(x^(k)_i + ξ_j)` on level `k`, and
//! `Φ_k = F_k·exp(−w_{k−1}·V(·, τ_{n−k+1})·δt)`. Above the switchover step the
//! array `Φ_{k+1}` is never formed: reshaped to an `M × (k+1)` matrix it is
//! cross-approximated as `B·Vᵀ`, the basis columns are correlated with the
//! kernel once, and entries of `F_k` are read back from the factors on
//! demand. The last `dense_switch_k` steps convolve the whole array.

use std::sync::Mutex;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::convolution::{correlate_valid, BasisConvolutions, FftCorrelator};
use crate::cross::{cross_approximate_from, CrossConfig, LazyMatrix, LowRankFactors};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{ConvolutionKernel, GridStack, QuadratureRule, TimeGrid};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps_c: f64,
    pub r0: usize,
    pub r_max: usize,
    /// Steps `k ≤ dense_switch_k` convolve the full array.
    pub dense_switch_k: usize,
    /// Also switch to dense steps once the cross rank reaches the number of
    /// columns.
    pub rank_trigger: bool,
    pub max_rounds: usize,
    pub seed: u64,
    pub exec: Exec,
    /// Upper bound on the working memory of a dense step, in bytes.
    pub memory_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_c: 1e-10,
            r0: 4,
            r_max: 64,
            dense_switch_k: 20,
            rank_trigger: false,
            max_rounds: 12,
            seed: 0x5eed,
            exec: Exec::default(),
            memory_budget: 2 << 30,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_c > 0.0 && self.eps_c < 1.0) {
            return Err(Error::invalid(format!("eps_c must lie in (0, 1), got {}", self.eps_c)));
        }
        if self.dense_switch_k == 0 {
            return Err(Error::invalid("dense_switch_k must be at least 1"));
        }
        if self.r0 == 0 || self.r0 > self.r_max {
            return Err(Error::invalid(format!(
                "need 1 ≤ r0 ({}) ≤ r_max ({})",
                self.r0, self.r_max
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be at least 1"));
        }
        Ok(())
    }

    fn cross(&self, k: usize) -> CrossConfig {
        CrossConfig {
            eps: self.eps_c,
            initial_rank: self.r0,
            max_rank: self.r_max,
            max_rounds: self.max_rounds,
            seed: self.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            exec: self.exec,
            ..CrossConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    LowRank,
    Dense,
}

impl std::fmt::Display for StepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepMode::LowRank => "lowrank",
            StepMode::Dense => "dense",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub mode: StepMode,
    /// Cross rank of `Φ_{k+1}`; zero for dense steps.
    pub rank: usize,
    pub rounds: usize,
    pub evaluations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `u(x_i, T)` on the base mesh.
    pub u_final: Vec<f64>,
    pub mesh: Vec<f64>,
    /// One record per step, in execution order (`k = n, …, 1`).
    pub steps: Vec<StepRecord>,
    pub config: SolverConfig,
    pub wall_seconds: f64,
}

impl SolveReport {
    pub fn max_rank(&self) -> usize {
        self.steps.iter().map(|s| s.rank).max().unwrap_or(0)
    }

    pub fn lowrank_ranks(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter(|s| s.mode == StepMode::LowRank)
            .map(|s| s.rank)
            .collect()
    }

    /// Linear interpolation of `u_final` at `x` inside the base mesh.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let (first, last) = (*self.mesh.first()?, *self.mesh.last()?);
        if !(x >= first && x <= last) {
            return None;
        }
        let h = (last - first) / (self.mesh.len() - 1).max(1) as f64;
        let pos = (x - first) / h;
        let i = (pos.floor() as usize).min(self.mesh.len() - 1);
        if i + 1 == self.mesh.len() {
            return Some(self.u_final[i]);
        }
        let frac = pos - i as f64;
        Some(self.u_final[i] * (1.0 - frac) + self.u_final[i + 1] * frac)
    }
}

/// `F_k` on level `k` in factored form: with `m = ⌊j/M⌋`, `l = j mod M`,
/// `F_k(x^(k)_j) = Σ_q α_{m,q}·k_q[l] + β_{m,q}·t_q[l]`, where `α_m` is row `m`
/// of the cross coefficients of `Φ_{k+1}` and `β_m = α_{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    k: usize,
    window: usize,
    coeffs: DMatrix<f64>,
    k_mat: DMatrix<f64>,
    t_mat: DMatrix<f64>,
}

impl IterationState {
    /// `factors` approximates `Φ_{k+1}` (`M × (k+1)`); `conv` holds the
    /// basis convolutions of its columns.
    pub fn new(k: usize, factors: &LowRankFactors, conv: &BasisConvolutions) -> Result<Self> {
        let m = conv.window();
        if factors.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: factors.nrows(),
            });
        }
        if factors.ncols() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                actual: factors.ncols(),
            });
        }
        if conv.rank() != factors.rank() {
            return Err(Error::DimensionMismatch {
                expected: factors.rank(),
                actual: conv.rank(),
            });
        }
        let r = conv.rank();
        let mut k_mat = DMatrix::zeros(m, r);
        let mut t_mat = DMatrix::zeros(m, r);
        for q in 0..r {
            k_mat.column_mut(q).copy_from_slice(&conv.k_vecs()[q]);
            t_mat.column_mut(q).copy_from_slice(&conv.t_vecs()[q]);
        }
        Ok(Self {
            k,
            window: m,
            coeffs: factors.coeffs.clone(),
            k_mat,
            t_mat,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn len(&self) -> usize {
        self.k * self.window
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficients `α_m` (row `m` of the cross coefficients).
    pub fn alpha(&self, m: usize) -> Vec<f64> {
        self.coeffs.row(m).iter().copied().collect()
    }

    /// Coefficients `β_m`, read from the shifted row of the same array.
    pub fn beta(&self, m: usize) -> Vec<f64> {
        self.coeffs.row(m + 1).iter().copied().collect()
    }

    /// `F_k(x^(k)_j)` in `O(r)` operations.
    pub fn eval_f_k(&self, j: usize) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::OutOfRange {
                index: j,
                len: self.len(),
            });
        }
        let (m, l) = (j / self.window, j % self.window);
        let mut s = 0.0;
        for q in 0..self.rank() {
            s += self.coeffs[(m, q)] * self.k_mat[(l, q)] + self.coeffs[(m + 1, q)] * self.t_mat[(l, q)];
        }
        Ok(s)
    }

    /// Window `m` of `F_k`: entries `j = mM … mM + M − 1`.
    pub fn window_values(&self, m: usize, out: &mut [f64]) {
        let alpha = self.coeffs.row(m).transpose();
        let beta = self.coeffs.row(m + 1).transpose();
        let mut v = DVector::zeros(self.window);
        v.gemv(1.0, &self.k_mat, &alpha, 0.0);
        v.gemv(1.0, &self.t_mat, &beta, 1.0);
        out.copy_from_slice(v.as_slice());
    }

    /// Entries `j = mM + l` for `m = 0 … k − 1`.
    pub fn offset_values(&self, l: usize, out: &mut [f64]) {
        let k = self.k;
        let kt = self.k_mat.row(l).transpose();
        let tt = self.t_mat.row(l).transpose();
        let mut v = DVector::zeros(k);
        v.gemv(1.0, &self.coeffs.rows(0, k), &kt, 0.0);
        v.gemv(1.0, &self.coeffs.rows(1, k), &tt, 1.0);
        out.copy_from_slice(v.as_slice());
    }

    /// The full array `F_k` on level `k`.
    pub fn materialize(&self, exec: Exec) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        exec.fill_chunks(&mut out, self.window, |offset, chunk| {
            self.window_values(offset / self.window, chunk)
        });
        out
    }
}

/// Where the values of `F_{k+1}` come from.
enum Source<'a> {
    Initial,
    State(&'a IterationState),
}

/// `Φ_{k+1}` on level `k+1` as a lazy `M × (k+1)` matrix: entry `(l, m)` is
/// `F_{k+1}(y)·exp(−w_k·V(y, τ_{n−k})·δt)` with `y = x^(k+1)_{mM+l}`.
struct PhiMatrix<'a> {
    source: Source<'a>,
    problem: &'a ProblemSpec,
    grids: &'a GridStack,
    level: usize,
    weight_dt: f64,
    tau: f64,
    failure: Mutex<Option<Error>>,
}

impl<'a> PhiMatrix<'a> {
    fn new(
        source: Source<'a>,
        problem: &'a ProblemSpec,
        grids: &'a GridStack,
        tg: &TimeGrid,
        k: usize,
    ) -> Self {
        let n = tg.steps();
        Self {
            source,
            problem,
            grids,
            level: k + 1,
            weight_dt: tg.weight(k) * tg.dt(),
            tau: tg.tau(n - k),
            failure: Mutex::new(None),
        }
    }

    #[inline]
    fn factor(&self, y: f64) -> f64 {
        if self.weight_dt == 0.0 {
            return 1.0;
        }
        let v = self.problem.potential(y, self.tau);
        if !v.is_finite() {
            self.record(y, v);
        }
        (-self.weight_dt * v).exp()
    }

    fn record(&self, x: f64, value: f64) {
        let mut slot = self.failure.lock().expect("poisoned");
        if slot.is_none() {
            *slot = Some(Error::NonFinite { x, t: self.tau, value });
        }
    }

    fn take_failure(&self) -> Option<Error> {
        self.failure.lock().expect("poisoned").take()
    }

    fn finish(&self, y: f64, base: f64) -> f64 {
        let v = base * self.factor(y);
        if !v.is_finite() {
            self.record(y, v);
            return 0.0;
        }
        v
    }

    fn point(&self, global: usize) -> f64 {
        self.grids.point(self.level, global)
    }

    fn base(&self, global: usize) -> f64 {
        match self.source {
            Source::Initial => self.problem.initial(self.point(global)),
            Source::State(s) => s.eval_f_k(global).unwrap_or(f64::NAN),
        }
    }
}

impl LazyMatrix for PhiMatrix<'_> {
    fn nrows(&self) -> usize {
        self.grids.window()
    }

    fn ncols(&self) -> usize {
        self.level
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let g = j * self.grids.window() + i;
        self.finish(self.point(g), self.base(g))
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        let m = self.grids.window();
        match self.source {
            Source::Initial => {
                for (l, o) in out.iter_mut().enumerate() {
                    let y = self.point(j * m + l);
                    *o = self.finish(y, self.problem.initial(y));
                }
            }
            Source::State(s) => {
                s.window_values(j, out);
                for (l, o) in out.iter_mut().enumerate() {
                    *o = self.finish(self.point(j * m + l), *o);
                }
            }
        }
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let m = self.grids.window();
        match self.source {
            Source::Initial => {
                for (c, o) in out.iter_mut().enumerate() {
                    let y = self.point(c * m + i);
                    *o = self.finish(y, self.problem.initial(y));
                }
            }
            Source::State(s) => {
                s.offset_values(i, out);
                for (c, o) in out.iter_mut().enumerate() {
                    *o = self.finish(self.point(c * m + i), *o);
                }
            }
        }
    }
}

fn check_inputs(grids: &GridStack, tg: &TimeGrid, kernel: &ConvolutionKernel) -> Result<()> {
    if grids.levels() != tg.steps() {
        return Err(Error::DimensionMismatch {
            expected: tg.steps(),
            actual: grids.levels(),
        });
    }
    if kernel.len() != grids.window() {
        return Err(Error::DimensionMismatch {
            expected: grids.window(),
            actual: kernel.len(),
        });
    }
    Ok(())
}

/// Bytes needed by a dense step on level `level`.
fn dense_bytes(grids: &GridStack, level: usize) -> usize {
    let len = grids.level_len(level);
    let fft = len.next_power_of_two();
    // complex transform buffer and scratch, input and output arrays
    fft.saturating_mul(32).saturating_add(len.saturating_mul(24))
}

/// `Φ` from `F` on level `level`, in place, for weight index `k`.
fn apply_factor(
    values: &mut [f64],
    problem: &ProblemSpec,
    grids: &GridStack,
    tg: &TimeGrid,
    k: usize,
    level: usize,
    exec: Exec,
) -> Result<()> {
    let phi = PhiMatrix::new(Source::Initial, problem, grids, tg, k);
    debug_assert_eq!(phi.level, level.max(1));
    let window = grids.window();
    exec.fill_chunks(values, window, |offset, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            let y = grids.point(level, offset + i);
            *v = phi.finish(y, *v);
        }
    });
    match phi.take_failure() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// One dense step: `F_k` (length `kM`) from `Φ_{k+1}` (length `(k+1)M`).
fn dense_step(phi: &[f64], kernel: &ConvolutionKernel, k: usize) -> Result<Vec<f64>> {
    let mut f = correlate_valid(phi, kernel.samples())?;
    // the last computable value lies outside level k
    f.truncate(k * kernel.len());
    Ok(f)
}

/// The low-rank iteration with dense switchover.
pub fn solve(
    problem: &ProblemSpec,
    grids: &GridStack,
    tg: &TimeGrid,
    kernel: &ConvolutionKernel,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_inputs(grids, tg, kernel)?;
    let start = Instant::now();
    let n = tg.steps();
    let window = grids.window();
    let correlator = FftCorrelator::new(kernel.samples(), 2 * window - 1);

    let mut steps = Vec::with_capacity(n);
    let mut state: Option<IterationState> = None;
    let mut warm: Option<Vec<usize>> = None;
    let mut k = n;
    let mut dense_from_now = false;

    // low-rank steps
    while k > cfg.dense_switch_k && !dense_from_now {
        let t0 = Instant::now();
        let source = match &state {
            None => Source::Initial,
            Some(s) => Source::State(s),
        };
        let phi = PhiMatrix::new(source, problem, grids, tg, k);
        let factors = cross_approximate_from(&phi, &cfg.cross(k), warm.as_deref())?;
        if let Some(e) = phi.take_failure() {
            return Err(e);
        }
        if !factors.converged {
            return Err(Error::Unconverged {
                step: k,
                achieved: factors.spectral_change,
            });
        }
        let conv = BasisConvolutions::compute(&factors.basis, &correlator, cfg.exec)?;
        let next = IterationState::new(k, &factors, &conv)?;
        steps.push(StepRecord {
            k,
            mode: StepMode::LowRank,
            rank: factors.rank(),
            rounds: factors.rounds,
            evaluations: factors.evaluations,
            seconds: t0.elapsed().as_secs_f64(),
        });
        if cfg.rank_trigger && factors.rank() > k {
            dense_from_now = true;
        }
        warm = Some(factors.pivot_columns.clone());
        state = Some(next);
        k -= 1;
    }

    if k == 0 {
        unreachable!("dense_switch_k ≥ 1 keeps the last step dense");
    }
    if dense_bytes(grids, k + 1) > cfg.memory_budget {
        return Err(Error::Capacity(format!(
            "dense step on level {} needs {} bytes, budget {}",
            k + 1,
            dense_bytes(grids, k + 1),
            cfg.memory_budget
        )));
    }

    // Φ_{k+1} as a full array
    let mut phi = match &state {
        None => initial_phi(problem, grids, tg, cfg.exec)?,
        Some(s) => {
            let mut f = s.materialize(cfg.exec);
            if let Some(j) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    x: grids.point(k + 1, j),
                    t: tg.tau(n - k),
                    value: f[j],
                });
            }
            apply_factor(&mut f, problem, grids, tg, k, k + 1, cfg.exec)?;
            f
        }
    };
    drop(state);
    let u = dense_tail(problem, grids, tg, kernel, &mut phi, k, cfg.exec, &mut steps)?;
    Ok(SolveReport {
        u_final: u,
        mesh: grids.base_mesh(),
        steps,
        config: cfg.clone(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn initial_phi(problem: &ProblemSpec, grids: &GridStack, tg: &TimeGrid, exec: Exec) -> Result<Vec<f64>> {
    let n = tg.steps();
    let level = n + 1;
    let mut phi = vec![0.0; grids.level_len(level)];
    exec.fill_chunks(&mut phi, grids.window(), |offset, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            *v = problem.initial(grids.point(level, offset + i));
        }
    });
    if let Some(j) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            x: grids.point(level, j),
            t: 0.0,
            value: phi[j],
        });
    }
    apply_factor(&mut phi, problem, grids, tg, n, level, exec)?;
    Ok(phi)
}

/// Dense steps `k, k−1, …, 1` starting from `Φ_{k+1}`; returns `u`.
#[allow(clippy::too_many_arguments)]
fn dense_tail(
    problem: &ProblemSpec,
    grids: &GridStack,
    tg: &TimeGrid,
    kernel: &ConvolutionKernel,
    phi: &mut Vec<f64>,
    k_start: usize,
    exec: Exec,
    steps: &mut Vec<StepRecord>,
) -> Result<Vec<f64>> {
    for k in (1..=k_start).rev() {
        let t0 = Instant::now();
        let mut f = dense_step(phi, kernel, k)?;
        // Φ_k = F_k·exp(−w_{k−1}·V(·, τ_{n−k+1})·δt); at k = 1 this is u
        apply_factor(&mut f, problem, grids, tg, k - 1, k, exec)?;
        *phi = f;
        steps.push(StepRecord {
            k,
            mode: StepMode::Dense,
            rank: 0,
            rounds: 0,
            evaluations: 0,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(std::mem::take(phi))
}

/// Dense FFT iteration over the whole array at every step.
pub fn solve_dense_reference(
    problem: &ProblemSpec,
    grids: &GridStack,
    tg: &TimeGrid,
    kernel: &ConvolutionKernel,
    memory_budget: usize,
) -> Result<SolveReport> {
    check_inputs(grids, tg, kernel)?;
    let n = tg.steps();
    let need = dense_bytes(grids, n + 1);
    if need > memory_budget {
        return Err(Error::Capacity(format!(
            "dense iteration on level {} needs {need} bytes, budget {memory_budget}",
            n + 1
        )));
    }
    let start = Instant::now();
    let mut steps = Vec::with_capacity(n);
    let mut phi = initial_phi(problem, grids, tg, Exec::Sequential)?;
    let u = dense_tail(problem, grids, tg, kernel, &mut phi, n, Exec::Sequential, &mut steps)?;
    let config = SolverConfig {
        dense_switch_k: n.max(1),
        exec: Exec::Sequential,
        memory_budget,
        ..SolverConfig::default()
    };
    Ok(SolveReport {
        u_final: u,
        mesh: grids.base_mesh(),
        steps,
        config,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// A problem together with its discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub problem: ProblemSpec,
    pub grids: GridStack,
    pub time: TimeGrid,
    pub kernel: ConvolutionKernel,
}

impl Discretization {
    /// Trapezoidal weights in time, rectangle weights in space.
    pub fn new(problem: ProblemSpec, half_width: f64, half_count: usize, steps: usize) -> Result<Self> {
        Self::with_rules(
            problem,
            half_width,
            half_count,
            steps,
            QuadratureRule::Trapezoid,
            QuadratureRule::Rectangle,
        )
    }

    pub fn with_rules(
        problem: ProblemSpec,
        half_width: f64,
        half_count: usize,
        steps: usize,
        time_rule: QuadratureRule,
        space_rule: QuadratureRule,
    ) -> Result<Self> {
        let time = TimeGrid::new(problem.t_final, steps, time_rule)?;
        let grids = GridStack::new(half_width, half_count, steps)?;
        let kernel = ConvolutionKernel::new(problem.sigma, time.dt(), &grids, space_rule)?;
        Ok(Self {
            problem,
            grids,
            time,
            kernel,
        })
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<SolveReport> {
        solve(&self.problem, &self.grids, &self.time, &self.kernel, cfg)
    }

    pub fn solve_dense(&self, memory_budget: usize) -> Result<SolveReport> {
        solve_dense_reference(&self.problem, &self.grids, &self.time, &self.kernel, memory_budget)
    }
}
