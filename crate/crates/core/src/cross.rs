//! Adaptive cross approximation of lazily evaluated matrices.
//!
//! A matrix `A` is approximated from a few of its columns `C = A(:, J)` and
//! rows `R = A(I, :)`: with `Q` an orthonormal basis of `C` and `I` the maxvol
//! rows of `Q`, `A ≈ Q·Q(I,:)⁻¹·R`. The result is orthogonalized by QR of both
//! sides and an SVD of the small core, giving the dyadic form
//! `A ≈ X·Yᵀ`, `X = Q_B U Σ^{1/2}`, `Y = Q_C V Σ^{1/2}`, and the rank is cut
//! by the tail-energy criterion [`zeta`]. Each round doubles the column set
//! (skeleton columns of the previous round plus as many fresh ones) until the
//! truncated rank leaves room to spare, two successive core spectra agree
//! to the requested accuracy, and a handful of fully evaluated probe rows are
//! reproduced. Probe rows also seed the first columns, so matrices supported
//! on a few columns are not mistaken for zero.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Matrix known only through an entry oracle. Implementations must be
/// deterministic and safe to call from several threads.
pub trait LazyMatrix: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;

    fn column(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j);
        }
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.entry(i, j);
        }
    }
}

impl LazyMatrix for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self[(i, j)]
    }
}

/// Closure-backed [`LazyMatrix`].
pub struct FnMatrix<F> {
    nrows: usize,
    ncols: usize,
    f: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> FnMatrix<F> {
    pub fn new(nrows: usize, ncols: usize, f: F) -> Self {
        Self { nrows, ncols, f }
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> LazyMatrix for FnMatrix<F> {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        (self.f)(i, j)
    }
}

/// Counts entry evaluations of the wrapped matrix.
pub struct Counted<'a, M: ?Sized> {
    inner: &'a M,
    count: AtomicUsize,
}

impl<'a, M: LazyMatrix + ?Sized> Counted<'a, M> {
    pub fn new(inner: &'a M) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

impl<M: LazyMatrix + ?Sized> LazyMatrix for Counted<'_, M> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.entry(i, j)
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        self.count.fetch_add(out.len(), Ordering::Relaxed);
        self.inner.column(j, out)
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        self.count.fetch_add(out.len(), Ordering::Relaxed);
        self.inner.row(i, out)
    }
}

/// Probe rows may miss by this multiple of `ε·‖A‖_F`: the skeleton error can
/// exceed the truncation error by a modest factor.
const PROBE_SLACK: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    /// Relative accuracy `ε_c` of the truncation criterion.
    pub eps: f64,
    /// Initial rank guess `r0`.
    pub initial_rank: usize,
    /// Rank cap `r_max`; also bounds the doubled column set.
    pub max_rank: usize,
    /// Maxvol stops when no coefficient exceeds `1 + maxvol_tol`.
    pub maxvol_tol: f64,
    pub maxvol_sweeps: usize,
    pub max_rounds: usize,
    /// Full rows evaluated up front; their largest entries seed the column
    /// set and the approximation must reproduce them.
    pub probe_rows: usize,
    /// Singular values of the pivot block below `pinv_rtol·σ_max` are dropped
    /// before inversion.
    pub pinv_rtol: f64,
    /// Seed for the fresh columns added in each doubling round.
    pub seed: u64,
    pub exec: Exec,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            eps: 1e-10,
            initial_rank: 4,
            max_rank: 64,
            maxvol_tol: 1e-2,
            maxvol_sweeps: 100,
            max_rounds: 12,
            probe_rows: 4,
            pinv_rtol: 1e-14,
            seed: 0x5eed,
            exec: Exec::default(),
        }
    }
}

/// `A ≈ basis · coeffsᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    /// `nrows × r`.
    pub basis: DMatrix<f64>,
    /// `ncols × r`.
    pub coeffs: DMatrix<f64>,
    pub eps: f64,
    /// Retained singular values, descending.
    pub singular_values: Vec<f64>,
    /// Full spectrum of the core before truncation.
    pub spectrum: Vec<f64>,
    pub converged: bool,
    /// The pivot block needed a truncated pseudo-inverse.
    pub regularized: bool,
    pub rounds: usize,
    /// Distinct entries requested from the oracle.
    pub evaluations: usize,
    /// Skeleton columns of the final factors (maxvol of `coeffs`).
    pub pivot_columns: Vec<usize>,
    /// Relative change of the core spectrum in the last round.
    pub spectral_change: f64,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.basis.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.basis.row(i).dot(&self.coeffs.row(j))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.basis * self.coeffs.transpose()
    }
}

/// `ζ(s) = √(Σ_{i>s} σ_i² / Σ_i σ_i²)` with 1-based `s`; `ζ(len) = 0`.
pub fn zeta(sv: &[f64], s: usize) -> f64 {
    let total: f64 = sv.iter().map(|x| x * x).sum();
    if s >= sv.len() || total == 0.0 {
        return 0.0;
    }
    (sv[s..].iter().map(|x| x * x).sum::<f64>() / total).sqrt()
}

/// Smallest `s ≥ 1` with `ζ(s) < eps`; zero for an all-zero spectrum.
pub fn zeta_rank(sv: &[f64], eps: f64) -> usize {
    let total: f64 = sv.iter().map(|x| x * x).sum();
    if sv.is_empty() || total == 0.0 {
        return 0;
    }
    // tail sums from the back avoid O(len²)
    let mut tail = 0.0;
    let mut rank = sv.len();
    for s in (1..sv.len()).rev() {
        tail += sv[s] * sv[s];
        if (tail / total).sqrt() < eps {
            rank = s;
        } else {
            break;
        }
    }
    rank
}

/// Number of singular values above `eps·σ_1`.
pub fn eps_rank(sv: &[f64], eps: f64) -> usize {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > eps * top).count()
}

/// Rows of `tall` (`p × q`, `q ≤ p`) spanning a submatrix of locally maximal
/// volume: on return no entry of `tall · tall(I, :)⁻¹` exceeds `1 + tol` in
/// modulus (or `max_sweeps` swaps were made). The `j`-th index pairs with
/// column `j`. Ties go to the lowest row index.
pub fn maxvol(tall: &DMatrix<f64>, tol: f64, max_sweeps: usize) -> Result<Vec<usize>> {
    let (p, q) = tall.shape();
    if q == 0 {
        return Ok(Vec::new());
    }
    if q > p {
        return Err(Error::invalid(format!("maxvol needs a tall matrix, got {p}×{q}")));
    }
    let amax = tall.amax();
    if !amax.is_finite() {
        return Err(Error::invalid("maxvol input is not finite"));
    }

    // starting rows from Gaussian elimination with partial pivoting, on a
    // row-major copy so that row updates are contiguous
    let mut work: Vec<f64> = Vec::with_capacity(p * q);
    for i in 0..p {
        work.extend(tall.row(i).iter());
    }
    let mut perm: Vec<usize> = (0..p).collect();
    let small = amax * f64::EPSILON * (p as f64).sqrt() * 16.0;
    for j in 0..q {
        let mut best = j;
        let mut best_val = -1.0;
        for (r, &row) in perm.iter().enumerate().skip(j) {
            let v = work[row * q + j].abs();
            if v > best_val || (v == best_val && row < perm[best]) {
                best = r;
                best_val = v;
            }
        }
        if !(best_val > small) {
            return Err(Error::Degenerate {
                indices: sorted(&perm[..j]),
            });
        }
        perm.swap(j, best);
        let prow = perm[j];
        let pivot_row: Vec<f64> = work[prow * q + j..prow * q + q].to_vec();
        for &row in &perm[j + 1..] {
            let dst = &mut work[row * q + j..row * q + q];
            let factor = dst[0] / pivot_row[0];
            if factor != 0.0 {
                for (d, s) in dst.iter_mut().zip(&pivot_row) {
                    *d -= factor * s;
                }
            }
        }
    }
    let mut rows: Vec<usize> = perm[..q].to_vec();

    // B = A · A(I,:)⁻¹; every entry is at most 1 + tol in modulus on exit
    let inv = tall
        .select_rows(rows.iter())
        .try_inverse()
        .ok_or_else(|| Error::Degenerate {
            indices: sorted(&rows),
        })?;
    let mut b = tall * inv;

    for _ in 0..max_sweeps {
        let (bi, bj) = b.iamax_full();
        if b[(bi, bj)].abs() <= 1.0 + tol {
            break;
        }
        rows[bj] = bi;
        let col = b.column(bj).clone_owned();
        let mut row = b.row(bi).clone_owned();
        row[bj] -= 1.0;
        let scale = 1.0 / b[(bi, bj)];
        b.ger(-scale, &col, &row.transpose(), 1.0);
    }
    Ok(rows)
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Orthogonalized dyadic form of `b_raw · core⁻¹ · c_rawᵀ`, truncated by
/// [`zeta_rank`] at `eps`.
pub fn recompress(
    b_raw: &DMatrix<f64>,
    c_raw: &DMatrix<f64>,
    core: &DMatrix<f64>,
    eps: f64,
    pinv_rtol: f64,
) -> Result<LowRankFactors> {
    recompress_with(b_raw, false, c_raw, core, eps, pinv_rtol)
}

fn recompress_with(
    b_raw: &DMatrix<f64>,
    b_orthonormal: bool,
    c_raw: &DMatrix<f64>,
    core: &DMatrix<f64>,
    eps: f64,
    pinv_rtol: f64,
) -> Result<LowRankFactors> {
    let q = core.nrows();
    if core.ncols() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            actual: core.ncols(),
        });
    }
    for m in [b_raw, c_raw] {
        if m.ncols() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                actual: m.ncols(),
            });
        }
    }
    let (qb, rb) = if b_orthonormal {
        (b_raw.clone(), DMatrix::identity(q, q))
    } else {
        thin_qr(b_raw)
    };
    let (qc, rc) = thin_qr(c_raw);

    let (core_inv, regularized) = pseudo_inverse(core, pinv_rtol)?;
    let mid = &rb * core_inv * rc.transpose();
    let (u, sv, v) = sorted_svd(mid)?;
    let s = zeta_rank(&sv, eps);
    let roots = DVector::from_iterator(s, sv[..s].iter().map(|x| x.sqrt()));
    let mut basis = &qb * u.columns(0, s);
    let mut coeffs = &qc * v.columns(0, s);
    for (k, r) in roots.iter().enumerate() {
        basis.column_mut(k).scale_mut(*r);
        coeffs.column_mut(k).scale_mut(*r);
    }
    Ok(LowRankFactors {
        basis,
        coeffs,
        eps,
        singular_values: sv[..s].to_vec(),
        spectrum: sv,
        converged: true,
        regularized,
        rounds: 0,
        evaluations: 0,
        pivot_columns: Vec::new(),
        spectral_change: 0.0,
    })
}

fn pseudo_inverse(a: &DMatrix<f64>, rtol: f64) -> Result<(DMatrix<f64>, bool)> {
    let (u, sv, v) = sorted_svd(a.clone())?;
    let top = sv.first().copied().unwrap_or(0.0);
    let mut regularized = false;
    let inv: Vec<f64> = sv
        .iter()
        .map(|&s| {
            if s > rtol * top && s > 0.0 {
                1.0 / s
            } else {
                regularized = true;
                0.0
            }
        })
        .collect();
    let mut vs = v;
    for (k, w) in inv.iter().enumerate() {
        vs.column_mut(k).scale_mut(*w);
    }
    Ok((vs * u.transpose(), regularized))
}

/// Thin SVD with singular values in descending order: `(U, σ, V)`.
///
/// Backed by faer: the cores met here are often rank deficient with a
/// clustered leading pair, where nalgebra's bidiagonal SVD can lose accuracy.
pub(crate) fn sorted_svd(a: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok((DMatrix::zeros(r, 0), Vec::new(), DMatrix::zeros(c, 0)));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("SVD input is not finite"));
    }
    let fa = faer::MatRef::from_column_major_slice(a.as_slice(), r, c);
    let svd = fa
        .thin_svd()
        .map_err(|e| Error::invalid(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    let sv = order.iter().map(|&i| s[i]).collect();
    let u = DMatrix::from_fn(r, k, |i, q| u[(i, order[q])]);
    let v = DMatrix::from_fn(c, k, |j, q| v[(j, order[q])]);
    Ok((u, sv, v))
}

/// Column and row cache for one factorization.
struct Fetcher<'a, M: LazyMatrix + ?Sized> {
    m: &'a M,
    exec: Exec,
    cols: HashMap<usize, Vec<f64>>,
    rows: HashMap<usize, Vec<f64>>,
    evaluations: usize,
}

impl<'a, M: LazyMatrix + ?Sized> Fetcher<'a, M> {
    fn new(m: &'a M, exec: Exec) -> Self {
        Self {
            m,
            exec,
            cols: HashMap::new(),
            rows: HashMap::new(),
            evaluations: 0,
        }
    }

    fn columns(&mut self, idx: &[usize]) -> DMatrix<f64> {
        let nrows = self.m.nrows();
        let missing: Vec<usize> = idx.iter().copied().filter(|j| !self.cols.contains_key(j)).collect();
        let m = self.m;
        let fetched = self.exec.map(missing.len(), |t| {
            let mut v = vec![0.0; nrows];
            m.column(missing[t], &mut v);
            v
        });
        self.evaluations += missing.len() * nrows;
        for (j, v) in missing.into_iter().zip(fetched) {
            self.cols.insert(j, v);
        }
        let mut out = DMatrix::zeros(nrows, idx.len());
        for (c, j) in idx.iter().enumerate() {
            out.column_mut(c).copy_from_slice(&self.cols[j]);
        }
        out
    }

    fn rows(&mut self, idx: &[usize]) -> DMatrix<f64> {
        let ncols = self.m.ncols();
        let missing: Vec<usize> = idx.iter().copied().filter(|i| !self.rows.contains_key(i)).collect();
        let m = self.m;
        let fetched = self.exec.map(missing.len(), |t| {
            let mut v = vec![0.0; ncols];
            m.row(missing[t], &mut v);
            v
        });
        self.evaluations += missing.len() * ncols;
        for (i, v) in missing.into_iter().zip(fetched) {
            self.rows.insert(i, v);
        }
        // ncols × |idx|: rows stored as columns of the transpose
        let mut out = DMatrix::zeros(ncols, idx.len());
        for (c, i) in idx.iter().enumerate() {
            out.column_mut(c).copy_from_slice(&self.rows[i]);
        }
        out
    }
}

/// Cross approximation starting from evenly spaced columns and the columns
/// with the largest probe-row entries.
pub fn cross_approximate<M: LazyMatrix + ?Sized>(m: &M, cfg: &CrossConfig) -> Result<LowRankFactors> {
    cross_approximate_from(m, cfg, None)
}

/// Cross approximation with an optional set of starting columns (for warm
/// starts from a related matrix); out-of-range indices are clamped.
pub fn cross_approximate_from<M: LazyMatrix + ?Sized>(
    m: &M,
    cfg: &CrossConfig,
    start: Option<&[usize]>,
) -> Result<LowRankFactors> {
    let (nrows, ncols) = (m.nrows(), m.ncols());
    if nrows == 0 || ncols == 0 {
        return Err(Error::invalid("cross approximation of an empty matrix"));
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::invalid(format!("accuracy must lie in (0, 1), got {}", cfg.eps)));
    }
    let cap = cfg.max_rank.min(nrows).min(ncols);
    if cfg.initial_rank == 0 || cfg.initial_rank > cfg.max_rank || cap == 0 {
        return Err(Error::invalid(format!(
            "need 1 ≤ r0 ({}) ≤ r_max ({})",
            cfg.initial_rank, cfg.max_rank
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fetch = Fetcher::new(m, cfg.exec);

    // a few full rows guard against columns the sampling never touched
    let probes: Vec<usize> = {
        let p = cfg.probe_rows.clamp(1, nrows);
        let mut v: Vec<usize> = (0..p).map(|t| ((2 * t + 1) * nrows) / (2 * p)).collect();
        v.dedup();
        v
    };
    let probe_vals = fetch.rows(&probes);

    let mut skeleton: Vec<usize> = match start {
        Some(s) if !s.is_empty() => s.iter().map(|&j| j.min(ncols - 1)).collect(),
        _ => {
            let r0 = cfg.initial_rank.min(cap);
            (0..r0).map(|t| ((2 * t + 1) * ncols) / (2 * r0)).collect()
        }
    };
    skeleton.extend(largest_columns(&probe_vals, cfg.initial_rank));
    skeleton.sort_unstable();
    skeleton.dedup();
    skeleton.truncate(cap);
    let mut target = (2 * skeleton.len()).clamp(1, cap);
    let mut prev_spectrum: Option<Vec<f64>> = None;
    let mut best: Option<LowRankFactors> = None;

    for round in 1..=cfg.max_rounds {
        let cols = enrich(&skeleton, target, ncols, &mut rng);
        let q = cols.len();

        let c = fetch.columns(&cols);
        let qc = orthonormal_columns(&c);
        let rows = maxvol(&qc, cfg.maxvol_tol, cfg.maxvol_sweeps)?;
        let r_t = fetch.rows(&rows);
        let core = qc.select_rows(rows.iter());
        let mut f = recompress_with(&qc, true, &r_t, &core, cfg.eps, cfg.pinv_rtol)?;
        f.rounds = round;
        f.evaluations = fetch.evaluations;
        let s = f.rank();

        let norm = norm2(&f.spectrum);
        let change = prev_spectrum
            .as_ref()
            .map(|p| spectral_distance(p, &f.spectrum) / if norm > 0.0 { norm } else { 1.0 })
            .unwrap_or(f64::INFINITY);
        f.spectral_change = change;
        let stable = prev_spectrum.is_some() && (change < cfg.eps || (norm == 0.0 && change == 0.0));
        let saturated = s >= q;

        let misfit = probe_residual(&f, &probes, &probe_vals);
        let misfit_norm = misfit.iter().sum::<f64>().sqrt();
        let probes_ok = misfit_norm <= PROBE_SLACK * cfg.eps * norm;

        f.pivot_columns = if s > 0 {
            sorted(&maxvol(&f.coeffs, cfg.maxvol_tol, cfg.maxvol_sweeps)?)
        } else {
            Vec::new()
        };

        if q >= ncols {
            // every column was sampled: the skeleton is exact
            f.converged = true;
            return Ok(f);
        }
        if !saturated && stable && probes_ok {
            f.converged = true;
            return Ok(f);
        }
        if saturated && q >= cap {
            f.converged = q >= nrows;
            return Ok(f);
        }
        skeleton = f.pivot_columns.clone();
        if !probes_ok {
            skeleton.extend(largest_misfits(&misfit, cfg.initial_rank));
            skeleton.sort_unstable();
            skeleton.dedup();
            skeleton.truncate(cap);
        }
        target = if saturated { (2 * q).min(cap) } else { (2 * s).clamp(1, cap) };
        target = target.max(skeleton.len()).min(cap);
        prev_spectrum = Some(f.spectrum.clone());
        f.converged = false;
        best = Some(f);
    }
    Ok(best.expect("at least one round"))
}

/// Columns holding the largest entries of the probe rows (`ncols × p`).
fn largest_columns(probe_vals: &DMatrix<f64>, count: usize) -> Vec<usize> {
    let scores: Vec<f64> = (0..probe_vals.nrows())
        .map(|j| probe_vals.row(j).iter().map(|v| v * v).sum())
        .collect();
    largest_misfits(&scores, count)
}

/// Indices of the `count` largest positive scores.
fn largest_misfits(scores: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] > 0.0).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Squared misfit of the factors on the probe rows, per column.
fn probe_residual(f: &LowRankFactors, probes: &[usize], probe_vals: &DMatrix<f64>) -> Vec<f64> {
    let approx = &f.coeffs * f.basis.select_rows(probes.iter()).transpose();
    (0..probe_vals.nrows())
        .map(|j| {
            probe_vals
                .row(j)
                .iter()
                .zip(approx.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect()
}

/// `skeleton` plus fresh random columns up to `target` entries, sorted.
fn enrich(skeleton: &[usize], target: usize, ncols: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cols: Vec<usize> = skeleton.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let need = target.saturating_sub(cols.len()).min(ncols - cols.len());
    if need > 0 {
        let mut taken = vec![false; ncols];
        for &j in &cols {
            taken[j] = true;
        }
        let free: Vec<usize> = (0..ncols).filter(|&j| !taken[j]).collect();
        let picks = sample(rng, free.len(), need);
        cols.extend(picks.iter().map(|t| free[t]));
        cols.sort_unstable();
    }
    cols
}

/// Thin Householder QR `(Q, R)`, `Q` with `min(rows, cols)` columns.
fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (r, c) = a.shape();
    let k = r.min(c);
    let fa = faer::MatRef::from_column_major_slice(a.as_slice(), r, c);
    let qr = fa.qr();
    let q = qr.compute_thin_Q();
    let rr = qr.thin_R();
    (
        DMatrix::from_fn(r, k, |i, j| q[(i, j)]),
        DMatrix::from_fn(k, c, |i, j| rr[(i, j)]),
    )
}

/// Orthonormal basis of the column space (same width as `c` when tall).
fn orthonormal_columns(c: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, q) = c.shape();
    let out = thin_qr(c).0;
    if out.iter().any(|v| !v.is_finite()) {
        return DMatrix::identity(r, q.min(r));
    }
    out
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
