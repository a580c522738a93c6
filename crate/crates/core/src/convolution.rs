//! Discrete convolution, Hankel generators and the basis convolutions that
//! drive one low-rank step.
//!
//! Convolution here follows the correlation convention
//! `c_i = Σ_j a_{i+j}·b_j` with `a` zero-padded outside `0..k`. For
//! `a ∈ ℝ^k`, `b ∈ ℝ^m` the full result has `m + k − 1` entries indexed by
//! `i = −(m−1)..=k−1`; it is stored with offset `m − 1`, so `c_i` lives at
//! position `i + m − 1`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::ConvolutionKernel;

/// Full correlation `c = a ∘ b` via FFT (length `m + k − 1`, offset `m − 1`).
pub fn convolve_full(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let len = a.len() + b.len() - 1;
    let out = FftCorrelator::new(b, len).correlate(a, None);
    Ok(out.0[..len].to_vec())
}

/// Direct `O(k·m)` evaluation of [`convolve_full`].
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let (k, m) = (a.len() as isize, b.len() as isize);
    Ok((-(m - 1)..k)
        .map(|i| {
            (0..m)
                .filter_map(|j| {
                    let idx = i + j;
                    (0..k).contains(&idx).then(|| a[idx as usize] * b[j as usize])
                })
                .sum()
        })
        .collect())
}

/// Entries `c_0..=c_{k−m}` of the correlation: the ones that need no padding.
pub fn correlate_valid(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let valid = a.len() - b.len() + 1;
    // a circular correlation of length ≥ len(a) leaves the valid part untouched
    let (full, _) = FftCorrelator::new(b, a.len()).correlate_circular(a, None);
    Ok(full[..valid].to_vec())
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("convolution of an empty vector"));
    }
    if a.len() < b.len() {
        return Err(Error::invalid(format!(
            "first operand must be at least as long as the second ({} < {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Correlates signals against a fixed real kernel with a cached spectrum.
///
/// Two real signals share one complex transform (real and imaginary parts).
#[derive(Clone)]
pub struct FftCorrelator {
    kernel_len: usize,
    fft_len: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftCorrelator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftCorrelator")
            .field("kernel_len", &self.kernel_len)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl FftCorrelator {
    /// `min_len` is the smallest transform length; it is rounded up to a
    /// power of two.
    pub fn new(kernel: &[f64], min_len: usize) -> Self {
        let fft_len = min_len.max(kernel.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        // reversed kernel p̂ turns the correlation into a plain convolution
        let mut spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (slot, &p) in spectrum.iter_mut().zip(kernel.iter().rev()) {
            slot.re = p;
        }
        forward.process(&mut spectrum);
        let scale = 1.0 / fft_len as f64;
        spectrum.iter_mut().for_each(|z| *z *= scale);
        Self {
            kernel_len: kernel.len(),
            fft_len,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    /// Linear correlation(s) in the stored-offset layout (`len(a) + m − 1`
    /// meaningful entries, offset `m − 1`). Requires
    /// `fft_len ≥ len(a) + m − 1`.
    pub fn correlate(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        debug_assert!(a.len() + self.kernel_len - 1 <= self.fft_len);
        self.run(a, b)
    }

    /// Circular correlation `c_i = Σ_j a_{(i+j) mod L}·b_j` for `i < L`, with
    /// the result rotated so that index `i` holds `c_i`.
    pub fn correlate_circular(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        debug_assert!(a.len() <= self.fft_len);
        let shift = self.kernel_len - 1;
        let (mut x, mut y) = self.run(a, b);
        x.rotate_left(shift);
        if !y.is_empty() {
            y.rotate_left(shift);
        }
        (x, y)
    }

    fn run(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (z, &v) in buf.iter_mut().zip(a) {
            z.re = v;
        }
        if let Some(b) = b {
            debug_assert!(b.len() <= self.fft_len);
            for (z, &v) in buf.iter_mut().zip(b) {
                z.im = v;
            }
        }
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        buf.iter_mut()
            .zip(&self.spectrum)
            .for_each(|(z, s)| *z *= s);
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let re = buf.iter().map(|z| z.re).collect();
        let im = if b.is_some() {
            buf.iter().map(|z| z.im).collect()
        } else {
            Vec::new()
        };
        (re, im)
    }
}

/// Hankel matrix `[aᵀ, b]_H ∈ ℝ^{k×k}` given by its top row `a ∈ ℝ^k` and
/// right column below the corner `b ∈ ℝ^{k−1}`:
/// `A_ij = a_{i+j}` for `i + j < k`, `b_{i+j−k}` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelSpec {
    row: Vec<f64>,
    col: Vec<f64>,
}

impl HankelSpec {
    pub fn new(row: Vec<f64>, col: Vec<f64>) -> Result<Self> {
        if row.is_empty() {
            return Err(Error::invalid("Hankel generator row is empty"));
        }
        if col.len() + 1 != row.len() {
            return Err(Error::DimensionMismatch {
                expected: row.len() - 1,
                actual: col.len(),
            });
        }
        Ok(Self { row, col })
    }

    /// `[aᵀ, 0]_H`: nonzero on and above the anti-diagonal.
    pub fn upper(row: Vec<f64>) -> Result<Self> {
        let k = row.len();
        Self::new(row, vec![0.0; k.saturating_sub(1)])
    }

    /// `[0ᵀ, b]_H`: zero on and above the anti-diagonal.
    pub fn lower(col: Vec<f64>) -> Result<Self> {
        let k = col.len() + 1;
        Self::new(vec![0.0; k], col)
    }

    pub fn dim(&self) -> usize {
        self.row.len()
    }

    pub fn row(&self) -> &[f64] {
        &self.row
    }

    pub fn col(&self) -> &[f64] {
        &self.col
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.dim();
        let s = i + j;
        if s < k {
            self.row[s]
        } else {
            self.col[s - k]
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| self.entry(i, j))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            row: self.row.iter().map(|v| alpha * v).collect(),
            col: self.col.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `[aᵀ, b]_H = [aᵀ, 0]_H + [0ᵀ, b]_H`.
    pub fn split(&self) -> (Self, Self) {
        (
            Self::upper(self.row.clone()).expect("nonempty"),
            Self::lower(self.col.clone()).expect("nonempty"),
        )
    }
}

/// `y_i = Σ_j A_ij·x_j` by explicit summation.
pub fn hankel_matvec_direct(h: &HankelSpec, x: &[f64]) -> Result<Vec<f64>> {
    let k = h.dim();
    if x.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: x.len(),
        });
    }
    Ok((0..k)
        .map(|i| (0..k).map(|j| h.entry(i, j) * x[j]).sum())
        .collect())
}

/// The products `k_i = U_i·p` and `t_i = W_i·p` for every basis column `u_i`,
/// where `U_i = [u_iᵀ, 0]_H` and `W_i = [0ᵀ, w_i]_H` with `w_i` the first
/// `M − 1` entries of `u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisConvolutions {
    window: usize,
    k_vecs: Vec<Vec<f64>>,
    t_vecs: Vec<Vec<f64>>,
}

impl BasisConvolutions {
    /// One length-`(2M−1)` correlation per column, two columns per transform.
    pub fn compute(basis: &DMatrix<f64>, correlator: &FftCorrelator, exec: Exec) -> Result<Self> {
        let m = basis.nrows();
        if m != correlator.kernel_len {
            return Err(Error::DimensionMismatch {
                expected: correlator.kernel_len,
                actual: m,
            });
        }
        if correlator.fft_len < 2 * m - 1 {
            return Err(Error::invalid("correlator transform too short for basis convolutions"));
        }
        let r = basis.ncols();
        let pairs = exec.map(r.div_ceil(2), |p| {
            let first = basis.column(2 * p);
            let second = (2 * p + 1 < r).then(|| basis.column(2 * p + 1));
            let (x, y) = correlator.correlate(
                first.as_slice(),
                second.as_ref().map(|c| c.as_slice()),
            );
            let mut out = vec![split_kt(&x, m)];
            if second.is_some() {
                out.push(split_kt(&y, m));
            }
            out
        });
        let (k_vecs, t_vecs) = pairs.into_iter().flatten().unzip();
        Ok(Self {
            window: m,
            k_vecs,
            t_vecs,
        })
    }

    pub fn rank(&self) -> usize {
        self.k_vecs.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn k_vecs(&self) -> &[Vec<f64>] {
        &self.k_vecs
    }

    pub fn t_vecs(&self) -> &[Vec<f64>] {
        &self.t_vecs
    }

    /// The stacked vector `g_i = (t_i, k_i)`.
    pub fn stacked(&self, i: usize) -> Vec<f64> {
        let mut g = self.t_vecs[i].clone();
        g.extend_from_slice(&self.k_vecs[i]);
        g
    }
}

/// Splits a stored-offset correlation of a length-`m` column with a
/// length-`m` kernel into `(k, t)`: `k_l = c_l`, `t_l = c_{l−m}`.
fn split_kt(c: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let k = c[m - 1..2 * m - 1].to_vec();
    let mut t = Vec::with_capacity(m);
    t.push(0.0);
    t.extend_from_slice(&c[..m - 1]);
    (k, t)
}

/// Convenience wrapper building the correlator from `kernel`.
pub fn basis_convolutions(
    basis: &DMatrix<f64>,
    kernel: &ConvolutionKernel,
    exec: Exec,
) -> Result<BasisConvolutions> {
    if basis.nrows() != kernel.len() {
        return Err(Error::DimensionMismatch {
            expected: kernel.len(),
            actual: basis.nrows(),
        });
    }
    let corr = FftCorrelator::new(kernel.samples(), 2 * kernel.len() - 1);
    BasisConvolutions::compute(basis, &corr, exec)
}
