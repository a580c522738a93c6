//! Error metrics, Runge order, Richardson extrapolation and the Hermite
//! rank diagnostic.

use nalgebra::DMatrix;

use crate::cross::{eps_rank, sorted_svd};
use crate::error::{Error, Result};
use crate::exec::Exec;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            actual: a.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("empty vectors"));
    }
    Ok(())
}

fn norm2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    norm2(a.iter().zip(b).map(|(x, y)| x - y))
}

/// `‖u − u_ref‖₂ / ‖u_ref‖₂`.
pub fn relative_error(u: &[f64], u_ref: &[f64]) -> Result<f64> {
    same_len(u, u_ref)?;
    let den = norm2(u_ref.iter().copied());
    if den == 0.0 {
        return Err(Error::invalid("reference vector has zero norm"));
    }
    Ok(diff_norm(u, u_ref) / den)
}

/// `max|u − u_ref| / max|u_ref|`.
pub fn relative_error_max(u: &[f64], u_ref: &[f64]) -> Result<f64> {
    same_len(u, u_ref)?;
    let den = u_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if den == 0.0 {
        return Err(Error::invalid("reference vector has zero norm"));
    }
    Ok(u.iter().zip(u_ref).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / den)
}

/// Observed order `p = log₂(‖u_{n/2} − u_{n/4}‖ / ‖u_n − u_{n/2}‖)` from three
/// solutions with step counts `n`, `n/2`, `n/4`.
pub fn runge_order(u_n: &[f64], u_n2: &[f64], u_n4: &[f64]) -> Result<f64> {
    same_len(u_n, u_n2)?;
    same_len(u_n4, u_n2)?;
    let fine = diff_norm(u_n, u_n2);
    let coarse = diff_norm(u_n2, u_n4);
    if fine == 0.0 || coarse == 0.0 {
        return Err(Error::UndefinedOrder(format!(
            "successive differences {coarse:e} and {fine:e}"
        )));
    }
    Ok((coarse / fine).log2())
}

/// `(2^p·u_n − u_{n/2}) / (2^p − 1)`.
pub fn richardson(u_n: &[f64], u_n2: &[f64], order: u32) -> Result<Vec<f64>> {
    same_len(u_n, u_n2)?;
    if order < 1 {
        return Err(Error::invalid("Richardson order must be at least 1"));
    }
    let w = 2f64.powi(order as i32);
    Ok(u_n
        .iter()
        .zip(u_n2)
        .map(|(a, b)| (w * a - b) / (w - 1.0))
        .collect())
}

/// Error of `u_n` against its own Richardson extrapolation with `u_{n/2}`.
pub fn richardson_error(u_n: &[f64], u_n2: &[f64], order: u32) -> Result<f64> {
    let r = richardson(u_n, u_n2, order)?;
    relative_error(u_n, &r)
}

/// One solution of a step-doubling sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub n: usize,
    pub u: Vec<f64>,
    pub rank: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dt: f64,
    /// Runge order of the raw solutions.
    pub p2: Option<f64>,
    /// Error of `u_n` against the second-order extrapolation.
    pub eps2: Option<f64>,
    /// Runge order of the second-order extrapolations.
    pub p4: Option<f64>,
    /// Error of the second-order extrapolation against the fourth-order one.
    pub eps4: Option<f64>,
    pub rank: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Rows for a sweep whose step counts double from entry to entry. Cells
    /// that need more coarse solutions than available are `None`.
    pub fn from_sweep(t_final: f64, entries: &[SweepEntry]) -> Result<Self> {
        for w in entries.windows(2) {
            if w[1].n != 2 * w[0].n {
                return Err(Error::invalid(format!(
                    "step counts must double: {} then {}",
                    w[0].n, w[1].n
                )));
            }
            same_len(&w[1].u, &w[0].u)?;
        }
        let r2: Vec<Option<Vec<f64>>> = (0..entries.len())
            .map(|i| {
                (i >= 1)
                    .then(|| richardson(&entries[i].u, &entries[i - 1].u, 2))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            let eps2 = match &r2[i] {
                Some(r) => Some(relative_error(&e.u, r)?),
                None => None,
            };
            let p2 = (i >= 2)
                .then(|| runge_order(&e.u, &entries[i - 1].u, &entries[i - 2].u).ok())
                .flatten();
            let eps4 = match (i >= 2).then(|| (&r2[i], &r2[i - 1])) {
                Some((Some(a), Some(b))) => Some(richardson_error(a, b, 4)?),
                _ => None,
            };
            let p4 = match (i >= 3).then(|| (&r2[i], &r2[i - 1], &r2[i - 2])) {
                Some((Some(a), Some(b), Some(c))) => runge_order(a, b, c).ok(),
                _ => None,
            };
            rows.push(ConvergenceRow {
                n: e.n,
                dt: t_final / e.n as f64,
                p2,
                eps2,
                p4,
                eps4,
                rank: e.rank,
                wall_seconds: e.wall_seconds,
            });
        }
        Ok(Self { t_final, rows })
    }

    pub fn row(&self, n: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Normalized Hermite functions `φ_0(x), …, φ_{l_max}(x)`.
pub fn hermite_functions(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(phi0);
    if l_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * x * phi0);
    }
    for l in 1..l_max {
        let lf = l as f64;
        let next = x * (2.0 / (lf + 1.0)).sqrt() * out[l] - (lf / (lf + 1.0)).sqrt() * out[l - 1];
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteStudyConfig {
    pub l_max: usize,
    /// Window length `M`.
    pub nrows: usize,
    /// Number of windows, i.e. the mesh level.
    pub ncols: usize,
    /// Half width `a` of one window; the mesh spacing is `2a/M`.
    pub half_width: f64,
    pub eps: f64,
    /// Leading singular values kept per row of the table.
    pub keep: usize,
    pub exec: Exec,
}

impl Default for HermiteStudyConfig {
    fn default() -> Self {
        Self {
            l_max: 32,
            nrows: 8000,
            ncols: 1024,
            half_width: 2.0,
            eps: 1e-8,
            keep: 10,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteRow {
    pub l: usize,
    /// Leading singular values, descending.
    pub singular_values: Vec<f64>,
    pub eps_rank: usize,
}

impl HermiteRow {
    pub fn ratio(&self, i: usize) -> Option<f64> {
        Some(self.singular_values.get(i)? / self.singular_values.first()?)
    }
}

/// Singular values of `(Φ_l)_{ij} = φ_l(x_{i+jM})` for `l = 0 … l_max` on the
/// mesh `x_i = −ncols·a + i·2a/M`. Columns where every `φ_l` underflows to
/// zero are dropped, which leaves the spectrum unchanged.
pub fn hermite_rank_study(cfg: &HermiteStudyConfig) -> Result<Vec<HermiteRow>> {
    if cfg.nrows == 0 || cfg.ncols == 0 {
        return Err(Error::invalid("empty Hermite matrix"));
    }
    if !(cfg.half_width > 0.0) {
        return Err(Error::invalid("half width must be positive"));
    }
    let m = cfg.nrows;
    let h = 2.0 * cfg.half_width / m as f64;
    let x0 = -(cfg.ncols as f64) * cfg.half_width;
    let point = |g: usize| x0 + g as f64 * h;
    let live: Vec<usize> = (0..cfg.ncols)
        .filter(|&j| (0..m).any(|i| hermite_functions(0, point(j * m + i))[0] != 0.0))
        .collect();
    let lc = live.len();

    let mut mats = vec![DMatrix::<f64>::zeros(m, lc); cfg.l_max + 1];
    for (c, &j) in live.iter().enumerate() {
        for i in 0..m {
            for (l, v) in hermite_functions(cfg.l_max, point(j * m + i)).into_iter().enumerate() {
                mats[l][(i, c)] = v;
            }
        }
    }
    let rows = cfg.exec.map(cfg.l_max + 1, |l| {
        let (_, sv, _) = sorted_svd(mats[l].clone())?;
        Ok(HermiteRow {
            l,
            eps_rank: eps_rank(&sv, cfg.eps),
            singular_values: sv.into_iter().take(cfg.keep).collect(),
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    /// `c_l = ∫ t(x)·φ_l(x) dx`.
    pub coefficients: Vec<f64>,
    /// Smallest `l₀` with `χ(l₀) < ε₁·χ(0)`, `χ(l') = Σ_{l>l'} c_l²`.
    pub l0: Option<usize>,
}

/// Hermite coefficients of `t` by trapezoidal quadrature on
/// `[−half_width, half_width]` with `points` nodes.
pub fn hermite_coefficients<F: Fn(f64) -> f64>(
    t: F,
    l_max: usize,
    eps1: f64,
    half_width: f64,
    points: usize,
) -> Result<HermiteExpansion> {
    if points < 3 || !(half_width > 0.0) {
        return Err(Error::invalid("quadrature needs at least 3 points on a positive interval"));
    }
    let h = 2.0 * half_width / (points - 1) as f64;
    let mut c = vec![0.0; l_max + 1];
    for i in 0..points {
        let x = -half_width + i as f64 * h;
        let w = if i == 0 || i + 1 == points { 0.5 * h } else { h };
        let tx = t(x);
        if !tx.is_finite() {
            return Err(Error::NonFinite { x, t: 0.0, value: tx });
        }
        for (cl, phi) in c.iter_mut().zip(hermite_functions(l_max, x)) {
            *cl += w * tx * phi;
        }
    }
    // quadrature noise floor
    let top = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in c.iter_mut() {
        if v.abs() < 1e-14 * top {
            *v = 0.0;
        }
    }
    let chi = |lp: usize| c.iter().skip(lp + 1).map(|v| v * v).sum::<f64>();
    let chi0 = chi(0);
    let l0 = (0..=l_max).find(|&lp| {
        let x = chi(lp);
        x == 0.0 || x < eps1 * chi0
    });
    Ok(HermiteExpansion {
        coefficients: c,
        l0,
    })
}
