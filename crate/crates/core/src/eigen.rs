//! Dominant eigenpairs of symmetric non-negative matrices with an
//! identically zero diagonal.
//!
//! Tridiagonal matrices go through Sturm-sequence bisection followed by
//! inverse iteration; wider bands fall back to shifted power iteration.

use crate::error::{Error, Result};

/// Hard cap on solver iterations.
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Default eigen-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Entries of the returned eigenvector smaller than this are set to zero.
pub const CLIP_BELOW: f64 = 1e-14;

/// Inverse iteration gives up after this many steps without residual progress.
const STAGNATION_WINDOW: usize = 64;

/// Result of a dominant-eigenpair solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Unit-norm, entrywise non-negative.
    pub vector: Vec<f64>,
    /// `||M v - lambda v||_2` of the returned pair.
    pub residual: f64,
    /// `lambda_1 - lambda_2` when the solver can compute it cheaply.
    pub spectral_gap: Option<f64>,
    /// Set when the gap is below ten times the requested tolerance; the
    /// returned vector is then one of several near-optimal choices.
    pub near_degenerate: bool,
    pub iterations: usize,
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with zero diagonal and off-diagonal `off`.
pub fn sturm_count(off: &[f64], x: f64) -> usize {
    let n = off.len() + 1;
    let guard = f64::MIN_POSITIVE.sqrt();
    let mut q = -x;
    let mut count = usize::from(q < 0.0);
    for i in 1..n {
        let prev = if q.abs() < guard { guard.copysign(q) } else { q };
        q = -x - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket `[lo, hi]` around the `rank`-th largest eigenvalue (`rank = 1` is
/// the largest) refined to floating-point resolution.
fn bisect_from_top(off: &[f64], rank: usize) -> (f64, f64) {
    let n = off.len() + 1;
    let bound = gershgorin_tridiagonal(off);
    let mut lo = -bound - f64::MIN_POSITIVE;
    let mut hi = bound + bound * 4.0 * f64::EPSILON + f64::MIN_POSITIVE;
    // The target lies in [lo, hi) iff fewer than n + 1 - rank eigenvalues are below lo.
    let below_target = n - rank;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(off, mid) <= below_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn gershgorin_tridiagonal(off: &[f64]) -> f64 {
    let n = off.len() + 1;
    (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i < n - 1 { off[i].abs() } else { 0.0 };
            left + right
        })
        .fold(0.0, f64::max)
}

fn tridiagonal_apply(off: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for i in 0..n {
        let mut s = 0.0;
        if i > 0 {
            s += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            s += off[i] * v[i + 1];
        }
        out[i] = s;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn rayleigh_residual(v: &[f64], mv: &[f64]) -> (f64, f64) {
    let lambda: f64 = v.iter().zip(mv).map(|(a, b)| a * b).sum();
    let r = v
        .iter()
        .zip(mv)
        .map(|(a, b)| (b - lambda * a).powi(2))
        .sum::<f64>()
        .sqrt();
    (lambda, r)
}

/// Sign-fix, clip and renormalize a converged eigenvector.
fn finish_vector(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    for x in v.iter_mut() {
        if x.abs() < CLIP_BELOW {
            *x = 0.0;
        }
    }
    normalize(v);
}

/// Largest eigenpair of the symmetric tridiagonal matrix with zero diagonal
/// and non-negative off-diagonal `off` (length `n - 1`).
pub fn tridiagonal_max_eigenpair(off: &[f64], tol: f64) -> Result<EigenPair> {
    check_tol(tol)?;
    let n = off.len() + 1;
    if n == 1 || off.iter().all(|&x| x == 0.0) {
        return Ok(trivial_pair_of(n));
    }
    let (_, hi) = bisect_from_top(off, 1);
    let (lo2, hi2) = bisect_from_top(off, 2);
    let lambda_bisect = hi;
    let gap = (lambda_bisect - 0.5 * (lo2 + hi2)).max(0.0);

    // sigma > lambda_max keeps sigma*I - M positive definite, and since M is
    // non-negative its inverse is entrywise non-negative.
    let scale = gershgorin_tridiagonal(off);
    let sigma = hi + 1e-10 * scale;
    let mut pivots = vec![0.0; n];
    pivots[0] = sigma;
    for i in 1..n {
        pivots[i] = sigma - off[i - 1] * off[i - 1] / pivots[i - 1];
        if !(pivots[i] > 0.0) {
            // Rounding pushed the shift onto the spectrum; nudge upwards.
            pivots[i] = f64::EPSILON * scale;
        }
    }

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut mv = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for iter in 1..=MAX_ITERATIONS {
        // Forward elimination and back substitution on (sigma I - M) x = v.
        for i in 1..n {
            v[i] += off[i - 1] * v[i - 1] / pivots[i - 1];
        }
        v[n - 1] /= pivots[n - 1];
        for i in (0..n - 1).rev() {
            v[i] = (v[i] + off[i] * v[i + 1]) / pivots[i];
        }
        normalize(&mut v);
        tridiagonal_apply(off, &v, &mut mv);
        let (_, residual) = rayleigh_residual(&v, &mv);
        if residual <= tol {
            finish_vector(&mut v);
            tridiagonal_apply(off, &v, &mut mv);
            let (lambda, residual) = rayleigh_residual(&v, &mv);
            return Ok(EigenPair {
                lambda,
                vector: v,
                residual,
                spectral_gap: Some(gap),
                near_degenerate: gap < 10.0 * tol,
                iterations: iter,
            });
        }
        if residual < best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_WINDOW {
                return Err(Error::Convergence {
                    iterations: iter,
                    residual: best,
                });
            }
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual: best,
    })
}

/// Symmetric banded matrix with zero diagonal: `bands[k - 1][i]` holds the
/// entry at `(i, i + k)`.
fn banded_apply(bands: &[Vec<f64>], v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (k1, band) in bands.iter().enumerate() {
        let k = k1 + 1;
        for (i, &m) in band.iter().enumerate() {
            out[i] += m * v[i + k];
            out[i + k] += m * v[i];
        }
    }
}

/// Largest eigenpair of a symmetric non-negative banded matrix with zero
/// diagonal, by power iteration on `M + s I` with `s` the largest absolute
/// row sum.
pub fn banded_max_eigenpair(bands: &[Vec<f64>], n: usize, tol: f64) -> Result<EigenPair> {
    check_tol(tol)?;
    if n == 0 {
        return Err(Error::Validation("empty matrix".into()));
    }
    if n == 1 || bands.iter().all(|b| b.is_empty()) {
        return Ok(trivial_pair_of(n));
    }
    let ones = vec![1.0; n];
    let mut row_sums = vec![0.0; n];
    banded_apply(bands, &ones, &mut row_sums);
    let shift = row_sums.iter().cloned().fold(0.0, f64::max);
    if shift == 0.0 {
        return Ok(trivial_pair_of(n));
    }

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut mv = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=MAX_ITERATIONS {
        banded_apply(bands, &v, &mut mv);
        let (_, r) = rayleigh_residual(&v, &mv);
        residual = r;
        if r <= tol {
            finish_vector(&mut v);
            banded_apply(bands, &v, &mut mv);
            let (lambda, residual) = rayleigh_residual(&v, &mv);
            return Ok(EigenPair {
                lambda,
                vector: v,
                residual,
                spectral_gap: None,
                near_degenerate: false,
                iterations: iter,
            });
        }
        for (x, m) in v.iter_mut().zip(&mv) {
            *x = m + shift * *x;
        }
        normalize(&mut v);
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// The zero matrix: eigenvalue zero, uniform vector, fully degenerate.
fn trivial_pair_of(n: usize) -> EigenPair {
    EigenPair {
        lambda: 0.0,
        vector: vec![1.0 / (n as f64).sqrt(); n],
        residual: 0.0,
        spectral_gap: if n > 1 { Some(0.0) } else { None },
        near_degenerate: n > 1,
        iterations: 0,
    }
}
