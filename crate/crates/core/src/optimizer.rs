//! Cost-matrix assembly and the optimal probe state.
//!
//! For a covariant measurement with the optimal seed, the average cost of a
//! real probe `alpha` is `c0 - alpha^T M alpha`, where `M` is a symmetric
//! non-negative banded matrix. Minimizing the cost is therefore a dominant
//! eigenvalue problem.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigen::{self, EigenPair};
use crate::error::{domain, Error, Result};
use crate::loss::{ArmChannel, ArmTable, LossModel, ProbeState};

/// Fourier coefficients of a symmetric cyclic cost `C(theta) = c0 + 2 sum_k c_k cos(k theta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSpec {
    c0: f64,
    /// `coeffs[k - 1] = c_k`, trailing zeros trimmed.
    coeffs: Vec<f64>,
}

impl CostSpec {
    /// Builds a cost from `c0` and `(k, c_k)` pairs with `k >= 1`.
    ///
    /// Off-diagonal coefficients must be non-positive: the seed measurement
    /// baked into the matrix formula is only optimal under that sign.
    pub fn new(c0: f64, offdiag: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if !c0.is_finite() {
            return Err(Error::Validation(format!("c0 must be finite, got {c0}")));
        }
        let map: BTreeMap<usize, f64> = offdiag.into_iter().collect();
        let bandwidth = map.keys().next_back().copied().unwrap_or(0);
        let mut coeffs = vec![0.0; bandwidth];
        for (&k, &c) in &map {
            if k == 0 {
                return Err(Error::Validation("off-diagonal index must be >= 1".into()));
            }
            if !c.is_finite() || c > 0.0 {
                return Err(Error::Validation(format!("c_{k} = {c} must be finite and <= 0")));
            }
            coeffs[k - 1] = c;
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(CostSpec { c0, coeffs })
    }

    /// `4 sin^2(theta / 2)`: `c0 = 2`, `c_1 = -1`.
    pub fn sin_squared() -> Self {
        CostSpec {
            c0: 2.0,
            coeffs: vec![-1.0],
        }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `c_k` for `k >= 1`, zero outside the support.
    pub fn coefficient(&self, k: usize) -> f64 {
        if k == 0 {
            self.c0
        } else {
            self.coeffs.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// Largest `k` with a non-zero `c_k`.
    pub fn bandwidth(&self) -> usize {
        self.coeffs.len()
    }

    /// Cost of an estimation error `theta` (radians).
    pub fn evaluate(&self, theta: f64) -> f64 {
        self.c0
            + 2.0
                * self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k1, c)| c * ((k1 + 1) as f64 * theta).cos())
                    .sum::<f64>()
    }
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::sin_squared()
    }
}

/// Symmetric banded matrix with zero diagonal whose top eigenpair solves the
/// optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n_total: usize,
    /// `bands[k - 1][i]` is the entry at `(i, i + k)`.
    bands: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Matrix dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.n_total + 1
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len()
    }

    /// Superdiagonal at offset `k` (`1 <= k <= bandwidth`).
    pub fn band(&self, k: usize) -> &[f64] {
        &self.bands[k - 1]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let k = hi - lo;
        if k == 0 || k > self.bands.len() {
            0.0
        } else {
            self.bands[k - 1][lo]
        }
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k1, band) in self.bands.iter().enumerate() {
            let k = k1 + 1;
            for (i, &m) in band.iter().enumerate() {
                out[i] += m * v[i + k];
                out[i + k] += m * v[i];
            }
        }
        out
    }

    /// `v^T M v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.entry(i, j)).collect()).collect()
    }
}

/// Precomputed arm channels for one `(N, loss)` pair.
struct Channels {
    a: ArmTable,
    b: ArmTable,
    n_total: usize,
}

impl Channels {
    fn new(n_total: usize, loss: &LossModel) -> Result<Self> {
        Ok(Channels {
            a: ArmChannel::new(loss.eta_a())?.tabulate(n_total),
            b: ArmChannel::new(loss.eta_b())?.tabulate(n_total),
            n_total,
        })
    }

    /// `sum_{l_a, l_b} beta_n beta_{n-k}`. The double sum factorizes into an
    /// arm-a overlap between `n` and `n - k` photons and an arm-b overlap
    /// between `N - n` and `N - n + k`.
    fn element(&self, n: usize, k: usize) -> f64 {
        let m = self.n_total - n;
        self.a.overlap(n, n - k) * self.b.overlap(m, m + k)
    }
}

/// Unscaled band entry `A_{n-k,n} = sum_{l_a <= n-k, l_b <= N-n} beta_n beta_{n-k}`.
pub fn matrix_element(n_total: usize, n: usize, k: usize, loss: &LossModel) -> Result<f64> {
    if k == 0 || k > n || n > n_total {
        return domain(format!("need 1 <= k <= n <= N, got k={k}, n={n}, N={n_total}"));
    }
    let m = n_total - n;
    let a = ArmChannel::new(loss.eta_a())?.overlap(n, n - k);
    let b = ArmChannel::new(loss.eta_b())?.overlap(m, m + k);
    Ok(a * b)
}

/// Assembles `M_{n-k,n} = -c_k A_{n-k,n}` for every band of the cost.
pub fn build_cost_matrix(n_total: usize, loss: &LossModel, cost: &CostSpec) -> Result<CostMatrix> {
    let channels = Channels::new(n_total, loss)?;
    let width = cost.bandwidth().min(n_total);
    let bands = (1..=width)
        .map(|k| {
            let weight = -cost.coefficient(k);
            (k..=n_total)
                .map(|n| if weight == 0.0 { 0.0 } else { weight * channels.element(n, k) })
                .collect()
        })
        .collect();
    Ok(CostMatrix { n_total, bands })
}

/// Dominant eigenpair of a cost matrix: bisection plus inverse iteration
/// when tridiagonal, shifted power iteration for wider bands.
pub fn max_eigenpair(matrix: &CostMatrix, tol: f64) -> Result<EigenPair> {
    match matrix.bandwidth() {
        0 => eigen::tridiagonal_max_eigenpair(&vec![0.0; matrix.n_total], tol),
        1 => eigen::tridiagonal_max_eigenpair(matrix.band(1), tol),
        _ => eigen::banded_max_eigenpair(&matrix.bands, matrix.dim(), tol),
    }
}

/// Optimal probe and minimal average cost for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalSolution {
    pub lambda_max: f64,
    pub state: ProbeState,
    /// `c0 - lambda_max`.
    pub avg_cost: f64,
    pub residual: f64,
    pub spectral_gap: Option<f64>,
    pub near_degenerate: bool,
}

impl OptimalSolution {
    /// Root-mean cost `sqrt(avg_cost)`, the usual phase uncertainty.
    pub fn delta_phi(&self) -> f64 {
        self.avg_cost.max(0.0).sqrt()
    }
}

/// Builds the cost matrix, solves for its top eigenpair and packages the
/// optimal state with its cost.
pub fn optimize(n_total: usize, loss: &LossModel, cost: &CostSpec, tol: f64) -> Result<OptimalSolution> {
    let matrix = build_cost_matrix(n_total, loss, cost)?;
    let pair = max_eigenpair(&matrix, tol)?;
    let state = ProbeState::new(pair.vector)?;
    Ok(OptimalSolution {
        lambda_max: pair.lambda,
        state,
        avg_cost: cost.c0() - pair.lambda,
        residual: pair.residual,
        spectral_gap: pair.spectral_gap,
        near_degenerate: pair.near_degenerate,
    })
}
