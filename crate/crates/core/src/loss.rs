//! Photon-loss combinatorics for the two-arm beam-splitter loss model.
//!
//! Each arm is a beam splitter of power transmission `eta`; a Fock state with
//! `n` photons in that arm loses `l` of them with binomial probability
//! `C(n, l) (1 - eta)^l eta^(n - l)`. Everything downstream only needs the
//! square-root weights built from these probabilities, so the conditional
//! output states themselves are never materialized.

use crate::error::{domain, Error, Result};
use crate::special::ln_binomial_pmf;

/// Largest photon number for which the direct integer formula is used.
const DIRECT_LIMIT: usize = 30;

/// Tolerance on `sum(alpha_n^2) = 1` accepted by [`ProbeState::new`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Power transmissions of the two interferometer arms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossModel {
    eta_a: f64,
    eta_b: f64,
}

impl LossModel {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self> {
        check_eta(eta_a)?;
        check_eta(eta_b)?;
        Ok(LossModel { eta_a, eta_b })
    }

    /// Same transmission in both arms.
    pub fn equal(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn lossless() -> Self {
        LossModel {
            eta_a: 1.0,
            eta_b: 1.0,
        }
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    pub fn min_eta(&self) -> f64 {
        self.eta_a.min(self.eta_b)
    }

    pub fn is_equal_arms(&self) -> bool {
        self.eta_a == self.eta_b
    }

    pub fn is_lossless(&self) -> bool {
        self.eta_a == 1.0 && self.eta_b == 1.0
    }

    /// The model with the two arms exchanged.
    pub fn swapped(&self) -> Self {
        LossModel {
            eta_a: self.eta_b,
            eta_b: self.eta_a,
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return domain(format!("transmission {eta} outside [0, 1]"));
    }
    Ok(())
}

/// A pure `N`-photon two-mode probe `sum_n alpha_n |n, N - n>` with real
/// amplitudes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProbeState {
    amplitudes: Vec<f64>,
}

impl ProbeState {
    /// Wraps an amplitude vector, rejecting it unless it is normalized.
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Validation("probe state needs at least one amplitude".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm2 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "amplitudes not normalized: sum of squares = {norm2:.17}"
            )));
        }
        Ok(ProbeState { amplitudes })
    }

    /// Rescales an arbitrary non-zero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<f64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Validation("cannot normalize a zero or non-finite vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    /// Total photon number `N`.
    pub fn n_total(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// `sum_n alpha_n^4`; grows as the amplitude profile becomes more peaked.
    pub fn inverse_participation_ratio(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.powi(4)).sum()
    }
}

/// Optimal lossless probe: `alpha_n = sqrt(2/(N+2)) sin((n+1) pi / (N+2))`.
pub fn lossless_sine_state(n_total: usize) -> ProbeState {
    let m = (n_total + 2) as f64;
    let scale = (2.0 / m).sqrt();
    let amplitudes = (0..=n_total)
        .map(|n| scale * ((n + 1) as f64 * std::f64::consts::PI / m).sin())
        .collect();
    ProbeState { amplitudes }
}

fn choose_exact(n: usize, l: usize) -> u64 {
    let l = l.min(n - l);
    (0..l).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn check_counts(n: usize, l: usize, eta: f64) -> Result<()> {
    if l > n {
        return domain(format!("cannot lose {l} photons out of {n}"));
    }
    check_eta(eta)
}

/// Probability `C(n,l) (1-eta)^l eta^(n-l)` of losing `l` of `n` photons.
///
/// Uses exact integer binomials for `n <= 30` and a log-domain saddle-point
/// evaluation above that, so the result stays finite for arbitrarily large `n`.
pub fn binomial_loss_prob(n: usize, l: usize, eta: f64) -> Result<f64> {
    check_counts(n, l, eta)?;
    if n <= DIRECT_LIMIT {
        Ok(direct_loss_prob(n, l, eta))
    } else {
        Ok(ln_loss_prob_unchecked(n, l, eta).exp())
    }
}

/// Natural log of [`binomial_loss_prob`]; `-inf` where the probability vanishes.
pub fn ln_binomial_loss_prob(n: usize, l: usize, eta: f64) -> Result<f64> {
    check_counts(n, l, eta)?;
    Ok(ln_loss_prob_unchecked(n, l, eta))
}

pub(crate) fn direct_loss_prob(n: usize, l: usize, eta: f64) -> f64 {
    choose_exact(n, l) as f64 * (1.0 - eta).powi(l as i32) * eta.powi((n - l) as i32)
}

fn ln_loss_prob_unchecked(n: usize, l: usize, eta: f64) -> f64 {
    ln_binomial_pmf(l as u64, n as u64, 1.0 - eta, eta)
}

/// `beta_n^{l_a,l_b} = sqrt(B_{l_a}^n(eta_a) B_{l_b}^{N-n}(eta_b))`.
pub fn beta_weight(n_total: usize, n: usize, l_a: usize, l_b: usize, loss: &LossModel) -> Result<f64> {
    if n > n_total {
        return domain(format!("photon index {n} exceeds N = {n_total}"));
    }
    check_counts(n, l_a, loss.eta_a)?;
    check_counts(n_total - n, l_b, loss.eta_b)?;
    let ln = ln_loss_prob_unchecked(n, l_a, loss.eta_a)
        + ln_loss_prob_unchecked(n_total - n, l_b, loss.eta_b);
    Ok((0.5 * ln).exp())
}

/// `sum_{l_a, l_b} beta^2` for one basis state; equals one for any loss.
pub fn survival_normalization_check(n_total: usize, n: usize, loss: &LossModel) -> Result<f64> {
    if n > n_total {
        return domain(format!("photon index {n} exceeds N = {n_total}"));
    }
    let mut total = 0.0;
    for l_a in 0..=n {
        for l_b in 0..=(n_total - n) {
            total += beta_weight(n_total, n, l_a, l_b, loss)?.powi(2);
        }
    }
    Ok(total)
}

/// Loss channel for one arm at a fixed transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmChannel {
    eta: f64,
}

impl ArmChannel {
    pub fn new(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(ArmChannel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `ln B_l^n(eta)` for `l <= n`.
    pub fn ln_prob(&self, n: usize, l: usize) -> f64 {
        ln_loss_prob_unchecked(n, l, self.eta)
    }

    /// `ln B_l^n(eta)` for `l = 0..=n`.
    pub fn ln_row(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|l| self.ln_prob(n, l)).collect()
    }

    /// `sum_l sqrt(B_l^p B_l^q)`, the transition amplitude between photon
    /// numbers `p` and `q` surviving the same number of losses.
    pub fn overlap(&self, p: usize, q: usize) -> f64 {
        row_overlap(&self.ln_row(p), &self.ln_row(q))
    }

    /// Every row up to `n_max`, for repeated queries.
    pub fn tabulate(&self, n_max: usize) -> ArmTable {
        let mut ln_probs = Vec::with_capacity((n_max + 1) * (n_max + 2) / 2);
        for n in 0..=n_max {
            ln_probs.extend((0..=n).map(|l| self.ln_prob(n, l)));
        }
        ArmTable { n_max, ln_probs }
    }
}

fn row_overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (0.5 * (x + y)).exp()).sum()
}

/// All `ln B_l^n(eta)` with `l <= n <= n_max`, stored row by row.
#[derive(Debug, Clone)]
pub struct ArmTable {
    n_max: usize,
    /// Row `n` starts at `n (n + 1) / 2`.
    ln_probs: Vec<f64>,
}

impl ArmTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let start = n * (n + 1) / 2;
        &self.ln_probs[start..=start + n]
    }

    /// `ln B_l^n(eta)`; callers guarantee `l <= n <= n_max`.
    #[inline]
    pub fn ln_prob(&self, n: usize, l: usize) -> f64 {
        self.ln_probs[n * (n + 1) / 2 + l]
    }

    /// Same as [`ArmChannel::overlap`], from the table.
    pub fn overlap(&self, p: usize, q: usize) -> f64 {
        row_overlap(self.row(p), self.row(q))
    }
}
