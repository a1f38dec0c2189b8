//! Closed-form bounds and the classical coherent-state benchmark.
//!
//! The quantum bound replaces every band entry of the cost matrix by the
//! largest one; a constant-band tridiagonal of size `N + 1` has top
//! eigenvalue `2 a cos(pi / (N + 2))`, which majorizes the true optimum.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::loss::{ArmChannel, LossModel};
use crate::optimizer::{build_cost_matrix, CostSpec};
use crate::special::ln_poisson_pmf;

/// Relative spread within which band entries count as tied for the maximum.
pub const BAND_TIE_TOL: f64 = 1e-12;

/// Default relative accuracy of the Poisson series.
pub const BELL_REL_TOL: f64 = 1e-15;

/// Which asymptotic relaxation a bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `eta_a = eta_b = eta`; largest band entry sits mid-band.
    EqualArms,
    /// Weaker arm keeps `eta = min(eta_a, eta_b)`, the other is made lossless.
    OneArm,
}

impl BoundForm {
    /// Equal-arm form when the transmissions coincide, otherwise the relaxation.
    pub fn natural(loss: &LossModel) -> Self {
        if loss.is_equal_arms() {
            BoundForm::EqualArms
        } else {
            BoundForm::OneArm
        }
    }
}

/// Largest first-band entry `A_{n,n-1}` and the smallest `n` attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandMax {
    pub value: f64,
    pub argmax_n: usize,
}

pub fn max_band_element(n_total: usize, loss: &LossModel) -> Result<BandMax> {
    if n_total == 0 {
        return domain("N = 0 has no off-diagonal band");
    }
    let m = build_cost_matrix(n_total, loss, &CostSpec::sin_squared())?;
    let band = m.band(1);
    let value = band.iter().cloned().fold(0.0, f64::max);
    let threshold = value - BAND_TIE_TOL * value;
    let idx = band.iter().position(|&x| x >= threshold).unwrap_or(0);
    // band[i] sits at (i, i + 1), i.e. A_{n, n-1} with n = i + 1.
    Ok(BandMax {
        value,
        argmax_n: idx + 1,
    })
}

/// Top eigenvalue `2 a_up cos(pi / (N + 2))` of the `(N+1)`-dimensional
/// tridiagonal matrix with constant band `a_up`.
pub fn majorizer_lambda_max(a_up: f64, n_total: usize) -> f64 {
    2.0 * a_up * (PI / (n_total + 2) as f64).cos()
}

/// Finite-`N` lower bound on the average `4 sin^2` cost with transmission
/// `eta` in one arm and a lossless second arm. It also bounds any two-arm
/// model whose weaker arm has transmission `eta`.
pub fn finite_n_quantum_bound(n_total: usize, eta: f64) -> Result<f64> {
    if n_total == 0 {
        return domain("finite-N bound needs N >= 1");
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("finite-N bound needs 0 < eta <= 1, got {eta}"));
    }
    let a_up = ArmChannel::new(eta)?.overlap(n_total, n_total - 1);
    Ok((2.0 - majorizer_lambda_max(a_up, n_total)).max(0.0))
}

/// Leading `1/N` term of the quantum lower bound: `(1 - eta) / (eta N)` for
/// equal arms, `(1 - eta) / (4 eta N)` for the one-arm relaxation with
/// `eta = min(eta_a, eta_b)`. `O(1/N^2)` corrections are dropped.
pub fn asymptotic_quantum_bound(n_total: usize, loss: &LossModel, form: BoundForm) -> Result<f64> {
    if n_total == 0 {
        return domain("asymptotic bound needs N >= 1");
    }
    let eta = form_eta(loss, form)?;
    let n = n_total as f64;
    Ok(match form {
        BoundForm::EqualArms => (1.0 - eta) / (eta * n),
        BoundForm::OneArm => (1.0 - eta) / (4.0 * eta * n),
    })
}

fn form_eta(loss: &LossModel, form: BoundForm) -> Result<f64> {
    let eta = match form {
        BoundForm::EqualArms => {
            if !loss.is_equal_arms() {
                return domain(format!(
                    "equal-arm form needs eta_a = eta_b, got ({}, {})",
                    loss.eta_a(),
                    loss.eta_b()
                ));
            }
            loss.eta_a()
        }
        BoundForm::OneArm => loss.min_eta(),
    };
    if eta >= 1.0 {
        return domain("lossless: no 1/N floor (Heisenberg regime)");
    }
    if eta <= 0.0 {
        return domain("zero transmission: no phase information");
    }
    Ok(eta)
}

/// Poisson expectations needed by the coherent-state benchmark.
struct PoissonSqrt {
    /// `E[sqrt(n)]`.
    mean_sqrt: f64,
    /// `E[1 - sqrt(n / x)]`, accumulated without cancellation.
    deficit: f64,
}

fn poisson_sqrt(x: f64, rel_tol: f64) -> PoissonSqrt {
    if x == 0.0 {
        return PoissonSqrt {
            mean_sqrt: 0.0,
            deficit: 1.0,
        };
    }
    let sx = x.sqrt();
    let tol_abs = rel_tol * 0.1 * (1.0f64).min(1.0 / x);
    let upper_stop = x + 12.0 * sx + 30.0;
    let lower_stop = x - 12.0 * sx - 30.0;

    let mode = x.floor();
    let m = mode as u64;
    let p_mode = ln_poisson_pmf(m, x).exp();

    let term = |n: f64, p: f64| -> (f64, f64, f64) {
        let sn = n.sqrt();
        // 1 - sqrt(n/x) = (x - n) / (x + sqrt(n x))
        (p, p * sn, p * (x - n) / (x + sn * sx))
    };

    let (mut mass, mut sum_sqrt, mut sum_def) = term(mode, p_mode);

    // Upward from the mode: p_{n+1} / p_n = x / (n + 1) < 1 and the sqrt weight
    // grows by at most sqrt((n+1)/n), so the remaining tail is geometric.
    let mut p = p_mode;
    let mut n = mode;
    loop {
        n += 1.0;
        p *= x / n;
        let (a, b, c) = term(n, p);
        mass += a;
        sum_sqrt += b;
        sum_def += c;
        if n >= upper_stop {
            let r = x / (n * (n + 1.0)).sqrt();
            let tail = p * n.sqrt() * r / (1.0 - r);
            if tail <= tol_abs || p == 0.0 {
                break;
            }
        }
    }

    // Downward: p_{n-1} / p_n = n / x, bounded by the current ratio.
    let mut p = p_mode;
    let mut n = mode;
    while n > 0.0 {
        p *= n / x;
        n -= 1.0;
        let (a, b, c) = term(n, p);
        mass += a;
        sum_sqrt += b;
        sum_def += c;
        if n <= lower_stop {
            let r = n / x;
            let tail = p * n.sqrt().max(1.0) * r / (1.0 - r);
            if tail <= tol_abs || p == 0.0 {
                break;
            }
        }
    }

    PoissonSqrt {
        mean_sqrt: sum_sqrt / mass,
        deficit: sum_def / mass,
    }
}

/// Bell polynomial of order one half, `e^{-x} sum_n x^n sqrt(n) / n!`,
/// i.e. the mean of `sqrt(n)` for `n ~ Poisson(x)`.
pub fn bell_half(x: f64, rel_tol: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return domain(format!("bell_half needs finite x >= 0, got {x}"));
    }
    if !(rel_tol > 0.0) {
        return domain("rel_tol must be positive");
    }
    Ok(poisson_sqrt(x, rel_tol).mean_sqrt)
}

/// Average `4 sin^2` cost of a coherent state of mean photon number
/// `n_mean` split with transmission `tau` into the two lossy arms.
pub fn classical_cost(n_mean: f64, loss: &LossModel, tau: f64) -> Result<f64> {
    if !(n_mean > 0.0 && n_mean.is_finite()) {
        return domain(format!("mean photon number must be positive, got {n_mean}"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return domain(format!("input splitting tau must lie in (0, 1), got {tau}"));
    }
    let a = n_mean * loss.eta_a() * tau;
    let b = n_mean * loss.eta_b() * (1.0 - tau);
    if a == 0.0 || b == 0.0 {
        return Ok(2.0);
    }
    // 2 - 2 B(a) B(b) / sqrt(a b) with B(x)/sqrt(x) = 1 - h(x).
    let ha = poisson_sqrt(a, BELL_REL_TOL).deficit;
    let hb = poisson_sqrt(b, BELL_REL_TOL).deficit;
    Ok(2.0 * (ha + hb - ha * hb))
}

/// [`classical_cost`] with the sweep convention for `tau` in `{0, 1}`: all
/// light in one arm carries no phase information, cost 2, flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalEval {
    pub cost: f64,
    pub degenerate_split: bool,
}

pub fn classical_cost_lenient(n_mean: f64, loss: &LossModel, tau: f64) -> Result<ClassicalEval> {
    if tau == 0.0 || tau == 1.0 {
        return Ok(ClassicalEval {
            cost: 2.0,
            degenerate_split: true,
        });
    }
    Ok(ClassicalEval {
        cost: classical_cost(n_mean, loss, tau)?,
        degenerate_split: false,
    })
}

/// Asymptotically optimal input splitting `1 / (1 + sqrt(eta_a / eta_b))`.
pub fn classical_optimal_tau(loss: &LossModel) -> Result<f64> {
    if loss.eta_a() <= 0.0 || loss.eta_b() <= 0.0 {
        return domain("optimal splitting needs both transmissions positive");
    }
    Ok(1.0 / (1.0 + (loss.eta_a() / loss.eta_b()).sqrt()))
}

/// Splitting that minimizes the finite-`n_mean` classical cost, by golden
/// section on `(0, 1)`. Returns `(tau, cost)`.
pub fn minimize_classical_tau(n_mean: f64, loss: &LossModel, tau_tol: f64) -> Result<(f64, f64)> {
    if !(tau_tol > 0.0) {
        return domain("tau tolerance must be positive");
    }
    if loss.eta_a() <= 0.0 || loss.eta_b() <= 0.0 {
        return domain("splitting optimization needs both transmissions positive");
    }
    let f = |t: f64| classical_cost(n_mean, loss, t);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tau_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let tau = 0.5 * (lo + hi);
    Ok((tau, f(tau)?))
}

/// First-order classical cost at splitting `tau`:
/// `(1/(tau eta_a) + 1/((1-tau) eta_b)) / 4N`.
pub fn classical_asymptotic_cost_at(n_mean: f64, loss: &LossModel, tau: f64) -> Result<f64> {
    if !(n_mean > 0.0) || !(tau > 0.0 && tau < 1.0) {
        return domain("need n_mean > 0 and 0 < tau < 1");
    }
    if loss.eta_a() <= 0.0 || loss.eta_b() <= 0.0 {
        return domain("asymptotic classical cost needs both transmissions positive");
    }
    Ok((1.0 / (tau * loss.eta_a()) + 1.0 / ((1.0 - tau) * loss.eta_b())) / (4.0 * n_mean))
}

/// First-order classical cost at the optimal splitting:
/// `(1/sqrt(eta_a) + 1/sqrt(eta_b))^2 / 4N`.
pub fn classical_asymptotic_cost(n_mean: f64, loss: &LossModel) -> Result<f64> {
    if !(n_mean > 0.0) {
        return domain("need n_mean > 0");
    }
    if loss.eta_a() <= 0.0 || loss.eta_b() <= 0.0 {
        return domain("asymptotic classical cost needs both transmissions positive");
    }
    let s = 1.0 / loss.eta_a().sqrt() + 1.0 / loss.eta_b().sqrt();
    Ok(s * s / (4.0 * n_mean))
}

/// Asymptotic upper bound on `dphi_classical / dphi_quantum`, using the
/// equal-arm bound when the arms match and the one-arm relaxation otherwise.
pub fn gain_factor(loss: &LossModel) -> Result<f64> {
    gain_factor_for(loss, BoundForm::natural(loss))
}

pub fn gain_factor_for(loss: &LossModel, form: BoundForm) -> Result<f64> {
    let eta = match form_eta(loss, form) {
        Ok(eta) => eta,
        // Nothing survives: classical and quantum are equally blind.
        Err(_) if loss.min_eta() == 0.0 && (form == BoundForm::OneArm || loss.is_equal_arms()) => {
            return Ok(1.0)
        }
        Err(e) => return Err(e),
    };
    Ok(match form {
        BoundForm::EqualArms => 1.0 / (1.0 - eta).sqrt(),
        BoundForm::OneArm => {
            let s = eta.sqrt();
            ((1.0 + s) / (1.0 - s)).sqrt()
        }
    })
}

/// Every closed-form quantity for one `(N, loss)` point. Fields are `None`
/// where the quantity is undefined (for example the gain when lossless).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n_total: usize,
    pub loss: LossModel,
    pub form: BoundForm,
    pub finite_n_bound: Option<f64>,
    pub asymptotic_bound: Option<f64>,
    pub band_max: Option<BandMax>,
    pub majorizer_lambda: Option<f64>,
    pub classical_cost: Option<f64>,
    pub classical_tau: Option<f64>,
    pub gain_factor: Option<f64>,
}

pub fn bound_report(n_total: usize, loss: &LossModel, form: BoundForm) -> Result<BoundReport> {
    if form == BoundForm::EqualArms && !loss.is_equal_arms() {
        return domain("equal-arm form needs eta_a = eta_b");
    }
    let band_max = max_band_element(n_total, loss).ok();
    let classical_tau = classical_optimal_tau(loss).ok();
    let classical = match classical_tau {
        Some(tau) if n_total > 0 => classical_cost(n_total as f64, loss, tau).ok(),
        _ => None,
    };
    Ok(BoundReport {
        n_total,
        loss: *loss,
        form,
        finite_n_bound: finite_n_quantum_bound(n_total, loss.min_eta()).ok(),
        asymptotic_bound: asymptotic_quantum_bound(n_total, loss, form).ok(),
        majorizer_lambda: band_max.map(|b| majorizer_lambda_max(b.value, n_total)),
        band_max,
        classical_cost: classical,
        classical_tau,
        gain_factor: gain_factor_for(loss, form).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::DEFAULT_TOL;
    use crate::optimizer::optimize;

    /// Compensated direct series `e^{-x} sum x^n sqrt(n) / n!` over `terms` terms.
    fn bell_series(x: f64, terms: usize) -> f64 {
        let mut t = (-x).exp();
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for n in 1..terms {
            t *= x / n as f64;
            let y = t * (n as f64).sqrt() - c;
            let z = s + y;
            c = (z - s) - y;
            s = z;
        }
        s
    }

    #[test]
    fn band_max_locations() {
        let lossless = max_band_element(9, &LossModel::lossless()).unwrap();
        assert_eq!(lossless.value, 1.0);
        assert_eq!(lossless.argmax_n, 1);
        let one_arm = max_band_element(40, &LossModel::new(0.7, 1.0).unwrap()).unwrap();
        assert_eq!(one_arm.argmax_n, 40);
        for n_total in [2usize, 3, 10, 11] {
            let eq = max_band_element(n_total, &LossModel::equal(0.6).unwrap()).unwrap();
            assert_eq!(eq.argmax_n, n_total.div_ceil(2), "N={n_total}");
        }
        assert!(max_band_element(0, &LossModel::lossless()).is_err());
    }

    #[test]
    fn majorizer_examples() {
        assert!((majorizer_lambda_max(1.0, 5) - 2.0 * (PI / 7.0).cos()).abs() < 1e-15);
        assert!((majorizer_lambda_max(0.5, 2) - 0.5f64.sqrt()).abs() < 1e-15);
        // 3x3 constant band 0.5 has eigenvalues 0, +-0.5 sqrt(2).
        let pair = crate::eigen::tridiagonal_max_eigenpair(&[0.5, 0.5], DEFAULT_TOL).unwrap();
        assert!((pair.lambda - majorizer_lambda_max(0.5, 2)).abs() < 1e-15);
    }

    #[test]
    fn finite_bound_examples() {
        for n_total in [1usize, 4, 50] {
            let b = finite_n_quantum_bound(n_total, 1.0).unwrap();
            let exact = 2.0 * (1.0 - (PI / (n_total + 2) as f64).cos());
            assert!((b - exact).abs() < 1e-15);
        }
        for &eta in &[0.1, 0.5, 0.9] {
            let b = finite_n_quantum_bound(1, eta).unwrap();
            assert!((b - (2.0 - f64::sqrt(eta))).abs() < 1e-15);
        }
        let b = finite_n_quantum_bound(10_000, 0.8).unwrap();
        assert!((b / 6.25e-6 - 1.0).abs() < 0.05, "{b}");
        assert!(finite_n_quantum_bound(3, 0.0).is_err());
        assert!(finite_n_quantum_bound(0, 0.5).is_err());
    }

    #[test]
    fn finite_bound_dominated_by_optimum() {
        let cost = CostSpec::sin_squared();
        for n_total in [2usize, 7, 30] {
            for &eta in &[0.2, 0.5, 0.9] {
                let bound = finite_n_quantum_bound(n_total, eta).unwrap();
                let opt = optimize(n_total, &LossModel::new(eta, 1.0).unwrap(), &cost, DEFAULT_TOL).unwrap();
                assert!(bound < opt.avg_cost);
            }
        }
    }

    #[test]
    fn asymptotic_examples() {
        let eq = LossModel::equal(0.8).unwrap();
        let a = asymptotic_quantum_bound(1000, &eq, BoundForm::EqualArms).unwrap();
        assert!((a - 2.5e-4).abs() < 1e-18);
        let b = asymptotic_quantum_bound(1000, &eq, BoundForm::OneArm).unwrap();
        assert!((b - 6.25e-5).abs() < 1e-18);
        assert!((a - 4.0 * b).abs() < 1e-18);
        assert!(asymptotic_quantum_bound(10, &LossModel::lossless(), BoundForm::OneArm).is_err());
        let uneq = LossModel::new(0.5, 0.9).unwrap();
        assert!(asymptotic_quantum_bound(10, &uneq, BoundForm::EqualArms).is_err());
        let c = asymptotic_quantum_bound(100, &uneq, BoundForm::OneArm).unwrap();
        assert!((c - 0.5 / (4.0 * 0.5 * 100.0)).abs() < 1e-18);
    }

    #[test]
    fn bell_examples() {
        assert_eq!(bell_half(0.0, 1e-12).unwrap(), 0.0);
        let b1 = bell_half(1.0, 1e-12).unwrap();
        assert!((b1 - bell_series(1.0, 21)).abs() < 1e-12);
        // 50-digit reference value of the series.
        assert!((b1 - 0.773_192_656_379_286).abs() < 1e-14);
        assert!((b1 - 0.77320).abs() < 1e-5);
        let big = bell_half(1e4, 1e-12).unwrap();
        assert!((big / 100.0 - 1.0).abs() < 1e-4);
        assert!(bell_half(-1.0, 1e-12).is_err());
    }

    #[test]
    fn bell_matches_direct_series() {
        for i in 0..=200 {
            let x = 0.5 * i as f64;
            let a = bell_half(x, 1e-13).unwrap();
            let b = bell_series(x, 200);
            assert!((a - b).abs() <= 1e-13 * b.max(1e-300) + 1e-300, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn classical_examples() {
        let lossless = LossModel::lossless();
        let c = classical_cost(1e5, &lossless, 0.5).unwrap();
        assert!((1e5 * c - 1.0).abs() < 0.01);
        let eq = LossModel::equal(0.8).unwrap();
        let c = classical_cost(1e4, &eq, 0.5).unwrap();
        assert!((1e4 * c / 1.25 - 1.0).abs() < 0.01);
        let b = bell_series(0.5, 60);
        let c = classical_cost(1.0, &lossless, 0.5).unwrap();
        assert!((c - (2.0 - 4.0 * b * b)).abs() < 1e-14);
        assert!(classical_cost(10.0, &eq, 0.0).is_err());
        assert!(classical_cost(10.0, &eq, 1.0).is_err());
        assert!(classical_cost(0.0, &eq, 0.5).is_err());
        let flat = classical_cost_lenient(10.0, &eq, 1.0).unwrap();
        assert!(flat.degenerate_split && flat.cost == 2.0);
        let dark = classical_cost(10.0, &LossModel::new(0.0, 0.5).unwrap(), 0.5).unwrap();
        assert_eq!(dark, 2.0);
    }

    #[test]
    fn classical_cost_in_range() {
        for &n in &[0.01, 0.3, 2.0, 17.0, 400.0, 3e4] {
            for &tau in &[0.1, 0.5, 0.77] {
                let c = classical_cost(n, &LossModel::new(0.6, 0.95).unwrap(), tau).unwrap();
                assert!((0.0..=2.0).contains(&c), "n={n} tau={tau}: {c}");
            }
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(classical_optimal_tau(&LossModel::equal(0.3).unwrap()).unwrap(), 0.5);
        let t = classical_optimal_tau(&LossModel::new(0.25, 1.0).unwrap()).unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        assert!(classical_optimal_tau(&LossModel::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn gain_examples() {
        let g = gain_factor(&LossModel::equal(0.8).unwrap()).unwrap();
        assert!((g - 5f64.sqrt()).abs() < 1e-14);
        let eq = LossModel::equal(0.8).unwrap();
        let ratio = classical_asymptotic_cost(1000.0, &eq).unwrap()
            / asymptotic_quantum_bound(1000, &eq, BoundForm::EqualArms).unwrap();
        assert!((ratio.sqrt() - 5f64.sqrt()).abs() < 1e-12);
        let tiny = gain_factor(&LossModel::equal(1e-9).unwrap()).unwrap();
        assert!((tiny - 1.0).abs() < 1e-8);
        assert_eq!(gain_factor(&LossModel::equal(0.0).unwrap()).unwrap(), 1.0);
        assert!(gain_factor(&LossModel::lossless()).is_err());
        let one = gain_factor(&LossModel::new(0.64, 1.0).unwrap()).unwrap();
        assert!((one - (1.8f64 / 0.2).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn report_fields() {
        let r = bound_report(10, &LossModel::lossless(), BoundForm::EqualArms).unwrap();
        assert!(r.gain_factor.is_none());
        assert!(r.asymptotic_bound.is_none());
        let opt = 2.0 - 2.0 * (PI / 12.0).cos();
        assert!((r.finite_n_bound.unwrap() - opt).abs() < 1e-15);
        let r = bound_report(1000, &LossModel::equal(0.8).unwrap(), BoundForm::EqualArms).unwrap();
        assert!((r.asymptotic_bound.unwrap() - 2.5e-4).abs() < 1e-18);
        assert_eq!(r.band_max.unwrap().argmax_n, 500);
        assert_eq!(r.classical_tau, Some(0.5));
        assert!(r.gain_factor.unwrap() >= 1.0);
        assert!(bound_report(5, &LossModel::new(0.5, 0.6).unwrap(), BoundForm::EqualArms).is_err());
    }

    #[test]
    fn numeric_splitting_approaches_closed_form() {
        let loss = LossModel::new(0.25, 1.0).unwrap();
        let (tau, cost) = minimize_classical_tau(1e4, &loss, 1e-9).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-3, "tau={tau}");
        let at_formula = classical_cost(1e4, &loss, 2.0 / 3.0).unwrap();
        assert!(cost <= at_formula + 1e-15);
        assert!(minimize_classical_tau(10.0, &LossModel::new(0.0, 1.0).unwrap(), 1e-6).is_err());
    }
}
