//! Executable form of the optimal covariant measurement.
//!
//! After loss the output splits into blocks labelled by the lost photons
//! `(l_a, l_b)`. The optimal seed projects each block onto the uniform
//! superposition of its surviving Fock states, so the estimate offset
//! `theta = phi_est - phi` has density
//!
//! ```text
//! p(theta) = (1 / 2 pi) sum_{l_a, l_b} | sum_n alpha_n beta_n^{l_a,l_b} e^{i n theta} |^2
//!          = (1 / 2 pi) [d_0 + 2 sum_k d_k cos(k theta)]
//! ```
//!
//! where `d_k` is the block-summed autocorrelation of the weighted
//! amplitudes. Everything here is built block by block, independently of the
//! factorized matrix elements used by the optimizer.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::{ArmChannel, LossModel, ProbeState};
use crate::optimizer::CostSpec;

/// Allowed deviation of `d_0` from one.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Most negative density value tolerated on the verification grid.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// One surviving-photon block: `weights[j]` is `alpha_n beta_n^{l_a,l_b}`
/// for `n = l_a + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub l_a: usize,
    pub l_b: usize,
    pub weights: Vec<f64>,
}

/// Density of the estimate offset under the optimal covariant measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDensity {
    n_total: usize,
    blocks: Vec<Block>,
    /// `d_0 ..= d_N`.
    fourier: Vec<f64>,
}

impl OutcomeDensity {
    pub fn new(state: &ProbeState, loss: &LossModel) -> Result<Self> {
        let n_total = state.n_total();
        let alpha = state.amplitudes();
        let arm_a = ArmChannel::new(loss.eta_a())?.tabulate(n_total);
        let arm_b = ArmChannel::new(loss.eta_b())?.tabulate(n_total);

        let mut blocks = Vec::new();
        for l_a in 0..=n_total {
            for l_b in 0..=(n_total - l_a) {
                let weights: Vec<f64> = (l_a..=n_total - l_b)
                    .map(|n| {
                        let ln = arm_a.ln_prob(n, l_a) + arm_b.ln_prob(n_total - n, l_b);
                        alpha[n] * (0.5 * ln).exp()
                    })
                    .collect();
                if weights.iter().any(|&w| w != 0.0) {
                    blocks.push(Block { l_a, l_b, weights });
                }
            }
        }

        let mut fourier = vec![0.0; n_total + 1];
        for block in &blocks {
            let w = &block.weights;
            for k in 0..w.len() {
                fourier[k] += w[..w.len() - k].iter().zip(&w[k..]).map(|(a, b)| a * b).sum::<f64>();
            }
        }

        if (fourier[0] - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "outcome density not normalized: d_0 = {:.17}",
                fourier[0]
            )));
        }
        Ok(OutcomeDensity {
            n_total,
            blocks,
            fourier,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Non-vanishing `(l_a, l_b)` blocks.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Cosine coefficients `d_0 ..= d_N` of `2 pi p(theta)`.
    pub fn fourier(&self) -> &[f64] {
        &self.fourier
    }

    /// `p(theta)` for the offset `theta = phi_est - phi`.
    pub fn density(&self, theta: f64) -> f64 {
        self.density_and_cdf(theta).0
    }

    /// `P(0 <= offset < theta)` for `theta` in `[0, 2 pi]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        self.density_and_cdf(theta).1
    }

    fn density_and_cdf(&self, theta: f64) -> (f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let mut dens = self.fourier[0];
        let mut cum = self.fourier[0] * theta;
        for (k, &d) in self.fourier.iter().enumerate().skip(1) {
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
            dens += 2.0 * d * c;
            cum += 2.0 * d * s / k as f64;
        }
        (dens / TAU, cum / TAU)
    }

    /// Fails unless `p >= -1e-12` on a uniform grid of `4 (N + 2)` points.
    pub fn check_nonnegative(&self) -> Result<()> {
        let grid = 4 * (self.n_total + 2);
        for j in 0..grid {
            let theta = TAU * j as f64 / grid as f64;
            let p = self.density(theta);
            if p < -NEGATIVITY_TOL {
                return Err(Error::Validation(format!("density {p:e} < 0 at theta = {theta}")));
            }
        }
        Ok(())
    }
}

pub fn outcome_density(state: &ProbeState, loss: &LossModel) -> Result<OutcomeDensity> {
    OutcomeDensity::new(state, loss)
}

/// `<C> = c_0 d_0 + 2 sum_k c_k d_k`.
pub fn expected_cost_exact(density: &OutcomeDensity, cost: &CostSpec) -> f64 {
    let d = density.fourier();
    let tail: f64 = (1..=cost.bandwidth().min(density.n_total))
        .map(|k| cost.coefficient(k) * d[k])
        .sum();
    cost.c0() * d[0] + 2.0 * tail
}

/// Inverse-CDF sampler for the estimate offset.
///
/// A uniform grid of `16 (N + 2)` exact CDF values brackets each draw and a
/// linear interpolation gives the starting point; a safeguarded Newton
/// iteration then inverts the exact CDF.
pub struct OffsetSampler<'a> {
    density: &'a OutcomeDensity,
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl<'a> OffsetSampler<'a> {
    pub fn new(density: &'a OutcomeDensity) -> Result<Self> {
        density.check_nonnegative()?;
        let points = 16 * (density.n_total + 2);
        let grid: Vec<f64> = (0..=points).map(|j| TAU * j as f64 / points as f64).collect();
        let mut cdf: Vec<f64> = grid.iter().map(|&t| density.cdf(t)).collect();
        // Pin the endpoints and remove rounding-level non-monotonicity.
        cdf[0] = 0.0;
        *cdf.last_mut().unwrap() = 1.0;
        for j in 1..cdf.len() {
            if cdf[j] < cdf[j - 1] {
                cdf[j] = cdf[j - 1];
            }
        }
        Ok(OffsetSampler { density, grid, cdf })
    }

    /// Offset in `[0, 2 pi)` whose CDF equals `u` in `[0, 1)`.
    pub fn invert(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1) - 1;
        let (mut lo, mut hi) = (self.grid[j], self.grid[j + 1]);
        let (f_lo, f_hi) = (self.cdf[j], self.cdf[j + 1]);
        let mut theta = if f_hi > f_lo {
            lo + (hi - lo) * (u - f_lo) / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..100 {
            let (p, f) = self.density.density_and_cdf(theta);
            let g = f - u;
            if g > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let newton = if p > 0.0 { theta - g / p } else { f64::NAN };
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - theta).abs() <= 4.0 * f64::EPSILON * theta.max(1.0) || hi - lo <= f64::EPSILON {
                theta = next;
                break;
            }
            theta = next;
        }
        if theta >= TAU {
            theta -= TAU;
        }
        theta.max(0.0)
    }
}

/// The generator behind every sampling routine: ChaCha8 seeded from a `u64`.
/// Independent runs should use distinct seeds or distinct streams.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n_samples` i.i.d. estimates `phi_est` in `[0, 2 pi)` given the true phase.
pub fn sample_outcomes(
    density: &OutcomeDensity,
    true_phase: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let sampler = OffsetSampler::new(density)?;
    let mut rng = seeded_rng(seed, 0);
    Ok((0..n_samples)
        .map(|_| {
            let theta = sampler.invert(rng.random::<f64>());
            (true_phase + theta).rem_euclid(TAU)
        })
        .collect())
}

/// Outcome of a Monte Carlo cost estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub n_samples: usize,
    pub mean_cost: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub std_error: f64,
    pub true_phase: f64,
    /// Exact average cost of the same density.
    pub exact_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimates: Option<Vec<f64>>,
}

impl SimulationResult {
    /// `(mean - exact) / std_error`, zero when the spread vanishes.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.mean_cost - self.exact_cost) / self.std_error
        } else {
            0.0
        }
    }
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: u64,
    pub true_phase: f64,
    pub retain_estimates: bool,
}

impl MonteCarlo {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        MonteCarlo {
            n_samples,
            seed,
            true_phase: 0.0,
            retain_estimates: false,
        }
    }

    pub fn with_true_phase(mut self, phase: f64) -> Self {
        self.true_phase = phase;
        self
    }

    pub fn retaining_estimates(mut self) -> Self {
        self.retain_estimates = true;
        self
    }

    /// Samples the measurement and averages `C(phi - phi_est)`.
    pub fn run(&self, state: &ProbeState, loss: &LossModel, cost: &CostSpec) -> Result<SimulationResult> {
        let density = OutcomeDensity::new(state, loss)?;
        let estimates = sample_outcomes(&density, self.true_phase, self.n_samples, self.seed)?;
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, &est) in estimates.iter().enumerate() {
            // The cost is cyclic, so the wrapped difference needs no unwrapping.
            let c = cost.evaluate(self.true_phase - est);
            let delta = c - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (c - mean);
        }
        let n = estimates.len();
        let std_error = if n > 1 {
            (m2 / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Ok(SimulationResult {
            n_samples: n,
            mean_cost: mean,
            std_error,
            true_phase: self.true_phase,
            exact_cost: expected_cost_exact(&density, cost),
            estimates: self.retain_estimates.then_some(estimates),
        })
    }
}

/// Monte Carlo cost at true phase zero.
pub fn monte_carlo_cost(
    state: &ProbeState,
    loss: &LossModel,
    cost: &CostSpec,
    n_samples: usize,
    seed: u64,
) -> Result<SimulationResult> {
    MonteCarlo::new(n_samples, seed).run(state, loss, cost)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::DEFAULT_TOL;
    use crate::loss::{beta_weight, lossless_sine_state};
    use crate::optimizer::{build_cost_matrix, optimize};

    fn vacuum() -> ProbeState {
        ProbeState::new(vec![1.0]).unwrap()
    }

    #[test]
    fn vacuum_density_is_uniform() {
        let d = OutcomeDensity::new(&vacuum(), &LossModel::equal(0.4).unwrap()).unwrap();
        assert_eq!(d.fourier(), &[1.0]);
        assert!((d.density(1.234) - 1.0 / TAU).abs() < 1e-16);
        assert_eq!(expected_cost_exact(&d, &CostSpec::default()), 2.0);
    }

    #[test]
    fn single_photon_density() {
        let s = ProbeState::new(vec![0.5f64.sqrt(); 2]).unwrap();
        let d = OutcomeDensity::new(&s, &LossModel::lossless()).unwrap();
        for &t in &[0.0, 0.7, 2.0, 4.5] {
            assert!((d.density(t) - (1.0 + f64::cos(t)) / TAU).abs() < 1e-15);
        }
        assert!((expected_cost_exact(&d, &CostSpec::default()) - 1.0).abs() < 1e-15);
        assert!((d.cdf(TAU) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lossless_density_is_autocorrelation() {
        let s = ProbeState::normalized(vec![0.3, -0.2, 0.9, 0.1, 0.4]).unwrap();
        let a = s.amplitudes();
        let d = OutcomeDensity::new(&s, &LossModel::lossless()).unwrap();
        assert_eq!(d.blocks().len(), 1);
        for k in 0..a.len() {
            let auto: f64 = (0..a.len() - k).map(|n| a[n] * a[n + k]).sum();
            assert!((d.fourier()[k] - auto).abs() < 1e-15);
        }
    }

    #[test]
    fn block_weights_use_beta() {
        let loss = LossModel::new(0.6, 0.85).unwrap();
        let s = lossless_sine_state(6);
        let d = OutcomeDensity::new(&s, &loss).unwrap();
        for b in d.blocks() {
            for (j, &w) in b.weights.iter().enumerate() {
                let n = b.l_a + j;
                let expect = s.amplitudes()[n] * beta_weight(6, n, b.l_a, b.l_b, &loss).unwrap();
                assert!((w - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_cost_matches_optimizer() {
        let loss = LossModel::equal(0.8).unwrap();
        let cost = CostSpec::default();
        let opt = optimize(20, &loss, &cost, DEFAULT_TOL).unwrap();
        let d = OutcomeDensity::new(&opt.state, &loss).unwrap();
        assert!((expected_cost_exact(&d, &cost) - opt.avg_cost).abs() < 1e-10);
    }

    #[test]
    fn exact_cost_with_wider_band() {
        let loss = LossModel::new(0.7, 0.9).unwrap();
        let cost = CostSpec::new(2.5, [(1, -1.0), (2, -0.25)]).unwrap();
        let s = lossless_sine_state(8);
        let m = build_cost_matrix(8, &loss, &cost).unwrap();
        let via_matrix = cost.c0() - m.quadratic_form(s.amplitudes());
        let d = OutcomeDensity::new(&s, &loss).unwrap();
        assert!((expected_cost_exact(&d, &cost) - via_matrix).abs() < 1e-12);
    }

    #[test]
    fn density_nonnegative_on_dense_grid() {
        let loss = LossModel::new(0.5, 0.9).unwrap();
        let s = ProbeState::normalized((0..15).map(|i| ((i * 7 % 5) as f64) - 2.0).collect()).unwrap();
        let d = OutcomeDensity::new(&s, &loss).unwrap();
        for j in 0..2000 {
            assert!(d.density(TAU * j as f64 / 2000.0) >= -NEGATIVITY_TOL);
        }
        d.check_nonnegative().unwrap();
    }

    #[test]
    fn inversion_recovers_cdf() {
        let loss = LossModel::equal(0.7).unwrap();
        let opt = optimize(20, &loss, &CostSpec::default(), DEFAULT_TOL).unwrap();
        let d = OutcomeDensity::new(&opt.state, &loss).unwrap();
        let sampler = OffsetSampler::new(&d).unwrap();
        for i in 0..200 {
            let u = (i as f64 + 0.5) / 200.0;
            let t = sampler.invert(u);
            assert!((0.0..TAU).contains(&t));
            assert!((d.cdf(t) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = lossless_sine_state(5);
        let d = OutcomeDensity::new(&s, &LossModel::equal(0.9).unwrap()).unwrap();
        let a = sample_outcomes(&d, 0.3, 1000, 42).unwrap();
        let b = sample_outcomes(&d, 0.3, 1000, 42).unwrap();
        let c = sample_outcomes(&d, 0.3, 1000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|x| (0.0..TAU).contains(x)));
        assert!(sample_outcomes(&d, 0.3, 0, 42).is_err());
    }

    #[test]
    fn single_photon_first_moment() {
        let s = ProbeState::new(vec![0.5f64.sqrt(); 2]).unwrap();
        let d = OutcomeDensity::new(&s, &LossModel::lossless()).unwrap();
        let phi = 1.1;
        let est = sample_outcomes(&d, phi, 100_000, 11).unwrap();
        let vals: Vec<f64> = est.iter().map(|e| (e - phi).cos()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 0.5).abs() < 4.0 * (var / n).sqrt());
    }

    #[test]
    fn monte_carlo_lossless_sine() {
        let s = lossless_sine_state(10);
        let r = monte_carlo_cost(&s, &LossModel::lossless(), &CostSpec::default(), 200_000, 3).unwrap();
        let exact = 2.0 - 2.0 * (PI / 12.0).cos();
        assert!((r.exact_cost - exact).abs() < 1e-12);
        assert!((r.mean_cost - exact).abs() < 4.0 * r.std_error);
        assert!((0.0..=4.0).contains(&r.mean_cost));
        assert!(r.estimates.is_none());
    }

    #[test]
    fn monte_carlo_is_phase_covariant() {
        let loss = LossModel::equal(0.8).unwrap();
        let s = lossless_sine_state(8);
        let cost = CostSpec::default();
        let a = MonteCarlo::new(100_000, 5).run(&s, &loss, &cost).unwrap();
        let b = MonteCarlo::new(100_000, 6).with_true_phase(2.5).run(&s, &loss, &cost).unwrap();
        let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.mean_cost - b.mean_cost).abs() < 5.0 * sigma);
        let kept = MonteCarlo::new(10, 1).retaining_estimates().run(&s, &loss, &cost).unwrap();
        assert_eq!(kept.estimates.unwrap().len(), 10);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-15);
    }
}
