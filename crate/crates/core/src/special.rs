//! Saddle-point evaluation of binomial and Poisson log-probabilities.
//!
//! `ln n!` itself carries an absolute rounding error of order `n ln n * eps`,
//! so differences of log-factorials lose about twelve digits near `n = 2000`.
//! Writing the pmf through the Stirling remainder and the deviance
//! `x ln(x/m) + m - x` keeps every intermediate of order one.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// `ln n! - ln(sqrt(2 pi n) (n/e)^n)`.
pub fn stirling_remainder(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        if n == 0.0 {
            return 0.0;
        }
        // Exact factorials are representable up to 15!.
        let fact: f64 = (1..=n as u64).map(|k| k as f64).product();
        return fact.ln() - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance `x ln(x / m) + m - x`, accurate when `x` is close to `m`.
pub fn deviance(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let v2 = v * v;
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return next;
            }
            s = next;
            j += 1.0;
        }
    }
    x * (x / m).ln() + m - x
}

/// `ln[C(n, x) p^x q^(n-x)]` with `q = 1 - p` supplied separately.
pub fn ln_binomial_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 { -deviance(nf, nf * q) - nf * p } else { nf * q.ln() };
    }
    if x == n {
        return if q < 0.1 { -deviance(nf, nf * p) - nf * q } else { nf * p.ln() };
    }
    let xf = x as f64;
    let yf = nf - xf;
    let lc = stirling_remainder(nf)
        - stirling_remainder(xf)
        - stirling_remainder(yf)
        - deviance(xf, nf * p)
        - deviance(yf, nf * q);
    lc - 0.5 * ((2.0 * PI).ln() + xf.ln() + (-xf / nf).ln_1p())
}

/// `ln[e^{-m} m^x / x!]` for `m > 0`.
pub fn ln_poisson_pmf(x: u64, m: f64) -> f64 {
    if x == 0 {
        return -m;
    }
    let xf = x as f64;
    -stirling_remainder(xf) - deviance(xf, m) - 0.5 * (2.0 * PI * xf).ln()
}
