//! Closed-form security quantities: diamond norms for `N` channel uses, the optimal
//! distinguishing probability, the covert square-root law and the protocol 2 closeness bound.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::{binomial_pmf_vec, NeumaierSum};

fn check_regime(name: &str, x: f64) -> Result<()> {
    if !(0.0..0.5).contains(&x) {
        return invalid(format!("{name} = {x} lies outside [0, 1/2)"));
    }
    Ok(())
}

/// `sum_j C(N,j) |r^j (1-r)^{N-j} - p^j (1-p)^{N-j}|` for any rates in `[0, 1]`.
///
/// This is the diamond distance between `N` uses of two BSCs, and equally between `N` uses of
/// two depolarizing channels. No regime check is made.
pub fn diamond_norm_raw(p: f64, r: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&r) {
        return invalid("rates must lie in [0, 1]");
    }
    if n == 0 {
        return invalid("N must be at least 1");
    }
    if p == r {
        return Ok(0.0);
    }
    let a = binomial_pmf_vec(n as u64, p);
    let b = binomial_pmf_vec(n as u64, r);
    let sum: NeumaierSum = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).collect();
    Ok(sum.total().clamp(0.0, 2.0))
}

/// Diamond distance for rates in the protocol regime `0 <= p, r < 1/2`.
pub fn diamond_norm_n(p: f64, r: f64, n: usize) -> Result<f64> {
    check_regime("p", p)?;
    check_regime("r", r)?;
    diamond_norm_raw(p, r, n)
}

/// `1/2 + d/4`.
pub fn p_opt(diamond: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&diamond) {
        return invalid(format!("diamond norm {diamond} outside [0, 2]"));
    }
    Ok(0.5 + diamond / 4.0)
}

/// Single use: `2 delta_p`.
pub fn diamond_single_use(delta_p: f64) -> f64 {
    2.0 * delta_p.abs()
}

/// Two uses: `2 delta_p (2 - 2p - delta_p)`.
pub fn diamond_two_uses(p: f64, delta_p: f64) -> f64 {
    2.0 * delta_p * (2.0 - 2.0 * p - delta_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub n: usize,
    pub p: f64,
    pub r: f64,
    pub diamond_norm: f64,
    pub p_opt: f64,
}

pub fn security_report(p: f64, delta_p: f64, n: usize) -> Result<SecurityReport> {
    let r = p + delta_p;
    let diamond_norm = diamond_norm_n(p, r, n)?;
    Ok(SecurityReport { n, p, r, diamond_norm, p_opt: p_opt(diamond_norm)? })
}

/// Largest rate shift keeping `N` uses nearly indistinguishable: `eps sqrt(p(1-p)/N)`.
pub fn max_covert_delta(p: f64, n: usize, eps: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("p must lie in (0, 1), got {p}"));
    }
    if n == 0 || eps < 0.0 {
        return invalid("need N >= 1 and eps >= 0");
    }
    Ok(eps * (p * (1.0 - p) / n as f64).sqrt())
}

/// Payload slots hidden under the covert rate shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertCount {
    pub delta_p: f64,
    /// Protocol 1 margin used in the count.
    pub delta: f64,
    /// `(4/3) delta_p N (1 - delta)`.
    pub count: f64,
}

pub fn covert_qubit_count(p: f64, n: usize, eps: f64, delta: f64) -> Result<CovertCount> {
    if !(0.0..1.0).contains(&delta) {
        return invalid(format!("delta must lie in [0, 1), got {delta}"));
    }
    let delta_p = max_covert_delta(p, n, eps)?;
    Ok(CovertCount { delta_p, delta, count: 4.0 / 3.0 * delta_p * n as f64 * (1.0 - delta) })
}

/// `eps + ((1-p)/(1-2p)) (p/(1-p))^{Np(1-delta)} ((1-2p+2p^2)/(1-p))^N`.
pub fn p2_closeness_bound(p: f64, n: usize, delta: f64, eps: f64) -> Result<f64> {
    Ok(eps + p2_closeness_excess(p, n, delta)?)
}

/// The term of [`p2_closeness_bound`] beyond `eps`.
pub fn p2_closeness_excess(p: f64, n: usize, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("closeness bound needs 0 < p < 1/2, got {p}"));
    }
    let nf = n as f64;
    let ln = ((1.0 - p) / (1.0 - 2.0 * p)).ln()
        + nf * p * (1.0 - delta) * (p / (1.0 - p)).ln()
        + nf * ((1.0 - 2.0 * p + 2.0 * p * p) / (1.0 - p)).ln();
    Ok(ln.exp())
}
