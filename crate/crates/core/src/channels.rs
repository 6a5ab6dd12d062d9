//! Single-qubit Pauli channel models, error sampling and the twirl decompositions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, StegoError};
use crate::numeric::{binomial_pmf_vec, entropy_bits};
use crate::pauli::{Pauli, PauliString};

const WEIGHT_TOL: f64 = 1e-12;

/// An i.i.d. single-qubit Pauli channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    Bsc { p: f64 },
    Depolarizing { p: f64 },
    Pauli { p_i: f64, p_x: f64, p_y: f64, p_z: f64 },
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return invalid(format!("{name} = {p} is not a probability"));
    }
    Ok(())
}

impl ChannelModel {
    pub fn bsc(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        Ok(ChannelModel::Bsc { p })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        Ok(ChannelModel::Depolarizing { p })
    }

    pub fn pauli(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<Self> {
        let ch = ChannelModel::Pauli { p_i, p_x, p_y, p_z };
        ch.validate()?;
        Ok(ch)
    }

    /// Checks the probability invariants; used after deserializing a config.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Bsc { p } | ChannelModel::Depolarizing { p } => check_prob("p", p),
            ChannelModel::Pauli { p_i, p_x, p_y, p_z } => {
                for (n, w) in [("p_i", p_i), ("p_x", p_x), ("p_y", p_y), ("p_z", p_z)] {
                    check_prob(n, w)?;
                }
                let s = p_i + p_x + p_y + p_z;
                if (s - 1.0).abs() > WEIGHT_TOL {
                    return invalid(format!("Pauli weights sum to {s}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Protocol paths require `0 < p < 1/2`.
    pub fn require_protocol_regime(&self) -> Result<()> {
        self.validate()?;
        let p = self.error_rate();
        if !(p > 0.0 && p < 0.5) {
            return invalid(format!("protocol regime needs 0 < p < 1/2, got {p}"));
        }
        Ok(())
    }

    /// Per-symbol weights in the order I, X, Y, Z.
    pub fn weights(&self) -> [f64; 4] {
        match *self {
            ChannelModel::Bsc { p } => [1.0 - p, p, 0.0, 0.0],
            ChannelModel::Depolarizing { p } => [1.0 - p, p / 3.0, p / 3.0, p / 3.0],
            ChannelModel::Pauli { p_i, p_x, p_y, p_z } => [p_i, p_x, p_y, p_z],
        }
    }

    /// Probability that a slot is hit by a non-identity Pauli.
    pub fn error_rate(&self) -> f64 {
        match *self {
            ChannelModel::Bsc { p } | ChannelModel::Depolarizing { p } => p,
            ChannelModel::Pauli { p_x, p_y, p_z, .. } => p_x + p_y + p_z,
        }
    }

    pub fn as_pauli(&self) -> ChannelModel {
        let [p_i, p_x, p_y, p_z] = self.weights();
        ChannelModel::Pauli { p_i, p_x, p_y, p_z }
    }
}

/// Probability the channel applies exactly `e`.
pub fn error_probability(ch: &ChannelModel, e: &PauliString) -> Result<f64> {
    if e.is_empty() {
        return invalid("error string must have at least one slot");
    }
    let w = ch.weights();
    Ok(e.iter().map(|p| w[p.index()]).product())
}

fn draw_symbol<R: Rng + ?Sized>(w: &[f64; 4], rng: &mut R) -> Pauli {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate().take(3) {
        acc += wi;
        if u < acc {
            return Pauli::from_index(i);
        }
    }
    // Zero-weight symbols are never returned, even with rounding in the cumulative sum.
    (0..4).rev().map(Pauli::from_index).find(|p| w[p.index()] > 0.0).unwrap_or(Pauli::I)
}

/// I.i.d. per-slot draw from the channel's Pauli weights.
pub fn sample_error<R: Rng + ?Sized>(ch: &ChannelModel, n: usize, rng: &mut R) -> PauliString {
    let w = ch.weights();
    let mut s = PauliString::identity(n);
    for i in 0..n {
        let p = draw_symbol(&w, rng);
        if p != Pauli::I {
            s.set(i, p);
        }
    }
    s
}

/// Samples a depolarizing error in the twirl picture: each slot is replaced by a uniformly
/// random Pauli with probability 4p/3. Returns the error and the number of mixed slots.
pub fn sample_twirl_frame<R: Rng + ?Sized>(p: f64, n: usize, rng: &mut R) -> Result<(PauliString, usize)> {
    if !(0.0..=0.75).contains(&p) {
        return invalid(format!("twirl picture needs p in [0, 3/4], got {p}"));
    }
    let t = 4.0 * p / 3.0;
    let mut s = PauliString::identity(n);
    let mut mixed = 0;
    for i in 0..n {
        if rng.random::<f64>() < t {
            mixed += 1;
            s.set(i, Pauli::from_index(rng.random_range(0..4)));
        }
    }
    Ok((s, mixed))
}

/// `p_identity * I + p_twirl * T + p_residual * E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub p_identity: f64,
    pub p_twirl: f64,
    pub p_residual: f64,
    pub residual: ChannelModel,
}

impl Decomposition {
    /// Per-symbol Pauli weights of the recombined channel.
    pub fn recompose(&self) -> [f64; 4] {
        let r = self.residual.weights();
        let mut w = [0.0; 4];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = self.p_twirl / 4.0 + self.p_residual * r[i];
        }
        w[0] += self.p_identity;
        w
    }
}

const NO_RESIDUAL: ChannelModel = ChannelModel::Pauli { p_i: 1.0, p_x: 0.0, p_y: 0.0, p_z: 0.0 };

/// Depolarizing channel as `(1 - 4p/3) I + (4p/3) T`.
pub fn twirl_decompose(ch: &ChannelModel) -> Result<Decomposition> {
    let ChannelModel::Depolarizing { p } = *ch else {
        return Err(StegoError::UnsupportedChannel("twirl_decompose needs a depolarizing channel".into()));
    };
    if p > 0.75 {
        return invalid(format!("p = {p} > 3/4 gives a negative identity weight"));
    }
    let t = 4.0 * p / 3.0;
    Ok(Decomposition { p_identity: 1.0 - t, p_twirl: t, p_residual: 0.0, residual: NO_RESIDUAL })
}

/// Extracts the largest twirl component from a Pauli channel; the leftover X/Y/Z weight
/// becomes a pure-error residual channel.
pub fn general_decompose(ch: &ChannelModel) -> Result<Decomposition> {
    ch.validate()?;
    let [p_i, p_x, p_y, p_z] = ch.weights();
    // The twirl spreads weight evenly over all four symbols, so p_i caps it too.
    let m = p_x.min(p_y).min(p_z).min(p_i);
    let (rx, ry, rz) = (p_x - m, p_y - m, p_z - m);
    let p_residual = rx + ry + rz;
    let residual = if p_residual > 0.0 {
        ChannelModel::Pauli { p_i: 0.0, p_x: rx / p_residual, p_y: ry / p_residual, p_z: rz / p_residual }
    } else {
        NO_RESIDUAL
    };
    Ok(Decomposition { p_identity: p_i - m, p_twirl: 4.0 * m, p_residual, residual })
}

/// Error rate Eve sees when Alice emulates a DC of rate `q_alice` on top of a physical DC.
pub fn effective_error_rate(p_physical: f64, q_alice: f64) -> Result<f64> {
    for (n, v) in [("p_physical", p_physical), ("q_alice", q_alice)] {
        if !(0.0..=0.75).contains(&v) {
            return invalid(format!("{n} = {v} outside [0, 3/4]"));
        }
    }
    Ok(p_physical + q_alice * (1.0 - 4.0 * p_physical / 3.0))
}

/// Inverse of [`effective_error_rate`]: the emulation rate that lifts `p` to `p + delta_p`.
pub fn emulation_rate(p_physical: f64, delta_p: f64) -> Result<f64> {
    if !(0.0..0.75).contains(&p_physical) {
        return invalid(format!("p_physical = {p_physical} outside [0, 3/4)"));
    }
    Ok(delta_p / (1.0 - 4.0 * p_physical / 3.0))
}

/// Per-symbol Shannon entropy of the error distribution, in bits.
pub fn channel_entropy(ch: &ChannelModel) -> Result<f64> {
    ch.validate()?;
    Ok(entropy_bits(&ch.weights()))
}

/// Law of the number of maximally mixed slots among `n` under a depolarizing channel.
pub fn weight_distribution(ch: &ChannelModel, n: usize) -> Result<Vec<f64>> {
    let ChannelModel::Depolarizing { p } = *ch else {
        return Err(StegoError::UnsupportedChannel("weight_distribution needs a depolarizing channel".into()));
    };
    if p > 0.75 {
        return invalid(format!("p = {p} > 3/4"));
    }
    Ok(binomial_pmf_vec(n as u64, 4.0 * p / 3.0))
}
