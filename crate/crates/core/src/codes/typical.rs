//! Typical error sets described by a window of error weights.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::channels::{channel_entropy, ChannelModel};
use crate::error::{invalid, Result, StegoError};
use crate::numeric::{big_choose, binomial_pmf_vec, ln_choose, NeumaierSum};
use crate::pauli::{Pauli, PauliString};

/// Which non-identity symbols an error slot can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorAlphabet {
    /// Bit flips only (BSC).
    Binary,
    /// X, Y or Z (depolarizing channel).
    Pauli,
}

impl ErrorAlphabet {
    pub fn for_channel(ch: &ChannelModel) -> Result<Self> {
        match ch {
            ChannelModel::Bsc { .. } => Ok(ErrorAlphabet::Binary),
            ChannelModel::Depolarizing { .. } => Ok(ErrorAlphabet::Pauli),
            ChannelModel::Pauli { .. } => Err(StegoError::UnsupportedChannel(
                "typical sets are built for BSC and depolarizing channels".into(),
            )),
        }
    }

    /// Number of distinct non-identity symbols per slot.
    pub fn branching(self) -> u64 {
        match self {
            ErrorAlphabet::Binary => 1,
            ErrorAlphabet::Pauli => 3,
        }
    }

    pub fn admits(self, e: &PauliString) -> bool {
        match self {
            ErrorAlphabet::Binary => e.is_x_type(),
            ErrorAlphabet::Pauli => true,
        }
    }
}

/// How the weight window was derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WindowRule {
    /// Per-string probability within `[2^{-N(s+delta)}, 2^{-N(s-delta)}]`.
    EntropyBound { delta: f64 },
    /// Weights `Np(1-delta) <= k <= Np(1+delta)`.
    RelativeWeight { delta: f64 },
    /// Explicit inclusive weight range.
    Explicit,
}

/// Typical errors of an i.i.d. BSC or depolarizing channel, as an inclusive weight range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalErrorSet {
    pub n: usize,
    pub channel: ChannelModel,
    pub alphabet: ErrorAlphabet,
    /// Per-symbol entropy in bits.
    pub entropy: f64,
    pub rule: WindowRule,
    pub min_weight: usize,
    pub max_weight: usize,
    /// Channel probability of landing in the window.
    pub total_probability: f64,
}

const LOG_TOL: f64 = 1e-9;

impl TypicalErrorSet {
    /// Window from explicit weights.
    pub fn from_weights(ch: &ChannelModel, n: usize, min_weight: usize, max_weight: usize) -> Result<Self> {
        Self::assemble(ch, n, WindowRule::Explicit, min_weight, max_weight)
    }

    /// Window `Np(1-delta) <= k <= Np(1+delta)`, the weight-centred form.
    pub fn relative_window(ch: &ChannelModel, n: usize, delta: f64) -> Result<Self> {
        if delta < 0.0 {
            return invalid("delta must be non-negative");
        }
        let np = n as f64 * ch.error_rate();
        let lo = (np * (1.0 - delta) - LOG_TOL).ceil().max(0.0) as usize;
        let hi = ((np * (1.0 + delta) + LOG_TOL).floor() as usize).min(n);
        if lo > hi {
            return Err(StegoError::EmptyWindow(format!(
                "no integer weight in [{:.4}, {:.4}] for N = {n}",
                np * (1.0 - delta),
                np * (1.0 + delta)
            )));
        }
        Self::assemble(ch, n, WindowRule::RelativeWeight { delta }, lo, hi)
    }

    fn assemble(ch: &ChannelModel, n: usize, rule: WindowRule, lo: usize, hi: usize) -> Result<Self> {
        ch.validate()?;
        let alphabet = ErrorAlphabet::for_channel(ch)?;
        if n == 0 {
            return invalid("N must be at least 1");
        }
        if lo > hi || hi > n {
            return Err(StegoError::EmptyWindow(format!("weights [{lo}, {hi}] with N = {n}")));
        }
        let pmf = binomial_pmf_vec(n as u64, ch.error_rate());
        let total: NeumaierSum = pmf[lo..=hi].iter().copied().collect();
        Ok(Self {
            n,
            channel: *ch,
            alphabet,
            entropy: channel_entropy(ch)?,
            rule,
            min_weight: lo,
            max_weight: hi,
            total_probability: total.total().min(1.0),
        })
    }

    /// Probability the channel produces an error outside the window.
    pub fn epsilon(&self) -> f64 {
        (1.0 - self.total_probability).max(0.0)
    }

    pub fn weights(&self) -> std::ops::RangeInclusive<usize> {
        self.min_weight..=self.max_weight
    }

    /// Number of distinct error strings of weight `w`.
    pub fn multiplicity(&self, w: usize) -> BigUint {
        big_choose(self.n as u64, w as u64) * BigUint::from(self.alphabet.branching()).pow(w as u32)
    }

    pub fn ln_multiplicity(&self, w: usize) -> f64 {
        ln_choose(self.n as u64, w as u64) + w as f64 * (self.alphabet.branching() as f64).ln()
    }

    /// Natural log of the channel probability of one particular weight-`w` string.
    pub fn ln_string_prob(&self, w: usize) -> f64 {
        ln_string_prob(&self.channel, self.n, w)
    }

    /// Channel probability that the error weight equals `w`.
    pub fn class_mass(&self, w: usize) -> f64 {
        (self.ln_multiplicity(w) + self.ln_string_prob(w)).exp()
    }

    pub fn contains(&self, e: &PauliString) -> bool {
        e.len() == self.n && self.alphabet.admits(e) && self.weights().contains(&e.weight())
    }
}

pub(crate) fn ln_string_prob(ch: &ChannelModel, n: usize, w: usize) -> f64 {
    let p = ch.error_rate();
    let per_error = match ch {
        ChannelModel::Depolarizing { .. } => p / 3.0,
        _ => p,
    };
    let hit = if w == 0 { 0.0 } else { w as f64 * per_error.ln() };
    let miss = if w == n { 0.0 } else { (n - w) as f64 * (-p).ln_1p() };
    hit + miss
}

/// Typical set from the per-string probability bounds `2^{-N(s+delta)} <= p_e <= 2^{-N(s-delta)}`.
pub fn build_typical_set(ch: &ChannelModel, n: usize, delta: f64) -> Result<TypicalErrorSet> {
    ch.validate()?;
    ErrorAlphabet::for_channel(ch)?;
    if n == 0 {
        return invalid("N must be at least 1");
    }
    if delta < 0.0 {
        return invalid("delta must be non-negative");
    }
    let s = channel_entropy(ch)?;
    let nf = n as f64;
    let (lo_bound, hi_bound) = (-nf * (s + delta), -nf * (s - delta));
    let inside: Vec<usize> = (0..=n)
        .filter(|&w| {
            let l2 = ln_string_prob(ch, n, w) / LN_2;
            l2 >= lo_bound - LOG_TOL * nf.max(1.0) && l2 <= hi_bound + LOG_TOL * nf.max(1.0)
        })
        .collect();
    let (Some(&lo), Some(&hi)) = (inside.first(), inside.last()) else {
        return Err(StegoError::EmptyWindow(format!(
            "no weight has per-string probability within 2^-N(s +/- delta) for N = {n}, s = {s:.5}, delta = {delta}"
        )));
    };
    TypicalErrorSet::assemble(ch, n, WindowRule::EntropyBound { delta }, lo, hi)
}

/// Exhaustive list of all weight-`w` strings on `n` slots over the alphabet (small `n` only).
pub fn enumerate_weight_class(n: usize, w: usize, alphabet: ErrorAlphabet) -> Vec<PauliString> {
    let mut out = Vec::new();
    let total = crate::numeric::big_choose(n as u64, w as u64);
    let count: usize = total.try_into().expect("small class");
    let branch = alphabet.branching() as usize;
    for i in 0..count {
        let positions = crate::combinatorics::unrank_subset(n, w, &BigUint::from(i)).expect("in range");
        for code in 0..branch.pow(w as u32) {
            let mut e = PauliString::identity(n);
            let mut c = code;
            for &pos in positions.iter().rev() {
                let sym = match alphabet {
                    ErrorAlphabet::Binary => Pauli::X,
                    ErrorAlphabet::Pauli => Pauli::from_index(1 + c % 3),
                };
                c /= branch;
                e.set(pos, sym);
            }
            out.push(e);
        }
    }
    out
}
