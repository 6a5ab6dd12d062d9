//! Protocol 2: a message is carried by which typical error Alice applies.
//!
//! The noiseless variant pads the message index, maps it to a set of the error partition and
//! applies a keyed member of that set. The noisy variant uses a keyed subset of slots holding
//! weight-`M` codewords that stay far apart under a BSC.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::codes::{
    build_partition, build_typical_set, ErrorPartition, SetCount, SyndromeModel, TypicalErrorSet, WindowRule,
    WindowSyndromes,
};
use crate::error::{invalid, Result, StegoError};
use crate::keysource::{key_consumption_p2, select_subset, twirl_pad, KeyBudget, KeyStream};
use crate::numeric::binary_entropy;
use crate::pauli::PauliString;

/// Shared configuration of the noiseless variant.
#[derive(Debug, Clone)]
pub struct StegoParams2 {
    pub partition: ErrorPartition,
    syndromes: WindowSyndromes,
}

impl StegoParams2 {
    /// Partition the typical set into a power-of-two number of sets, one per message.
    pub fn from_typical(ts: &TypicalErrorSet) -> Result<Self> {
        let partition = build_partition(ts, SetCount::PowerOfTwo)?;
        Ok(Self::from_partition(partition))
    }

    /// Typical set from the per-string probability window, then [`Self::from_typical`].
    pub fn build(ch: &ChannelModel, n: usize, delta: f64) -> Result<Self> {
        Self::from_typical(&build_typical_set(ch, n, delta)?)
    }

    pub fn from_partition(partition: ErrorPartition) -> Self {
        let syndromes = WindowSyndromes::new(&partition.typical);
        Self { partition, syndromes }
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }

    pub fn channel(&self) -> ChannelModel {
        self.partition.typical.channel
    }

    /// Window parameter `delta`, when the window was derived from one.
    pub fn delta(&self) -> Option<f64> {
        match self.partition.typical.rule {
            WindowRule::EntropyBound { delta } | WindowRule::RelativeWeight { delta } => Some(delta),
            WindowRule::Explicit => None,
        }
    }

    /// `floor(log2 C)`.
    pub fn message_bits(&self) -> usize {
        self.partition.message_bits()
    }

    pub fn message_count(&self) -> BigUint {
        BigUint::one() << self.message_bits()
    }

    pub fn rate(&self) -> f64 {
        self.message_bits() as f64 / self.n() as f64
    }

    pub fn syndromes(&self) -> &WindowSyndromes {
        &self.syndromes
    }

    /// Predicted key use, `2N(s - delta)` pad bits plus `N delta` representative bits.
    pub fn key_budget(&self) -> Result<KeyBudget> {
        let ts = &self.partition.typical;
        key_consumption_p2(ts.n, ts.entropy, self.delta().unwrap_or(0.0))
    }
}

/// Key bits actually drawn for one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct P2Audit {
    pub pad_bits: usize,
    pub representative_bits: usize,
}

impl P2Audit {
    pub fn total(&self) -> usize {
        self.pad_bits + self.representative_bits
    }
}

/// A protocol 2 block: the applied error and the syndrome an observer reads from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Block {
    pub n: usize,
    /// Error Alice applied (secret in the sense that it encodes the padded message).
    pub applied_error: PauliString,
    /// Extra physical noise; identity on a noiseless channel.
    pub channel_error: PauliString,
    pub audit: P2Audit,
}

impl P2Block {
    pub fn received_error(&self) -> PauliString {
        self.applied_error.compose(&self.channel_error).expect("equal lengths")
    }
}

/// Classical pad over `bits` message bits: the x-component of a `bits`-symbol twirl pad, so
/// two key bits are spent per message bit.
fn message_pad(key: &mut KeyStream, bits: usize) -> Result<BigUint> {
    let pad = twirl_pad(key, bits)?;
    Ok(pad.x_bits().iter().fold(BigUint::zero(), |acc, &b| (acc << 1usize) | BigUint::from(b as u8)))
}

pub fn encode_p2(message: &BigUint, key: &mut KeyStream, params: &StegoParams2) -> Result<P2Block> {
    let bits = params.message_bits();
    if message >= &params.message_count() {
        return Err(StegoError::MessageOutOfRange(format!("message {message} needs more than {bits} bits")));
    }
    let start = key.cursor();
    let padded = message ^ message_pad(key, bits)?;
    let pad_bits = key.cursor() - start;
    let rep_start = key.cursor();
    let applied_error = params.partition.representative_error(&padded, key)?;
    Ok(P2Block {
        n: params.n(),
        channel_error: PauliString::identity(params.n()),
        applied_error,
        audit: P2Audit { pad_bits, representative_bits: key.cursor() - rep_start },
    })
}

/// Recover the message from the received error. Bob replays Alice's representative draw so
/// both key copies stay aligned.
pub fn decode_p2(block: &P2Block, key: &mut KeyStream, params: &StegoParams2) -> Result<BigUint> {
    if block.n != params.n() {
        return Err(StegoError::LengthMismatch { expected: params.n(), actual: block.n });
    }
    let pad = message_pad(key, params.message_bits())?;
    let received = block.received_error();
    let set = params
        .partition
        .set_index_of(&received)
        .ok_or_else(|| StegoError::DecodeFailure("received error lies outside every partition set".into()))?;
    params.partition.representative_error(&set, key)?;
    Ok(set ^ pad)
}

/// Syndrome label an observer reads from the block, `None` for errors outside the window.
pub fn observed_syndrome(block: &P2Block, params: &StegoParams2) -> Option<BigUint> {
    params.syndromes.syndrome_of(&block.received_error())
}

/// `q` from the stationarity condition, clamped to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalQ {
    pub q: f64,
    /// True when the closed form exceeded 1.
    pub clamped: bool,
}

/// `q = (M/N) 2^{h(p)} / (2^{h(p)} - 1)`.
pub fn optimal_q(p: f64, m_over_n: f64) -> Result<OptimalQ> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("optimal_q needs 0 < p < 1/2, got {p}"));
    }
    if m_over_n < 0.0 {
        return invalid("M/N must be non-negative");
    }
    let t = binary_entropy(p).exp2();
    let q = m_over_n * t / (t - 1.0);
    Ok(if q > 1.0 { OptimalQ { q: 1.0, clamped: true } } else { OptimalQ { q, clamped: false } })
}

/// Stirling form of `(1/N) log2 [C(qN, M) / C(qN, pqN)]`: `q h(m/q) - q h(p)`, `m = M/N`.
pub fn stirling_rate(p: f64, m_over_n: f64, q: f64) -> f64 {
    if q <= 0.0 || m_over_n > q {
        return f64::NEG_INFINITY;
    }
    q * binary_entropy(m_over_n / q) - q * binary_entropy(p)
}

/// Asymptotic rate of the noisy codebook, `-(delta_p / (1-2p)) log2(2^{h(p)} - 1)`.
pub fn noisy_rate_closed_form(p: f64, delta_p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("rate needs 0 < p < 1/2, got {p}"));
    }
    Ok(-(delta_p / (1.0 - 2.0 * p)) * (binary_entropy(p).exp2() - 1.0).log2())
}

/// Largest active set the bitmask codebook handles.
pub const MAX_ACTIVE_SLOTS: usize = 128;
/// Cap on weight-`M` candidates scanned by the greedy search.
pub const CANDIDATE_LIMIT: u64 = 5_000_000;

/// Weight-`M` codewords on a keyed subset of `N' = qN` slots with pairwise distance `> 2pqN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCodebook {
    pub n: usize,
    pub p: f64,
    pub delta_p: f64,
    pub q_fraction: f64,
    pub q_clamped: bool,
    /// Sorted keyed slots holding the codewords.
    pub active_slots: Vec<usize>,
    pub weight: usize,
    /// Every pair of codewords is strictly farther apart than this.
    pub min_distance_required: f64,
    /// Codeword supports, as offsets into `active_slots`.
    pub codewords: Vec<Vec<usize>>,
    /// Whether the candidate scan hit [`CANDIDATE_LIMIT`].
    pub truncated: bool,
    #[serde(skip)]
    masks: Vec<u128>,
}

impl NoisyCodebook {
    pub fn count(&self) -> usize {
        self.codewords.len()
    }

    /// `log2(count) / N`.
    pub fn rate(&self) -> f64 {
        (self.count() as f64).log2() / self.n as f64
    }

    pub fn active_len(&self) -> usize {
        self.active_slots.len()
    }

    /// Smallest pairwise distance, checked over every pair.
    pub fn min_distance(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        for (i, a) in self.masks.iter().enumerate() {
            for b in &self.masks[i + 1..] {
                let d = (a ^ b).count_ones();
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        best
    }

    /// Channel bits for message `k`: the codeword on the active slots, zero elsewhere.
    pub fn encode(&self, k: usize) -> Result<Vec<bool>> {
        let cw = self
            .codewords
            .get(k)
            .ok_or_else(|| StegoError::MessageOutOfRange(format!("codeword {k} of {}", self.count())))?;
        let mut out = vec![false; self.n];
        for &j in cw {
            out[self.active_slots[j]] = true;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut cb: NoisyCodebook =
            serde_json::from_str(text).map_err(|e| StegoError::InvalidParameter(format!("codebook JSON: {e}")))?;
        cb.masks = cb.codewords.iter().map(|cw| support_mask(cw)).collect();
        Ok(cb)
    }
}

fn support_mask(support: &[usize]) -> u128 {
    support.iter().fold(0u128, |m, &i| m | 1u128 << i)
}

/// Next weight-preserving bit pattern in increasing numeric order, restricted to `len` bits.
fn next_combination(mask: u128, len: usize) -> Option<u128> {
    if mask == 0 {
        return None;
    }
    let low = mask & mask.wrapping_neg();
    let ripple = mask.checked_add(low)?;
    let next = ripple | (((mask ^ ripple) >> 2) / low);
    (len == 128 || next >> len == 0).then_some(next)
}

/// Greedy codebook for a BSC of rate `p` emulating `p + delta_p`.
///
/// `M = round(N delta_p / (1-2p))`, `N' = round(qN)` with `q` from [`optimal_q`]; the active
/// slots are a keyed subset. Candidates are scanned in increasing bitmask order (colex over the
/// active offsets) and kept when strictly farther than `2pqN` from every kept codeword.
pub fn build_noisy_codebook(n: usize, p: f64, delta_p: f64, key: &mut KeyStream) -> Result<NoisyCodebook> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("codebook needs 0 < p < 1/2, got {p}"));
    }
    if n == 0 || delta_p < 0.0 {
        return invalid("need N >= 1 and delta_p >= 0");
    }
    let weight = (n as f64 * delta_p / (1.0 - 2.0 * p)).round() as usize;
    let empty = |q: OptimalQ| NoisyCodebook {
        n,
        p,
        delta_p,
        q_fraction: q.q,
        q_clamped: q.clamped,
        active_slots: Vec::new(),
        weight: 0,
        min_distance_required: 0.0,
        codewords: vec![Vec::new()],
        truncated: false,
        masks: vec![0],
    };
    if weight == 0 {
        return Ok(empty(OptimalQ { q: 0.0, clamped: false }));
    }
    let oq = optimal_q(p, weight as f64 / n as f64)?;
    let active_len = ((oq.q * n as f64).round() as usize).clamp(weight, n);
    if active_len > MAX_ACTIVE_SLOTS {
        return Err(StegoError::Infeasible(format!(
            "{active_len} active slots exceed the supported {MAX_ACTIVE_SLOTS}"
        )));
    }
    let required = 2.0 * p * oq.q * n as f64;
    if required >= (2 * weight.min(active_len - weight)) as f64 {
        return Err(StegoError::Infeasible(format!(
            "weight-{weight} words on {active_len} slots cannot be more than {required:.3} apart"
        )));
    }
    let active_slots = select_subset(key, n, active_len)?;

    let mut masks: Vec<u128> = Vec::new();
    let mut cand = if weight == 128 { u128::MAX } else { (1u128 << weight) - 1 };
    let mut scanned = 0u64;
    let mut truncated = false;
    loop {
        if masks.iter().all(|m| ((m ^ cand).count_ones() as f64) > required) {
            masks.push(cand);
        }
        scanned += 1;
        if scanned >= CANDIDATE_LIMIT {
            truncated = true;
            break;
        }
        match next_combination(cand, active_len) {
            Some(next) => cand = next,
            None => break,
        }
    }
    let codewords = masks.iter().map(|&m| (0..active_len).filter(|&i| m >> i & 1 == 1).collect()).collect();
    Ok(NoisyCodebook {
        n,
        p,
        delta_p,
        q_fraction: oq.q,
        q_clamped: oq.clamped,
        active_slots,
        weight,
        min_distance_required: required,
        codewords,
        truncated,
        masks,
    })
}

/// Nearest codeword on the active slots; ties go to the lowest index.
pub fn decode_noisy(received: &[bool], cb: &NoisyCodebook) -> Result<usize> {
    if received.len() != cb.n {
        return Err(StegoError::LengthMismatch { expected: cb.n, actual: received.len() });
    }
    let r = cb.active_slots.iter().enumerate().fold(0u128, |m, (j, &s)| m | (received[s] as u128) << j);
    let (best, _) = cb
        .masks
        .iter()
        .enumerate()
        .map(|(i, m)| (i, (m ^ r).count_ones()))
        .min_by_key(|&(i, d)| (d, i))
        .expect("codebook is never empty");
    Ok(best)
}

/// Fraction of blocks decoded wrongly over `trials` uniform messages through a BSC(p).
pub fn noisy_block_error<R: Rng + ?Sized>(cb: &NoisyCodebook, trials: usize, rng: &mut R) -> Result<f64> {
    let mut errors = 0usize;
    for _ in 0..trials {
        let k = rng.random_range(0..cb.count());
        let mut bits = cb.encode(k)?;
        for b in bits.iter_mut() {
            if rng.random::<f64>() < cb.p {
                *b = !*b;
            }
        }
        if decode_noisy(&bits, cb)? != k {
            errors += 1;
        }
    }
    Ok(errors as f64 / trials.max(1) as f64)
}

/// Uniform message below `count`.
pub fn random_message<R: Rng + ?Sized>(count: &BigUint, rng: &mut R) -> BigUint {
    let bits = count.bits();
    loop {
        let words: Vec<u32> = (0..bits.div_ceil(32)).map(|_| rng.random()).collect();
        let v = BigUint::new(words) & ((BigUint::one() << bits) - 1u32);
        if &v < count {
            return v;
        }
    }
}

/// Message index as a fixed-width bit vector, most significant first.
pub fn message_to_bits(message: &BigUint, bits: usize) -> Vec<bool> {
    (0..bits).rev().map(|i| message.bit(i as u64)).collect()
}

pub fn message_from_bits(bits: &[bool]) -> BigUint {
    bits.iter().fold(BigUint::zero(), |acc, &b| (acc << 1usize) | BigUint::from(b as u8))
}

/// Convenience: message index as `u64` when small.
pub fn message_u64(message: &BigUint) -> Option<u64> {
    message.to_u64()
}
