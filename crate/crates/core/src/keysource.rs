//! Shared secret key accounting: bit draws, keyed subset selection, twirl pads and the
//! key-consumption formulas for both protocols.

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::unrank_subset;
use crate::error::{invalid, Result, StegoError};
use crate::numeric::{big_choose, binary_entropy, ceil_log2};
use crate::pauli::{Pauli, PauliString};

/// A finite shared random bitstring with a consumption cursor.
///
/// Alice and Bob each hold a clone built from the same material; identical draw sequences
/// produce identical subsets, pads and representatives. Running past the end is a hard error.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyStream {
    bytes: Vec<u8>,
    len: usize,
    cursor: usize,
}

impl std::fmt::Debug for KeyStream {
    // Never print key material.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyStream").field("len", &self.len).field("cursor", &self.cursor).finish()
    }
}

impl KeyStream {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        Self { bytes, len: bits.len(), cursor: 0 }
    }

    /// Parses a `0`/`1` literal, ignoring whitespace.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(StegoError::InvalidKey(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        Self { bytes, len, cursor: 0 }
    }

    /// Hex-encoded key material, most significant bit of each byte first.
    pub fn from_hex(text: &str) -> Result<Self> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bytes = hex::decode(cleaned).map_err(|e| StegoError::InvalidKey(e.to_string()))?;
        Ok(Self::from_bytes(bytes))
    }

    /// Deterministic test-mode key expanded from a 64-bit seed. Not secret.
    pub fn from_seed(seed: u64, n_bits: usize) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut bytes = vec![0u8; n_bits.div_ceil(8)];
        rng.fill_bytes(&mut bytes);
        Self { bytes, len: n_bits, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.len - self.cursor
    }

    fn bit_at(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    fn reserve(&mut self, n: usize) -> Result<usize> {
        if n > self.remaining() {
            return Err(StegoError::KeyExhausted { requested: n, remaining: self.remaining() });
        }
        let start = self.cursor;
        self.cursor += n;
        Ok(start)
    }

    /// Next `n` bits; advances the cursor by `n`.
    pub fn draw_bits(&mut self, n: usize) -> Result<Vec<bool>> {
        let start = self.reserve(n)?;
        Ok((start..start + n).map(|i| self.bit_at(i)).collect())
    }

    /// Next `n` bits read as a big-endian unsigned integer.
    pub fn draw_uint(&mut self, n: usize) -> Result<BigUint> {
        let start = self.reserve(n)?;
        let mut v = BigUint::default();
        for i in start..start + n {
            v <<= 1usize;
            if self.bit_at(i) {
                v |= BigUint::from(1u8);
            }
        }
        Ok(v)
    }

    pub fn draw_u64(&mut self, n: usize) -> Result<u64> {
        if n > 64 {
            return invalid("draw_u64 takes at most 64 bits");
        }
        let start = self.reserve(n)?;
        Ok((start..start + n).fold(0u64, |acc, i| (acc << 1) | self.bit_at(i) as u64))
    }

    /// A uniform variate in `[0, 1)` from 53 key bits.
    pub fn draw_unit(&mut self) -> Result<f64> {
        Ok(self.draw_u64(UNIT_BITS)? as f64 / (1u64 << UNIT_BITS) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection on `ceil(log2 bound)`-bit draws.
    pub fn draw_below(&mut self, bound: &BigUint) -> Result<BigUint> {
        if bound == &BigUint::default() {
            return invalid("draw_below needs a positive bound");
        }
        let bits = ceil_log2(bound);
        loop {
            let v = self.draw_uint(bits)?;
            if &v < bound {
                return Ok(v);
            }
        }
    }
}

/// Bits used for one uniform variate drawn from the key.
pub const UNIT_BITS: usize = 53;

/// Keyed choice of a uniformly random `m`-subset of `n` slots, sorted ascending.
pub fn select_subset(key: &mut KeyStream, n: usize, m: usize) -> Result<Vec<usize>> {
    if m > n {
        return invalid(format!("subset size {m} exceeds {n}"));
    }
    let total = big_choose(n as u64, m as u64);
    let idx = key.draw_below(&total)?;
    unrank_subset(n, m, &idx)
}

/// Pad of `m` Paulis from `2m` key bits: 00 -> I, 01 -> X, 10 -> Y, 11 -> Z.
pub fn twirl_pad(key: &mut KeyStream, m: usize) -> Result<PauliString> {
    let bits = key.draw_bits(2 * m)?;
    let symbols: Vec<Pauli> = bits
        .chunks(2)
        .map(|pair| match (pair[0], pair[1]) {
            (false, false) => Pauli::I,
            (false, true) => Pauli::X,
            (true, false) => Pauli::Y,
            (true, true) => Pauli::Z,
        })
        .collect();
    Ok(PauliString::from_paulis(&symbols))
}

/// Predicted secret-key usage of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBudget {
    pub subset_bits: usize,
    pub twirl_bits: usize,
    pub representative_bits: usize,
    pub total: usize,
}

impl KeyBudget {
    pub fn new(subset_bits: usize, twirl_bits: usize, representative_bits: usize) -> Self {
        Self { subset_bits, twirl_bits, representative_bits, total: subset_bits + twirl_bits + representative_bits }
    }
}

/// Protocol 1: `ceil(log2 C(N, M))` bits for the subset plus `2M` for the pad.
pub fn key_consumption_p1(n: usize, m: usize) -> Result<KeyBudget> {
    if m > n {
        return invalid(format!("M = {m} exceeds N = {n}"));
    }
    Ok(KeyBudget::new(ceil_log2(&big_choose(n as u64, m as u64)), 2 * m, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KcrMode {
    /// Large-N limit `h(beta) + 2 beta`.
    Asymptotic,
    /// Exact big-integer evaluation at block length N.
    Exact(usize),
}

/// Fraction of slots carrying payload for a given `(p, delta_p)`: `4 delta_p / (3 - 4p)`.
pub fn kcr_beta(p: f64, delta_p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.75) {
        return invalid(format!("kcr needs 0 < p < 3/4, got {p}"));
    }
    if delta_p < 0.0 {
        return invalid("delta_p must be non-negative");
    }
    let beta = 4.0 * delta_p / (3.0 - 4.0 * p);
    if beta >= 1.0 {
        return invalid(format!("beta = {beta} >= 1"));
    }
    Ok(beta)
}

/// Key consumption rate of protocol 1, in key bits per channel qubit.
pub fn kcr(p: f64, delta_p: f64, mode: KcrMode) -> Result<f64> {
    let beta = kcr_beta(p, delta_p)?;
    match mode {
        KcrMode::Asymptotic => Ok(binary_entropy(beta) + 2.0 * beta),
        KcrMode::Exact(n) => {
            if n == 0 {
                return invalid("exact mode needs N >= 1");
            }
            let m = (beta * n as f64).round() as usize;
            Ok(key_consumption_p1(n, m)?.total as f64 / n as f64)
        }
    }
}

fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Protocol 2: `2N(s - delta)` twirl bits plus about `N delta` representative bits.
pub fn key_consumption_p2(n: usize, s: f64, delta: f64) -> Result<KeyBudget> {
    if s < 0.0 || delta < 0.0 || s - delta < 0.0 {
        return invalid(format!("need s, delta >= 0 and s >= delta (s = {s}, delta = {delta})"));
    }
    let nf = n as f64;
    Ok(KeyBudget::new(0, ceil_tol(2.0 * nf * (s - delta)), ceil_tol(nf * delta)))
}

/// Resources for teleporting stego qubits through the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeleportAccounting {
    pub ebits: usize,
    pub classical_stego_bits: usize,
    /// Teleportation outcomes are uniformly random, so no pad is applied to them.
    pub pad_free: bool,
}

pub fn ebit_teleport_accounting(n_stego_qubits: usize) -> TeleportAccounting {
    TeleportAccounting { ebits: n_stego_qubits, classical_stego_bits: 2 * n_stego_qubits, pad_free: true }
}

/// Key bits consumed between two cursor positions, as a convenience for audits.
pub fn consumed_since(key: &KeyStream, start_cursor: usize) -> usize {
    key.cursor() - start_cursor
}

/// `ceil(log2 C(n, m))` as a plain integer.
pub fn subset_bits(n: usize, m: usize) -> usize {
    ceil_log2(&big_choose(n as u64, m as u64))
}
