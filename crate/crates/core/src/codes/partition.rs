//! Partition of a typical error set into roughly equiprobable sets.
//!
//! Sets never hold strings of different weights. Every set in weight class `k` has the
//! same size `n_k`, picked so that `n_k` strings of that weight carry close to `1/C` of the
//! window mass. Class `k` then holds `C_k` consecutive blocks of `n_k` ranks each, and the
//! ranks past `C_k n_k` go unused. Nothing is materialized: membership and sampling go
//! through class ranks and subset unranking.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::typical::{ln_string_prob, ErrorAlphabet, TypicalErrorSet};
use super::SyndromeModel;
use crate::combinatorics::{rank_subset, unrank_subset};
use crate::error::{invalid, Result, StegoError};
use crate::keysource::KeyStream;
use crate::numeric::{big_from_log2, binary_entropy, floor_log2, ln_add_exp, log2_big};
use crate::pauli::{Pauli, PauliString};

/// How many sets the partition should have.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetCount {
    /// As many as the window supports: the most likely string becomes a set by itself.
    Maximal,
    /// The largest power of two not above the maximal count, so every set is a message.
    PowerOfTwo,
    /// Exactly this many.
    Exact(BigUint),
}

/// One weight class of the partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLayout {
    pub weight: usize,
    #[serde(with = "decimal")]
    pub multiplicity: BigUint,
    /// Strings per set.
    #[serde(with = "decimal")]
    pub set_size: BigUint,
    /// Sets drawn from this class.
    #[serde(with = "decimal")]
    pub sets: BigUint,
    /// Global index of the first set of this class.
    #[serde(with = "decimal")]
    pub first_set: BigUint,
}

impl ClassLayout {
    /// Number of class ranks covered by sets.
    pub fn used(&self) -> BigUint {
        &self.sets * &self.set_size
    }
}

/// The `C` sets `S_0 .. S_{C-1}`, described per weight class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPartition {
    pub typical: TypicalErrorSet,
    #[serde(with = "decimal")]
    pub set_count: BigUint,
    /// Classes with at least one set, in increasing weight.
    pub classes: Vec<ClassLayout>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SizeRounding {
    Nearest,
    Down,
    /// Down, and a class too small for one full-size set becomes a single set.
    Clamped,
}

/// Build a partition of the typical set `ts` into the requested number of sets.
pub fn build_partition(ts: &TypicalErrorSet, count: SetCount) -> Result<ErrorPartition> {
    if ts.total_probability <= 0.0 {
        return Err(StegoError::Infeasible("the typical window carries no probability".into()));
    }
    match count {
        SetCount::Exact(c) => {
            if c.is_zero() {
                return invalid("a partition needs at least one set");
            }
            ErrorPartition::try_layout(ts, &c).ok_or_else(|| {
                StegoError::Infeasible(format!("{c} sets cannot be carved out of the typical window"))
            })
        }
        SetCount::Maximal => ErrorPartition::maximal(ts),
        SetCount::PowerOfTwo => {
            let top = ErrorPartition::maximal(ts)?;
            let top_bits = floor_log2(&top.set_count);
            let exact = [SizeRounding::Nearest, SizeRounding::Down];
            (0..=top_bits)
                .rev()
                .find_map(|b| ErrorPartition::try_layout_with(ts, &(BigUint::one() << b), &exact))
                .or_else(|| ErrorPartition::try_layout(ts, &(BigUint::one() << top_bits)))
                .ok_or_else(|| StegoError::Infeasible("no power-of-two partition exists".into()))
        }
    }
}

impl ErrorPartition {
    fn maximal(ts: &TypicalErrorSet) -> Result<Self> {
        let l2_w = ts.total_probability.log2();
        let l2_top = ts.weights().map(|w| ts.ln_string_prob(w) / LN_2).fold(f64::NEG_INFINITY, f64::max);
        let mut c = big_from_log2(l2_w - l2_top).max(BigUint::one());
        let exact = [SizeRounding::Nearest, SizeRounding::Down];
        for _ in 0..256 {
            if let Some(part) = Self::try_layout_with(ts, &c, &exact) {
                return Ok(part);
            }
            // Shrink to what the rounded-down layout can hold and retry.
            let (caps, _) = Self::capacities(ts, &c, SizeRounding::Down);
            let held: BigUint = caps.iter().sum();
            if held.is_zero() {
                // Small windows: let whole classes stand in as sets.
                return Self::try_layout(ts, &c).ok_or_else(|| StegoError::Infeasible("empty partition".into()));
            }
            c = if held < c { held } else { &c - 1u32 };
        }
        Err(StegoError::Infeasible("maximal partition search did not settle".into()))
    }

    /// Per-class set sizes and caps `floor(mult / n_k)` for a target of `c` sets.
    fn capacities(ts: &TypicalErrorSet, c: &BigUint, rounding: SizeRounding) -> (Vec<BigUint>, Vec<BigUint>) {
        let l2_w = ts.total_probability.log2();
        let l2_c = log2_big(c);
        let mut caps = Vec::new();
        let mut sizes = Vec::new();
        for w in ts.weights() {
            let mult = ts.multiplicity(w);
            let x = l2_w - l2_c - ts.ln_string_prob(w) / LN_2;
            let mut n = match rounding {
                SizeRounding::Nearest => big_from_log2(x),
                _ if x < 52.0 => BigUint::from(x.exp2().floor().max(0.0) as u64),
                _ => big_from_log2(x),
            };
            n = n.max(BigUint::one());
            if rounding == SizeRounding::Clamped {
                n = n.min(mult.clone());
            }
            caps.push(&mult / &n);
            sizes.push(n);
        }
        (caps, sizes)
    }

    fn try_layout(ts: &TypicalErrorSet, c: &BigUint) -> Option<Self> {
        Self::try_layout_with(ts, c, &[SizeRounding::Nearest, SizeRounding::Down, SizeRounding::Clamped])
    }

    fn try_layout_with(ts: &TypicalErrorSet, c: &BigUint, roundings: &[SizeRounding]) -> Option<Self> {
        for &rounding in roundings {
            let (caps, sizes) = Self::capacities(ts, c, rounding);
            if caps.iter().sum::<BigUint>() >= *c {
                return Some(Self::apportion(ts, c, caps, sizes));
            }
        }
        None
    }

    /// Split `c` sets over the classes in proportion to class mass, within the caps.
    fn apportion(ts: &TypicalErrorSet, c: &BigUint, caps: Vec<BigUint>, sizes: Vec<BigUint>) -> Self {
        let l2_c = log2_big(c);
        let l2_w = ts.total_probability.log2();
        let weights: Vec<usize> = ts.weights().collect();
        let mut alloc: Vec<BigUint> = weights
            .iter()
            .zip(&caps)
            .map(|(&w, cap)| {
                let share = l2_c + ts.class_mass(w).log2() - l2_w;
                big_from_log2(share).min(cap.clone())
            })
            .collect();
        // Heaviest classes absorb the rounding first.
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| {
            let (ma, mb) = (ts.class_mass(weights[a]), ts.class_mass(weights[b]));
            mb.total_cmp(&ma).then(a.cmp(&b))
        });
        let assigned: BigUint = alloc.iter().sum();
        if assigned < *c {
            let mut short = c - &assigned;
            for &i in &order {
                let give = (&caps[i] - &alloc[i]).min(short.clone());
                alloc[i] += &give;
                short -= give;
            }
        } else {
            let mut over = &assigned - c;
            for &i in order.iter().rev() {
                let take = alloc[i].clone().min(over.clone());
                alloc[i] -= &take;
                over -= take;
            }
        }
        let mut first = BigUint::zero();
        let mut classes = Vec::new();
        for ((w, sets), size) in weights.into_iter().zip(alloc).zip(sizes) {
            if sets.is_zero() {
                continue;
            }
            let next = &first + &sets;
            classes.push(ClassLayout { weight: w, multiplicity: ts.multiplicity(w), set_size: size, sets, first_set: first });
            first = next;
        }
        debug_assert_eq!(&first, c);
        Self { typical: ts.clone(), set_count: c.clone(), classes }
    }

    pub fn n(&self) -> usize {
        self.typical.n
    }

    pub fn alphabet(&self) -> ErrorAlphabet {
        self.typical.alphabet
    }

    /// `floor(log2 C)`: bits carried when every message is one set.
    pub fn message_bits(&self) -> usize {
        floor_log2(&self.set_count)
    }

    pub fn log2_set_count(&self) -> f64 {
        log2_big(&self.set_count)
    }

    fn class_of_set(&self, k: &BigUint) -> Result<(&ClassLayout, BigUint)> {
        if k >= &self.set_count {
            return Err(StegoError::MessageOutOfRange(format!("set index {k} >= C = {}", self.set_count)));
        }
        let i = self.classes.partition_point(|c| &c.first_set <= k) - 1;
        let class = &self.classes[i];
        Ok((class, k - &class.first_set))
    }

    fn class_by_weight(&self, w: usize) -> Option<&ClassLayout> {
        self.classes.binary_search_by_key(&w, |c| c.weight).ok().map(|i| &self.classes[i])
    }

    /// Size of set `k`.
    pub fn set_size(&self, k: &BigUint) -> Result<BigUint> {
        Ok(self.class_of_set(k)?.0.set_size.clone())
    }

    /// Weight shared by every string of set `k`.
    pub fn set_weight(&self, k: &BigUint) -> Result<usize> {
        Ok(self.class_of_set(k)?.0.weight)
    }

    /// The `index`-th member of set `k`.
    pub fn member(&self, k: &BigUint, index: &BigUint) -> Result<PauliString> {
        let (class, local) = self.class_of_set(k)?;
        if index >= &class.set_size {
            return invalid(format!("member {index} outside a set of size {}", class.set_size));
        }
        let rank = local * &class.set_size + index;
        unrank_class(self.n(), class.weight, self.alphabet(), &rank)
    }

    /// Key-chosen uniform member of set `k`; spends `ceil(log2 |S_k|)` bits per attempt.
    pub fn representative_error(&self, k: &BigUint, key: &mut KeyStream) -> Result<PauliString> {
        let size = self.set_size(k)?;
        let index = key.draw_below(&size)?;
        self.member(k, &index)
    }

    /// Which set an error lies in, or `None` for errors outside every set.
    pub fn set_index_of(&self, e: &PauliString) -> Option<BigUint> {
        if !self.typical.contains(e) {
            return None;
        }
        let class = self.class_by_weight(e.weight())?;
        let rank = rank_class(e, self.alphabet())?;
        let local = rank / &class.set_size;
        (local < class.sets).then(|| &class.first_set + local)
    }

    /// Probability the encoder puts on each string of weight `w`, `1 / (C n_w)`, when the set
    /// index is uniform; zero for unused weights.
    pub fn string_probability(&self, w: usize) -> f64 {
        self.class_by_weight(w)
            .map(|c| (-(log2_big(&self.set_count) + log2_big(&c.set_size))).exp2())
            .unwrap_or(0.0)
    }

    /// Channel mass of every set of weight `w`.
    pub fn set_mass(&self, w: usize) -> Option<f64> {
        let c = self.class_by_weight(w)?;
        Some((log2_big(&c.set_size) * LN_2 + self.typical.ln_string_prob(w)).exp())
    }

    /// Per-string deviation `|q_k - p_k|` between the encoder and the channel at weight `w`.
    pub fn string_deviation(&self, w: usize) -> f64 {
        (self.string_probability(w) - self.typical.ln_string_prob(w).exp()).abs()
    }

    /// Total variation distance between the encoder's error law (uniform set index, uniform
    /// member) and `N` uses of the channel.
    pub fn channel_distance(&self) -> f64 {
        let n = self.n();
        let l2_c = log2_big(&self.set_count);
        let mut ln_total = f64::NEG_INFINITY;
        let mut add = |ln_term: f64| ln_total = ln_add_exp(ln_total, ln_term);
        for w in 0..=n {
            let ln_pi = ln_string_prob(&self.typical.channel, n, w);
            let ln_class = self.typical.ln_multiplicity(w) + ln_pi;
            let Some(c) = self.class_by_weight(w) else {
                add(ln_class);
                continue;
            };
            let ln_used = log2_big(&c.used()) * LN_2;
            // used strings: |1/(C n) - pi| = pi |r - 1| with r = 1 / (C n pi)
            let r = (-(l2_c + log2_big(&c.set_size)) * LN_2 - ln_pi).exp();
            if r != 1.0 {
                add(ln_used + ln_pi + (r - 1.0).abs().ln());
            }
            let unused = &c.multiplicity - c.used();
            if !unused.is_zero() {
                add(log2_big(&unused) * LN_2 + ln_pi);
            }
        }
        0.5 * ln_total.exp()
    }

    /// Per-string deviation bound at the lightest weight in use.
    pub fn s36_bound(&self) -> Result<f64> {
        let w = self.classes.first().map(|c| c.weight).unwrap_or(0);
        deviation_bound_at(self.typical.channel.error_rate(), self.n(), w)
    }

    /// Deterministic JSON layout shared by both parties.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StegoError::InvalidParameter(format!("partition JSON: {e}")))
    }
}

/// Rank of a weight-`w` string within its class: subset rank times `3^w` plus the base-3
/// code of its symbols (X=0, Y=1, Z=2, first slot most significant).
pub fn rank_class(e: &PauliString, alphabet: ErrorAlphabet) -> Option<BigUint> {
    if !alphabet.admits(e) {
        return None;
    }
    let support = e.support();
    let pos = rank_subset(e.len(), &support).ok()?;
    match alphabet {
        ErrorAlphabet::Binary => Some(pos),
        ErrorAlphabet::Pauli => {
            let mut code = BigUint::zero();
            for &i in &support {
                code = code * 3u32 + (e.get(i).index() as u32 - 1);
            }
            Some(pos * BigUint::from(3u32).pow(support.len() as u32) + code)
        }
    }
}

/// Inverse of [`rank_class`].
pub fn unrank_class(n: usize, w: usize, alphabet: ErrorAlphabet, rank: &BigUint) -> Result<PauliString> {
    let (pos, mut code) = match alphabet {
        ErrorAlphabet::Binary => (rank.clone(), BigUint::zero()),
        ErrorAlphabet::Pauli => {
            let base = BigUint::from(3u32).pow(w as u32);
            (rank / &base, rank % &base)
        }
    };
    let support = unrank_subset(n, w, &pos)?;
    let mut e = PauliString::identity(n);
    for &i in support.iter().rev() {
        let sym = match alphabet {
            ErrorAlphabet::Binary => Pauli::X,
            ErrorAlphabet::Pauli => {
                let digit = (&code % 3u32).to_usize().expect("digit");
                code /= 3u32;
                Pauli::from_index(1 + digit)
            }
        };
        e.set(i, sym);
    }
    Ok(e)
}

/// Abstract nondegenerate code for a typical window: the syndrome of an in-window error is
/// its position in the window listing (weight, then class rank).
#[derive(Debug, Clone)]
pub struct WindowSyndromes {
    typical: TypicalErrorSet,
    offsets: Vec<BigUint>,
}

impl WindowSyndromes {
    pub fn new(typical: &TypicalErrorSet) -> Self {
        let mut offsets = Vec::new();
        let mut acc = BigUint::zero();
        for w in typical.weights() {
            offsets.push(acc.clone());
            acc += typical.multiplicity(w);
        }
        offsets.push(acc);
        Self { typical: typical.clone(), offsets }
    }

    /// Number of distinct syndromes.
    pub fn label_count(&self) -> &BigUint {
        self.offsets.last().expect("non-empty")
    }
}

impl SyndromeModel for WindowSyndromes {
    fn block_len(&self) -> usize {
        self.typical.n
    }

    fn syndrome_of(&self, e: &PauliString) -> Option<BigUint> {
        if !self.typical.contains(e) {
            return None;
        }
        let slot = e.weight() - self.typical.min_weight;
        Some(&self.offsets[slot] + rank_class(e, self.typical.alphabet)?)
    }

    fn error_of(&self, s: &BigUint) -> Option<PauliString> {
        if s >= self.label_count() {
            return None;
        }
        let slot = self.offsets.partition_point(|o| o <= s) - 1;
        let w = self.typical.min_weight + slot;
        unrank_class(self.typical.n, w, self.typical.alphabet, &(s - &self.offsets[slot])).ok()
    }
}

/// The count `C = 1/q` of the idealized construction and the bits it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// `log2 C` from `q = p^{Np(1-delta)} (1-p)^{N(1-p+p delta)}`.
    pub log2_c: f64,
    /// `N (h(p) - p delta log2((1-p)/p))`.
    pub m_bits: f64,
}

impl CapacityEstimate {
    /// `C` rounded to an integer.
    pub fn count(&self) -> BigUint {
        big_from_log2(self.log2_c)
    }
}

pub fn partition_capacity(p: f64, n: usize, delta: f64) -> Result<CapacityEstimate> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("capacity needs 0 < p < 1/2, got {p}"));
    }
    let nf = n as f64;
    let log2_q = nf * p * (1.0 - delta) * p.log2() + nf * (1.0 - p + p * delta) * (1.0 - p).log2();
    Ok(CapacityEstimate {
        log2_c: -log2_q,
        m_bits: nf * (binary_entropy(p) - p * delta * ((1.0 - p) / p).log2()),
    })
}

/// `((1-p)/(1-2p)) p^{2k} (1-p)^{N-2k}`, the per-string deviation bound at weight `k`.
pub fn deviation_bound_at(p: f64, n: usize, k: usize) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("deviation bound needs 0 < p < 1/2, got {p}"));
    }
    let ln = ((1.0 - p) / (1.0 - 2.0 * p)).ln()
        + 2.0 * k as f64 * p.ln()
        + (n as f64 - 2.0 * k as f64) * (-p).ln_1p();
    Ok(ln.exp())
}

/// The deviation bound at the worst in-window weight, the lightest one `ceil(Np(1-delta))`.
pub fn partition_deviation_bound(p: f64, n: usize, delta: f64) -> Result<f64> {
    if delta < 0.0 {
        return invalid("delta must be non-negative");
    }
    let kmin = (n as f64 * p * (1.0 - delta) - 1e-9).ceil().max(0.0) as usize;
    deviation_bound_at(p, n, kmin)
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        BigUint::parse_bytes(text.as_bytes(), 10).ok_or_else(|| D::Error::custom("expected a decimal integer"))
    }
}
