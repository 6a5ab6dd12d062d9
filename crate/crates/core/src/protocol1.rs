//! Protocol 1: payload slots hidden as maximally mixed positions of a codeword.
//!
//! Alice picks a keyed subset of `M` slots, one-time pads her payload symbols with a keyed
//! twirl, and makes `m` further slots maximally mixed so that the total mixed count `Q = M + m`
//! follows the depolarizing law. Everything is tracked as a Pauli frame.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{emulation_rate, sample_error, ChannelModel};
use crate::codes::HammingPlaneCode;
use crate::error::{invalid, Result, StegoError};
use crate::keysource::{key_consumption_p1, select_subset, twirl_pad, KeyBudget, KeyStream};
use crate::numeric::{binary_entropy, binomial_pmf_vec};
use crate::pauli::{Pauli, PauliString};

/// Inner codes available for the noisy variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerCode {
    /// Four logical symbols per seven slots, one Pauli error per block corrected.
    Hamming7,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StegoParams1 {
    pub n: usize,
    /// Depolarizing rate Alice emulates.
    pub p_emulated: f64,
    /// Margin in `M = (4/3) p N (1 - delta)`.
    pub delta: f64,
    /// Intrinsic depolarizing rate of the physical channel.
    #[serde(default)]
    pub p_physical: f64,
    #[serde(default)]
    pub inner_code: Option<InnerCode>,
}

impl StegoParams1 {
    pub fn noiseless(n: usize, p: f64, delta: f64) -> Result<Self> {
        let params = Self { n, p_emulated: p, delta, p_physical: 0.0, inner_code: None };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for an observed rate of `p_physical + delta_p`: Alice emulates
    /// `q = delta_p / (1 - 4 p_physical / 3)` on top of the physical noise.
    pub fn noisy(n: usize, p_physical: f64, delta_p: f64, delta: f64, inner_code: Option<InnerCode>) -> Result<Self> {
        let q = emulation_rate(p_physical, delta_p)?;
        let params = Self { n, p_emulated: q, delta, p_physical, inner_code };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("N must be at least 1");
        }
        if !(0.0..=0.75).contains(&self.p_emulated) {
            return invalid(format!("emulated rate must lie in [0, 3/4], got {}", self.p_emulated));
        }
        if !(0.0..0.75).contains(&self.p_physical) {
            return invalid(format!("physical rate must lie in [0, 3/4), got {}", self.p_physical));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return invalid(format!("delta must lie in [0, 1), got {}", self.delta));
        }
        if self.payload_len() > self.n {
            return invalid("M exceeds N");
        }
        Ok(())
    }

    /// Probability that a slot is maximally mixed, `4p/3`.
    pub fn mixing_rate(&self) -> f64 {
        4.0 * self.p_emulated / 3.0
    }

    /// `M = round((4/3) p N (1 - delta))`.
    pub fn payload_len(&self) -> usize {
        (self.mixing_rate() * self.n as f64 * (1.0 - self.delta)).round() as usize
    }

    /// `sqrt((1 - 4p/3) / ((4p/3) N))`, the scale `delta` should dominate.
    pub fn delta_floor(&self) -> f64 {
        let t = self.mixing_rate();
        ((1.0 - t) / (t * self.n as f64)).sqrt()
    }

    /// Whether `delta_floor < delta < 1/2`. Outside this range the protocol still runs.
    pub fn delta_admissible(&self) -> bool {
        self.delta > self.delta_floor() && self.delta < 0.5
    }

    pub fn key_budget(&self) -> Result<KeyBudget> {
        key_consumption_p1(self.n, self.payload_len())
    }

    /// Logical symbols carried in the noisy variant.
    pub fn logical_len(&self) -> usize {
        match self.inner_code {
            Some(InnerCode::Hamming7) => self.payload_len() / HammingPlaneCode::BLOCK * HammingPlaneCode::DATA,
            None => self.payload_len(),
        }
    }

    /// Law of the mixed count `Q`, `Binomial(N, 4p/3)`.
    pub fn mixed_count_law(&self) -> Vec<f64> {
        binomial_pmf_vec(self.n as u64, self.mixing_rate())
    }

    /// `P(Q < M)`: the lower tail the conditioned decoy law folds upward. It is also the total
    /// variation between the transmitted mixed-count law and the binomial one.
    pub fn truncation_mass(&self) -> f64 {
        let m = self.payload_len();
        self.mixed_count_law()[..m].iter().fold(0.0, |a, x| a + x)
    }
}

/// Smallest margin on a 0.01 grid whose truncation mass is at most `tol`, for the noisy
/// parameters `(n, p_physical, delta_p)`.
pub fn margin_for_truncation(n: usize, p_physical: f64, delta_p: f64, tol: f64) -> Result<f64> {
    for step in 0..100 {
        let delta = step as f64 / 100.0;
        if StegoParams1::noisy(n, p_physical, delta_p, delta, None)?.truncation_mass() <= tol {
            return Ok(delta);
        }
    }
    Err(StegoError::Infeasible(format!("no margin below 1 keeps P(Q < M) <= {tol} at N = {n}")))
}

/// Key bits actually drawn while encoding one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeyAudit {
    /// The accepted subset draw.
    pub subset_bits: usize,
    /// Draws rejected by the uniform subset sampler.
    pub subset_redraw_bits: usize,
    pub pad_bits: usize,
    /// Bits spent sampling the decoy count.
    pub m_bits: usize,
}

impl KeyAudit {
    pub fn total(&self) -> usize {
        self.subset_bits + self.subset_redraw_bits + self.pad_bits + self.m_bits
    }

    /// True when the accepted subset draw and the pad match the predicted budget exactly.
    pub fn matches(&self, budget: &KeyBudget) -> bool {
        self.subset_bits == budget.subset_bits && self.pad_bits == budget.twirl_bits
    }
}

/// One transmitted block, with the hidden fields kept alongside for tests and debug traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmittedBlock {
    pub n: usize,
    /// Sorted payload slots (secret).
    pub payload_slots: Vec<usize>,
    /// Pad over the payload slots (secret).
    pub pad: PauliString,
    /// Extra maximally mixed slots.
    pub decoy_mixed_slots: Vec<usize>,
    /// Alice's frame: padded payload on payload slots, random Paulis on decoys.
    pub frame: PauliString,
    pub channel_error: PauliString,
    /// `Q = M + m`.
    pub observable_mixed_count: usize,
    pub audit: KeyAudit,
}

impl TransmittedBlock {
    /// What arrives at Bob: the frame followed by the physical error.
    pub fn received(&self) -> PauliString {
        self.frame.compose(&self.channel_error).expect("equal lengths")
    }
}

/// Key-independent observables of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveView {
    pub n: usize,
    pub mixed_count: usize,
    /// The Pauli frame Eve could infer from syndromes.
    pub received: PauliString,
    pub weight: usize,
}

pub fn eve_view(block: &TransmittedBlock) -> EveView {
    let received = block.received();
    EveView { n: block.n, mixed_count: block.observable_mixed_count, weight: received.weight(), received }
}

/// The same observables for an honest depolarizing channel in the twirl picture.
pub fn honest_view<R: Rng + ?Sized>(params: &StegoParams1, rng: &mut R) -> EveView {
    let mut frame = PauliString::identity(params.n);
    let mut mixed = 0;
    for i in 0..params.n {
        if rng.random::<f64>() < params.mixing_rate() {
            mixed += 1;
            frame.set(i, Pauli::from_index(rng.random_range(0..4)));
        }
    }
    let err = physical_error(params, rng);
    let received = frame.compose(&err).expect("equal lengths");
    EveView { n: params.n, mixed_count: mixed, weight: received.weight(), received }
}

fn physical_error<R: Rng + ?Sized>(params: &StegoParams1, rng: &mut R) -> PauliString {
    if params.p_physical > 0.0 {
        let ch = ChannelModel::Depolarizing { p: params.p_physical };
        sample_error(&ch, params.n, rng)
    } else {
        PauliString::identity(params.n)
    }
}

/// Keyed draw of the decoy count `m` from `P(Q = M + m | Q >= M)`, `Q ~ Binomial(N, 4p/3)`.
///
/// Uses one 53-bit uniform unless the conditional law is a point mass, in which case no key
/// is spent.
fn draw_decoy_count(params: &StegoParams1, m_payload: usize, key: &mut KeyStream) -> Result<usize> {
    let law = params.mixed_count_law();
    let support: Vec<usize> = (m_payload..=params.n).filter(|&q| law[q] > 0.0).collect();
    match support.as_slice() {
        [] => Err(StegoError::Infeasible(format!(
            "no mixed count >= M = {m_payload} has positive probability"
        ))),
        [q] => Ok(q - m_payload),
        _ => {
            let tail: f64 = support.iter().map(|&q| law[q]).sum();
            let target = key.draw_unit()? * tail;
            let mut acc = 0.0;
            for &q in &support {
                acc += law[q];
                if acc > target {
                    return Ok(q - m_payload);
                }
            }
            Ok(support[support.len() - 1] - m_payload)
        }
    }
}

/// Secret choices both parties derive from the key, in draw order.
struct KeyedLayout {
    slots: Vec<usize>,
    pad: PauliString,
    decoys: usize,
    audit: KeyAudit,
}

fn keyed_layout(params: &StegoParams1, key: &mut KeyStream) -> Result<KeyedLayout> {
    params.validate()?;
    let m = params.payload_len();
    let budget = params.key_budget()?;
    let start = key.cursor();
    let slots = select_subset(key, params.n, m)?;
    let subset_total = key.cursor() - start;
    let pad_start = key.cursor();
    let pad = twirl_pad(key, m)?;
    let pad_bits = key.cursor() - pad_start;
    let m_start = key.cursor();
    let decoys = draw_decoy_count(params, m, key)?;
    let audit = KeyAudit {
        subset_bits: budget.subset_bits.min(subset_total),
        subset_redraw_bits: subset_total.saturating_sub(budget.subset_bits),
        pad_bits,
        m_bits: key.cursor() - m_start,
    };
    Ok(KeyedLayout { slots, pad, decoys, audit })
}

/// Encode `M` payload symbols into one block.
pub fn encode_p1<R: Rng + ?Sized>(
    payload: &PauliString,
    key: &mut KeyStream,
    params: &StegoParams1,
    rng: &mut R,
) -> Result<TransmittedBlock> {
    params.validate()?;
    let m = params.payload_len();
    if payload.len() != m {
        return Err(StegoError::LengthMismatch { expected: m, actual: payload.len() });
    }
    let layout = keyed_layout(params, key)?;
    let mut frame = PauliString::identity(params.n);
    frame.scatter(&layout.slots, &payload.compose(&layout.pad)?)?;

    // Decoys: a uniform m-subset of the remaining slots, each fully depolarized.
    let mut free: Vec<usize> = (0..params.n).filter(|i| layout.slots.binary_search(i).is_err()).collect();
    let mut decoys = Vec::with_capacity(layout.decoys);
    for j in 0..layout.decoys {
        let pick = rng.random_range(j..free.len());
        free.swap(j, pick);
        decoys.push(free[j]);
    }
    decoys.sort_unstable();
    for &i in &decoys {
        frame.set(i, Pauli::from_index(rng.random_range(0..4)));
    }

    Ok(TransmittedBlock {
        n: params.n,
        payload_slots: layout.slots,
        pad: layout.pad,
        decoy_mixed_slots: decoys,
        frame,
        channel_error: physical_error(params, rng),
        observable_mixed_count: m + layout.decoys,
        audit: layout.audit,
    })
}

/// Bob's side: re-derive subset and pad from his key copy and strip the pad.
pub fn decode_p1(block: &TransmittedBlock, key: &mut KeyStream, params: &StegoParams1) -> Result<PauliString> {
    if block.n != params.n {
        return Err(StegoError::LengthMismatch { expected: params.n, actual: block.n });
    }
    let layout = keyed_layout(params, key)?;
    block.received().restrict(&layout.slots).compose(&layout.pad)
}

/// Noisy variant: inner-encode the logical payload, fill the spare payload slots with
/// identities, then run [`encode_p1`].
pub fn encode_p1_noisy<R: Rng + ?Sized>(
    logical: &PauliString,
    key: &mut KeyStream,
    params: &StegoParams1,
    rng: &mut R,
) -> Result<TransmittedBlock> {
    let code = inner(params)?;
    if logical.len() != params.logical_len() {
        return Err(StegoError::LengthMismatch { expected: params.logical_len(), actual: logical.len() });
    }
    let encoded = code.encode(logical)?;
    let mut payload = PauliString::identity(params.payload_len());
    let head: Vec<usize> = (0..encoded.len()).collect();
    payload.scatter(&head, &encoded)?;
    encode_p1(&payload, key, params, rng)
}

pub fn decode_p1_noisy(block: &TransmittedBlock, key: &mut KeyStream, params: &StegoParams1) -> Result<PauliString> {
    let code = inner(params)?;
    let payload = decode_p1(block, key, params)?;
    let used = code.encoded_len(params.logical_len())?;
    code.decode(&payload.restrict(&(0..used).collect::<Vec<_>>()))
}

fn inner(params: &StegoParams1) -> Result<HammingPlaneCode> {
    match params.inner_code {
        Some(InnerCode::Hamming7) => Ok(HammingPlaneCode),
        None => invalid("the noisy variant needs an inner code"),
    }
}

/// Logical symbols per channel slot achieved by the noisy variant.
pub fn noisy_rate(params: &StegoParams1) -> f64 {
    params.logical_len() as f64 / params.n as f64
}

/// BSC reference rate quoted alongside the noisy variant: `(1-delta)(1-h(p)) delta_p / (1-2p)`.
pub fn reference_rate_bsc(p: f64, delta_p: f64, delta: f64) -> f64 {
    (1.0 - delta) * (1.0 - binary_entropy(p)) * delta_p / (1.0 - 2.0 * p)
}

/// The encoding-1 reference rate `2 delta_p (1-h(p)) / (1-2p)`.
pub fn reference_rate_encoding1(p: f64, delta_p: f64) -> f64 {
    2.0 * delta_p * (1.0 - binary_entropy(p)) / (1.0 - 2.0 * p)
}

/// Uniformly random payload of `len` symbols.
pub fn random_payload<R: Rng + ?Sized>(len: usize, rng: &mut R) -> PauliString {
    let symbols: Vec<Pauli> = (0..len).map(|_| Pauli::from_index(rng.random_range(0..4))).collect();
    PauliString::from_paulis(&symbols)
}

/// Key bits needed to encode one block in the worst case without rejections.
pub fn key_bits_hint(params: &StegoParams1) -> Result<usize> {
    Ok(params.key_budget()?.total + crate::keysource::UNIT_BITS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn payload_len_and_delta_floor() {
        let p = StegoParams1::noiseless(200, 0.15, 0.45).unwrap();
        // (4/3)(0.15)(200)(0.55) = 22
        assert_eq!(p.payload_len(), 22);
        assert!((p.delta_floor() - (0.8f64 / 40.0).sqrt()).abs() < 1e-15);
        assert!(p.delta_admissible());
        assert!(!StegoParams1::noiseless(200, 0.15, 0.05).unwrap().delta_admissible());
        assert!(StegoParams1::noiseless(10, 0.8, 0.1).is_err());
    }

    #[test]
    fn noiseless_roundtrip_with_key_audit() {
        let params = StegoParams1::noiseless(120, 0.2, 0.3).unwrap();
        let budget = params.key_budget().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..500u64 {
            let payload = random_payload(params.payload_len(), &mut rng);
            let mut alice = KeyStream::from_seed(trial, 4096);
            let mut bob = alice.clone();
            let block = encode_p1(&payload, &mut alice, &params, &mut rng).unwrap();
            assert_eq!(decode_p1(&block, &mut bob, &params).unwrap(), payload);
            assert_eq!(alice.cursor(), bob.cursor());
            assert!(block.audit.matches(&budget));
            assert_eq!(block.audit.total(), alice.cursor());
            assert_eq!(block.audit.m_bits, crate::keysource::UNIT_BITS);
            assert_eq!(block.audit.subset_redraw_bits % budget.subset_bits, 0);
            assert_eq!(block.observable_mixed_count, block.payload_slots.len() + block.decoy_mixed_slots.len());
            assert!(block.decoy_mixed_slots.iter().all(|d| block.payload_slots.binary_search(d).is_err()));
        }
    }

    #[test]
    fn degenerate_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = StegoParams1::noiseless(50, 0.0, 0.2).unwrap();
        let mut key = KeyStream::from_bits(&[]);
        let block = encode_p1(&PauliString::identity(0), &mut key, &params, &mut rng).unwrap();
        assert_eq!(block.observable_mixed_count, 0);
        assert_eq!(block.frame, PauliString::identity(50));
        assert_eq!(key.cursor(), 0);
    }

    #[test]
    fn wrong_key_gives_quarter_match_rate() {
        let params = StegoParams1::noiseless(400, 0.3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut hits, mut total) = (0usize, 0usize);
        for t in 0..200u64 {
            let payload = random_payload(params.payload_len(), &mut rng);
            let mut alice = KeyStream::from_seed(t, 8192);
            let mut eve = KeyStream::from_seed(t + 1_000_000, 8192);
            let block = encode_p1(&payload, &mut alice, &params, &mut rng).unwrap();
            let guess = decode_p1(&block, &mut eve, &params).unwrap();
            hits += payload.iter().zip(guess.iter()).filter(|(a, b)| a == b).count();
            total += payload.len();
        }
        let rate = hits as f64 / total as f64;
        let sigma = (0.25 * 0.75 / total as f64).sqrt();
        assert!((rate - 0.25).abs() < 4.0 * sigma, "match rate {rate}");
    }

    #[test]
    fn noisy_variant_corrects_one_error_per_inner_block() {
        let params = StegoParams1 { n: 300, p_emulated: 0.2, delta: 0.2, p_physical: 0.0, inner_code: Some(InnerCode::Hamming7) };
        assert_eq!(params.payload_len(), 64);
        assert_eq!(params.logical_len(), 36);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in 0..200u64 {
            let logical = random_payload(36, &mut rng);
            let mut alice = KeyStream::from_seed(t, 4096);
            let mut bob = alice.clone();
            let mut block = encode_p1_noisy(&logical, &mut alice, &params, &mut rng).unwrap();
            // One random Pauli error inside every inner block, on its payload slot.
            for b in 0..9 {
                let slot = block.payload_slots[b * 7 + rng.random_range(0..7)];
                block.channel_error.set(slot, Pauli::from_index(rng.random_range(1..4)));
            }
            assert_eq!(decode_p1_noisy(&block, &mut bob, &params).unwrap(), logical);
        }
    }

    #[test]
    fn noisy_params_hit_target_rate() {
        let params = StegoParams1::noisy(100, 0.1, 0.02, 0.2, None).unwrap();
        let eff = params.p_physical + params.p_emulated * (1.0 - 4.0 * params.p_physical / 3.0);
        assert!((eff - 0.12).abs() < 1e-15);
    }

    #[test]
    fn eve_view_hides_secret_fields() {
        let params = StegoParams1::noiseless(64, 0.2, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let payload = random_payload(params.payload_len(), &mut rng);
        let mut key = KeyStream::from_seed(9, 2048);
        let block = encode_p1(&payload, &mut key, &params, &mut rng).unwrap();
        let view = eve_view(&block);
        let json = serde_json::to_value(&view).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 4);
        assert!(!keys.iter().any(|k| k.contains("pad") || k.contains("slot")));
        assert_eq!(view.mixed_count, block.observable_mixed_count);
    }
}
