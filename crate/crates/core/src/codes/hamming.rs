//! The [7,4] Hamming code, used classically for bit-flip syndromes and plane-wise as a
//! Pauli-frame inner code correcting any single-slot Pauli error.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::SyndromeModel;
use crate::error::{Result, StegoError};
use crate::pauli::{Pauli, PauliString};

/// Parity-check syndrome of a 7-bit word. Column `i` of the check matrix is `i + 1` in binary,
/// so a single flip at position `i` has syndrome `i + 1`.
pub fn hamming74_syndrome(e: &[bool]) -> Result<u8> {
    if e.len() != 7 {
        return Err(StegoError::LengthMismatch { expected: 7, actual: e.len() });
    }
    Ok(e.iter().enumerate().filter(|(_, &b)| b).fold(0u8, |s, (i, _)| s ^ (i as u8 + 1)))
}

const DATA_POSITIONS: [usize; 4] = [2, 4, 5, 6];

/// Systematic encoding of four data bits at positions 3, 5, 6, 7 (1-based).
pub fn hamming74_encode(data: &[bool; 4]) -> [bool; 7] {
    let mut w = [false; 7];
    for (&pos, &d) in DATA_POSITIONS.iter().zip(data) {
        w[pos] = d;
    }
    let s = hamming74_syndrome(&w).expect("length 7");
    // Parity bits sit at positions 1, 2, 4; setting them cancels each syndrome bit.
    for (bit, pos) in [(1u8, 0usize), (2, 1), (4, 3)] {
        if s & bit != 0 {
            w[pos] = true;
        }
    }
    w
}

/// Corrects up to one flipped bit and returns the data bits.
pub fn hamming74_decode(word: &[bool]) -> Result<[bool; 4]> {
    let s = hamming74_syndrome(word)?;
    let mut w = [false; 7];
    w.copy_from_slice(word);
    if s != 0 {
        w[s as usize - 1] ^= true;
    }
    Ok(DATA_POSITIONS.map(|p| w[p]))
}

/// Inner code for the noisy hiding variant: four payload symbols per seven slots, with the x
/// and z planes each protected by the Hamming code. Any single-slot Pauli error per block is
/// corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HammingPlaneCode;

impl HammingPlaneCode {
    pub const BLOCK: usize = 7;
    pub const DATA: usize = 4;

    pub fn encoded_len(&self, logical_len: usize) -> Result<usize> {
        if logical_len % Self::DATA != 0 {
            return Err(StegoError::InvalidParameter(format!(
                "logical payload length {logical_len} is not a multiple of {}",
                Self::DATA
            )));
        }
        Ok(logical_len / Self::DATA * Self::BLOCK)
    }

    pub fn encode(&self, logical: &PauliString) -> Result<PauliString> {
        let len = self.encoded_len(logical.len())?;
        let mut out = PauliString::identity(len);
        let xs = logical.x_bits();
        let zs = logical.z_bits();
        for b in 0..logical.len() / Self::DATA {
            let r = b * Self::DATA..(b + 1) * Self::DATA;
            let cx = hamming74_encode(&xs[r.clone()].try_into().expect("4 bits"));
            let cz = hamming74_encode(&zs[r].try_into().expect("4 bits"));
            for i in 0..Self::BLOCK {
                out.set(b * Self::BLOCK + i, Pauli::from_bits(cx[i], cz[i]));
            }
        }
        Ok(out)
    }

    pub fn decode(&self, physical: &PauliString) -> Result<PauliString> {
        if physical.len() % Self::BLOCK != 0 {
            return Err(StegoError::LengthMismatch {
                expected: physical.len().div_ceil(Self::BLOCK) * Self::BLOCK,
                actual: physical.len(),
            });
        }
        let blocks = physical.len() / Self::BLOCK;
        let xs = physical.x_bits();
        let zs = physical.z_bits();
        let mut out = PauliString::identity(blocks * Self::DATA);
        for b in 0..blocks {
            let r = b * Self::BLOCK..(b + 1) * Self::BLOCK;
            let dx = hamming74_decode(&xs[r.clone()])?;
            let dz = hamming74_decode(&zs[r])?;
            for i in 0..Self::DATA {
                out.set(b * Self::DATA + i, Pauli::from_bits(dx[i], dz[i]));
            }
        }
        Ok(out)
    }
}

/// Concrete nondegenerate syndrome model on seven slots: the CSS pair of Hamming checks,
/// correcting every Pauli error of weight at most one. Labels pack `(sx << 3) | sz`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SteaneSyndromes;

impl SyndromeModel for SteaneSyndromes {
    fn block_len(&self) -> usize {
        7
    }

    fn syndrome_of(&self, e: &PauliString) -> Option<BigUint> {
        if e.len() != 7 || e.weight() > 1 {
            return None;
        }
        let sx = hamming74_syndrome(&e.x_bits()).ok()?;
        let sz = hamming74_syndrome(&e.z_bits()).ok()?;
        Some(BigUint::from((sx << 3) | sz))
    }

    fn error_of(&self, s: &BigUint) -> Option<PauliString> {
        let v = s.to_u8()?;
        let (sx, sz) = (v >> 3, v & 7);
        if v > 63 || (sx != 0 && sz != 0 && sx != sz) {
            return None;
        }
        let mut e = PauliString::identity(7);
        let pos = sx.max(sz);
        if pos > 0 {
            e.set(pos as usize - 1, Pauli::from_bits(sx != 0, sz != 0));
        }
        Some(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn syndrome_examples() {
        assert_eq!(hamming74_syndrome(&bits("0000000")).unwrap(), 0);
        let singles: HashSet<u8> = (0..7)
            .map(|i| {
                let mut e = vec![false; 7];
                e[i] = true;
                hamming74_syndrome(&e).unwrap()
            })
            .collect();
        assert_eq!(singles, (1..=7).collect());
        let a = bits("1000100");
        let b = bits("0110001");
        let sum: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert_eq!(
            hamming74_syndrome(&sum).unwrap(),
            hamming74_syndrome(&a).unwrap() ^ hamming74_syndrome(&b).unwrap()
        );
        assert!(hamming74_syndrome(&bits("101")).is_err());
    }

    #[test]
    fn codewords_have_zero_syndrome_and_correct_single_flips() {
        for d in 0u8..16 {
            let data = [d & 1 != 0, d & 2 != 0, d & 4 != 0, d & 8 != 0];
            let w = hamming74_encode(&data);
            assert_eq!(hamming74_syndrome(&w).unwrap(), 0);
            assert_eq!(hamming74_decode(&w).unwrap(), data);
            for i in 0..7 {
                let mut r = w;
                r[i] ^= true;
                assert_eq!(hamming74_decode(&r).unwrap(), data);
            }
        }
    }

    #[test]
    fn plane_code_corrects_any_single_slot_pauli() {
        let code = HammingPlaneCode;
        let logical: PauliString = "XYZIZZYX".parse().unwrap();
        let enc = code.encode(&logical).unwrap();
        assert_eq!(enc.len(), 14);
        assert_eq!(code.decode(&enc).unwrap(), logical);
        for slot in 0..14 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut err = PauliString::identity(14);
                err.set(slot, p);
                let noisy = enc.compose(&err).unwrap();
                assert_eq!(code.decode(&noisy).unwrap(), logical, "slot {slot} {p:?}");
            }
        }
        assert!(code.encode(&"XYZ".parse().unwrap()).is_err());
    }

    #[test]
    fn steane_model_roundtrips_every_correctable_error() {
        let model = SteaneSyndromes;
        let mut seen = HashSet::new();
        let mut errors = vec![PauliString::identity(7)];
        for i in 0..7 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut e = PauliString::identity(7);
                e.set(i, p);
                errors.push(e);
            }
        }
        for e in &errors {
            let s = model.syndrome_of(e).unwrap();
            assert!(seen.insert(s.clone()), "duplicate syndrome");
            assert_eq!(&model.error_of(&s).unwrap(), e);
        }
        assert_eq!(seen.len(), 22);
        assert!(model.syndrome_of(&"XXIIIII".parse().unwrap()).is_none());
    }
}
