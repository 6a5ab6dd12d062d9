//! Phase-free Pauli strings and the single-qubit density checks used to validate twirling.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StegoError};

/// Single-qubit Pauli, stored as an (x, z) bit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    /// Index in the order I, X, Y, Z.
    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    /// Product up to a global phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        let (ax, az) = self.bits();
        let (bx, bz) = other.bits();
        Pauli::from_bits(ax ^ bx, az ^ bz)
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' | 'i' | '_' => Ok(Pauli::I),
            'X' | 'x' => Ok(Pauli::X),
            'Y' | 'y' => Ok(Pauli::Y),
            'Z' | 'z' => Ok(Pauli::Z),
            other => Err(StegoError::InvalidSymbol(other)),
        }
    }

    fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// An N-slot Pauli string packed two bits per slot (x plane and z plane).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: vec![0; words(n)], z: vec![0; words(n)] }
    }

    pub fn from_paulis(symbols: &[Pauli]) -> Self {
        let mut s = Self::identity(symbols.len());
        for (i, &p) in symbols.iter().enumerate() {
            s.set(i, p);
        }
        s
    }

    /// A bit-flip pattern: X on every listed position.
    pub fn from_x_positions(n: usize, positions: &[usize]) -> Self {
        let mut s = Self::identity(n);
        for &i in positions {
            s.set(i, Pauli::X);
        }
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::identity(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, Pauli::X);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> Pauli {
        assert!(i < self.n, "slot {i} out of range for length {}", self.n);
        let (w, b) = (i / 64, i % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, i: usize, p: Pauli) {
        assert!(i < self.n, "slot {i} out of range for length {}", self.n);
        let (w, b) = (i / 64, i % 64);
        let (px, pz) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((px as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((pz as u64) << b);
    }

    pub fn iter(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n).map(move |i| self.get(i))
    }

    /// Number of non-identity slots.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// Positions of non-identity slots, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i) != Pauli::I).collect()
    }

    /// Slot-wise product ignoring global phase.
    pub fn compose(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(StegoError::LengthMismatch { expected: self.n, actual: other.n });
        }
        Ok(PauliString {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
        })
    }

    /// Sub-string on the given slots, in the given order.
    pub fn restrict(&self, slots: &[usize]) -> PauliString {
        PauliString::from_paulis(&slots.iter().map(|&i| self.get(i)).collect::<Vec<_>>())
    }

    /// Writes `patch[j]` onto slot `slots[j]`.
    pub fn scatter(&mut self, slots: &[usize], patch: &PauliString) -> Result<()> {
        if slots.len() != patch.len() {
            return Err(StegoError::LengthMismatch { expected: slots.len(), actual: patch.len() });
        }
        for (j, &i) in slots.iter().enumerate() {
            self.set(i, patch.get(j));
        }
        Ok(())
    }

    /// The x plane as booleans (the classical bit pattern under a BSC).
    pub fn x_bits(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i).bits().0).collect()
    }

    pub fn z_bits(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i).bits().1).collect()
    }

    /// True when only I and X occur.
    pub fn is_x_type(&self) -> bool {
        self.z.iter().all(|&w| w == 0)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = StegoError;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s.trim().chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_paulis(&symbols))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of non-identity slots.
pub fn weight(s: &PauliString) -> usize {
    s.weight()
}

/// Slot-wise product of two equal-length strings, phase dropped.
pub fn compose(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.compose(b)
}

const DENSITY_TOL: f64 = 1e-12;

/// A validated 2x2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitDensity {
    m: [[Complex64; 2]; 2],
}

impl SingleQubitDensity {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let herm = (m[0][1] - m[1][0].conj()).norm() <= DENSITY_TOL
            && m[0][0].im.abs() <= DENSITY_TOL
            && m[1][1].im.abs() <= DENSITY_TOL;
        if !herm {
            return Err(StegoError::NotADensityMatrix("not Hermitian".into()));
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(StegoError::NotADensityMatrix(format!("trace {tr}")));
        }
        let d = m[0][0].re - m[1][1].re;
        let disc = (d * d + 4.0 * m[0][1].norm_sqr()).sqrt();
        let lo = 0.5 * (tr - disc);
        if lo < -DENSITY_TOL {
            return Err(StegoError::NotADensityMatrix(format!("negative eigenvalue {lo}")));
        }
        Ok(Self { m })
    }

    /// `(I + r.sigma) / 2` for a Bloch vector with `|r| <= 1`.
    pub fn from_bloch(rx: f64, ry: f64, rz: f64) -> Result<Self> {
        let h = 0.5;
        Self::new([
            [Complex64::new(h * (1.0 + rz), 0.0), Complex64::new(h * rx, -h * ry)],
            [Complex64::new(h * rx, h * ry), Complex64::new(h * (1.0 - rz), 0.0)],
        ])
    }

    pub fn maximally_mixed() -> Self {
        Self::from_bloch(0.0, 0.0, 0.0).expect("I/2 is a density matrix")
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    /// `P rho P` for a single-qubit Pauli.
    pub fn conjugate(&self, p: Pauli) -> [[Complex64; 2]; 2] {
        let pm = p.matrix();
        let mut tmp = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut out = tmp;
        for i in 0..2 {
            for j in 0..2 {
                tmp[i][j] = (0..2).map(|k| pm[i][k] * self.m[k][j]).sum();
            }
        }
        // Paulis are Hermitian, so the right factor is P itself.
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (0..2).map(|k| tmp[i][k] * pm[k][j]).sum();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &SingleQubitDensity) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        d
    }
}

/// `(rho + X rho X + Y rho Y + Z rho Z) / 4`.
pub fn twirl_average(rho: &SingleQubitDensity) -> Result<SingleQubitDensity> {
    let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
    for p in Pauli::ALL {
        let c = rho.conjugate(p);
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += c[i][j] * 0.25;
            }
        }
    }
    SingleQubitDensity::new(acc)
}
