//! Syndrome models, typical error sets and the equiprobable partition used by protocol 2.

pub mod hamming;
pub mod partition;
pub mod typical;

use num_bigint::BigUint;

use crate::pauli::PauliString;

pub use hamming::{hamming74_decode, hamming74_encode, hamming74_syndrome, HammingPlaneCode, SteaneSyndromes};
pub use partition::{
    build_partition, deviation_bound_at, partition_capacity, partition_deviation_bound, CapacityEstimate,
    ErrorPartition, SetCount, WindowSyndromes,
};
pub use typical::{build_typical_set, ErrorAlphabet, TypicalErrorSet, WindowRule};

/// A nondegenerate code seen only through its syndromes: correctable errors and syndrome
/// labels are in bijection.
pub trait SyndromeModel {
    fn block_len(&self) -> usize;

    /// Label of a correctable error, `None` otherwise.
    fn syndrome_of(&self, e: &PauliString) -> Option<BigUint>;

    /// The correctable error carrying a label, `None` for unused labels.
    fn error_of(&self, s: &BigUint) -> Option<PauliString>;
}
