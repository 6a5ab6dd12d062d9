//! Python bindings: Pauli strings, key streams, both protocols, the security calculators and
//! the experiment runner.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qsteg::adversary::{distinguishing_experiment, AdversaryConfig};
use qsteg::experiment::{self, ChannelKind, ExperimentConfig, KeySource, RunOptions, WindowKind};
use qsteg::keysource::KcrMode;
use qsteg::montecarlo::trial_rng;
use qsteg::protocol1::{self, InnerCode, TransmittedBlock};
use qsteg::protocol2::{self, P2Block};
use qsteg::{security, StegoError};

create_exception!(pyqsteg, KeyExhausted, PyException, "The shared key ran out.");

fn to_py(e: StegoError) -> PyErr {
    match e {
        StegoError::KeyExhausted { .. } => KeyExhausted::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for qsteg::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn channel_kind(name: &str) -> PyResult<ChannelKind> {
    match name {
        "bsc" => Ok(ChannelKind::Bsc),
        "depolarizing" | "dc" => Ok(ChannelKind::Depolarizing),
        other => Err(PyValueError::new_err(format!("unknown channel {other:?}"))),
    }
}

/// Phase-free Pauli string, written like `"IXYZ"` with qubit 0 on the left.
#[pyclass(name = "PauliString", eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyPauliString(qsteg::PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).py_err()
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self(qsteg::PauliString::identity(n))
    }

    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn compose(&self, other: &PyPauliString) -> PyResult<Self> {
        self.0.compose(&other.0).map(Self).py_err()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0)
    }
}

/// Shared key material with a consumption cursor.
#[pyclass(name = "KeyStream", from_py_object)]
#[derive(Clone)]
struct PyKeyStream(qsteg::keysource::KeyStream);

#[pymethods]
impl PyKeyStream {
    /// Test-mode key expanded from a seed. Not secret.
    #[staticmethod]
    fn from_seed(seed: u64, bits: usize) -> Self {
        Self(qsteg::keysource::KeyStream::from_seed(seed, bits))
    }

    #[staticmethod]
    fn from_hex(text: &str) -> PyResult<Self> {
        qsteg::keysource::KeyStream::from_hex(text).map(Self).py_err()
    }

    /// An independent copy at the same cursor, for the other party.
    fn copy(&self) -> Self {
        self.clone()
    }

    #[getter]
    fn cursor(&self) -> usize {
        self.0.cursor()
    }

    #[getter]
    fn remaining(&self) -> usize {
        self.0.remaining()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("KeyStream(len={}, cursor={})", self.0.len(), self.0.cursor())
    }
}

#[pyclass(name = "StegoParams1", from_py_object)]
#[derive(Clone)]
struct PyStegoParams1(protocol1::StegoParams1);

#[pymethods]
impl PyStegoParams1 {
    /// `p` is the emulated depolarizing rate; `hamming` adds the seven-slot inner code.
    #[new]
    #[pyo3(signature = (n, p, delta, p_physical = 0.0, hamming = false))]
    fn new(n: usize, p: f64, delta: f64, p_physical: f64, hamming: bool) -> PyResult<Self> {
        let params = protocol1::StegoParams1 {
            n,
            p_emulated: p,
            delta,
            p_physical,
            inner_code: hamming.then_some(InnerCode::Hamming7),
        };
        params.validate().py_err()?;
        Ok(Self(params))
    }

    /// Parameters shifting an observed depolarizing rate from `p_physical` to `p_physical + delta_p`.
    #[staticmethod]
    fn noisy(n: usize, p_physical: f64, delta_p: f64, delta: f64) -> PyResult<Self> {
        protocol1::StegoParams1::noisy(n, p_physical, delta_p, delta, None).map(Self).py_err()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn payload_len(&self) -> usize {
        self.0.payload_len()
    }

    #[getter]
    fn logical_len(&self) -> usize {
        self.0.logical_len()
    }

    fn mixing_rate(&self) -> f64 {
        self.0.mixing_rate()
    }

    fn truncation_mass(&self) -> f64 {
        self.0.truncation_mass()
    }

    fn mixed_count_law(&self) -> Vec<f64> {
        self.0.mixed_count_law()
    }

    /// `(subset_bits, pad_bits)` predicted per block.
    fn key_budget(&self) -> PyResult<(usize, usize)> {
        let b = self.0.key_budget().py_err()?;
        Ok((b.subset_bits, b.twirl_bits))
    }
}

#[pyclass(name = "Block1", from_py_object)]
#[derive(Clone)]
struct PyBlock1(TransmittedBlock);

#[pymethods]
impl PyBlock1 {
    /// What Eve can see: mixed count and error weight.
    #[getter]
    fn mixed_count(&self) -> usize {
        self.0.observable_mixed_count
    }

    #[getter]
    fn weight(&self) -> usize {
        self.0.received().weight()
    }

    fn received(&self) -> PyPauliString {
        PyPauliString(self.0.received())
    }

    /// Hidden fields, for tests: slots, pad and key-bit audit.
    fn reveal<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("payload_slots", self.0.payload_slots.clone())?;
        d.set_item("decoy_slots", self.0.decoy_mixed_slots.clone())?;
        d.set_item("pad", self.0.pad.to_string())?;
        d.set_item("subset_bits", self.0.audit.subset_bits)?;
        d.set_item("subset_redraw_bits", self.0.audit.subset_redraw_bits)?;
        d.set_item("pad_bits", self.0.audit.pad_bits)?;
        d.set_item("m_bits", self.0.audit.m_bits)?;
        Ok(d)
    }
}

/// Hide `payload` (physical payload symbols, or logical ones under the inner code). `seed` drives
/// the public randomness: decoys and channel noise.
#[pyfunction]
fn encode_p1(payload: &PyPauliString, key: &mut PyKeyStream, params: &PyStegoParams1, seed: u64) -> PyResult<PyBlock1> {
    let mut rng = trial_rng(seed, 0);
    let block = match params.0.inner_code {
        Some(_) => protocol1::encode_p1_noisy(&payload.0, &mut key.0, &params.0, &mut rng),
        None => protocol1::encode_p1(&payload.0, &mut key.0, &params.0, &mut rng),
    };
    block.map(PyBlock1).py_err()
}

#[pyfunction]
fn decode_p1(block: &PyBlock1, key: &mut PyKeyStream, params: &PyStegoParams1) -> PyResult<PyPauliString> {
    let out = match params.0.inner_code {
        Some(_) => protocol1::decode_p1_noisy(&block.0, &mut key.0, &params.0),
        None => protocol1::decode_p1(&block.0, &mut key.0, &params.0),
    };
    out.map(PyPauliString).py_err()
}

#[pyclass(name = "StegoParams2", from_py_object)]
#[derive(Clone)]
struct PyStegoParams2(protocol2::StegoParams2);

#[pymethods]
impl PyStegoParams2 {
    /// Partition of a typical window; `window` is `"entropy"` or `"relative"`.
    #[new]
    #[pyo3(signature = (channel, p, n, delta, window = "entropy"))]
    fn new(channel: &str, p: f64, n: usize, delta: f64, window: &str) -> PyResult<Self> {
        let window = match window {
            "entropy" => WindowKind::Entropy,
            "relative" => WindowKind::Relative,
            other => return Err(PyValueError::new_err(format!("unknown window {other:?}"))),
        };
        let cfg = ExperimentConfig { channel: channel_kind(channel)?, window, ..Default::default() };
        let ts = experiment::p2_window(&cfg, n, p, delta).py_err()?;
        protocol2::StegoParams2::from_typical(&ts).map(Self).py_err()
    }

    #[staticmethod]
    fn from_partition_json(text: &str) -> PyResult<Self> {
        let part = qsteg::codes::ErrorPartition::from_json(text).py_err()?;
        Ok(Self(protocol2::StegoParams2::from_partition(part)))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn message_bits(&self) -> usize {
        self.0.message_bits()
    }

    fn rate(&self) -> f64 {
        self.0.rate()
    }

    /// Exact total variation between the encoder's error law and the channel.
    fn channel_distance(&self) -> f64 {
        self.0.partition.channel_distance()
    }

    fn partition_json(&self) -> String {
        self.0.partition.to_json()
    }
}

#[pyclass(name = "Block2", from_py_object)]
#[derive(Clone)]
struct PyBlock2(P2Block);

#[pymethods]
impl PyBlock2 {
    fn received(&self) -> PyPauliString {
        PyPauliString(self.0.received_error())
    }

    #[getter]
    fn key_bits(&self) -> usize {
        self.0.audit.total()
    }

    fn to_json(&self) -> String {
        serde_json_string(&self.0)
    }
}

fn serde_json_string(block: &P2Block) -> String {
    // P2Block's fields are plain strings and integers.
    format!(
        "{{\"n\":{},\"applied_error\":\"{}\",\"channel_error\":\"{}\",\"audit\":{{\"pad_bits\":{},\"representative_bits\":{}}}}}",
        block.n, block.applied_error, block.channel_error, block.audit.pad_bits, block.audit.representative_bits
    )
}

#[pyfunction]
fn encode_p2(message: BigUint, key: &mut PyKeyStream, params: &PyStegoParams2) -> PyResult<PyBlock2> {
    protocol2::encode_p2(&message, &mut key.0, &params.0).map(PyBlock2).py_err()
}

#[pyfunction]
fn decode_p2(block: &PyBlock2, key: &mut PyKeyStream, params: &PyStegoParams2) -> PyResult<BigUint> {
    protocol2::decode_p2(&block.0, &mut key.0, &params.0).py_err()
}

/// Syndrome label Eve reads from the block, or `None` outside the typical window.
#[pyfunction]
fn observed_syndrome(block: &PyBlock2, params: &PyStegoParams2) -> Option<BigUint> {
    protocol2::observed_syndrome(&block.0, &params.0)
}

#[pyfunction]
fn diamond_norm_n(p: f64, r: f64, n: usize) -> PyResult<f64> {
    security::diamond_norm_n(p, r, n).py_err()
}

#[pyfunction]
fn p_opt(diamond: f64) -> PyResult<f64> {
    security::p_opt(diamond).py_err()
}

#[pyfunction]
fn p2_closeness_bound(p: f64, n: usize, delta: f64, eps: f64) -> PyResult<f64> {
    security::p2_closeness_bound(p, n, delta, eps).py_err()
}

/// Payload slots under the covert rate shift, `(delta_p, count)`.
#[pyfunction]
fn covert_qubit_count(p: f64, n: usize, eps: f64, delta: f64) -> PyResult<(f64, f64)> {
    let c = security::covert_qubit_count(p, n, eps, delta).py_err()?;
    Ok((c.delta_p, c.count))
}

/// Protocol 1 key bits per qubit; asymptotic unless `n` is given.
#[pyfunction]
#[pyo3(signature = (p, delta_p, n = None))]
fn kcr(p: f64, delta_p: f64, n: Option<usize>) -> PyResult<f64> {
    let mode = n.map_or(KcrMode::Asymptotic, KcrMode::Exact);
    qsteg::keysource::kcr(p, delta_p, mode).py_err()
}

#[pyfunction]
fn noisy_rate_closed_form(p: f64, delta_p: f64) -> PyResult<f64> {
    protocol2::noisy_rate_closed_form(p, delta_p).py_err()
}

/// Fair-coin distinguishing experiment; returns the estimate as a dict.
#[pyfunction]
#[pyo3(signature = (p, delta_p, n, trials, seed, blocks = 1, delta = None))]
fn adversary_experiment<'py>(
    py: Python<'py>,
    p: f64,
    delta_p: f64,
    n: usize,
    trials: usize,
    seed: u64,
    blocks: usize,
    delta: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let est = distinguishing_experiment(&AdversaryConfig { p, delta_p, n, blocks, trials, seed, delta }).py_err()?;
    let d = PyDict::new(py);
    d.set_item("empirical_success", est.empirical_success)?;
    d.set_item("trials", est.trials)?;
    d.set_item("ci_halfwidth", est.ci_halfwidth)?;
    d.set_item("ceiling", est.ceiling)?;
    d.set_item("margin", est.margin)?;
    d.set_item("truncation_mass", est.truncation_mass)?;
    Ok(d)
}

/// Runs a JSON experiment config and returns `(csv, jsonl_trace)`. Exactly one of `seed` and
/// `key_hex` must be given for the simulation verbs.
#[pyfunction]
#[pyo3(signature = (config_json, seed = None, key_hex = None, reveal = false))]
fn run_experiment(config_json: &str, seed: Option<u64>, key_hex: Option<&str>, reveal: bool) -> PyResult<(String, String)> {
    let mut cfg = ExperimentConfig::from_json(config_json).py_err()?;
    let mut key = match (seed, key_hex) {
        (_, Some(hex)) => KeySource::Stream(qsteg::keysource::KeyStream::from_hex(hex).py_err()?),
        (Some(s), None) => {
            cfg.seed = Some(s);
            KeySource::Seed(s)
        }
        (None, None) => KeySource::Seed(cfg.seed.unwrap_or(0)),
    };
    let out = experiment::run(&cfg, &mut key, RunOptions { reveal }).py_err()?;
    Ok((out.table.to_csv(), out.trace_jsonl()))
}

#[pymodule]
fn pyqsteg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KeyExhausted", m.py().get_type::<KeyExhausted>())?;
    m.add("__version__", experiment::VERSION)?;
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyKeyStream>()?;
    m.add_class::<PyStegoParams1>()?;
    m.add_class::<PyBlock1>()?;
    m.add_class::<PyStegoParams2>()?;
    m.add_class::<PyBlock2>()?;
    m.add_function(wrap_pyfunction!(encode_p1, m)?)?;
    m.add_function(wrap_pyfunction!(decode_p1, m)?)?;
    m.add_function(wrap_pyfunction!(encode_p2, m)?)?;
    m.add_function(wrap_pyfunction!(decode_p2, m)?)?;
    m.add_function(wrap_pyfunction!(observed_syndrome, m)?)?;
    m.add_function(wrap_pyfunction!(diamond_norm_n, m)?)?;
    m.add_function(wrap_pyfunction!(p_opt, m)?)?;
    m.add_function(wrap_pyfunction!(p2_closeness_bound, m)?)?;
    m.add_function(wrap_pyfunction!(covert_qubit_count, m)?)?;
    m.add_function(wrap_pyfunction!(kcr, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_rate_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(adversary_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
