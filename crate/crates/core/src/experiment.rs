//! Config-driven experiment runners behind the command-line verbs.
//!
//! A run is a pure function of its [`ExperimentConfig`] and key material: grids are walked in a
//! fixed order, every block gets its own rng stream, and parallel results are collected in block
//! order, so identical inputs give byte-identical CSV.

use std::path::PathBuf;

use num_bigint::BigUint;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::adversary::{distinguishing_experiment, AdversaryConfig};
use crate::channels::{channel_entropy, ChannelModel};
use crate::codes::{build_typical_set, TypicalErrorSet};
use crate::error::{invalid, Result, StegoError};
use crate::keysource::{kcr, kcr_beta, subset_bits, KcrMode, KeyStream, UNIT_BITS};
use crate::montecarlo::{derive_seed, trial_rng};
use crate::numeric::{binomial_pmf_vec, ceil_log2};
use crate::protocol1::{
    decode_p1, decode_p1_noisy, encode_p1, encode_p1_noisy, random_payload, reference_rate_bsc,
    reference_rate_encoding1, InnerCode, KeyAudit, StegoParams1,
};
use crate::protocol2::{
    build_noisy_codebook, decode_p2, encode_p2, noisy_block_error, noisy_rate_closed_form, observed_syndrome,
    random_message, StegoParams2,
};
use crate::security::{p2_closeness_bound, security_report};
use crate::stats::{chi_square_gof, frequencies, total_variation};

/// Artifact version written into every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Multiplier on the accepted-draw cost of a rejection-sampled key draw when sizing seeded keys.
const REJECTION_HEADROOM: usize = 64;
/// Separates seeded key streams from the public rng streams.
const KEY_DOMAIN: u64 = 0x6b65_795f_7374_7265;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Kcr,
    Rates,
    Security,
    SimulateP1,
    SimulateP2,
    Eve,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Kcr => "kcr",
            Verb::Rates => "rates",
            Verb::Security => "security",
            Verb::SimulateP1 => "simulate-p1",
            Verb::SimulateP2 => "simulate-p2",
            Verb::Eve => "eve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Bsc,
    #[default]
    Depolarizing,
}

impl ChannelKind {
    pub fn model(self, p: f64) -> Result<ChannelModel> {
        match self {
            ChannelKind::Bsc => ChannelModel::bsc(p),
            ChannelKind::Depolarizing => ChannelModel::depolarizing(p),
        }
    }
}

/// How protocol 2 picks its typical window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Per-string probability within `2^{-N(s +- delta)}`.
    #[default]
    Entropy,
    /// Weights within `Np(1 +- delta)`.
    Relative,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// Everything a run depends on. Scalar grid fields also accept a single number in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub verb: Option<Verb>,
    pub channel: ChannelKind,
    #[serde(deserialize_with = "one_or_many")]
    pub p: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub delta: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub delta_p: Vec<f64>,
    pub eps: f64,
    pub trials: usize,
    pub blocks: usize,
    pub seed: Option<u64>,
    pub key_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Intrinsic depolarizing rate under protocol 1.
    pub p_physical: f64,
    pub inner_code: Option<InnerCode>,
    pub window: WindowKind,
    /// Protocol 2 over a noisy BSC, using the greedy codebook.
    pub noisy: bool,
    /// Protocol 1 margin for the adversary runs; absent means the smallest margin with
    /// negligible truncation of the mixed-count law.
    pub encoder_margin: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            verb: None,
            channel: ChannelKind::default(),
            p: vec![0.1],
            n: vec![100],
            delta: vec![0.1],
            delta_p: vec![0.01],
            eps: 0.01,
            trials: 1000,
            blocks: 1000,
            seed: None,
            key_file: None,
            out: None,
            threads: None,
            p_physical: 0.0,
            inner_code: None,
            window: WindowKind::default(),
            noisy: false,
            encoder_margin: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StegoError::InvalidParameter(format!("config: {e}")))
    }

    /// SHA-256 of the canonical JSON, ignoring fields that cannot change the output.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.threads = None;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn require_verb(&self) -> Result<Verb> {
        self.verb.ok_or_else(|| StegoError::InvalidParameter("no verb given".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let verb = self.require_verb()?;
        for (name, empty) in
            [("p", self.p.is_empty()), ("n", self.n.is_empty()), ("delta", self.delta.is_empty()), ("delta_p", self.delta_p.is_empty())]
        {
            if empty {
                return invalid(format!("grid {name} is empty"));
            }
        }
        if self.n.contains(&0) {
            return invalid("block lengths must be positive");
        }
        if self.p.iter().any(|&p| !(p > 0.0 && p < 0.75)) {
            return invalid("every p must lie in (0, 3/4)");
        }
        if self.delta_p.iter().any(|&d| !(0.0..0.5).contains(&d)) {
            return invalid("every delta_p must lie in [0, 1/2)");
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return invalid("eps must lie in [0, 1]");
        }
        match verb {
            Verb::SimulateP1 | Verb::SimulateP2 if self.blocks == 0 || self.trials == 0 => {
                invalid("blocks and trials must be positive")
            }
            Verb::Eve if self.trials < 1000 => invalid("reported adversary runs need at least 1000 trials"),
            Verb::Eve if self.blocks == 0 => invalid("blocks must be positive"),
            _ => Ok(()),
        }
    }
}

/// Where block keys come from.
#[derive(Debug, Clone)]
pub enum KeySource {
    /// Test mode: each block expands its own key from the seed. Not secret.
    Seed(u64),
    /// One key consumed sequentially, blocks in order.
    Stream(KeyStream),
}

impl KeySource {
    fn seed(&self) -> Option<u64> {
        match self {
            KeySource::Seed(s) => Some(*s),
            KeySource::Stream(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Add hidden fields (slots, pads, messages) to block traces.
    pub reveal: bool,
}

/// A CSV table with a metadata header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { comments: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

/// A JSON side output such as a partition or codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub json: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    /// One JSON object per simulated block.
    pub trace: Vec<Value>,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    fn table_only(table: Table) -> Self {
        Self { table, trace: Vec::new(), artifacts: Vec::new() }
    }

    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|v| format!("{v}\n")).collect()
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn int(x: impl std::fmt::Display) -> String {
    x.to_string()
}

/// Runs the verb named in the config.
pub fn run(config: &ExperimentConfig, key: &mut KeySource, opts: RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let verb = config.require_verb()?;
    let mut out = match verb {
        Verb::Kcr => RunOutput::table_only(run_kcr_curve(config)?),
        Verb::Rates => RunOutput::table_only(run_rate_table(config)?),
        Verb::Security => RunOutput::table_only(run_security(config)?),
        Verb::SimulateP1 => run_simulate_p1(config, key, opts)?,
        Verb::SimulateP2 if config.noisy => run_simulate_p2_noisy(config, key)?,
        Verb::SimulateP2 => run_simulate_p2(config, key, opts)?,
        Verb::Eve => RunOutput::table_only(run_eve(config, key)?),
    };
    let mut comments = vec![format!("qsteg {VERSION} verb={} config-sha256={}", verb.name(), config.hash())];
    comments.append(&mut out.table.comments);
    out.table.comments = comments;
    Ok(out)
}

/// Rows `(p, delta_p, beta, k_asymptotic, k_exact, n)`, exact column at the first block length.
pub fn run_kcr_curve(config: &ExperimentConfig) -> Result<Table> {
    let n = config.n[0];
    let mut t = Table::new(&["p", "delta_p", "beta", "k_asymptotic", "k_exact", "n"]);
    for &dp in &config.delta_p {
        for &p in &config.p {
            t.push(vec![
                num(p),
                num(dp),
                num(kcr_beta(p, dp)?),
                num(kcr(p, dp, KcrMode::Asymptotic)?),
                num(kcr(p, dp, KcrMode::Exact(n))?),
                int(n),
            ]);
        }
    }
    Ok(t)
}

/// Per-qubit rates of both protocols. Blank cells mark formulas undefined at that `p`.
pub fn run_rate_table(config: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(&[
        "p",
        "delta",
        "delta_p",
        "s",
        "rate_p1",
        "rate_p2",
        "rate_p2_noisy",
        "rate_encoding1_reference",
        "rate_bsc_reference",
    ]);
    for &delta in &config.delta {
        for &dp in &config.delta_p {
            for &p in &config.p {
                let s = channel_entropy(&config.channel.model(p)?)?;
                let below_half = p < 0.5;
                t.push(vec![
                    num(p),
                    num(delta),
                    num(dp),
                    num(s),
                    num(4.0 * p / 3.0),
                    num(s - delta),
                    if below_half { num(noisy_rate_closed_form(p, dp)?) } else { String::new() },
                    if below_half { num(reference_rate_encoding1(p, dp)) } else { String::new() },
                    if below_half { num(reference_rate_bsc(p, dp, delta)) } else { String::new() },
                ]);
            }
        }
    }
    Ok(t)
}

/// Rows `(n, p, delta_p, diamond_norm, p_opt, s37_bound)`; the bound uses the first `delta`.
pub fn run_security(config: &ExperimentConfig) -> Result<Table> {
    let delta = config.delta[0];
    let mut t = Table::new(&["n", "p", "delta_p", "diamond_norm", "p_opt", "s37_bound"]);
    for &n in &config.n {
        for &p in &config.p {
            for &dp in &config.delta_p {
                let r = security_report(p, dp, n)?;
                let bound = if p < 0.5 { num(p2_closeness_bound(p, n, delta, config.eps)?) } else { String::new() };
                t.push(vec![int(n), num(p), num(dp), num(r.diamond_norm), num(r.p_opt), bound]);
            }
        }
    }
    Ok(t)
}

/// Runs `f` once per block with that block's key and rng.
///
/// Seeded keys are independent per block and run in parallel; a key stream is consumed in
/// block order. `key_bits` sizes each seeded block key.
fn run_blocks<T, F>(key: &mut KeySource, rng_seed: u64, grid: usize, blocks: usize, key_bits: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut KeyStream, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let stream = derive_seed(rng_seed, grid as u64);
    match key {
        KeySource::Seed(s) => {
            let base = derive_seed(*s ^ KEY_DOMAIN, grid as u64);
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut k = KeyStream::from_seed(derive_seed(base, b as u64), key_bits);
                    f(b, &mut k, &mut trial_rng(stream, b as u64))
                })
                .collect()
        }
        KeySource::Stream(k) => (0..blocks).map(|b| f(b, k, &mut trial_rng(stream, b as u64))).collect(),
    }
}

fn rng_seed(config: &ExperimentConfig, key: &KeySource) -> u64 {
    config.seed.or(key.seed()).unwrap_or(0)
}

struct P1Outcome {
    mixed_count: usize,
    recovered: bool,
    audit: KeyAudit,
    trace: Value,
}

fn p1_params(config: &ExperimentConfig, n: usize, p: f64, delta: f64) -> Result<StegoParams1> {
    let params =
        StegoParams1 { n, p_emulated: p, delta, p_physical: config.p_physical, inner_code: config.inner_code };
    params.validate()?;
    Ok(params)
}

/// Protocol 1 end to end over the `(n, p, delta)` grid, with `p` the emulated rate.
pub fn run_simulate_p1(config: &ExperimentConfig, key: &mut KeySource, opts: RunOptions) -> Result<RunOutput> {
    let seed = rng_seed(config, key);
    let mut t = Table::new(&[
        "n",
        "p_emulated",
        "p_physical",
        "delta",
        "payload_len",
        "blocks",
        "recovered",
        "recovery_rate",
        "subset_pad_bits",
        "predicted_bits",
        "m_bits",
        "redraw_bits",
        "chi2_statistic",
        "chi2_dof",
        "chi2_p_value",
    ]);
    let mut trace = Vec::new();
    let mut grid = 0;
    for &n in &config.n {
        for &p in &config.p {
            for &delta in &config.delta {
                let params = p1_params(config, n, p, delta)?;
                let budget = params.key_budget()?;
                let key_bits = REJECTION_HEADROOM * budget.subset_bits + budget.twirl_bits + UNIT_BITS;
                let g = grid;
                let outcomes = run_blocks(key, seed, g, config.blocks, key_bits, |b, alice, rng| {
                    let mut bob = alice.clone();
                    let (block, recovered) = if params.inner_code.is_some() {
                        let logical = random_payload(params.logical_len(), rng);
                        let block = encode_p1_noisy(&logical, alice, &params, rng)?;
                        let ok = decode_p1_noisy(&block, &mut bob, &params)? == logical;
                        (block, ok)
                    } else {
                        let payload = random_payload(params.payload_len(), rng);
                        let block = encode_p1(&payload, alice, &params, rng)?;
                        let ok = decode_p1(&block, &mut bob, &params)? == payload;
                        (block, ok)
                    };
                    let received = block.received();
                    let mut rec = json!({
                        "grid": g,
                        "block": b,
                        "n": n,
                        "mixed_count": block.observable_mixed_count,
                        "weight": received.weight(),
                    });
                    if opts.reveal {
                        rec["payload_slots"] = json!(block.payload_slots);
                        rec["decoy_slots"] = json!(block.decoy_mixed_slots);
                        rec["pad"] = json!(block.pad.to_string());
                        rec["frame"] = json!(block.frame.to_string());
                        rec["channel_error"] = json!(block.channel_error.to_string());
                        rec["recovered"] = json!(recovered);
                        rec["audit"] = json!(block.audit);
                    }
                    Ok(P1Outcome { mixed_count: block.observable_mixed_count, recovered, audit: block.audit, trace: rec })
                })?;
                let mut hist = vec![0u64; n + 1];
                let (mut recovered, mut subset_pad, mut m_bits, mut redraw) = (0usize, 0usize, 0usize, 0usize);
                for o in &outcomes {
                    hist[o.mixed_count] += 1;
                    recovered += o.recovered as usize;
                    subset_pad += o.audit.subset_bits + o.audit.pad_bits;
                    m_bits += o.audit.m_bits;
                    redraw += o.audit.subset_redraw_bits;
                }
                let chi = chi_square_gof(&hist, &params.mixed_count_law(), 5.0)?;
                t.push(vec![
                    int(n),
                    num(p),
                    num(config.p_physical),
                    num(delta),
                    int(params.payload_len()),
                    int(config.blocks),
                    int(recovered),
                    num(recovered as f64 / config.blocks as f64),
                    int(subset_pad),
                    int((budget.subset_bits + budget.twirl_bits) * config.blocks),
                    int(m_bits),
                    int(redraw),
                    num(chi.statistic),
                    int(chi.dof),
                    num(chi.p_value),
                ]);
                trace.extend(outcomes.into_iter().map(|o| o.trace));
                grid += 1;
            }
        }
    }
    Ok(RunOutput { table: t, trace, artifacts: Vec::new() })
}

/// Typical window for protocol 2 as selected by the config.
pub fn p2_window(config: &ExperimentConfig, n: usize, p: f64, delta: f64) -> Result<TypicalErrorSet> {
    let ch = config.channel.model(p)?;
    match config.window {
        WindowKind::Entropy => build_typical_set(&ch, n, delta),
        WindowKind::Relative => TypicalErrorSet::relative_window(&ch, n, delta),
    }
}

/// Key bits that cover one protocol 2 block with room for representative redraws.
pub fn p2_block_key_bits(params: &StegoParams2) -> usize {
    let widest = params.partition.classes.iter().map(|c| ceil_log2(&c.set_size)).max().unwrap_or(0);
    2 * params.message_bits() + REJECTION_HEADROOM * widest
}

struct P2Outcome {
    weight: usize,
    recovered: bool,
    key_bits: usize,
    trace: Value,
}

/// Noiseless protocol 2 over the `(n, p, delta)` grid.
pub fn run_simulate_p2(config: &ExperimentConfig, key: &mut KeySource, opts: RunOptions) -> Result<RunOutput> {
    let seed = rng_seed(config, key);
    let mut t = Table::new(&[
        "n",
        "p",
        "delta",
        "message_bits",
        "rate",
        "blocks",
        "recovered",
        "recovery_rate",
        "key_bits_measured",
        "pad_bits_predicted",
        "representative_bits_predicted",
        "weight_tv",
        "channel_distance",
        "closeness_bound",
    ]);
    let mut trace = Vec::new();
    let mut artifacts = Vec::new();
    let mut grid = 0;
    for &n in &config.n {
        for &p in &config.p {
            for &delta in &config.delta {
                let ts = p2_window(config, n, p, delta)?;
                let params = StegoParams2::from_typical(&ts)?;
                let count = params.message_count();
                let g = grid;
                let outcomes = run_blocks(key, seed, g, config.blocks, p2_block_key_bits(&params), |b, alice, rng| {
                    let mut bob = alice.clone();
                    let message = random_message(&count, rng);
                    let start = alice.cursor();
                    let block = encode_p2(&message, alice, &params)?;
                    let key_bits = alice.cursor() - start;
                    let decoded = decode_p2(&block, &mut bob, &params)?;
                    let recovered = decoded == message && bob.cursor() == alice.cursor();
                    let received = block.received_error();
                    let mut rec = json!({
                        "grid": g,
                        "block": b,
                        "n": n,
                        "weight": received.weight(),
                        "syndrome": observed_syndrome(&block, &params).map(|s| s.to_string()),
                    });
                    if opts.reveal {
                        rec["message"] = json!(message.to_string());
                        rec["applied_error"] = json!(block.applied_error.to_string());
                        rec["recovered"] = json!(recovered);
                        rec["audit"] = json!(block.audit);
                    }
                    Ok(P2Outcome { weight: received.weight(), recovered, key_bits, trace: rec })
                })?;
                let mut hist = vec![0u64; n + 1];
                let (mut recovered, mut key_bits) = (0usize, 0usize);
                for o in &outcomes {
                    hist[o.weight] += 1;
                    recovered += o.recovered as usize;
                    key_bits += o.key_bits;
                }
                let budget = params.key_budget()?;
                let kmin = ts.min_weight as f64;
                let delta_eff = 1.0 - kmin / (n as f64 * p);
                let bound = if p < 0.5 { num(p2_closeness_bound(p, n, delta_eff, ts.epsilon())?) } else { String::new() };
                t.push(vec![
                    int(n),
                    num(p),
                    num(delta),
                    int(params.message_bits()),
                    num(params.rate()),
                    int(config.blocks),
                    int(recovered),
                    num(recovered as f64 / config.blocks as f64),
                    int(key_bits),
                    int(budget.twirl_bits),
                    int(budget.representative_bits),
                    num(total_variation(&frequencies(&hist), &binomial_pmf_vec(n as u64, p))),
                    num(params.partition.channel_distance()),
                    bound,
                ]);
                trace.extend(outcomes.into_iter().map(|o| o.trace));
                artifacts.push(Artifact { name: format!("partition-{g}.json"), json: params.partition.to_json() });
                grid += 1;
            }
        }
    }
    Ok(RunOutput { table: t, trace, artifacts })
}

/// Noisy protocol 2 over the `(n, p, delta_p)` grid: build the greedy codebook and measure
/// its block error on a BSC.
pub fn run_simulate_p2_noisy(config: &ExperimentConfig, key: &mut KeySource) -> Result<RunOutput> {
    let seed = rng_seed(config, key);
    let mut t = Table::new(&[
        "n",
        "p",
        "delta_p",
        "weight",
        "active_len",
        "codewords",
        "rate",
        "closed_form_rate",
        "min_distance",
        "truncated",
        "trials",
        "block_error",
    ]);
    let mut artifacts = Vec::new();
    let mut grid = 0;
    for &n in &config.n {
        for &p in &config.p {
            for &dp in &config.delta_p {
                let g = grid;
                let key_bits = REJECTION_HEADROOM * subset_bits(n, n / 2).max(1);
                let trials = config.trials;
                let mut built = run_blocks(key, seed, g, 1, key_bits, |_, k, rng| {
                    let cb = build_noisy_codebook(n, p, dp, k)?;
                    let err = noisy_block_error(&cb, trials, rng)?;
                    Ok((cb, err))
                })?;
                let (cb, err) = built.pop().expect("one block");
                t.push(vec![
                    int(n),
                    num(p),
                    num(dp),
                    int(cb.weight),
                    int(cb.active_len()),
                    int(cb.count()),
                    num(cb.rate()),
                    num(noisy_rate_closed_form(p, dp)?),
                    cb.min_distance().map(int).unwrap_or_default(),
                    int(cb.truncated),
                    int(trials),
                    num(err),
                ]);
                artifacts.push(Artifact { name: format!("codebook-{g}.json"), json: cb.to_json() });
                grid += 1;
            }
        }
    }
    Ok(RunOutput { table: t, trace: Vec::new(), artifacts })
}

/// Adversary experiment over the `(p, delta_p, n)` grid.
pub fn run_eve(config: &ExperimentConfig, key: &KeySource) -> Result<Table> {
    let seed = rng_seed(config, key);
    let mut t = Table::new(&[
        "p",
        "delta_p",
        "n",
        "blocks",
        "trials",
        "successes",
        "empirical_success",
        "ci_halfwidth",
        "ceiling",
        "diamond_norm",
        "margin",
        "truncation_mass",
        "within_ceiling",
    ]);
    t.comments.push("prior: fair coin between honest channel and stego encoder".into());
    let mut grid = 0u64;
    for &p in &config.p {
        for &dp in &config.delta_p {
            for &n in &config.n {
                let cfg = AdversaryConfig {
                    p,
                    delta_p: dp,
                    n,
                    blocks: config.blocks,
                    trials: config.trials,
                    seed: derive_seed(seed, grid),
                    delta: config.encoder_margin,
                };
                let est = distinguishing_experiment(&cfg)?;
                t.push(vec![
                    num(p),
                    num(dp),
                    int(n),
                    int(config.blocks),
                    int(est.trials),
                    int(est.successes),
                    num(est.empirical_success),
                    num(est.ci_halfwidth),
                    num(est.ceiling),
                    num(est.diamond_norm),
                    num(est.margin),
                    num(est.truncation_mass),
                    int(est.respects_ceiling()),
                ]);
                grid += 1;
            }
        }
    }
    Ok(t)
}

/// Message index parsed from a `0`/`1` text file, most significant bit first.
pub fn parse_message_bits(text: &str) -> Result<(BigUint, usize)> {
    let bits = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(StegoError::InvalidParameter(format!("message file holds {other:?}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok((crate::protocol2::message_from_bits(&bits), bits.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(verb: Verb) -> ExperimentConfig {
        ExperimentConfig { verb: Some(verb), ..Default::default() }
    }

    #[test]
    fn config_accepts_scalars_and_lists() {
        let c = ExperimentConfig::from_json(r#"{"verb":"kcr","p":[0.05,0.1],"n":64,"delta_p":0.02}"#).unwrap();
        assert_eq!(c.p, vec![0.05, 0.1]);
        assert_eq!(c.n, vec![64]);
        assert_eq!(c.delta_p, vec![0.02]);
        assert!(ExperimentConfig::from_json(r#"{"verb":"kcr","bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"verb":"simulate-p3"}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_path_and_threads() {
        let a = cfg(Verb::Kcr);
        let mut b = a.clone();
        b.out = Some("x.csv".into());
        b.threads = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.p = vec![0.2];
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut c = cfg(Verb::Security);
        c.p = vec![0.8];
        assert!(c.validate().is_err());
        let mut c = cfg(Verb::Eve);
        c.trials = 10;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_err());
    }

    #[test]
    fn rate_table_examples() {
        let mut c = cfg(Verb::Rates);
        c.p = vec![0.1];
        c.delta = vec![0.01];
        c.delta_p = vec![0.0];
        c.channel = ChannelKind::Bsc;
        let t = run_rate_table(&c).unwrap();
        let p2: f64 = t.column("rate_p2").unwrap()[0].parse().unwrap();
        let p1: f64 = t.column("rate_p1").unwrap()[0].parse().unwrap();
        // h(0.1) - 0.01
        assert!((p2 - 0.459).abs() < 1e-3);
        assert!((p1 - 0.1333).abs() < 1e-3);
        assert_eq!(t.column("rate_p2_noisy").unwrap()[0], "0");
    }

    #[test]
    fn csv_carries_header_and_is_deterministic() {
        let mut c = cfg(Verb::SimulateP1);
        c.n = vec![40];
        c.p = vec![0.2];
        c.delta = vec![0.3];
        c.blocks = 50;
        let a = run(&c, &mut KeySource::Seed(9), RunOptions::default()).unwrap();
        let b = run(&c, &mut KeySource::Seed(9), RunOptions::default()).unwrap();
        assert_eq!(a.table.to_csv(), b.table.to_csv());
        assert_eq!(a.trace_jsonl(), b.trace_jsonl());
        let csv = a.table.to_csv();
        assert!(csv.starts_with(&format!("# qsteg {VERSION} verb=simulate-p1 config-sha256={}", c.hash())));
        assert_eq!(a.table.column("recovery_rate").unwrap(), vec!["1"]);
        assert_eq!(a.trace.len(), 50);
        assert!(a.trace[0].get("pad").is_none());
    }

    #[test]
    fn key_stream_mode_consumes_in_order_and_can_run_dry() {
        let mut c = cfg(Verb::SimulateP2);
        c.channel = ChannelKind::Bsc;
        c.n = vec![12];
        c.p = vec![0.25];
        c.delta = vec![0.2];
        c.blocks = 20;
        let mut ks = KeySource::Stream(KeyStream::from_seed(4, 10_000));
        let out = run(&c, &mut ks, RunOptions { reveal: true }).unwrap();
        assert_eq!(out.table.column("recovery_rate").unwrap(), vec!["1"]);
        assert!(out.trace[0].get("message").is_some());
        assert_eq!(out.artifacts.len(), 1);
        let mut dry = KeySource::Stream(KeyStream::from_seed(4, 8));
        assert!(matches!(run(&c, &mut dry, RunOptions::default()), Err(StegoError::KeyExhausted { .. })));
    }
}
