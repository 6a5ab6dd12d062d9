//! A passive eavesdropper who sees block weights and runs the likelihood-ratio test between the
//! honest channel and the shifted rate Alice's encoder produces.

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_error, ChannelModel};
use crate::error::{invalid, Result};
use crate::keysource::{KeyStream, UNIT_BITS};
use crate::montecarlo::{derive_seed, trial_rng};
use crate::numeric::ln_bernoulli_string;
use crate::protocol1::{encode_p1, eve_view, margin_for_truncation, random_payload, EveView, StegoParams1};
use crate::security::{diamond_norm_n, p_opt};
use crate::stats::proportion_ci95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Honest,
    Stego,
}

/// What Eve records per block. Built only from key-independent data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub block_index: usize,
    pub n: usize,
    /// Number of slots carrying a non-identity error.
    pub weight: usize,
    #[serde(default)]
    pub syndrome: Option<BigUint>,
}

impl Observation {
    pub fn from_view(block_index: usize, view: &EveView) -> Self {
        Self { block_index, n: view.n, weight: view.weight, syndrome: None }
    }
}

/// Sum of per-block log-likelihood ratios of weight under rate `r` versus rate `p`; a
/// positive sum means stego, ties go to honest.
pub fn likelihood_ratio_decide(obs: &[Observation], p: f64, r: f64) -> Result<Hypothesis> {
    if obs.is_empty() {
        return invalid("no observations");
    }
    if p == r {
        return invalid("the two hypotheses coincide");
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&r) {
        return invalid("rates must lie in [0, 1]");
    }
    let mut llr = 0.0;
    for o in obs {
        if o.weight > o.n {
            return invalid("weight exceeds block length");
        }
        let (n, w) = (o.n as u64, o.weight as u64);
        llr += ln_bernoulli_string(n, w, r) - ln_bernoulli_string(n, w, p);
    }
    Ok(if llr > 0.0 { Hypothesis::Stego } else { Hypothesis::Honest })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    /// Physical depolarizing rate, the channel Eve expects.
    pub p: f64,
    /// Rate shift introduced by Alice.
    pub delta_p: f64,
    pub n: usize,
    /// Blocks Eve sees per trial.
    pub blocks: usize,
    pub trials: usize,
    pub seed: u64,
    /// Protocol 1 margin used by the encoder; `None` picks the smallest margin whose
    /// truncation mass stays below [`TRUNCATION_TOL`].
    pub delta: Option<f64>,
}

/// Default bound on `P(Q < M)` when the margin is chosen automatically.
pub const TRUNCATION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageEstimate {
    pub empirical_success: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_halfwidth: f64,
    /// Optimal success probability for `n * blocks` channel uses.
    pub ceiling: f64,
    pub diamond_norm: f64,
    /// Margin the encoder ran with.
    pub margin: f64,
    /// How far the encoder's mixed-count law sits from the binomial one.
    pub truncation_mass: f64,
}

impl AdvantageEstimate {
    /// Empirical success within the CI of the ceiling or below it.
    pub fn respects_ceiling(&self) -> bool {
        self.empirical_success <= self.ceiling + self.ci_halfwidth
    }
}

fn honest_observation<R: Rng + ?Sized>(cfg: &AdversaryConfig, index: usize, rng: &mut R) -> Observation {
    let err = sample_error(&ChannelModel::Depolarizing { p: cfg.p }, cfg.n, rng);
    Observation { block_index: index, n: cfg.n, weight: err.weight(), syndrome: None }
}

/// Fair-coin experiment: each trial runs either the honest channel or the protocol 1 encoder on
/// top of it, and Eve guesses from the block weights.
pub fn distinguishing_experiment(cfg: &AdversaryConfig) -> Result<AdvantageEstimate> {
    if cfg.trials == 0 || cfg.blocks == 0 {
        return invalid("trials and blocks must be positive");
    }
    let margin = match cfg.delta {
        Some(d) => d,
        None => margin_for_truncation(cfg.n, cfg.p, cfg.delta_p, TRUNCATION_TOL)?,
    };
    let params = StegoParams1::noisy(cfg.n, cfg.p, cfg.delta_p, margin, None)?;
    let r = cfg.p + cfg.delta_p;
    let diamond = diamond_norm_n(cfg.p, r, cfg.n * cfg.blocks)?;
    let budget = params.key_budget()?;
    // Generous enough that rejection sampling never runs dry in practice.
    let key_bits = cfg.blocks * (64 * budget.subset_bits + budget.twirl_bits + UNIT_BITS);

    let outcomes: Vec<bool> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = trial_rng(cfg.seed, t as u64);
            let truth = if rng.random::<bool>() { Hypothesis::Stego } else { Hypothesis::Honest };
            let mut obs = Vec::with_capacity(cfg.blocks);
            let mut key = KeyStream::from_seed(derive_seed(cfg.seed, t as u64), key_bits);
            for b in 0..cfg.blocks {
                obs.push(match truth {
                    Hypothesis::Honest => honest_observation(cfg, b, &mut rng),
                    Hypothesis::Stego => {
                        let payload = random_payload(params.payload_len(), &mut rng);
                        let block = encode_p1(&payload, &mut key, &params, &mut rng)?;
                        Observation::from_view(b, &eve_view(&block))
                    }
                });
            }
            let guess = if cfg.delta_p == 0.0 {
                // Identical hypotheses: Eve can only guess, and ties go to honest.
                Hypothesis::Honest
            } else {
                likelihood_ratio_decide(&obs, cfg.p, r)?
            };
            Ok(guess == truth)
        })
        .collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|&&ok| ok).count() as u64;
    let trials = cfg.trials as u64;
    Ok(AdvantageEstimate {
        empirical_success: successes as f64 / trials as f64,
        successes,
        trials,
        ci_halfwidth: proportion_ci95(successes, trials),
        ceiling: p_opt(diamond)?,
        diamond_norm: diamond,
        margin,
        truncation_mass: params.truncation_mass(),
    })
}
