use num_bigint::BigUint;
use qsteg::experiment::{self, ExperimentConfig, KeySource, RunOptions};
use qsteg::keysource::KeyStream;
use qsteg::montecarlo::trial_rng;
use qsteg::protocol1::{self, StegoParams1};
use qsteg::protocol2::{self, StegoParams2};
use qsteg::{PauliString, StegoError};

#[test]
fn protocol1_roundtrip_keeps_parties_in_step() {
    let params = StegoParams1 { n: 200, p_emulated: 0.15, delta: 0.45, p_physical: 0.0, inner_code: None };
    let payload: PauliString = "XYZ".repeat(params.payload_len() / 3 + 1)[..params.payload_len()].parse().unwrap();
    let mut alice = KeyStream::from_seed(21, 1 << 14);
    let mut bob = alice.clone();
    let mut rng = trial_rng(5, 0);
    for _ in 0..20 {
        let block = protocol1::encode_p1(&payload, &mut alice, &params, &mut rng).unwrap();
        assert_eq!(protocol1::decode_p1(&block, &mut bob, &params).unwrap(), payload);
        assert_eq!(alice.cursor(), bob.cursor());
    }
}

#[test]
fn protocol2_roundtrip_through_partition_json() {
    let cfg = ExperimentConfig { channel: experiment::ChannelKind::Bsc, ..Default::default() };
    let ts = experiment::p2_window(&cfg, 12, 0.25, 0.2).unwrap();
    let built = StegoParams2::from_typical(&ts).unwrap();
    let part = qsteg::codes::ErrorPartition::from_json(&built.partition.to_json()).unwrap();
    let reloaded = StegoParams2::from_partition(part);
    assert_eq!(reloaded.message_bits(), 7);
    for m in [0u32, 1, 77, 127] {
        let mut alice = KeyStream::from_seed(m as u64, 4096);
        let mut bob = alice.clone();
        let block = protocol2::encode_p2(&BigUint::from(m), &mut alice, &built).unwrap();
        assert_eq!(protocol2::decode_p2(&block, &mut bob, &reloaded).unwrap(), BigUint::from(m));
    }
}

#[test]
fn short_key_is_reported_as_exhaustion() {
    let params = StegoParams1 { n: 100, p_emulated: 0.2, delta: 0.3, p_physical: 0.0, inner_code: None };
    let payload = PauliString::identity(params.payload_len());
    let err = protocol1::encode_p1(&payload, &mut KeyStream::from_hex("ff").unwrap(), &params, &mut trial_rng(1, 0));
    assert!(matches!(err, Err(StegoError::KeyExhausted { .. })));
}

#[test]
fn runner_output_is_stable_for_a_seed() {
    let cfg = ExperimentConfig::from_json(r#"{"verb": "simulate-p1", "n": 50, "p": 0.2, "delta": 0.3, "blocks": 30}"#).unwrap();
    let run = |seed| experiment::run(&cfg, &mut KeySource::Seed(seed), RunOptions { reveal: false }).unwrap().table.to_csv();
    assert_eq!(run(9), run(9));
    assert_ne!(run(9), run(10));
}
