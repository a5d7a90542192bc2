mod common;

use std::fs;

use common::*;
use sidu_txt::runtime::{decode_bundle, encode_bundle, load_bundle, TinyModelSpec};
use sidu_txt::Error;

#[derive(serde::Deserialize)]
struct ParityCase {
    text: String,
    probability: f64,
}

#[test]
fn trained_bundle_matches_exporter_probabilities() {
    let model = imdb_model();
    let cases: Vec<ParityCase> =
        serde_json::from_str(&fs::read_to_string(fixture("imdb/parity.json")).unwrap()).unwrap();
    assert_eq!(cases.len(), 10);
    for case in &cases {
        let p = model.predict(&model.tokenize(&case.text)).unwrap().probs[1];
        assert!(
            (p - case.probability).abs() <= 1e-4,
            "runtime {p} vs exporter {}",
            case.probability
        );
    }
}

#[test]
fn trained_bundle_forward_agrees_with_reference() {
    let model = imdb_model();
    let text = fs::read_to_string(fixture("imdb/hobgoblins.txt")).unwrap();
    let seq = model.tokenize(&text);
    let (pred, fm) = model.forward(&seq).unwrap();
    let (want, act) = reference_forward(&model, &seq.ids);
    assert!((pred.probs[1] - want[1]).abs() < 1e-9);
    assert_eq!(fm.positions(), act.len());
    for (j, row) in act.iter().enumerate() {
        for (f, &a) in row.iter().enumerate() {
            assert!((fm.get(j, f) - a).abs() < 1e-9);
        }
    }
}

#[test]
fn trained_bundle_metadata() {
    let model = imdb_model();
    let arch = model.architecture();
    assert_eq!((arch.num_filters, arch.kernel_size, arch.dense_units), (128, 5, 64));
    assert_eq!(model.seq_len(), 400);
    assert_eq!(model.vocabulary().tokens()[0], "<unk>");
    assert!(model.weights().embedding[..arch.embedding_dim].iter().all(|&v| v == 0.0));
}

#[test]
fn shipped_tiny_bundle_is_reproducible() {
    let shipped = fs::read(fixture("tiny.sidu")).unwrap();
    let built = TinyModelSpec::default().build(7);
    assert_eq!(decode_bundle(&shipped).unwrap(), built);
    assert_eq!(encode_bundle(&built), shipped);
}

#[test]
fn truncated_file_names_the_tensor() {
    let bytes = fs::read(fixture("tiny.sidu")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.sidu");
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    match load_bundle(&path) {
        Err(Error::TruncatedTensor { field, .. }) => assert_eq!(field, "output_bias"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_bundle(fixture("nope.sidu")), Err(Error::Io(_))));
}

#[test]
fn scorer_matches_forward_on_masked_variants() {
    let model = imdb_model();
    let seq = model.tokenize("a gripping and beautifully shot thriller with a weak final act");
    let scorer = model.scorer(&seq).unwrap();
    let mut ids = seq.ids.clone();
    for t in (0..seq.len()).step_by(2) {
        ids[t] = 0;
        let masked = sidu_txt::runtime::TokenSequence { ids: ids.clone(), words: seq.words.clone() };
        assert_eq!(scorer.predict(&ids).unwrap(), model.predict(&masked).unwrap());
    }
}
