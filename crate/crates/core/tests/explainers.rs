mod common;

use std::fs;

use common::*;
use proptest::prelude::*;
use sidu_txt::baselines::{gradcam_explain, lime_coefficients, lime_explain, LimeConfig};
use sidu_txt::eval::ranking;
use sidu_txt::runtime::{ModelBundle, ModelWeights, OutputKind, Padding, TinyModelSpec};
use sidu_txt::sidu::{self, SiduConfig, SiduExplainer, ThresholdMode};

fn spec_strategy() -> impl Strategy<Value = (TinyModelSpec, u64)> {
    (2usize..=16, 1usize..=8, 1usize..=5, any::<bool>(), any::<bool>(), any::<u64>()).prop_map(
        |(seq_len, num_filters, k, same, sigmoid, seed)| {
            let spec = TinyModelSpec {
                seq_len,
                num_filters,
                kernel_size: k.min(seq_len),
                padding: if same { Padding::Same } else { Padding::Valid },
                output: if sigmoid { OutputKind::Sigmoid } else { OutputKind::Softmax },
                ..TinyModelSpec::default()
            };
            (spec, seed)
        },
    )
}

fn text_for(spec: &TinyModelSpec, picks: &[usize]) -> String {
    picks
        .iter()
        .take(spec.seq_len)
        .map(|p| format!("w{}", 1 + p % (spec.vocab_size - 1)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Same shape as `spec`, but every convolution weight and bias is zero, so
/// the output never depends on the input.
fn constant_model(spec: &TinyModelSpec) -> ModelBundle {
    let base = spec.build(3);
    let w = base.weights();
    let weights = ModelWeights {
        conv_filters: vec![0.0; w.conv_filters.len()],
        conv_bias: vec![0.0; w.conv_bias.len()],
        ..w.clone()
    };
    ModelBundle::new(base.vocabulary().clone(), *base.architecture(), weights).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sidu_scores_lie_in_unit_interval(
        (spec, seed) in spec_strategy(),
        picks in prop::collection::vec(0usize..100, 1..16),
        tau in 0.05f64..0.95,
    ) {
        let model = spec.build(seed);
        let seq = model.tokenize(&text_for(&spec, &picks));
        let cfg = SiduConfig { tau, top_k: spec.num_filters.min(3), ..SiduConfig::default() };
        let h = sidu::explain(&model, &seq, &cfg).unwrap();
        prop_assert!(h.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert!(h.is_all_zero() || h.scores.contains(&1.0));
    }

    #[test]
    fn sidu_uncovered_tokens_score_zero(
        (spec, seed) in spec_strategy(),
        picks in prop::collection::vec(0usize..100, 1..16),
        raw in any::<bool>(),
    ) {
        let model = spec.build(seed);
        let seq = model.tokenize(&text_for(&spec, &picks));
        let cfg = SiduConfig {
            top_k: spec.num_filters.min(2),
            threshold: if raw { ThresholdMode::Raw } else { ThresholdMode::FilterMax },
            ..SiduConfig::default()
        };
        let e = SiduExplainer::new(&model, cfg).unwrap().explain_detailed(&seq).unwrap();
        let top = &e.weights.top_indices[..cfg.top_k];
        for t in 0..seq.ids.len() {
            if top.iter().all(|&i| !e.masks.masks[i][t]) {
                prop_assert_eq!(e.heatmap.scores[t], 0.0);
            }
        }
    }

    #[test]
    fn sidu_heatmap_is_invariant_to_weight_scale(
        (spec, seed) in spec_strategy(),
        picks in prop::collection::vec(0usize..100, 1..16),
        scale in 0.01f64..100.0,
    ) {
        let model = spec.build(seed);
        let seq = model.tokenize(&text_for(&spec, &picks));
        let cfg = SiduConfig { top_k: spec.num_filters, ..SiduConfig::default() };
        let e = SiduExplainer::new(&model, cfg).unwrap().explain_detailed(&seq).unwrap();
        let mut fused = vec![0.0; seq.ids.len()];
        for &i in &e.weights.top_indices[..cfg.top_k] {
            for (s, &on) in fused.iter_mut().zip(&e.masks.masks[i]) {
                if on {
                    *s += scale * e.weights.weights[i] / cfg.top_k as f64;
                }
            }
        }
        let max = fused.iter().cloned().fold(0.0, f64::max);
        for (t, &s) in fused.iter().enumerate() {
            let want = if max > 0.0 { s / max } else { 0.0 };
            prop_assert!((want - e.heatmap.scores[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn sidu_weights_satisfy_kernel_bounds(
        (spec, seed) in spec_strategy(),
        picks in prop::collection::vec(0usize..100, 1..16),
    ) {
        let model = spec.build(seed);
        let seq = model.tokenize(&text_for(&spec, &picks));
        let cfg = SiduConfig { top_k: 1, ..SiduConfig::default() };
        let e = SiduExplainer::new(&model, cfg).unwrap().explain_detailed(&seq).unwrap();
        for (i, &sid) in e.weights.sid.iter().enumerate() {
            prop_assert!(sid > 0.0 && sid <= 1.0);
            prop_assert_eq!(sid == 1.0, e.masked_predictions[i].probs == e.original.probs);
            prop_assert!(e.weights.uniqueness[i] >= 0.0);
            prop_assert_eq!(e.weights.weights[i], sid * e.weights.uniqueness[i]);
        }
        let again = SiduExplainer::new(&model, cfg).unwrap().explain_detailed(&seq).unwrap();
        prop_assert_eq!(again.weights.top_indices, e.weights.top_indices);
    }

    #[test]
    fn gradcam_scores_are_non_negative(
        (spec, seed) in spec_strategy(),
        picks in prop::collection::vec(0usize..100, 1..16),
    ) {
        let model = spec.build(seed);
        let seq = model.tokenize(&text_for(&spec, &picks));
        let h = gradcam_explain(&model, &seq).unwrap();
        prop_assert!(!h.signed);
        prop_assert!(h.scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }
}

#[test]
fn constant_model_gives_all_zero_heatmaps() {
    let spec = TinyModelSpec::default();
    let model = constant_model(&spec);
    let seq = model.tokenize("w1 w2 w3 w4 w5");
    let cfg = SiduConfig { top_k: 4, ..SiduConfig::default() };
    let e = SiduExplainer::new(&model, cfg).unwrap().explain_detailed(&seq).unwrap();
    assert!(e.weights.sid.iter().all(|&s| s == 1.0));
    assert!(e.weights.uniqueness.iter().all(|&u| u == 0.0));
    assert!(e.heatmap.is_all_zero());
    assert!(e.heatmap.to_json().all_zero);
    assert!(gradcam_explain(&model, &seq).unwrap().is_all_zero());
}

#[test]
fn lime_ignores_a_constant_model() {
    let model = constant_model(&TinyModelSpec::default());
    let seq = model.tokenize("w1 w2 w3 w4 w5 w6");
    let fit = lime_coefficients(&model, &seq, &LimeConfig::default()).unwrap();
    assert!(fit.coefficients.iter().all(|c| c.abs() <= 1e-2), "{:?}", fit.coefficients);
}

#[test]
fn lime_singles_out_the_key_token() {
    let model = key_token_model(8, 6);
    let seq = model.tokenize("f0 f1 f2 key f3 f4 f5 f0");
    let fit = lime_coefficients(&model, &seq, &LimeConfig::default()).unwrap();
    let key = fit.coefficients[3];
    for (t, c) in fit.coefficients.iter().enumerate() {
        if t != 3 {
            assert!(key > c.abs(), "position {t}: {c} vs key {key}");
        }
    }
}

#[test]
fn lime_is_reproducible_per_seed() {
    let model = TinyModelSpec::default().build(11);
    let seq = model.tokenize("w1 w5 w2 w8 w3 w9");
    let cfg = LimeConfig { num_samples: 300, rng_seed: 7, ..LimeConfig::default() };
    let a = lime_explain(&model, &seq, &cfg).unwrap();
    let b = lime_explain(&model, &seq, &cfg).unwrap();
    assert_eq!(a.scores, b.scores);
    let other = lime_explain(&model, &seq, &LimeConfig { rng_seed: 8, ..cfg }).unwrap();
    assert_ne!(a.scores, other.scores);
}

fn coefficient_spread(model: &ModelBundle, text: &str, samples: usize) -> f64 {
    let seq = model.tokenize(text);
    let fits: Vec<Vec<f64>> = (0..12)
        .map(|seed| {
            let cfg = LimeConfig { num_samples: samples, rng_seed: seed, ..LimeConfig::default() };
            lime_coefficients(model, &seq, &cfg).unwrap().coefficients
        })
        .collect();
    let m = fits[0].len();
    let n = fits.len() as f64;
    (0..m)
        .map(|t| {
            let mean = fits.iter().map(|f| f[t]).sum::<f64>() / n;
            (fits.iter().map(|f| (f[t] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .sum::<f64>()
        / m as f64
}

#[test]
fn lime_spread_shrinks_with_more_samples() {
    let model = TinyModelSpec::default().build(5);
    let text = "w3 w1 w7 w2 w9 w4";
    let small = coefficient_spread(&model, text, 100);
    let large = coefficient_spread(&model, text, 2000);
    assert!(large < small, "sd at 2000 samples {large} vs 100 samples {small}");
}

#[test]
fn gradcam_and_sidu_heatmaps_cover_padding() {
    let model = TinyModelSpec::default().build(2);
    let seq = model.tokenize("w1 w2 w3");
    let cfg = SiduConfig { top_k: 2, ..SiduConfig::default() };
    for h in [sidu::explain(&model, &seq, &cfg).unwrap(), gradcam_explain(&model, &seq).unwrap()] {
        assert_eq!(h.scores.len(), model.seq_len());
        assert_eq!(h.tokens.len(), 3);
        assert_eq!(h.to_json().scores.len(), 3);
    }
}

#[test]
#[ignore = "does not hold for the shipped 64-dimensional fixture: `done` ranks outside the top 10"]
fn gradcam_highlights_negative_phrases_in_hobgoblins() {
    let model = imdb_model();
    let text = fs::read_to_string(fixture("imdb/hobgoblins.txt")).unwrap();
    let h = gradcam_explain(&model, &model.tokenize(&text)).unwrap();
    let top: Vec<&str> = ranking(&h).into_iter().take(10).map(|t| h.tokens[t].as_str()).collect();
    for w in ["badly", "done", "avoid", "this"] {
        assert!(top.contains(&w), "{w} not in {top:?}");
    }
}
