//! Helpers shared by the integration tests: fixture paths, a straight-line
//! reference implementation of the explainer and a hand-built model whose
//! output depends on one token only.

#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use sidu_txt::runtime::{
    Architecture, ModelBundle, ModelWeights, OutputKind, Padding, TokenizerSpec, Vocabulary,
};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn imdb_model() -> ModelBundle {
    sidu_txt::runtime::load_bundle(fixture("imdb/model.sidu")).expect("trained fixture bundle")
}

/// Class probabilities `[p0, p1]` computed directly from the weights.
pub fn reference_probs(model: &ModelBundle, ids: &[u32]) -> [f64; 2] {
    let (probs, _) = reference_forward(model, ids);
    probs
}

/// Probabilities and row-major `n x N` activations, written out loop by
/// loop without any library helpers.
pub fn reference_forward(model: &ModelBundle, ids: &[u32]) -> ([f64; 2], Vec<Vec<f64>>) {
    let a = model.architecture();
    let w = model.weights();
    let (d, nf, k) = (a.embedding_dim, a.num_filters, a.kernel_size);
    let t_len = ids.len();
    let (n, left) = match a.padding {
        Padding::Same => (t_len, (k - 1) / 2),
        Padding::Valid => (t_len - k + 1, 0),
    };
    let mut act = vec![vec![0.0f64; nf]; n];
    for j in 0..n {
        for f in 0..nf {
            let mut z = w.conv_bias[f] as f64;
            for o in 0..k {
                let t = j as isize + o as isize - left as isize;
                if t < 0 || t >= t_len as isize {
                    continue;
                }
                let id = ids[t as usize] as usize;
                for e in 0..d {
                    z += w.embedding[id * d + e] as f64 * w.conv_filters[(f * k + o) * d + e] as f64;
                }
            }
            act[j][f] = if z > 0.0 { z } else { 0.0 };
        }
    }
    (reference_head(model, &act), act)
}

/// Output layer applied to explicit activations, which may be arbitrary
/// reals (used for finite differences).
pub fn reference_logits(model: &ModelBundle, act: &[Vec<f64>]) -> Vec<f64> {
    let a = model.architecture();
    let w = model.weights();
    let (nf, h) = (a.num_filters, a.dense_units);
    let c = match a.output {
        OutputKind::Sigmoid => 1,
        OutputKind::Softmax => 2,
    };
    let n = act.len();
    let mut pooled = vec![0.0; nf];
    for row in act {
        for f in 0..nf {
            pooled[f] += row[f];
        }
    }
    for p in pooled.iter_mut() {
        *p /= n as f64;
    }
    let mut hidden = vec![0.0; h];
    for u in 0..h {
        let mut z = w.dense1_bias[u] as f64;
        for f in 0..nf {
            z += pooled[f] * w.dense1_weights[f * h + u] as f64;
        }
        hidden[u] = z.max(0.0);
    }
    let mut out = vec![0.0; c];
    for o in 0..c {
        let mut z = w.output_bias[o] as f64;
        for u in 0..h {
            z += hidden[u] * w.output_weights[u * c + o] as f64;
        }
        out[o] = z;
    }
    out
}

pub fn reference_head(model: &ModelBundle, act: &[Vec<f64>]) -> [f64; 2] {
    let z = reference_logits(model, act);
    if z.len() == 1 {
        let p = 1.0 / (1.0 + (-z[0]).exp());
        [1.0 - p, p]
    } else {
        let m = z[0].max(z[1]);
        let (e0, e1) = ((z[0] - m).exp(), (z[1] - m).exp());
        [e0 / (e0 + e1), e1 / (e0 + e1)]
    }
}

/// Score of `class` before the output nonlinearity; a sigmoid logit `z`
/// stands for the pair `[-z, z]`.
pub fn reference_class_score(model: &ModelBundle, act: &[Vec<f64>], class: usize) -> f64 {
    let z = reference_logits(model, act);
    if z.len() == 1 {
        if class == 1 { z[0] } else { -z[0] }
    } else {
        z[class]
    }
}

/// The mask explainer computed from scratch: binarise each filter, resample
/// to the sequence length, re-threshold, re-predict with masked tokens,
/// weight by similarity difference times uniqueness and fuse the `k` best.
pub fn reference_sidu(
    model: &ModelBundle,
    ids: &[u32],
    tau: f64,
    sigma: f64,
    k: usize,
    raw_threshold: bool,
) -> Vec<f64> {
    let t_len = ids.len();
    let (p_org, act) = reference_forward(model, ids);
    let n = act.len();
    let nf = model.architecture().num_filters;

    let mut masks: Vec<Vec<f64>> = Vec::new();
    let mut preds: Vec<[f64; 2]> = Vec::new();
    for f in 0..nf {
        let mut peak = 0.0f64;
        for j in 0..n {
            if act[j][f] > peak {
                peak = act[j][f];
            }
        }
        let cut = if raw_threshold { tau } else { tau * peak };
        let b: Vec<f64> = (0..n).map(|j| if act[j][f] > cut { 1.0 } else { 0.0 }).collect();
        let mut m = vec![0.0; t_len];
        for t in 0..t_len {
            let l = if n == 1 {
                b[0]
            } else {
                let x = t as f64 * (n - 1) as f64 / (t_len - 1) as f64;
                let j0 = x.floor() as usize;
                let j1 = if j0 + 1 < n { j0 + 1 } else { n - 1 };
                let frac = x - j0 as f64;
                b[j0] * (1.0 - frac) + b[j1] * frac
            };
            m[t] = if l > tau { 1.0 } else { 0.0 };
        }
        let masked: Vec<u32> = (0..t_len).map(|t| if m[t] == 1.0 { ids[t] } else { 0 }).collect();
        preds.push(reference_probs(model, &masked));
        masks.push(m);
    }

    let dist = |p: &[f64; 2], q: &[f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let mut weights = vec![0.0; nf];
    for i in 0..nf {
        let sid = (-dist(&p_org, &preds[i]) / (2.0 * sigma * sigma)).exp();
        let mut u = 0.0;
        for j in 0..nf {
            u += dist(&preds[i], &preds[j]);
        }
        weights[i] = sid * u;
    }

    // pick the k largest weights one at a time, lowest index on ties
    let mut chosen = vec![false; nf];
    let mut s = vec![0.0; t_len];
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..nf {
            if chosen[i] {
                continue;
            }
            match best {
                Some(b) if weights[i] <= weights[b] => {}
                _ => best = Some(i),
            }
        }
        let i = best.unwrap();
        chosen[i] = true;
        for t in 0..t_len {
            s[t] += weights[i] * masks[i][t] / k as f64;
        }
    }
    let mx = s.iter().cloned().fold(0.0f64, f64::max);
    if mx > 0.0 {
        s.iter().map(|v| v / mx).collect()
    } else {
        vec![0.0; t_len]
    }
}

/// A classifier whose positive probability is ~1 when the token `key`
/// occurs in the document and ~0 otherwise. Other tokens are `f0`, `f1`, ...
pub fn key_token_model(seq_len: usize, fillers: usize) -> ModelBundle {
    let mut tokens = vec!["<unk>".to_string(), "key".to_string()];
    tokens.extend((0..fillers).map(|i| format!("f{i}")));
    let vocab_size = tokens.len();
    let vocab = Vocabulary::new(tokens, seq_len, TokenizerSpec::default()).unwrap();
    let arch = Architecture {
        embedding_dim: 1,
        num_filters: 1,
        kernel_size: 1,
        padding: Padding::Same,
        dense_units: 1,
        output: OutputKind::Sigmoid,
    };
    let mut embedding = vec![0.0f32; vocab_size];
    embedding[1] = 1.0;
    let weights = ModelWeights {
        embedding,
        conv_filters: vec![1.0],
        conv_bias: vec![0.0],
        // hidden unit counts key occurrences
        dense1_weights: vec![seq_len as f32],
        dense1_bias: vec![0.0],
        output_weights: vec![40.0],
        output_bias: vec![-20.0],
    };
    ModelBundle::new(vocab, arch, weights).unwrap()
}
