//! Gradient-weighted class activation over the last convolution layer.
//!
//! The head after the convolution is average pooling, one dense ReLU layer
//! and a linear output, so the gradient of a class logit with respect to
//! every activation is available in closed form.

use crate::error::Result;
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::interp::resample_linear;
use crate::runtime::{FeatureMaps, ModelBundle, OutputKind, TokenSequence};

/// Pre-activation score of `class` for the given feature maps. For a
/// sigmoid head this is `z` for class 1 and `-z` for class 0.
pub fn class_score(model: &ModelBundle, fm: &FeatureMaps, class: usize) -> f64 {
    model.class_logits(fm)[class]
}

/// `d class_score / d fm[j][f]`, row-major `n x N`.
pub fn feature_gradients(model: &ModelBundle, fm: &FeatureMaps, class: usize) -> Vec<f64> {
    let arch = model.architecture();
    let w = model.weights();
    let (n_f, h) = (arch.num_filters, arch.dense_units);
    let c_out = arch.output.num_outputs();
    let trace = model.head(&model.pool(fm));

    // d score / d hidden_u, zero where the ReLU is inactive
    let (col, sign) = match arch.output {
        OutputKind::Sigmoid => (0, if class == 1 { 1.0 } else { -1.0 }),
        OutputKind::Softmax => (class, 1.0),
    };
    let d_hidden: Vec<f64> = (0..h)
        .map(|u| {
            if trace.hidden_pre[u] > 0.0 {
                sign * w.output_weights[u * c_out + col] as f64
            } else {
                0.0
            }
        })
        .collect();

    let inv_n = 1.0 / fm.positions() as f64;
    let d_pooled: Vec<f64> = (0..n_f)
        .map(|f| {
            let row = &w.dense1_weights[f * h..(f + 1) * h];
            row.iter().zip(&d_hidden).map(|(&wt, &g)| wt as f64 * g).sum::<f64>() * inv_n
        })
        .collect();

    let mut grads = Vec::with_capacity(fm.positions() * n_f);
    for _ in 0..fm.positions() {
        grads.extend_from_slice(&d_pooled);
    }
    grads
}

/// Grad-CAM heatmap for the predicted class, resampled to `T` positions
/// and divided by its maximum.
pub fn gradcam_explain(model: &ModelBundle, seq: &TokenSequence) -> Result<ExplanationHeatmap> {
    let (pred, fm) = model.forward(seq)?;
    let class = pred.predicted_class;
    let grads = feature_gradients(model, &fm, class);
    let (n, n_f) = (fm.positions(), fm.filters());

    let mut alpha = vec![0.0; n_f];
    for row in grads.chunks_exact(n_f) {
        for (a, &g) in alpha.iter_mut().zip(row) {
            *a += g;
        }
    }
    for a in &mut alpha {
        *a /= n as f64;
    }
    let cam: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = (0..n_f).map(|f| alpha[f] * fm.get(j, f)).sum();
            s.max(0.0)
        })
        .collect();
    let mut scores = resample_linear(&cam, seq.ids.len());
    let max = scores.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        scores.iter_mut().for_each(|s| *s /= max);
    } else {
        scores.fill(0.0);
    }
    Ok(ExplanationHeatmap {
        method: Method::Gradcam,
        predicted_class: class,
        class_probs: pred.probs,
        tokens: seq.words.clone(),
        scores,
        signed: false,
        config: serde_json::json!({ "layer": "last_convolution", "target": "predicted_class_logit" }),
    })
}
