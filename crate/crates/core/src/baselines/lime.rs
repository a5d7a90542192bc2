//! Local linear surrogate fitted on random token-dropout perturbations.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::runtime::{ModelBundle, TokenSequence, UNKNOWN_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub num_samples: usize,
    /// Defaults to `0.75 * sqrt(T)` when unset.
    pub kernel_width: Option<f64>,
    pub ridge_lambda: f64,
    pub rng_seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            num_samples: 1000,
            kernel_width: None,
            ridge_lambda: 1e-3,
            rng_seed: 0,
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 10 {
            return Err(Error::Config(format!(
                "num_samples must be at least 10, got {}",
                self.num_samples
            )));
        }
        if let Some(w) = self.kernel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("kernel_width must be positive, got {w}")));
            }
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config("ridge_lambda must be non-negative".into()));
        }
        Ok(())
    }

    pub fn resolved_kernel_width(&self, seq_len: usize) -> f64 {
        self.kernel_width
            .unwrap_or_else(|| 0.75 * (seq_len as f64).sqrt())
    }
}

/// Fitted surrogate for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeFit {
    /// Signed attribution per non-padding position.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub target_class: usize,
}

/// The keep/drop pattern of sample `index`; each token survives with
/// probability 1/2. Every sample has its own ChaCha stream, so samples can
/// be drawn in any order.
fn sample_mask(seed: u64, index: usize, len: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..len).map(|_| rng.random_bool(0.5)).collect()
}

pub fn lime_coefficients(model: &ModelBundle, seq: &TokenSequence, cfg: &LimeConfig) -> Result<LimeFit> {
    cfg.validate()?;
    let m = seq.len();
    if m == 0 {
        return Err(Error::EmptyDocument);
    }
    let original = model.predict(seq)?;
    let class = original.predicted_class;
    let scorer = model.scorer(seq)?;
    let width = cfg.resolved_kernel_width(seq.ids.len());

    let mut xs = Vec::with_capacity(cfg.num_samples);
    let mut ys = Vec::with_capacity(cfg.num_samples);
    let mut ws = Vec::with_capacity(cfg.num_samples);
    let mut ids = seq.ids.clone();
    for s in 0..cfg.num_samples {
        let mask = sample_mask(cfg.rng_seed, s, m);
        for (t, &keep) in mask.iter().enumerate() {
            ids[t] = if keep { seq.ids[t] } else { UNKNOWN_ID };
        }
        let y = scorer.predict(&ids)?.probs[class];
        let kept = mask.iter().filter(|&&k| k).count();
        // cosine similarity with the all-ones mask
        let cos = (kept as f64 / m as f64).sqrt();
        let dist = 1.0 - cos;
        ws.push((-(dist * dist) / (width * width)).exp());
        ys.push(y);
        xs.push(mask);
    }

    let total: f64 = ws.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Config("all LIME sample weights vanished; widen kernel_width".into()));
    }
    let mut x_mean = vec![0.0; m];
    let mut y_mean = 0.0;
    for ((x, &y), &w) in xs.iter().zip(&ys).zip(&ws) {
        for (acc, &bit) in x_mean.iter_mut().zip(x) {
            if bit {
                *acc += w;
            }
        }
        y_mean += w * y;
    }
    x_mean.iter_mut().for_each(|v| *v /= total);
    y_mean /= total;

    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut centred = vec![0.0; m];
    for ((x, &y), &w) in xs.iter().zip(&ys).zip(&ws) {
        for ((c, &bit), &mu) in centred.iter_mut().zip(x).zip(&x_mean) {
            *c = f64::from(u8::from(bit)) - mu;
        }
        let dy = y - y_mean;
        for i in 0..m {
            let wi = w * centred[i];
            rhs[i] += wi * dy;
            for j in i..m {
                gram[(i, j)] += wi * centred[j];
            }
        }
    }
    for i in 0..m {
        gram[(i, i)] += cfg.ridge_lambda;
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Config("LIME normal equations are singular; use ridge_lambda > 0".into()))?
        .solve(&rhs);
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, x)| b * x).sum::<f64>();
    Ok(LimeFit {
        coefficients,
        intercept,
        target_class: class,
    })
}

/// Signed per-token attributions, divided by the largest magnitude.
pub fn lime_explain(model: &ModelBundle, seq: &TokenSequence, cfg: &LimeConfig) -> Result<ExplanationHeatmap> {
    let fit = lime_coefficients(model, seq, cfg)?;
    let original = model.predict(seq)?;
    let max = fit.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut scores = vec![0.0; seq.ids.len()];
    if max > 0.0 {
        for (s, c) in scores.iter_mut().zip(&fit.coefficients) {
            *s = c / max;
        }
    }
    Ok(ExplanationHeatmap {
        method: Method::Lime,
        predicted_class: fit.target_class,
        class_probs: original.probs,
        tokens: seq.words.clone(),
        scores,
        signed: true,
        config: serde_json::json!({
            "num_samples": cfg.num_samples,
            "kernel_width": cfg.resolved_kernel_width(seq.ids.len()),
            "ridge_lambda": cfg.ridge_lambda,
            "rng_seed": cfg.rng_seed,
        }),
    })
}
