//! Similarity-difference and uniqueness weighting of feature activation
//! text masks.
//!
//! For every filter of the last convolution layer a binary mask over
//! positions is taken from its activations, resampled to the sequence
//! length and re-binarised. Each mask keeps only the tokens it covers
//! (everything else becomes the unknown id) and the model is re-run. A
//! mask is weighted by how little its prediction moves away from the
//! original (a kernel of the probability-vector distance) times how far it
//! sits from every other mask's prediction. The `K` heaviest masks are
//! averaged into the final per-token relevance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::interp::resample_linear;
use crate::runtime::{FeatureMaps, ModelBundle, PredictionVector, TokenSequence, UNKNOWN_ID};

/// How feature activations are compared against `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `activation > tau * max(activation of that filter)`.
    #[default]
    FilterMax,
    /// `activation > tau`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiduConfig {
    /// Binarisation threshold, in `(0, 1)`.
    pub tau: f64,
    /// Kernel bandwidth of the similarity difference.
    pub sigma: f64,
    /// Number of masks fused into the heatmap.
    pub top_k: usize,
    #[serde(default)]
    pub threshold: ThresholdMode,
}

impl Default for SiduConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            sigma: 0.25,
            top_k: 10,
            threshold: ThresholdMode::FilterMax,
        }
    }
}

impl SiduConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Also checks `top_k` against the model's filter count.
    pub fn validate_for(&self, model: &ModelBundle) -> Result<()> {
        self.validate()?;
        if self.top_k > model.num_filters() {
            return Err(Error::Config(format!(
                "top_k = {} exceeds the model's {} filters",
                self.top_k,
                model.num_filters()
            )));
        }
        Ok(())
    }
}

/// Masks derived from one set of feature maps, indexed by filter.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMaskSet {
    /// Thresholded activations, `N` masks of length `n`.
    pub feature: Vec<Vec<bool>>,
    /// `feature` linearly resampled to length `T`, values in `[0, 1]`.
    pub upsampled: Vec<Vec<f64>>,
    /// `upsampled > tau`, `N` masks of length `T`.
    pub masks: Vec<Vec<bool>>,
}

/// Per-mask weights and the selected top-`K` masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiduWeights {
    pub sid: Vec<f64>,
    pub uniqueness: Vec<f64>,
    pub weights: Vec<f64>,
    /// Mask indices ordered by descending weight, ties to the lower index.
    pub top_indices: Vec<usize>,
}

/// Builds the binary, upsampled and re-binarised masks for every filter.
pub fn generate_masks(fm: &FeatureMaps, seq_len: usize, cfg: &SiduConfig) -> Result<BinaryMaskSet> {
    if seq_len < fm.positions() {
        return Err(Error::Config(format!(
            "sequence length {seq_len} is shorter than {} feature positions",
            fm.positions()
        )));
    }
    let mut feature = Vec::with_capacity(fm.filters());
    let mut upsampled = Vec::with_capacity(fm.filters());
    let mut masks = Vec::with_capacity(fm.filters());
    for f in 0..fm.filters() {
        let cut = match cfg.threshold {
            ThresholdMode::FilterMax => cfg.tau * fm.filter(f).fold(0.0, f64::max),
            ThresholdMode::Raw => cfg.tau,
        };
        let binary: Vec<bool> = fm.filter(f).map(|a| a > cut).collect();
        let as_real: Vec<f64> = binary.iter().map(|&b| f64::from(u8::from(b))).collect();
        let up = resample_linear(&as_real, seq_len);
        masks.push(up.iter().map(|&l| l > cfg.tau).collect());
        upsampled.push(up);
        feature.push(binary);
    }
    Ok(BinaryMaskSet {
        feature,
        upsampled,
        masks,
    })
}

/// Keeps ids where `mask` is set and replaces the rest with the unknown id.
pub fn apply_mask(seq: &TokenSequence, mask: &[bool]) -> Result<TokenSequence> {
    if mask.len() != seq.ids.len() {
        return Err(Error::InvalidSequence(format!(
            "mask length {} differs from sequence length {}",
            mask.len(),
            seq.ids.len()
        )));
    }
    Ok(TokenSequence {
        ids: mask_ids(&seq.ids, mask),
        words: seq.words.clone(),
    })
}

fn mask_ids(ids: &[u32], mask: &[bool]) -> Vec<u32> {
    ids.iter()
        .zip(mask)
        .map(|(&id, &keep)| if keep { id } else { UNKNOWN_ID })
        .collect()
}

/// `exp(-||p_org - p_i|| / (2 sigma^2))`, with the unsquared Euclidean
/// distance in the exponent.
pub fn similarity_difference(p_org: &PredictionVector, p_i: &PredictionVector, sigma: f64) -> f64 {
    (-p_org.distance(p_i) / (2.0 * sigma * sigma)).exp()
}

/// Sum of distances from each masked prediction to all others.
pub fn uniqueness(preds: &[PredictionVector]) -> Vec<f64> {
    preds
        .iter()
        .map(|p| preds.iter().map(|q| p.distance(q)).sum())
        .collect()
}

/// Indices of the `k` largest weights, descending, ties to the lower index.
pub fn top_k_indices(weights: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Everything computed while explaining one document.
#[derive(Debug, Clone)]
pub struct SiduExplanation {
    pub heatmap: ExplanationHeatmap,
    pub original: PredictionVector,
    pub masked_predictions: Vec<PredictionVector>,
    pub masks: BinaryMaskSet,
    pub weights: SiduWeights,
    /// Fused scores before max-normalisation.
    pub raw_scores: Vec<f64>,
}

/// An explainer bound to one model with a validated configuration.
#[derive(Debug, Clone, Copy)]
pub struct SiduExplainer<'a> {
    model: &'a ModelBundle,
    cfg: SiduConfig,
}

impl<'a> SiduExplainer<'a> {
    /// Fails if the configuration is out of range or `top_k` exceeds the
    /// number of filters.
    pub fn new(model: &'a ModelBundle, cfg: SiduConfig) -> Result<Self> {
        cfg.validate_for(model)?;
        Ok(Self { model, cfg })
    }

    pub fn config(&self) -> &SiduConfig {
        &self.cfg
    }

    pub fn explain(&self, seq: &TokenSequence) -> Result<ExplanationHeatmap> {
        self.explain_detailed(seq).map(|e| e.heatmap)
    }

    pub fn explain_detailed(&self, seq: &TokenSequence) -> Result<SiduExplanation> {
        let model = self.model;
        let cfg = &self.cfg;
        let (original, fm) = model.forward(seq)?;
        let t_len = seq.ids.len();
        let masks = generate_masks(&fm, t_len, cfg)?;

        // The masked passes are independent; they run in index order so the
        // reduction below is deterministic.
        let scorer = model.scorer(seq)?;
        let masked_predictions = masks
            .masks
            .iter()
            .map(|m| scorer.predict(&mask_ids(&seq.ids, m)))
            .collect::<Result<Vec<_>>>()?;

        let sid: Vec<f64> = masked_predictions
            .iter()
            .map(|p| similarity_difference(&original, p, cfg.sigma))
            .collect();
        let uniq = uniqueness(&masked_predictions);
        let weights: Vec<f64> = sid.iter().zip(&uniq).map(|(s, u)| s * u).collect();
        let top = top_k_indices(&weights, cfg.top_k);

        let mut raw = vec![0.0; t_len];
        for &i in &top {
            for (acc, &on) in raw.iter_mut().zip(&masks.masks[i]) {
                if on {
                    *acc += weights[i];
                }
            }
        }
        for r in &mut raw {
            *r /= cfg.top_k as f64;
        }
        let max = raw.iter().copied().fold(0.0, f64::max);
        let scores = if max > 0.0 {
            raw.iter().map(|&r| r / max).collect()
        } else {
            vec![0.0; t_len]
        };

        let heatmap = ExplanationHeatmap {
            method: Method::Sidu,
            predicted_class: original.predicted_class,
            class_probs: original.probs,
            tokens: seq.words.clone(),
            scores,
            signed: false,
            config: serde_json::json!({
                "tau": cfg.tau,
                "sigma": cfg.sigma,
                "top_k": cfg.top_k,
                "threshold": cfg.threshold,
            }),
        };
        Ok(SiduExplanation {
            heatmap,
            original,
            masked_predictions,
            masks,
            weights: SiduWeights {
                sid,
                uniqueness: uniq,
                weights,
                top_indices: top,
            },
            raw_scores: raw,
        })
    }
}

/// Explains `seq` with a fresh [`SiduExplainer`].
pub fn explain(model: &ModelBundle, seq: &TokenSequence, cfg: &SiduConfig) -> Result<ExplanationHeatmap> {
    SiduExplainer::new(model, *cfg)?.explain(seq)
}
