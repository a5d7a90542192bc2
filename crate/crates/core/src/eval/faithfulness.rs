//! Word insertion and deletion curves.
//!
//! Tokens are visited in descending heatmap score. Deletion starts from the
//! full document and replaces one token per step with the unknown id;
//! insertion starts from the all-unknown sequence and restores one token per
//! step. Both track the probability of the class predicted for the original
//! document, over the fraction of tokens touched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::Explainer;
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::runtime::{ModelBundle, TokenSequence, UNKNOWN_ID};

/// `(fraction of tokens touched, probability of the tracked class)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn auc(&self) -> Result<f64> {
        auc(&self.points)
    }
}

/// Non-padding positions by descending score, ties to the earlier position.
pub fn ranking(heatmap: &ExplanationHeatmap) -> Vec<usize> {
    let scores = heatmap.token_scores();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn check_alignment(seq: &TokenSequence, heatmap: &ExplanationHeatmap) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptyDocument);
    }
    if heatmap.tokens.len() != seq.len() || heatmap.scores.len() < seq.len() {
        return Err(Error::InvalidSequence(format!(
            "heatmap covers {} tokens, document has {}",
            heatmap.tokens.len(),
            seq.len()
        )));
    }
    Ok(())
}

fn trace(
    model: &ModelBundle,
    seq: &TokenSequence,
    heatmap: &ExplanationHeatmap,
    mut ids: Vec<u32>,
    restore: bool,
) -> Result<Curve> {
    check_alignment(seq, heatmap)?;
    let class = heatmap.predicted_class;
    let scorer = model.scorer(seq)?;
    let m = seq.len();
    let mut points = Vec::with_capacity(m + 1);
    points.push((0.0, scorer.predict(&ids)?.probs[class]));
    for (step, t) in ranking(heatmap).into_iter().enumerate() {
        ids[t] = if restore { seq.ids[t] } else { UNKNOWN_ID };
        let x = (step + 1) as f64 / m as f64;
        points.push((x, scorer.predict(&ids)?.probs[class]));
    }
    Ok(Curve { points })
}

/// Probability of the predicted class as top-ranked tokens are removed.
pub fn deletion_curve(model: &ModelBundle, seq: &TokenSequence, heatmap: &ExplanationHeatmap) -> Result<Curve> {
    trace(model, seq, heatmap, seq.ids.clone(), false)
}

/// Probability of the predicted class as top-ranked tokens are restored to
/// an all-unknown sequence.
pub fn insertion_curve(model: &ModelBundle, seq: &TokenSequence, heatmap: &ExplanationHeatmap) -> Result<Curve> {
    trace(model, seq, heatmap, vec![UNKNOWN_ID; seq.ids.len()], true)
}

/// Trapezoidal area under a curve with strictly increasing x.
pub fn auc(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidCurve(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let mut area = 0.0;
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if !(x1 > x0) {
            return Err(Error::InvalidCurve(format!(
                "x must increase strictly ({x0} then {x1})"
            )));
        }
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(area)
}

/// A named, tokenised document of an evaluation corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDocument {
    pub name: String,
    pub seq: TokenSequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentAuc {
    pub index: usize,
    pub name: String,
    pub predicted_class: usize,
    pub insertion_auc: f64,
    pub deletion_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub method: Method,
    pub sample_size: usize,
    pub rng_seed: u64,
    pub mean_insertion_auc: f64,
    pub sd_insertion_auc: f64,
    pub mean_deletion_auc: f64,
    pub sd_deletion_auc: f64,
    pub per_document: Vec<DocumentAuc>,
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seeded uniform sample of document indices without replacement, in
/// ascending order.
pub fn sample_indices(corpus_size: usize, sample_size: usize, seed: u64) -> Result<Vec<usize>> {
    if sample_size == 0 {
        return Err(Error::Config("sample size must be positive".into()));
    }
    if sample_size > corpus_size {
        return Err(Error::Config(format!(
            "sample size {sample_size} exceeds corpus size {corpus_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, corpus_size, sample_size).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Explains a seeded sample of documents and reports insertion and deletion
/// AUCs per document and on average.
pub fn evaluate_corpus(
    model: &ModelBundle,
    documents: &[CorpusDocument],
    explainer: &Explainer,
    sample_size: usize,
    seed: u64,
) -> Result<CorpusReport> {
    explainer.validate(model)?;
    let picked = sample_indices(documents.len(), sample_size, seed)?;
    let mut per_document = Vec::with_capacity(picked.len());
    for index in picked {
        let doc = &documents[index];
        let heatmap = explainer.explain(model, &doc.seq)?;
        let insertion_auc = insertion_curve(model, &doc.seq, &heatmap)?.auc()?;
        let deletion_auc = deletion_curve(model, &doc.seq, &heatmap)?.auc()?;
        per_document.push(DocumentAuc {
            index,
            name: doc.name.clone(),
            predicted_class: heatmap.predicted_class,
            insertion_auc,
            deletion_auc,
        });
    }
    let ins: Vec<f64> = per_document.iter().map(|d| d.insertion_auc).collect();
    let del: Vec<f64> = per_document.iter().map(|d| d.deletion_auc).collect();
    let (mean_insertion_auc, sd_insertion_auc) = mean_sd(&ins);
    let (mean_deletion_auc, sd_deletion_auc) = mean_sd(&del);
    Ok(CorpusReport {
        method: explainer.method(),
        sample_size,
        rng_seed: seed,
        mean_insertion_auc,
        sd_insertion_auc,
        mean_deletion_auc,
        sd_deletion_auc,
        per_document,
    })
}

/// Method x (insertion, deletion) mean-AUC table.
pub fn format_table(reports: &[CorpusReport]) -> String {
    let headers = ["XAI METHOD", "Insertion (mean AUC) ↑", "Deletion (mean AUC) ↓"];
    let rows: Vec<[String; 3]> = reports
        .iter()
        .map(|r| {
            [
                r.method.display_name().to_string(),
                format!("{:.4} ± {:.4}", r.mean_insertion_auc, r.sd_insertion_auc),
                format!("{:.4} ± {:.4}", r.mean_deletion_auc, r.sd_deletion_auc),
            ]
        })
        .collect();
    super::render_table(&headers, &rows)
}
