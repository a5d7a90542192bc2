use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::vocab::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};

/// Convolution padding mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero-pad so the output has `T` positions (`(k-1)/2` on the left).
    #[default]
    Same,
    /// No padding; `T - k + 1` output positions.
    Valid,
}

/// Output head of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// One logit `z`; probabilities are `[1 - sigmoid(z), sigmoid(z)]`.
    Sigmoid,
    /// Two logits through a softmax.
    Softmax,
}

impl OutputKind {
    pub fn num_outputs(self) -> usize {
        match self {
            OutputKind::Sigmoid => 1,
            OutputKind::Softmax => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub embedding_dim: usize,
    pub num_filters: usize,
    pub kernel_size: usize,
    #[serde(default)]
    pub padding: Padding,
    pub dense_units: usize,
    pub output: OutputKind,
}

impl Architecture {
    /// Number of convolution output positions for input length `seq_len`.
    pub fn conv_positions(&self, seq_len: usize) -> usize {
        match self.padding {
            Padding::Same => seq_len,
            Padding::Valid => (seq_len + 1).saturating_sub(self.kernel_size),
        }
    }

    fn left_pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel_size - 1) / 2,
            Padding::Valid => 0,
        }
    }
}

/// Raw row-major tensors of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    /// `vocab_size x d`
    pub embedding: Vec<f32>,
    /// `N x k x d`
    pub conv_filters: Vec<f32>,
    /// `N`
    pub conv_bias: Vec<f32>,
    /// `N x h`
    pub dense1_weights: Vec<f32>,
    /// `h`
    pub dense1_bias: Vec<f32>,
    /// `h x c_out`
    pub output_weights: Vec<f32>,
    /// `c_out`
    pub output_bias: Vec<f32>,
}

/// A loaded classifier: embedding, one convolution, global average
/// pooling, one hidden dense layer and an output layer.
///
/// Immutable after construction; every method takes `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    vocab: Vocabulary,
    arch: Architecture,
    weights: ModelWeights,
}

/// Class probabilities for a two-class problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector {
    pub probs: [f64; 2],
    pub predicted_class: usize,
}

impl PredictionVector {
    pub fn new(probs: [f64; 2]) -> Self {
        let predicted_class = usize::from(probs[1] > probs[0]);
        Self {
            probs,
            predicted_class,
        }
    }

    /// Euclidean distance between two probability vectors.
    pub fn distance(&self, other: &PredictionVector) -> f64 {
        let a = self.probs[0] - other.probs[0];
        let b = self.probs[1] - other.probs[1];
        (a * a + b * b).sqrt()
    }
}

/// Post-ReLU activations of the convolution layer, `n x N` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    activations: Vec<f64>,
    positions: usize,
    filters: usize,
}

impl FeatureMaps {
    /// Wraps an `n x N` row-major activation matrix. Entries must be finite
    /// and non-negative.
    pub fn new(activations: Vec<f64>, positions: usize, filters: usize) -> Result<Self> {
        if activations.len() != positions * filters {
            return Err(Error::ShapeMismatch {
                field: "activations".into(),
                expected: vec![positions, filters],
                found: vec![activations.len()],
            });
        }
        if activations.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidSequence(
                "feature maps must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            activations,
            positions,
            filters,
        })
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn get(&self, position: usize, filter: usize) -> f64 {
        self.activations[position * self.filters + filter]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.activations
    }

    /// Activations of one filter across all positions.
    pub fn filter(&self, filter: usize) -> impl Iterator<Item = f64> + '_ {
        self.activations
            .iter()
            .skip(filter)
            .step_by(self.filters)
            .copied()
    }
}

/// Intermediate values of the dense head for one input.
#[derive(Debug, Clone)]
pub(crate) struct HeadTrace {
    pub hidden_pre: Vec<f64>,
    pub logits: Vec<f64>,
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

fn expect_len(field: &str, data: &[f32], shape: &[usize]) -> Result<()> {
    let want: usize = shape.iter().product();
    if data.len() != want {
        return Err(Error::ShapeMismatch {
            field: field.into(),
            expected: shape.to_vec(),
            found: vec![data.len()],
        });
    }
    Ok(())
}

impl ModelBundle {
    /// Assembles a bundle, checking every tensor against the architecture.
    pub fn new(vocab: Vocabulary, arch: Architecture, weights: ModelWeights) -> Result<Self> {
        if arch.embedding_dim == 0 || arch.num_filters == 0 || arch.kernel_size == 0 {
            return Err(Error::MalformedHeader(
                "embedding_dim, num_filters and kernel_size must be positive".into(),
            ));
        }
        if arch.dense_units == 0 {
            return Err(Error::MalformedHeader("dense_units must be positive".into()));
        }
        if arch.conv_positions(vocab.max_sequence_length()) == 0 {
            return Err(Error::MalformedHeader(format!(
                "valid convolution with kernel {} leaves no positions for T = {}",
                arch.kernel_size,
                vocab.max_sequence_length()
            )));
        }
        for (field, data, shape) in Self::tensor_layout(&vocab, &arch)
            .iter()
            .zip(weights.tensors())
            .map(|((name, shape), (_, data))| (*name, data, shape.clone()))
        {
            expect_len(field, data, &shape)?;
        }
        if weights.tensors().iter().any(|(_, t)| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::MalformedHeader("non-finite weight".into()));
        }
        Ok(Self {
            vocab,
            arch,
            weights,
        })
    }

    /// Tensor names and shapes in canonical order.
    pub fn tensor_layout(vocab: &Vocabulary, arch: &Architecture) -> Vec<(&'static str, Vec<usize>)> {
        let (n, k, d, h) = (
            arch.num_filters,
            arch.kernel_size,
            arch.embedding_dim,
            arch.dense_units,
        );
        let c = arch.output.num_outputs();
        vec![
            ("embedding", vec![vocab.len(), d]),
            ("conv_filters", vec![n, k, d]),
            ("conv_bias", vec![n]),
            ("dense1_weights", vec![n, h]),
            ("dense1_bias", vec![h]),
            ("output_weights", vec![h, c]),
            ("output_bias", vec![c]),
        ]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    pub fn num_filters(&self) -> usize {
        self.arch.num_filters
    }

    pub fn seq_len(&self) -> usize {
        self.vocab.max_sequence_length()
    }

    /// Output positions of the convolution, `n`.
    pub fn conv_positions(&self) -> usize {
        self.arch.conv_positions(self.seq_len())
    }

    pub fn tokenize(&self, text: &str) -> TokenSequence {
        self.vocab.tokenize(text)
    }

    /// Embedding lookup, convolution with ReLU, global average pooling, the
    /// hidden dense layer with ReLU and the output layer. Returns the class probabilities and the
    /// convolution activations.
    pub fn forward(&self, seq: &TokenSequence) -> Result<(PredictionVector, FeatureMaps)> {
        seq.validate(&self.vocab)?;
        let table = ProjectionTable::build(self, seq.ids.iter().copied());
        let fm = table.feature_maps(&seq.ids);
        let pooled = self.pool(&fm);
        Ok((self.probabilities(&self.head(&pooled).logits), fm))
    }

    pub fn predict(&self, seq: &TokenSequence) -> Result<PredictionVector> {
        self.forward(seq).map(|(p, _)| p)
    }

    /// Mean activation of each filter over positions.
    pub(crate) fn pool(&self, fm: &FeatureMaps) -> Vec<f64> {
        let n = fm.positions();
        let mut pooled = vec![0.0; fm.filters()];
        for row in fm.as_slice().chunks_exact(fm.filters()) {
            for (acc, &a) in pooled.iter_mut().zip(row) {
                *acc += a;
            }
        }
        for p in &mut pooled {
            *p /= n as f64;
        }
        pooled
    }

    pub(crate) fn head(&self, pooled: &[f64]) -> HeadTrace {
        let h = self.arch.dense_units;
        let c = self.arch.output.num_outputs();
        let w = &self.weights;
        let mut hidden_pre: Vec<f64> = w.dense1_bias.iter().map(|&b| b as f64).collect();
        for (f, &p) in pooled.iter().enumerate() {
            let row = &w.dense1_weights[f * h..(f + 1) * h];
            for (acc, &wt) in hidden_pre.iter_mut().zip(row) {
                *acc += p * wt as f64;
            }
        }
        let mut logits: Vec<f64> = w.output_bias.iter().map(|&b| b as f64).collect();
        for (u, &pre) in hidden_pre.iter().enumerate() {
            let act = pre.max(0.0);
            let row = &w.output_weights[u * c..(u + 1) * c];
            for (acc, &wt) in logits.iter_mut().zip(row) {
                *acc += act * wt as f64;
            }
        }
        HeadTrace { hidden_pre, logits }
    }

    /// Class scores before the output nonlinearity, one per class. For a
    /// sigmoid head with logit `z` these are `[-z, z]`, whose softmax equals
    /// the sigmoid expansion.
    pub fn class_logits(&self, fm: &FeatureMaps) -> [f64; 2] {
        let logits = self.head(&self.pool(fm)).logits;
        self.expand_logits(&logits)
    }

    pub(crate) fn expand_logits(&self, logits: &[f64]) -> [f64; 2] {
        match self.arch.output {
            OutputKind::Sigmoid => [-logits[0], logits[0]],
            OutputKind::Softmax => [logits[0], logits[1]],
        }
    }

    pub(crate) fn probabilities(&self, logits: &[f64]) -> PredictionVector {
        match self.arch.output {
            OutputKind::Sigmoid => {
                let p = 1.0 / (1.0 + (-logits[0]).exp());
                PredictionVector::new([1.0 - p, p])
            }
            OutputKind::Softmax => {
                let m = logits[0].max(logits[1]);
                let e0 = (logits[0] - m).exp();
                let e1 = (logits[1] - m).exp();
                let s = e0 + e1;
                PredictionVector::new([e0 / s, e1 / s])
            }
        }
    }

    /// A scorer specialised to one document: it precomputes the convolution
    /// contribution of every id in `seq` (and of the unknown id), so masked
    /// variants of the document can be re-scored cheaply. Results are
    /// bitwise identical to [`ModelBundle::forward`].
    pub fn scorer(&self, seq: &TokenSequence) -> Result<DocumentScorer<'_>> {
        seq.validate(&self.vocab)?;
        let ids = seq
            .ids
            .iter()
            .copied()
            .chain(std::iter::once(super::UNKNOWN_ID));
        Ok(DocumentScorer {
            model: self,
            table: ProjectionTable::build(self, ids),
        })
    }
}

impl ModelWeights {
    pub(crate) fn tensors(&self) -> [(&'static str, &Vec<f32>); 7] {
        [
            ("embedding", &self.embedding),
            ("conv_filters", &self.conv_filters),
            ("conv_bias", &self.conv_bias),
            ("dense1_weights", &self.dense1_weights),
            ("dense1_bias", &self.dense1_bias),
            ("output_weights", &self.output_weights),
            ("output_bias", &self.output_bias),
        ]
    }
}

/// Per-id convolution contributions: `dot(embedding[id], filter[f][o])`
/// for every kernel offset `o` and filter `f`, accumulated in f64.
struct ProjectionTable<'a> {
    model: &'a ModelBundle,
    slots: HashMap<u32, usize>,
    values: Vec<f64>,
}

impl<'a> ProjectionTable<'a> {
    fn build(model: &'a ModelBundle, ids: impl Iterator<Item = u32>) -> Self {
        let arch = &model.arch;
        let (k, n_f, d) = (arch.kernel_size, arch.num_filters, arch.embedding_dim);
        let mut slots = HashMap::new();
        let mut values = Vec::new();
        for id in ids {
            if slots.contains_key(&id) {
                continue;
            }
            slots.insert(id, slots.len());
            let emb = &model.weights.embedding[id as usize * d..(id as usize + 1) * d];
            for o in 0..k {
                for f in 0..n_f {
                    let w = &model.weights.conv_filters[(f * k + o) * d..(f * k + o + 1) * d];
                    values.push(dot(emb, w));
                }
            }
        }
        Self {
            model,
            slots,
            values,
        }
    }

    fn slot(&self, id: u32) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    /// Convolution output for `ids`; every id must be in the table.
    fn feature_maps(&self, ids: &[u32]) -> FeatureMaps {
        let arch = &self.model.arch;
        let (k, n_f) = (arch.kernel_size, arch.num_filters);
        let t = ids.len();
        let n = arch.conv_positions(t);
        let left = arch.left_pad();
        let slots: Vec<usize> = ids
            .iter()
            .map(|&id| self.slot(id).expect("id missing from projection table"))
            .collect();
        let bias = &self.model.weights.conv_bias;
        let mut out = Vec::with_capacity(n * n_f);
        for j in 0..n {
            let row_start = out.len();
            out.extend(bias.iter().map(|&b| b as f64));
            let row = &mut out[row_start..];
            for o in 0..k {
                let Some(p) = (j + o).checked_sub(left) else {
                    continue;
                };
                if p >= t {
                    continue;
                }
                let base = (slots[p] * k + o) * n_f;
                for (acc, &v) in row.iter_mut().zip(&self.values[base..base + n_f]) {
                    *acc += v;
                }
            }
            for a in row.iter_mut() {
                *a = a.max(0.0);
            }
        }
        FeatureMaps {
            activations: out,
            positions: n,
            filters: n_f,
        }
    }
}

/// Fast re-scoring of masked variants of one document.
pub struct DocumentScorer<'a> {
    model: &'a ModelBundle,
    table: ProjectionTable<'a>,
}

impl DocumentScorer<'_> {
    fn check(&self, ids: &[u32]) -> Result<()> {
        if ids.len() != self.model.seq_len() {
            return Err(Error::InvalidSequence(format!(
                "length {} differs from max_sequence_length {}",
                ids.len(),
                self.model.seq_len()
            )));
        }
        if let Some(bad) = ids.iter().find(|&&id| self.table.slot(id).is_none()) {
            return Err(Error::InvalidSequence(format!(
                "id {bad} does not occur in the scored document"
            )));
        }
        Ok(())
    }

    /// Forward pass for an id vector built from the document's ids and the
    /// unknown id.
    pub fn forward(&self, ids: &[u32]) -> Result<(PredictionVector, FeatureMaps)> {
        self.check(ids)?;
        let fm = self.table.feature_maps(ids);
        let pooled = self.model.pool(&fm);
        Ok((self.model.probabilities(&self.model.head(&pooled).logits), fm))
    }

    pub fn predict(&self, ids: &[u32]) -> Result<PredictionVector> {
        self.forward(ids).map(|(p, _)| p)
    }
}
