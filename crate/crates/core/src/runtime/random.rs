use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{Architecture, ModelBundle, ModelWeights, OutputKind, Padding};
use super::vocab::{TokenizerSpec, Vocabulary};

/// Shape of a randomly initialised classifier, for tests and examples.
///
/// The vocabulary is `<unk>, w1, w2, ...`; embedding row 0 is zero so the
/// unknown token contributes nothing to the convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyModelSpec {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub embedding_dim: usize,
    pub num_filters: usize,
    pub kernel_size: usize,
    pub padding: Padding,
    pub dense_units: usize,
    pub output: OutputKind,
}

impl Default for TinyModelSpec {
    fn default() -> Self {
        Self {
            vocab_size: 12,
            seq_len: 8,
            embedding_dim: 4,
            num_filters: 4,
            kernel_size: 3,
            padding: Padding::Same,
            dense_units: 6,
            output: OutputKind::Sigmoid,
        }
    }
}

impl TinyModelSpec {
    pub fn build(&self, seed: u64) -> ModelBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |len: usize, scale: f32| -> Vec<f32> {
            (0..len).map(|_| rng.random_range(-scale..scale)).collect()
        };
        let (v, d, n, k, h) = (
            self.vocab_size,
            self.embedding_dim,
            self.num_filters,
            self.kernel_size,
            self.dense_units,
        );
        let c = self.output.num_outputs();
        let mut embedding = uniform(v * d, 1.0);
        embedding[..d].fill(0.0);
        let weights = ModelWeights {
            embedding,
            conv_filters: uniform(n * k * d, 0.8),
            conv_bias: uniform(n, 0.2),
            dense1_weights: uniform(n * h, 1.0),
            dense1_bias: uniform(h, 0.3),
            output_weights: uniform(h * c, 1.5),
            output_bias: uniform(c, 0.3),
        };
        let tokens = std::iter::once("<unk>".to_string())
            .chain((1..v).map(|i| format!("w{i}")))
            .collect();
        let vocab = Vocabulary::new(tokens, self.seq_len, TokenizerSpec::default())
            .expect("generated vocabulary is valid");
        let arch = Architecture {
            embedding_dim: d,
            num_filters: n,
            kernel_size: k,
            padding: self.padding,
            dense_units: h,
            output: self.output,
        };
        ModelBundle::new(vocab, arch, weights).expect("generated tensors match architecture")
    }
}
