//! Forward-pass engine for single-convolution text classifiers.
//!
//! The architecture is fixed: embedding lookup, one 1D convolution with
//! ReLU, global average pooling over positions, a dense ReLU layer and a
//! sigmoid or two-way softmax output. [`ModelBundle::forward`] returns both
//! the class probabilities and the convolution activations, which every
//! explainer in this crate builds on.

mod format;
mod model;
mod random;
mod vocab;

pub use format::{
    decode_bundle, encode_bundle, load_bundle, read_header, save_bundle, BundleHeader,
    TensorEntry, FORMAT_VERSION, MAGIC,
};
pub use model::{
    Architecture, DocumentScorer, FeatureMaps, ModelBundle, ModelWeights, OutputKind, Padding,
    PredictionVector,
};
pub use random::TinyModelSpec;
pub use vocab::{SplitRule, TokenSequence, TokenizerSpec, Vocabulary, UNKNOWN_ID};
