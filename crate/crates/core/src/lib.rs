//! Explanations for convolutional text classifiers from last-layer feature
//! activation masks, plus the baselines and evaluation harnesses needed to
//! compare them.
//!
//! The crate is organised as:
//!
//! * [`runtime`]: bundle loading, tokenisation and the forward pass.
//! * [`sidu`]: the similarity-difference / uniqueness mask explainer.
//! * [`baselines`]: Grad-CAM and a LIME-style perturbation surrogate.
//! * [`eval`]: insertion/deletion faithfulness and agreement with human
//!   annotations.
//! * [`render`]: HTML and terminal heatmaps.
//!
//! ```
//! use sidu_txt::runtime::TinyModelSpec;
//! use sidu_txt::sidu::{explain, SiduConfig};
//!
//! let model = TinyModelSpec::default().build(42);
//! let seq = model.tokenize("w1 w4 w2 w7 w3");
//! let cfg = SiduConfig { top_k: 3, ..SiduConfig::default() };
//! let heatmap = explain(&model, &seq, &cfg).unwrap();
//! assert_eq!(heatmap.tokens.len(), 5);
//! assert!(heatmap.scores.iter().all(|s| (0.0..=1.0).contains(s)));
//! ```

pub mod baselines;
pub mod error;
pub mod eval;
mod explainer;
pub mod heatmap;
pub mod interp;
pub mod render;
pub mod runtime;
pub mod sidu;

pub use error::{Error, Result};
pub use explainer::Explainer;
pub use heatmap::{ExplanationHeatmap, Method};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bundle-format.md")]
    mod bundle_format {}
    #[doc = include_str!("../../../book/src/sidu.md")]
    mod sidu {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/faithfulness.md")]
    mod faithfulness {}
    #[doc = include_str!("../../../book/src/human-evaluation.md")]
    mod human_evaluation {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
