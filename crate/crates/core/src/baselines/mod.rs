//! Reference explainers run over the same runtime as the mask explainer.

pub mod gradcam;
pub mod lime;

pub use gradcam::{class_score, feature_gradients, gradcam_explain};
pub use lime::{lime_coefficients, lime_explain, LimeConfig, LimeFit};
