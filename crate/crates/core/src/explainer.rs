use crate::baselines::{gradcam_explain, lime_explain, LimeConfig};
use crate::error::Result;
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::runtime::{ModelBundle, TokenSequence};
use crate::sidu::{SiduConfig, SiduExplainer};

/// One of the supported explanation methods with its settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Explainer {
    Sidu(SiduConfig),
    Gradcam,
    Lime(LimeConfig),
}

impl Explainer {
    /// Builds the explainer for `method`, taking settings from the given
    /// configs where they apply.
    pub fn from_method(method: Method, sidu: SiduConfig, lime: LimeConfig) -> Self {
        match method {
            Method::Sidu => Explainer::Sidu(sidu),
            Method::Gradcam => Explainer::Gradcam,
            Method::Lime => Explainer::Lime(lime),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Explainer::Sidu(_) => Method::Sidu,
            Explainer::Gradcam => Method::Gradcam,
            Explainer::Lime(_) => Method::Lime,
        }
    }

    /// Rejects settings that cannot work with `model`.
    pub fn validate(&self, model: &ModelBundle) -> Result<()> {
        match self {
            Explainer::Sidu(cfg) => cfg.validate_for(model),
            Explainer::Gradcam => Ok(()),
            Explainer::Lime(cfg) => cfg.validate(),
        }
    }

    pub fn explain(&self, model: &ModelBundle, seq: &TokenSequence) -> Result<ExplanationHeatmap> {
        match self {
            Explainer::Sidu(cfg) => SiduExplainer::new(model, *cfg)?.explain(seq),
            Explainer::Gradcam => gradcam_explain(model, seq),
            Explainer::Lime(cfg) => lime_explain(model, seq, cfg),
        }
    }
}
