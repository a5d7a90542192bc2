use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Explanation method that produced a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sidu,
    Gradcam,
    Lime,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sidu, Method::Gradcam, Method::Lime];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sidu => "sidu",
            Method::Gradcam => "gradcam",
            Method::Lime => "lime",
        }
    }

    /// Name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Sidu => "SIDU-TXT",
            Method::Gradcam => "GRAD-CAM",
            Method::Lime => "LIME",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sidu" | "sidu-txt" => Ok(Method::Sidu),
            "gradcam" | "grad-cam" => Ok(Method::Gradcam),
            "lime" => Ok(Method::Lime),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected sidu, gradcam or lime)"
            ))),
        }
    }
}

/// Per-position relevance scores for one document.
///
/// `scores` covers all `T` positions of the token sequence; `tokens` holds
/// the words of the first `tokens.len()` (non-padding) positions. Unsigned
/// methods produce scores in `[0, 1]`; signed ones in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationHeatmap {
    pub method: Method,
    pub predicted_class: usize,
    pub class_probs: [f64; 2],
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub signed: bool,
    /// Hyperparameters the method ran with.
    pub config: serde_json::Value,
}

impl ExplanationHeatmap {
    /// Scores of the non-padding positions, aligned with `tokens`.
    pub fn token_scores(&self) -> &[f64] {
        &self.scores[..self.tokens.len()]
    }

    /// `|score|` for signed methods, the score itself otherwise.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.token_scores()
            .iter()
            .map(|&s| if self.signed { s.abs() } else { s })
            .collect()
    }

    pub fn is_all_zero(&self) -> bool {
        self.scores.iter().all(|&s| s == 0.0)
    }

    pub fn to_json(&self) -> HeatmapJson {
        HeatmapJson {
            method: self.method,
            predicted_class: self.predicted_class,
            class_probs: self.class_probs,
            tokens: self.tokens.clone(),
            scores: self.token_scores().to_vec(),
            config: self.config.clone(),
            all_zero: self.is_all_zero(),
            signed: self.signed,
            signs: self.signed.then(|| {
                self.token_scores()
                    .iter()
                    .map(|&s| if s > 0.0 { 1 } else if s < 0.0 { -1 } else { 0 })
                    .collect()
            }),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Wire form of a heatmap; padding positions are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapJson {
    pub method: Method,
    pub predicted_class: usize,
    pub class_probs: [f64; 2],
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub config: serde_json::Value,
    #[serde(default)]
    pub all_zero: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub signed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<i8>>,
}

impl HeatmapJson {
    /// Rebuilds a heatmap whose score vector covers only the tokens.
    pub fn into_heatmap(self) -> Result<ExplanationHeatmap> {
        if self.tokens.len() != self.scores.len() {
            return Err(Error::Config(format!(
                "heatmap has {} tokens but {} scores",
                self.tokens.len(),
                self.scores.len()
            )));
        }
        Ok(ExplanationHeatmap {
            method: self.method,
            predicted_class: self.predicted_class,
            class_probs: self.class_probs,
            tokens: self.tokens,
            scores: self.scores,
            signed: self.signed,
            config: self.config,
        })
    }
}
