//! Agreement between heatmaps and human annotations.
//!
//! Annotators label a review, list up to 10 influential words or short
//! phrases and pick up to 5 sentences. Records from several annotators are
//! merged by union. Token-level agreement is the Jaccard index between the
//! words a heatmap scores above a threshold and the human word set;
//! sentence-level agreement treats the top-scoring sentences as positive
//! predictions and reports precision, recall and F1.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::{ExplanationHeatmap, Method};
use crate::runtime::TokenizerSpec;

pub const MAX_WORDS: usize = 10;
pub const MAX_SENTENCES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// One annotator's judgement of one review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub review_id: String,
    pub text: String,
    pub label: Label,
    /// Influential words or phrases, matched case-insensitively.
    pub words: Vec<String>,
    /// Zero-based indices into [`segment_sentences`] of `text`.
    #[serde(default)]
    pub sentences: Vec<usize>,
}

fn words_of(text: &str) -> Vec<String> {
    TokenizerSpec::default().words(text)
}

impl AnnotationRecord {
    /// Checks the per-annotator limits and that every word occurs in the
    /// text. `index` is the record's position in its file.
    pub fn validate(&self, index: usize) -> Result<()> {
        let fail = |message: String| Error::Annotation { index, message };
        if self.review_id.trim().is_empty() {
            return Err(fail("review_id is empty".into()));
        }
        if self.words.is_empty() {
            return Err(fail("words list is empty".into()));
        }
        if self.words.len() > MAX_WORDS {
            return Err(fail(format!(
                "{} words listed, at most {MAX_WORDS} allowed",
                self.words.len()
            )));
        }
        if self.sentences.len() > MAX_SENTENCES {
            return Err(fail(format!(
                "{} sentences listed, at most {MAX_SENTENCES} allowed",
                self.sentences.len()
            )));
        }
        let vocabulary: BTreeSet<String> = words_of(&self.text).into_iter().collect();
        for phrase in &self.words {
            let parts = words_of(phrase);
            if parts.is_empty() {
                return Err(fail(format!("word `{phrase}` has no alphanumeric content")));
            }
            if let Some(missing) = parts.iter().find(|w| !vocabulary.contains(*w)) {
                return Err(fail(format!("word `{missing}` does not appear in the text")));
            }
        }
        let count = segment_sentences(&self.text).len();
        if let Some(bad) = self.sentences.iter().find(|&&s| s >= count) {
            return Err(fail(format!(
                "sentence index {bad} out of range for {count} sentences"
            )));
        }
        Ok(())
    }

    /// Lowercased words of all listed phrases.
    pub fn word_set(&self) -> BTreeSet<String> {
        self.words.iter().flat_map(|p| words_of(p)).collect()
    }

    pub fn sentence_set(&self) -> BTreeSet<usize> {
        self.sentences.iter().copied().collect()
    }
}

/// Parses a JSON array of annotation records and validates each one.
pub fn parse_annotations(json: &str) -> Result<Vec<AnnotationRecord>> {
    let values: Vec<serde_json::Value> = serde_json::from_str(json)?;
    values
        .into_iter()
        .enumerate()
        .map(|(index, v)| {
            let record: AnnotationRecord =
                serde_json::from_value(v).map_err(|e| Error::Annotation {
                    index,
                    message: e.to_string(),
                })?;
            record.validate(index)?;
            Ok(record)
        })
        .collect()
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    parse_annotations(&fs::read_to_string(path)?)
}

/// Merges all annotators' records for one review: union of words and
/// sentences, majority label.
pub fn union_annotations(records: &[AnnotationRecord]) -> Result<AnnotationRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("cannot merge an empty set of annotations".into()))?;
    let mut words: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut sentences = BTreeSet::new();
    let mut positive = 0usize;
    for r in records {
        if r.review_id != first.review_id || r.text != first.text {
            return Err(Error::Config(format!(
                "records for review `{}` disagree on id or text",
                first.review_id
            )));
        }
        for w in r.words.iter().flat_map(|p| words_of(p)) {
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        sentences.extend(r.sentences.iter().copied());
        if r.label == Label::Positive {
            positive += 1;
        }
    }
    let negative = records.len() - positive;
    let label = match positive.cmp(&negative) {
        std::cmp::Ordering::Greater => Label::Positive,
        std::cmp::Ordering::Less => Label::Negative,
        std::cmp::Ordering::Equal => {
            return Err(Error::AmbiguousLabel {
                review_id: first.review_id.clone(),
            })
        }
    };
    Ok(AnnotationRecord {
        review_id: first.review_id.clone(),
        text: first.text.clone(),
        label,
        words,
        sentences: sentences.into_iter().collect(),
    })
}

/// Groups records by review id (in order of first appearance) and merges
/// each group.
pub fn union_by_review(records: &[AnnotationRecord]) -> Result<Vec<AnnotationRecord>> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<AnnotationRecord>> = HashMap::new();
    for r in records {
        let group = groups.entry(r.review_id.as_str()).or_insert_with(|| {
            order.push(r.review_id.as_str());
            Vec::new()
        });
        group.push(r.clone());
    }
    order.iter().map(|id| union_annotations(&groups[id])).collect()
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counting as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Words whose highest score (magnitude for signed heatmaps) is nonzero and
/// at least `threshold`.
pub fn xai_word_set(heatmap: &ExplanationHeatmap, threshold: f64) -> BTreeSet<String> {
    let mut best: HashMap<String, f64> = HashMap::new();
    for (word, score) in heatmap.tokens.iter().zip(heatmap.magnitudes()) {
        let e = best.entry(word.to_ascii_lowercase()).or_insert(0.0);
        *e = e.max(score);
    }
    best.into_iter()
        .filter(|&(_, s)| s > 0.0 && s >= threshold)
        .map(|(w, _)| w)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub mean_jaccard: f64,
}

fn heatmap_for<'a>(
    heatmaps: &'a HashMap<String, ExplanationHeatmap>,
    review_id: &str,
) -> Result<&'a ExplanationHeatmap> {
    heatmaps.get(review_id).ok_or_else(|| Error::MissingHeatmap {
        review_id: review_id.to_string(),
    })
}

/// Mean Jaccard index between thresholded heatmap words and human words,
/// per threshold. With `pre_intersect` the heatmap words are first limited
/// to those the humans also chose.
pub fn token_sweep(
    heatmaps: &HashMap<String, ExplanationHeatmap>,
    annotations: &[AnnotationRecord],
    thresholds: &[f64],
    pre_intersect: bool,
) -> Result<Vec<SweepPoint>> {
    if annotations.is_empty() {
        return Err(Error::Config("no annotated reviews".into()));
    }
    let mut totals = vec![0.0; thresholds.len()];
    for record in annotations {
        let heatmap = heatmap_for(heatmaps, &record.review_id)?;
        let human = record.word_set();
        for (total, &t) in totals.iter_mut().zip(thresholds) {
            let mut xai = xai_word_set(heatmap, t);
            if pre_intersect {
                xai.retain(|w| human.contains(w));
            }
            *total += jaccard(&xai, &human);
        }
    }
    let n = annotations.len() as f64;
    Ok(thresholds
        .iter()
        .zip(totals)
        .map(|(&threshold, total)| SweepPoint {
            threshold,
            mean_jaccard: total / n,
        })
        .collect())
}

/// Splits text after `.`, `!` or `?` followed by whitespace. Empty pieces
/// are dropped.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(j, next)) = chars.peek() {
                if next.is_whitespace() {
                    out.push(&text[start..j]);
                    start = j;
                }
            } else {
                out.push(&text[start..i + c.len_utf8()]);
                start = text.len();
            }
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentenceAggregation {
    #[default]
    Mean,
    Max,
}

/// Score of every sentence of `text` under `heatmap`. Tokens past the end
/// of the heatmap (truncated documents) score 0.
pub fn sentence_scores(
    text: &str,
    heatmap: &ExplanationHeatmap,
    aggregation: SentenceAggregation,
) -> Result<Vec<f64>> {
    let sentences = segment_sentences(text);
    if sentences.is_empty() {
        return Err(Error::NoSentences);
    }
    let magnitudes = heatmap.magnitudes();
    let mut pos = 0;
    let mut scores = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let words = words_of(sentence);
        let mut acc: f64 = 0.0;
        for w in &words {
            let s = match heatmap.tokens.get(pos) {
                Some(tok) if tok.eq_ignore_ascii_case(w) => magnitudes[pos],
                Some(tok) => {
                    return Err(Error::Config(format!(
                        "heatmap token `{tok}` at position {pos} does not match review word `{w}`"
                    )))
                }
                None => 0.0,
            };
            acc = match aggregation {
                SentenceAggregation::Mean => acc + s,
                SentenceAggregation::Max => acc.max(s),
            };
            pos += 1;
        }
        scores.push(match aggregation {
            SentenceAggregation::Mean if !words.is_empty() => acc / words.len() as f64,
            _ => acc,
        });
    }
    Ok(scores)
}

/// Indices of the `top_s` highest scores, ties to the earlier sentence.
pub fn top_sentences(scores: &[f64], top_s: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.into_iter().take(top_s).collect()
}

/// Precision, recall and F1 of a predicted set; each ratio with a zero
/// denominator is 0, and so is F1 when precision and recall are both 0.
pub fn precision_recall_f1(predicted: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> (f64, f64, f64) {
    let hits = predicted.intersection(truth).count() as f64;
    let p = if predicted.is_empty() { 0.0 } else { hits / predicted.len() as f64 };
    let r = if truth.is_empty() { 0.0 } else { hits / truth.len() as f64 };
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceResult {
    pub review_id: String,
    pub predicted: Vec<usize>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub method: Option<Method>,
    pub top_sentences: usize,
    pub aggregation: SentenceAggregation,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub per_review: Vec<SentenceResult>,
}

/// Sentence-level precision/recall/F1 of the `top_s` best-scoring
/// sentences against the human sentence sets, averaged over reviews.
pub fn sentence_eval(
    heatmaps: &HashMap<String, ExplanationHeatmap>,
    annotations: &[AnnotationRecord],
    top_s: usize,
    aggregation: SentenceAggregation,
) -> Result<SentenceReport> {
    if annotations.is_empty() {
        return Err(Error::Config("no annotated reviews".into()));
    }
    if top_s == 0 {
        return Err(Error::Config("top_sentences must be positive".into()));
    }
    let mut per_review = Vec::with_capacity(annotations.len());
    let mut method = None;
    for record in annotations {
        let heatmap = heatmap_for(heatmaps, &record.review_id)?;
        method.get_or_insert(heatmap.method);
        let scores = sentence_scores(&record.text, heatmap, aggregation)?;
        let predicted = top_sentences(&scores, top_s);
        let (precision, recall, f1) = precision_recall_f1(&predicted, &record.sentence_set());
        per_review.push(SentenceResult {
            review_id: record.review_id.clone(),
            predicted: predicted.into_iter().collect(),
            precision,
            recall,
            f1,
        });
    }
    let n = per_review.len() as f64;
    let mean = |f: fn(&SentenceResult) -> f64| per_review.iter().map(f).sum::<f64>() / n;
    Ok(SentenceReport {
        method,
        top_sentences: top_s,
        aggregation,
        mean_precision: mean(|r| r.precision),
        mean_recall: mean(|r| r.recall),
        mean_f1: mean(|r| r.f1),
        per_review,
    })
}

/// CSV rows `threshold,method,mean_jaccard` for several methods.
pub fn sweep_csv(results: &[(Method, Vec<SweepPoint>)]) -> String {
    let mut out = String::from("threshold,method,mean_jaccard\n");
    for (method, points) in results {
        for p in points {
            out.push_str(&format!("{},{},{}\n", p.threshold, method, p.mean_jaccard));
        }
    }
    out
}

/// Method x (precision, recall, F1) table.
pub fn format_sentence_table(reports: &[SentenceReport]) -> String {
    let headers = ["XAI METHOD", "Precision", "Recall", "F1-score"];
    let rows: Vec<[String; 4]> = reports
        .iter()
        .map(|r| {
            [
                r.method.map_or("-", |m| m.display_name()).to_string(),
                format!("{:.3}", r.mean_precision),
                format!("{:.3}", r.mean_recall),
                format!("{:.3}", r.mean_f1),
            ]
        })
        .collect();
    super::render_table(&headers, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOB: &str = "Hobgoblins is a very cheap and badly done Gremlins rip-off. \
        That's the best thing one can say about this stinkpile. Pretty much everyone \
        in the cast was chosen for their looks and not their acting ability. It was \
        very painful to watch. Avoid this one at all costs.";

    fn record(words: &[&str], label: Label) -> AnnotationRecord {
        AnnotationRecord {
            review_id: "hob".into(),
            text: HOB.into(),
            label,
            words: words.iter().map(|s| s.to_string()).collect(),
            sentences: vec![0, 1],
        }
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn segmentation_of_figure_review() {
        let s = segment_sentences(HOB);
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], "Hobgoblins is a very cheap and badly done Gremlins rip-off.");
        assert_eq!(s[4], "Avoid this one at all costs.");
        assert!(segment_sentences("   ").is_empty());
        assert_eq!(segment_sentences("No terminal punctuation"), vec!["No terminal punctuation"]);
        assert_eq!(segment_sentences("Wow... great!  Yes"), vec!["Wow...", "great!", "Yes"]);
    }

    #[test]
    fn single_annotator_union_is_identity() {
        let r = record(&["cheap", "painful"], Label::Negative);
        assert_eq!(union_annotations(std::slice::from_ref(&r)).unwrap(), r);
    }

    #[test]
    fn union_of_overlapping_lists() {
        let a = record(&["Cheap", "badly", "painful"], Label::Negative);
        let b = record(&["badly", "avoid"], Label::Negative);
        let u = union_annotations(&[a, b]).unwrap();
        assert_eq!(u.word_set(), set(&["cheap", "badly", "painful", "avoid"]));
        assert_eq!(u.words, vec!["cheap", "badly", "painful", "avoid"]);
    }

    #[test]
    fn disjoint_five_word_lists_make_ten() {
        let a = record(&["hobgoblins", "very", "cheap", "badly", "done"], Label::Negative);
        let b = record(&["stinkpile", "painful", "avoid", "costs", "looks"], Label::Negative);
        assert_eq!(union_annotations(&[a, b]).unwrap().word_set().len(), 10);
    }

    #[test]
    fn label_tie_is_ambiguous() {
        let a = record(&["cheap"], Label::Negative);
        let b = record(&["best"], Label::Positive);
        assert!(matches!(
            union_annotations(&[a, b]),
            Err(Error::AmbiguousLabel { review_id }) if review_id == "hob"
        ));
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a"]), &set(&["b"])), 0.0);
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])), 0.5);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn validation_catches_absent_word() {
        let r = record(&["cheap", "masterpiece"], Label::Negative);
        let err = r.validate(3).unwrap_err();
        assert!(err.to_string().contains("masterpiece"));
        assert!(err.to_string().contains("record 3"));
    }

    #[test]
    fn validation_limits() {
        let mut r = record(&["cheap"], Label::Negative);
        r.sentences = vec![5];
        assert!(r.validate(0).is_err());
        r.sentences = vec![0, 1, 2, 3, 4, 0];
        assert!(r.validate(0).is_err());
        let many: Vec<&str> = vec!["cheap"; 11];
        assert!(record(&many, Label::Negative).validate(0).is_err());
        assert!(record(&[], Label::Negative).validate(0).is_err());
        assert!(record(&["badly done", "AVOID"], Label::Negative).validate(0).is_ok());
    }

    #[test]
    fn parse_reports_record_index() {
        let json = r#"[{"review_id":"a","text":"Good film.","label":"positive","words":["good"],"sentences":[0]},
                       {"review_id":"b","text":"Bad.","label":"sideways","words":["bad"]}]"#;
        match parse_annotations(json) {
            Err(Error::Annotation { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precision_recall_f1_cases() {
        let predicted: BTreeSet<usize> = [0, 1, 2, 3, 4].into();
        let truth: BTreeSet<usize> = [3, 4, 7, 9].into();
        let (p, r, f1) = precision_recall_f1(&predicted, &truth);
        assert_eq!((p, r), (0.4, 0.5));
        assert!((f1 - 4.0 / 9.0).abs() < 1e-12);
        let none = precision_recall_f1(&[1].into(), &[2].into());
        assert_eq!(none, (0.0, 0.0, 0.0));
        let exact = precision_recall_f1(&[1, 2].into(), &[1, 2].into());
        assert_eq!(exact, (1.0, 1.0, 1.0));
    }

    #[test]
    fn top_sentences_ties_to_earlier() {
        assert_eq!(top_sentences(&[0.2, 0.5, 0.5, 0.1], 2), [1, 2].into());
        assert_eq!(top_sentences(&[0.3, 0.3, 0.3], 2), [0, 1].into());
        assert_eq!(top_sentences(&[0.3], 5), [0].into());
    }

    #[test]
    fn csv_rows() {
        let pts = vec![
            SweepPoint { threshold: 0.0, mean_jaccard: 0.25 },
            SweepPoint { threshold: 0.5, mean_jaccard: 0.125 },
        ];
        let csv = sweep_csv(&[(Method::Sidu, pts)]);
        assert_eq!(csv, "threshold,method,mean_jaccard\n0,sidu,0.25\n0.5,sidu,0.125\n");
    }
}
