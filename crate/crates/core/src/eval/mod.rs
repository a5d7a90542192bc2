//! Evaluation of heatmaps: faithfulness curves and agreement with human
//! annotations.

pub mod faithfulness;
pub mod human;

pub use faithfulness::{
    auc, deletion_curve, evaluate_corpus, format_table, insertion_curve, mean_sd, ranking,
    sample_indices, CorpusDocument, CorpusReport, Curve, DocumentAuc,
};
pub use human::{
    jaccard, load_annotations, parse_annotations, precision_recall_f1, segment_sentences,
    sentence_eval, token_sweep, union_annotations, union_by_review, xai_word_set,
    AnnotationRecord, Label, SentenceAggregation, SentenceReport, SweepPoint,
};

/// Left-aligned plain-text table with a rule under the header.
pub(crate) fn render_table<const N: usize>(headers: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths: [usize; N] = headers.map(|h| h.chars().count());
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&line(widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_columns_align() {
        let t = render_table(&["A", "Long"], &[["xyz".into(), "1".into()]]);
        assert_eq!(t, "A    Long\n---  ----\nxyz  1\n");
    }
}
