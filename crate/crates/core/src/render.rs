//! HTML and terminal renderings of heatmaps.
//!
//! Scores are bucketed into ten deciles, decile `d` holding scores in
//! `(d/10, (d+1)/10]`. Positive scores use an orange ramp, negative scores
//! of signed heatmaps a blue one. Zero scores are never shaded.

use std::fmt::Write as _;

use crate::heatmap::ExplanationHeatmap;

/// Background colours for positive scores, lightest decile first.
pub const ORANGE_HEX: [&str; 10] = [
    "#fff5eb", "#fee6ce", "#fdd0a2", "#fdb97d", "#fda25a", "#fd8d3c", "#f57a29", "#e6550d",
    "#c44103", "#a63603",
];

/// Background colours for negative scores, lightest decile first.
pub const BLUE_HEX: [&str; 10] = [
    "#f7fbff", "#deebf7", "#c6dbef", "#aed1e7", "#9ecae1", "#6baed6", "#4292c6", "#2171b5",
    "#08519c", "#08306b",
];

/// xterm 256-colour indices approximating [`ORANGE_HEX`].
pub const ORANGE_ANSI: [u8; 10] = [230, 229, 228, 223, 222, 221, 216, 215, 214, 208];

/// xterm 256-colour indices approximating [`BLUE_HEX`].
pub const BLUE_ANSI: [u8; 10] = [195, 189, 153, 117, 111, 75, 69, 33, 27, 21];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    /// Shade only this many tokens, the highest-magnitude ones.
    pub top_n: Option<usize>,
    /// Shade negative scores in blue instead of leaving them plain.
    pub signed: bool,
}

impl RenderOptions {
    pub fn for_heatmap(heatmap: &ExplanationHeatmap) -> Self {
        Self {
            top_n: None,
            signed: heatmap.signed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shade {
    Positive(usize),
    Negative(usize),
}

impl Shade {
    fn hex(self) -> &'static str {
        match self {
            Shade::Positive(d) => ORANGE_HEX[d],
            Shade::Negative(d) => BLUE_HEX[d],
        }
    }

    fn ansi(self) -> u8 {
        match self {
            Shade::Positive(d) => ORANGE_ANSI[d],
            Shade::Negative(d) => BLUE_ANSI[d],
        }
    }

    /// Light backgrounds keep dark text; the three deepest get white text.
    fn dark(self) -> bool {
        matches!(self, Shade::Positive(d) | Shade::Negative(d) if d >= 7)
    }
}

/// Decile of a positive score; scores above 1 land in the top decile.
pub fn decile(score: f64) -> Option<usize> {
    if !(score > 0.0) {
        return None;
    }
    Some((0..10).find(|&d| score <= (d + 1) as f64 / 10.0).unwrap_or(9))
}

/// Shade of every token, honouring `top_n`.
pub fn shades(heatmap: &ExplanationHeatmap, options: &RenderOptions) -> Vec<Option<Shade>> {
    let scores = heatmap.token_scores();
    let mut out: Vec<Option<Shade>> = scores
        .iter()
        .map(|&s| match decile(s) {
            Some(d) => Some(Shade::Positive(d)),
            None if options.signed => decile(-s).map(Shade::Negative),
            None => None,
        })
        .collect();
    if let Some(n) = options.top_n {
        let mut order: Vec<usize> = (0..scores.len()).filter(|&i| out[i].is_some()).collect();
        order.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));
        for &i in order.iter().skip(n) {
            out[i] = None;
        }
    }
    out
}

fn escape(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '"' => s.push_str("&quot;"),
            '\'' => s.push_str("&#39;"),
            c => s.push(c),
        }
    }
    s
}

fn span(out: &mut String, text: &str, shade: Option<Shade>) {
    match shade {
        Some(sh) => {
            let fg = if sh.dark() { "#ffffff" } else { "#1a1a1a" };
            let _ = write!(
                out,
                r#"<span class="tok" style="background:{};color:{fg}">{}</span>"#,
                sh.hex(),
                escape(text)
            );
        }
        None => {
            let _ = write!(out, r#"<span class="tok">{}</span>"#, escape(text));
        }
    }
}

/// A standalone HTML page with the shaded tokens and a colour legend.
pub fn render_html(heatmap: &ExplanationHeatmap, options: &RenderOptions) -> String {
    let title = format!(
        "{} heatmap (class {}, p = {:.4})",
        heatmap.method.display_name(),
        heatmap.predicted_class,
        heatmap.class_probs[heatmap.predicted_class]
    );
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape(&title));
    out.push_str(
        "<style>\n\
         body{font-family:Georgia,serif;max-width:52em;margin:2em auto;line-height:1.9}\n\
         .tok{padding:0.1em 0.15em;border-radius:0.2em}\n\
         .legend{display:flex;gap:0.2em;font:0.75em sans-serif;margin:0.4em 0}\n\
         .legend span{padding:0.2em 0.5em}\n\
         </style>\n</head>\n<body>\n",
    );
    let _ = writeln!(out, "<h1>{}</h1>", escape(&title));
    out.push_str("<div class=\"tokens\">");
    for (i, (token, shade)) in heatmap.tokens.iter().zip(shades(heatmap, options)).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        span(&mut out, token, shade);
    }
    out.push_str("</div>\n");

    out.push_str("<h2>Legend</h2>\n");
    let mut ramp = |label: &str, shade: fn(usize) -> Shade, lo_sign: &str| {
        let _ = write!(out, "<div class=\"legend\"><b>{label}</b>");
        for d in 0..10 {
            let sh = shade(d);
            let fg = if sh.dark() { "#ffffff" } else { "#1a1a1a" };
            let _ = write!(
                out,
                "<span style=\"background:{};color:{fg}\">{lo_sign}{:.1}&ndash;{lo_sign}{:.1}</span>",
                sh.hex(),
                d as f64 / 10.0,
                (d + 1) as f64 / 10.0
            );
        }
        out.push_str("</div>\n");
    };
    ramp("positive", Shade::Positive, "");
    if options.signed {
        ramp("negative", Shade::Negative, "-");
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Tokens separated by spaces, shaded with 256-colour background escapes.
pub fn render_ansi(heatmap: &ExplanationHeatmap, options: &RenderOptions) -> String {
    let mut out = String::new();
    for (i, (token, shade)) in heatmap.tokens.iter().zip(shades(heatmap, options)).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        match shade {
            Some(sh) => {
                let fg = if sh.dark() { 231 } else { 16 };
                let _ = write!(out, "\x1b[38;5;{fg};48;5;{}m{token}\x1b[0m", sh.ansi());
            }
            None => out.push_str(token),
        }
    }
    out
}
