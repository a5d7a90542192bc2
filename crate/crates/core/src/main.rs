//! Command-line front end: explain a review, evaluate faithfulness over a
//! corpus, compare heatmaps with human annotations, inspect bundles.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sidu_txt::baselines::LimeConfig;
use sidu_txt::eval::{self, CorpusDocument, SentenceAggregation};
use sidu_txt::render::{render_ansi, render_html, RenderOptions};
use sidu_txt::runtime::{load_bundle, ModelBundle};
use sidu_txt::sidu::{SiduConfig, ThresholdMode};
use sidu_txt::{Error, Explainer, Method, Result};

#[derive(Parser)]
#[command(name = "sidu-txt", version, about = "Feature-mask explanations for CNN text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain one document and write its heatmap.
    Explain(ExplainArgs),
    /// Insertion/deletion AUCs over a seeded sample of a corpus.
    EvalFaithfulness(FaithfulnessArgs),
    /// Jaccard threshold sweep and sentence metrics against annotations.
    EvalHuman(HumanArgs),
    /// Print the metadata of a model bundle.
    ModelInfo(ModelInfoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Html,
    Ansi,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    FilterMax,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Mean,
    Max,
}

/// Settings shared by every command that runs an explainer.
#[derive(Args)]
struct MethodArgs {
    /// Bundle written by the training exporter.
    #[arg(long)]
    model: PathBuf,
    /// key=value file supplying defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Binarisation threshold [default: 0.5]
    #[arg(long)]
    tau: Option<f64>,
    /// Similarity-difference bandwidth [default: 0.25]
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of masks fused [default: 10]
    #[arg(long)]
    top_k: Option<usize>,
    /// How activations are binarised [default: filter-max]
    #[arg(long, value_enum)]
    threshold_mode: Option<ThresholdArg>,
    /// Seed for LIME sampling and corpus sampling [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Perturbations drawn by LIME [default: 1000]
    #[arg(long)]
    lime_samples: Option<usize>,
    /// LIME kernel width [default: 0.75 * sqrt(sequence length)]
    #[arg(long)]
    kernel_width: Option<f64>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: MethodArgs,
    /// sidu, gradcam or lime [default: sidu]
    #[arg(long)]
    method: Option<String>,
    #[arg(long, conflicts_with = "text_file")]
    text: Option<String>,
    #[arg(long)]
    text_file: Option<PathBuf>,
    /// [default: json]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shade only the highest-scoring tokens (html and ansi).
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Args)]
struct FaithfulnessArgs {
    #[command(flatten)]
    common: MethodArgs,
    /// Directory of `*.txt` documents.
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated methods [default: sidu,gradcam,lime]
    #[arg(long)]
    methods: Option<String>,
    /// Documents drawn from the corpus [default: 100]
    #[arg(long)]
    sample: Option<usize>,
    /// Write per-document AUCs here as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct HumanArgs {
    #[command(flatten)]
    common: MethodArgs,
    /// JSON array of annotation records.
    #[arg(long)]
    annotations: PathBuf,
    /// Comma-separated methods [default: sidu,gradcam,lime]
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated thresholds [default: 0.0,0.1,...,0.9]
    #[arg(long)]
    thresholds: Option<String>,
    /// Sentences predicted per review [default: 5]
    #[arg(long)]
    top_sentences: Option<usize>,
    /// [default: mean]
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
    /// Keep only heatmap words also chosen by annotators before the Jaccard index.
    #[arg(long)]
    pre_intersect: bool,
    /// Write the sweep CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write sweep and sentence results here as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ModelInfoArgs {
    #[arg(long)]
    model: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "method",
    "methods",
    "tau",
    "sigma",
    "top_k",
    "threshold_mode",
    "seed",
    "lime_samples",
    "kernel_width",
    "format",
    "top_n",
    "sample",
    "thresholds",
    "top_sentences",
    "aggregation",
];

/// Values from a `key = value` file; `#` starts a comment.
#[derive(Default)]
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)?;
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path.display(), n + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    n + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("config key `{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                T::from_str(v, true)
                    .map_err(|_| Error::Config(format!("config key `{key}`: unknown value `{v}`")))
            })
            .transpose()
    }
}

/// Flag if given, else config-file value, else `default`.
fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T> {
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}

struct Resolved {
    model: ModelBundle,
    sidu: SiduConfig,
    lime: LimeConfig,
    seed: u64,
    file: ConfigFile,
}

impl MethodArgs {
    fn resolve(&self) -> Result<Resolved> {
        let file = ConfigFile::load(self.config.as_deref())?;
        let threshold = match self.threshold_mode {
            Some(t) => t,
            None => file.get_enum("threshold_mode")?.unwrap_or(ThresholdArg::FilterMax),
        };
        let sidu = SiduConfig {
            tau: pick(self.tau, &file, "tau", 0.5)?,
            sigma: pick(self.sigma, &file, "sigma", 0.25)?,
            top_k: pick(self.top_k, &file, "top_k", 10)?,
            threshold: match threshold {
                ThresholdArg::FilterMax => ThresholdMode::FilterMax,
                ThresholdArg::Raw => ThresholdMode::Raw,
            },
        };
        let seed = pick(self.seed, &file, "seed", 0)?;
        let lime = LimeConfig {
            num_samples: pick(self.lime_samples, &file, "lime_samples", 1000)?,
            kernel_width: match self.kernel_width {
                Some(w) => Some(w),
                None => file.get("kernel_width")?,
            },
            rng_seed: seed,
            ..LimeConfig::default()
        };
        let model = load_bundle(&self.model)?;
        Ok(Resolved {
            model,
            sidu,
            lime,
            seed,
            file,
        })
    }
}

impl Resolved {
    fn explainer(&self, method: Method) -> Result<Explainer> {
        let e = Explainer::from_method(method, self.sidu, self.lime);
        e.validate(&self.model)?;
        Ok(e)
    }

    fn methods(&self, flag: Option<&str>) -> Result<Vec<Method>> {
        let list = flag
            .or_else(|| self.file.raw("methods"))
            .unwrap_or("sidu,gradcam,lime");
        let methods: Vec<Method> = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if methods.is_empty() {
            return Err(Error::Config("no methods given".into()));
        }
        Ok(methods)
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, content)?),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn cmd_explain(args: &ExplainArgs) -> Result<()> {
    let r = args.common.resolve()?;
    let method: Method = match &args.method {
        Some(m) => m.parse()?,
        None => r.file.get("method")?.unwrap_or(Method::Sidu),
    };
    let text = match (&args.text, &args.text_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => fs::read_to_string(path)?,
        (None, None) => return Err(Error::Config("pass --text or --text-file".into())),
    };
    let format = match args.format {
        Some(f) => f,
        None => r.file.get_enum("format")?.unwrap_or(Format::Json),
    };
    let top_n = match args.top_n {
        Some(n) => Some(n),
        None => r.file.get("top_n")?,
    };

    let seq = r.model.tokenize(&text);
    if seq.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let heatmap = r.explainer(method)?.explain(&r.model, &seq)?;
    let options = RenderOptions {
        top_n,
        ..RenderOptions::for_heatmap(&heatmap)
    };
    let rendered = match format {
        Format::Json => to_json(&heatmap.to_json())?,
        Format::Html => render_html(&heatmap, &options),
        Format::Ansi => render_ansi(&heatmap, &options) + "\n",
    };
    write_output(args.out.as_deref(), &rendered)
}

fn read_corpus(dir: &Path, model: &ModelBundle) -> Result<Vec<CorpusDocument>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "corpus directory {} holds no .txt documents",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            Ok(CorpusDocument {
                name: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                seq: model.tokenize(&text),
            })
        })
        .collect()
}

fn cmd_eval_faithfulness(args: &FaithfulnessArgs) -> Result<()> {
    let r = args.common.resolve()?;
    let methods = r.methods(args.methods.as_deref())?;
    let sample = pick(args.sample, &r.file, "sample", 100)?;
    if sample == 0 {
        return Err(Error::Config("--sample must be positive".into()));
    }
    let explainers = methods
        .iter()
        .map(|&m| r.explainer(m))
        .collect::<Result<Vec<_>>>()?;
    let corpus = read_corpus(&args.corpus, &r.model)?;
    let reports = explainers
        .iter()
        .map(|e| eval::evaluate_corpus(&r.model, &corpus, e, sample, r.seed))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", eval::format_table(&reports));
    if let Some(path) = &args.json {
        fs::write(path, to_json(&reports)?)?;
    }
    Ok(())
}

fn parse_thresholds(list: &str) -> Result<Vec<f64>> {
    let thresholds = list
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|t| (0.0..=1.0).contains(t))
                .ok_or_else(|| Error::Config(format!("threshold `{s}` is not a number in [0, 1]")))
        })
        .collect::<Result<Vec<_>>>()?;
    if thresholds.is_empty() {
        return Err(Error::Config("no thresholds given".into()));
    }
    Ok(thresholds)
}

fn cmd_eval_human(args: &HumanArgs) -> Result<()> {
    let r = args.common.resolve()?;
    let methods = r.methods(args.methods.as_deref())?;
    let thresholds = match args.thresholds.as_deref().or_else(|| r.file.raw("thresholds")) {
        Some(list) => parse_thresholds(list)?,
        None => (0..10).map(|i| i as f64 / 10.0).collect(),
    };
    let top_s = pick(args.top_sentences, &r.file, "top_sentences", 5)?;
    let aggregation = match args.aggregation {
        Some(a) => a,
        None => r.file.get_enum("aggregation")?.unwrap_or(AggregationArg::Mean),
    };
    let aggregation = match aggregation {
        AggregationArg::Mean => SentenceAggregation::Mean,
        AggregationArg::Max => SentenceAggregation::Max,
    };
    let explainers = methods
        .iter()
        .map(|&m| r.explainer(m))
        .collect::<Result<Vec<_>>>()?;
    let records = eval::load_annotations(&args.annotations)?;
    let merged = eval::union_by_review(&records)?;

    let mut sweeps = Vec::new();
    let mut sentence_reports = Vec::new();
    for explainer in &explainers {
        let mut heatmaps = HashMap::new();
        for record in &merged {
            let seq = r.model.tokenize(&record.text);
            heatmaps.insert(record.review_id.clone(), explainer.explain(&r.model, &seq)?);
        }
        let points = eval::token_sweep(&heatmaps, &merged, &thresholds, args.pre_intersect)?;
        sweeps.push((explainer.method(), points));
        sentence_reports.push(eval::sentence_eval(&heatmaps, &merged, top_s, aggregation)?);
    }

    let csv = eval::human::sweep_csv(&sweeps);
    match &args.csv {
        Some(path) => fs::write(path, &csv)?,
        None => println!("{csv}"),
    }
    print!("{}", eval::human::format_sentence_table(&sentence_reports));
    if let Some(path) = &args.json {
        let sweep: BTreeMap<&str, _> = sweeps.iter().map(|(m, p)| (m.as_str(), p)).collect();
        let doc = json!({
            "reviews": merged.len(),
            "pre_intersect": args.pre_intersect,
            "sweep": sweep,
            "sentences": sentence_reports,
        });
        fs::write(path, to_json(&doc)?)?;
    }
    Ok(())
}

fn cmd_model_info(args: &ModelInfoArgs) -> Result<()> {
    let model = load_bundle(&args.model)?;
    let tensors: Vec<_> = ModelBundle::tensor_layout(model.vocabulary(), model.architecture())
        .into_iter()
        .map(|(name, shape)| json!({ "name": name, "shape": shape }))
        .collect();
    let info = json!({
        "architecture": model.architecture(),
        "vocabulary_size": model.vocabulary().len(),
        "max_sequence_length": model.seq_len(),
        "conv_positions": model.conv_positions(),
        "tensors": tensors,
    });
    print!("{}", to_json(&info)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Explain(a) => cmd_explain(a),
        Command::EvalFaithfulness(a) => cmd_eval_faithfulness(a),
        Command::EvalHuman(a) => cmd_eval_human(a),
        Command::ModelInfo(a) => cmd_model_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
