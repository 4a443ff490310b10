//! `findrs`: train, apply and benchmark monotone DNF rule learners.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use findrs_core::dataset::{split, SplitSpec};
use findrs_core::eval::{self, Algorithm, ExperimentConfig, Report, Trained};
use findrs_core::model::Model;
use findrs_core::{aggregate_bp, hypothesis_space_size, Encoding, Error, Label, Manifest};

#[derive(Parser)]
#[command(name = "findrs", version, about = "Monotone DNF rule learning on categorical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a whole dataset and write the model.
    Fit(FitArgs),
    /// Label the rows of a CSV file with a saved model.
    Predict(PredictArgs),
    /// Repeated train/test evaluation of one manifest, a directory, or `all`.
    Benchmark(BenchArgs),
    /// Accuracy of a weighted rule set as its lightest rules are dropped.
    PruneCurve(CurveArgs),
    /// Print the rules of a saved model.
    Inspect(InspectArgs),
    /// Number of syntactic rules available for a dataset.
    SpaceSize(SpaceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Findrs,
    Bo,
    Bp,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Findrs => Algorithm::Findrs,
            AlgoArg::Bo => Algorithm::Bo,
            AlgoArg::Bp => Algorithm::Bp,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EncodingArg {
    Av,
    Oh,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Encoding {
        match e {
            EncodingArg::Av => Encoding::Av,
            EncodingArg::Oh => Encoding::Oh,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Tsv,
}

/// Learner settings shared by the training subcommands.
#[derive(Args)]
struct LearnArgs {
    #[arg(long, value_enum, default_value = "findrs")]
    algo: AlgoArg,
    /// Negatives a rule may cover (default: the manifest's, else 0).
    #[arg(long)]
    tau: Option<usize>,
    /// Ensemble size T (default: the manifest's, else 100).
    #[arg(long)]
    ensemble_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the manifest's encoding.
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    /// Fraction of full training accuracy the pruned weighted set must keep.
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with a header naming the model's attributes; other columns are ignored.
    #[arg(long)]
    input: PathBuf,
    /// Print class names instead of `+`/`-`.
    #[arg(long)]
    class_names: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Manifest file, manifest directory, or `all` for `--manifest-dir`.
    #[arg(long)]
    manifest: String,
    #[arg(long, default_value = "manifests")]
    manifest_dir: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
    /// Number of train/test splits (default: the manifest's, else 10).
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run manifests marked slow.
    #[arg(long)]
    include_slow: bool,
    /// Record per-run wall-clock time (makes JSON output non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    learn: LearnArgs,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    encoding: Option<EncodingArg>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::InvalidArgument(_) => 1,
            Error::Invariant(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Error::Io(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::PruneCurve(a) => cmd_prune_curve(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::SpaceSize(a) => cmd_space_size(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn load_manifest(path: &Path, encoding: Option<EncodingArg>) -> Result<Manifest, Failure> {
    let m = Manifest::load(path)?;
    Ok(match encoding {
        Some(e) => m.with_encoding(e.into()),
        None => m,
    })
}

fn config(m: Manifest, learn: &LearnArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(m, learn.algo.into());
    if let Some(t) = learn.tau {
        cfg.tau = t;
    }
    if let Some(t) = learn.ensemble_size {
        cfg.ensemble_size = t;
    }
    cfg.seed = learn.seed;
    cfg.threshold = learn.threshold;
    cfg
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    let m = load_manifest(&a.manifest, a.learn.encoding)?;
    let cfg = config(m, &a.learn);
    if cfg.ensemble_size == 0 {
        return Err(usage("--ensemble-size must be at least 1"));
    }
    let data = cfg.manifest.dataset()?;
    let trained = eval::train(
        cfg.algorithm,
        &data,
        cfg.tau,
        cfg.ensemble_size,
        cfg.seed,
        cfg.threshold,
    )?;
    let mut summary = BTreeMap::new();
    summary.insert("dataset", serde_json::json!(cfg.manifest.name()));
    summary.insert("algorithm", serde_json::json!(cfg.algorithm.to_string()));
    summary.insert("rules_before_prune", serde_json::json!(trained.rules_before_prune()));
    summary.insert("rules_after_prune", serde_json::json!(trained.rules_after_prune()));
    summary.insert("contradictions", serde_json::json!(trained.contradictions()));
    if let Trained::Bp { weighted, .. } = &trained {
        summary.insert("distinct_rules", serde_json::json!(weighted.len()));
        if let Some(w) = trained.pruned() {
            summary.insert("selected_k", serde_json::json!(w.active()));
            summary.insert("gamma_k", serde_json::json!(w.gamma::<f64>()));
            log::info!("selected K = {}, gamma_K = {:.4}", w.active(), w.gamma::<f64>());
        }
    }
    let model = trained.into_model(&data, cfg.tau);
    model.save(&a.out)?;
    let text = match a.format {
        Format::Json => to_json(&summary)?,
        _ => summary
            .iter()
            .map(|(k, v)| format!("{k}: {}\n", v.as_str().map_or(v.to_string(), str::to_owned)))
            .collect(),
    };
    emit(None, &text)
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    let model = Model::load(&a.model)?;
    let table = read_input(&a.input)?;
    let positions: Vec<usize> = model
        .schema
        .attributes
        .iter()
        .map(|attr| {
            table.0.iter().position(|h| *h == attr.name).ok_or_else(|| Failure {
                code: 2,
                message: format!("input has no column `{}`", attr.name),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut labels = Vec::with_capacity(table.1.len());
    for row in &table.1 {
        let cells: Vec<&str> = positions.iter().map(|&i| row[i].as_str()).collect();
        labels.push(model.predict_cells(&cells)?);
    }
    let render = |l: &Label| {
        if a.class_names {
            match l {
                Label::Positive => model.positive_class.clone(),
                Label::Negative => format!("not-{}", model.positive_class),
            }
        } else {
            l.to_string()
        }
    };
    let text = match a.format {
        Format::Json => to_json(&labels.iter().map(render).collect::<Vec<_>>())?,
        Format::Tsv => std::iter::once("row\tprediction\n".to_owned())
            .chain(labels.iter().enumerate().map(|(i, l)| format!("{i}\t{}\n", render(l))))
            .collect(),
        Format::Text => labels.iter().map(|l| render(l) + "\n").collect(),
    };
    emit(a.out.as_deref(), &text)
}

/// Header and rows of a CSV file, all as text.
fn read_input(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), Failure> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_owned()).into());
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(fs::File::open(path)?);
    let header: Vec<String> = reader
        .headers()
        .map_err(Error::from)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(Error::from)?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i + 2,
                expected: header.len(),
                found: rec.len(),
            }
            .into());
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

/// Manifest files found for a benchmark target, grouped by dataset name.
fn benchmark_targets(a: &BenchArgs) -> Result<(bool, BTreeMap<String, Vec<Manifest>>), Failure> {
    let dir = if a.manifest == "all" {
        Some(a.manifest_dir.clone())
    } else if Path::new(&a.manifest).is_dir() {
        Some(PathBuf::from(&a.manifest))
    } else {
        None
    };
    let mut groups: BTreeMap<String, Vec<Manifest>> = BTreeMap::new();
    match dir {
        None => {
            let m = load_manifest(Path::new(&a.manifest), a.learn.encoding)?;
            groups.entry(m.name()).or_default().push(m);
            Ok((false, groups))
        }
        Some(dir) => {
            if !dir.is_dir() {
                return Err(Error::MissingFile(dir).into());
            }
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let m = Manifest::load(&p)?;
                if let Some(e) = a.learn.encoding {
                    if m.encoding != Encoding::from(e) {
                        continue;
                    }
                }
                groups.entry(m.name()).or_default().push(m);
            }
            if groups.is_empty() {
                return Err(Failure {
                    code: 2,
                    message: format!("no manifests in {}", dir.display()),
                });
            }
            Ok((true, groups))
        }
    }
}

fn cmd_benchmark(a: BenchArgs) -> CmdResult {
    let (batch, groups) = benchmark_targets(&a)?;
    let mut reports: Vec<Report> = Vec::new();
    let mut failed = Vec::new();
    for (name, manifests) in groups {
        if batch && manifests.iter().any(|m| m.slow) && !a.include_slow {
            eprintln!("skipping {name}: marked slow (use --include-slow)");
            continue;
        }
        if batch && manifests.iter().all(|m| m.optional && !m.data_available()) {
            eprintln!("skipping {name}: data file not present");
            continue;
        }
        let mut candidates = Vec::new();
        for m in manifests {
            let mut cfg = config(m, &a.learn);
            if let Some(r) = a.repeats {
                cfg.repeats = r;
            }
            cfg.timing = a.timing;
            match eval::run_experiment(&cfg) {
                Ok(r) => candidates.push(r),
                Err(e) => {
                    eprintln!("{name} ({}): {e}", cfg.encoding);
                    failed.push((name.clone(), Failure::from(e)));
                }
            }
        }
        if let Some(best) = eval::best_of(candidates) {
            reports.push(best);
        }
    }
    let text = match a.format {
        Format::Json => to_json(&reports)?,
        _ => eval::format_table(&reports),
    };
    emit(a.out.as_deref(), &text)?;
    match failed.into_iter().map(|(_, f)| f.code).max() {
        None => Ok(()),
        Some(code) => Err(Failure {
            code,
            message: "some datasets failed".into(),
        }),
    }
}

fn cmd_prune_curve(a: CurveArgs) -> CmdResult {
    let m = load_manifest(&a.manifest, a.learn.encoding)?;
    let cfg = config(m, &a.learn);
    let data = cfg.manifest.dataset()?;
    let (train, test) = split(&data, &SplitSpec::new(cfg.train_fraction, cfg.seed))?;
    let e = findrs_core::fit_ensemble(
        &train.positives(),
        &train.negatives(),
        cfg.ensemble_size,
        cfg.tau,
        findrs_core::ensemble::derive_seed(cfg.seed, 0),
    )?;
    let w = aggregate_bp(&e);
    let curve = eval::prune_curve(&w, &train, &test, cfg.threshold)?;
    let p = curve.selected();
    eprintln!(
        "|G| = {}, selected K = {} (train {:.4}, test {:.4}) at threshold {}",
        w.len(),
        p.k,
        p.train_acc,
        p.test_acc,
        curve.threshold
    );
    let text = match a.format {
        Format::Json => to_json(&curve)?,
        _ => curve.to_tsv(),
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_inspect(a: InspectArgs) -> CmdResult {
    let model = Model::load(&a.model)?;
    if a.format == Format::Json {
        return emit(None, &model.to_json()?);
    }
    let rules = model.display_rules();
    if rules.is_empty() {
        return emit(None, "0 rules (always predicts negative)\n");
    }
    let mut text = String::new();
    for (weight, rule) in rules {
        if let Some(w) = weight {
            text.push_str(&format!("[α={w}] "));
        }
        text.push_str(&model.schema.describe_rule(rule));
        text.push('\n');
    }
    emit(None, &text)
}

fn cmd_space_size(a: SpaceArgs) -> CmdResult {
    let m = load_manifest(&a.manifest, a.encoding)?;
    let av = m.with_encoding(Encoding::Av).dataset()?;
    let domains = av.schema.domain_sizes();
    let size = hypothesis_space_size(&domains, m.encoding)?;
    let names: Vec<&str> = av.schema.attributes.iter().map(|x| x.name.as_str()).collect();
    let text = match a.format {
        Format::Json => to_json(&serde_json::json!({
            "encoding": m.encoding,
            "attributes": names,
            "domain_sizes": domains,
            "terms": size.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "total": size.total.to_string(),
        }))?,
        _ => {
            let mut s = String::new();
            for ((n, k), t) in names.iter().zip(&domains).zip(&size.terms) {
                s.push_str(&format!("{n}\t{k}\t{t}\n"));
            }
            s.push_str(&format!("total ({})\t{}\n", m.encoding, size.total));
            s
        }
    };
    emit(None, &text)
}
