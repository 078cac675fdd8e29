//! Command implementations behind the `clvq` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use lvq_committee::committee::CommitteeParams;
use lvq_committee::config::{enumerate_configs, EnsembleConfig};
use lvq_committee::dataset::{
    load_image_dir, load_preprocessed, load_vector_dir, preprocess, synth_clusters, write_vector, SynthSpec,
    VECTOR_EXTENSION,
};
use lvq_committee::experiment::{evaluate, run_stability, train_system, ExperimentRow, StabilityReport, CSV_HEADER};
use lvq_committee::fec::DEFAULT_THRESHOLD_FACTOR;
use lvq_committee::{decode_model, encode_model, Error, LabeledDataset, SplitDataset};

#[derive(Debug, Parser)]
#[command(
    name = "clvq",
    version,
    about = "Committees of LVQ classifiers with a front-end classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every distinct legal bootstrap configuration for M classes.
    EnumerateConfigs {
        #[arg(long, value_parser = parse_class_count)]
        classes: usize,
    },
    /// Convert a tree of PGM/PPM images into a tree of vector files.
    Preprocess {
        input: PathBuf,
        output: PathBuf,
        /// Target size, `<width>x<height>`.
        #[arg(long, default_value = "50x50", value_parser = parse_size)]
        size: (usize, usize),
    },
    /// Train a committee and its front-end classifier, and save the model.
    Train(TrainArgs),
    /// Compute the report columns of a saved model.
    Evaluate(EvaluateArgs),
    /// Retrain repeatedly and compare the spread of both combiners.
    Stability(StabilityArgs),
    /// Train and evaluate every legal configuration for the dataset's class count.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Vector tree, image tree, or `synth:M=..,n=..,dim=..,sep=..,noise=..,seed=..`.
    #[arg(long)]
    pub data: String,
    /// Image target size when `--data` is an image tree.
    #[arg(long, default_value = "50x50", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Expected class count; checked against the data.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Seed of the per-class train/test shuffle; 0 keeps file order.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ConfigArgs {
    /// Classes per bootstrap (m).
    #[arg(long, short = 'm')]
    pub bootstrap_size: usize,
    /// Maximum classes shared by two bootstraps (V).
    #[arg(long)]
    pub overlap: usize,
    /// Classifiers per bootstrap (L).
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold_factor: f64,
    /// Model file to write.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Evaluate on the training split instead of the test split.
    #[arg(long)]
    pub on_train: bool,
    /// CSV file to append the row to.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Master seed; trial seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold_factor: f64,
    /// CSV file for the per-trial accuracies.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_FACTOR)]
    pub threshold_factor: f64,
    /// CSV file to append the rows to.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_class_count(s: &str) -> std::result::Result<usize, String> {
    let m: usize = s.parse().map_err(|_| format!("{s:?} is not a class count"))?;
    if m < 3 {
        return Err(format!(
            "bootstrap size must satisfy 1 < m < M, so M must be at least 3 (got {m})"
        ));
    }
    Ok(m)
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected <width>x<height>, got {s:?}"))?;
    let dim = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("invalid size component {t:?}"))
    };
    Ok((dim(w)?, dim(h)?))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn is_vector_tree(root: &Path) -> Result<bool> {
    for class in fs::read_dir(root).with_context(|| format!("reading {}", root.display()))? {
        let class = class?.path();
        if !class.is_dir() {
            continue;
        }
        for f in fs::read_dir(&class)? {
            let f = f?.path();
            if f.extension().is_some_and(|e| e.eq_ignore_ascii_case(VECTOR_EXTENSION)) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Loads a synthetic spec, a vector tree, or an image tree.
pub fn load_dataset(source: &str, size: (usize, usize)) -> Result<LabeledDataset> {
    if source.starts_with("synth:") {
        let spec: SynthSpec = source.parse()?;
        return Ok(synth_clusters(&spec)?.dataset);
    }
    let root = Path::new(source);
    ensure!(root.is_dir(), "{source} is neither a directory nor a synth: spec");
    let data = if is_vector_tree(root)? {
        load_vector_dir(root)?
    } else {
        load_preprocessed(root, size.0, size.1)?
    };
    Ok(data)
}

fn load_split(args: &DataArgs) -> Result<SplitDataset> {
    let data = load_dataset(&args.data, args.size)?;
    if let Some(m) = args.classes {
        ensure!(
            m == data.class_count(),
            "--classes {m} but {} has {} classes",
            args.data,
            data.class_count()
        );
    }
    Ok(data.split(args.split_seed)?)
}

fn derive_config(classes: usize, c: &ConfigArgs) -> Result<EnsembleConfig> {
    Ok(EnsembleConfig::derive(classes, c.bootstrap_size, c.overlap, c.layers)?)
}

/// Appends rows to a CSV report, writing the header first for a new file.
fn append_report(path: &Path, rows: &[ExperimentRow]) -> Result<()> {
    let mut text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    if text.trim().is_empty() {
        text = format!("{CSV_HEADER}\n");
    } else {
        ensure!(
            text.lines().next() == Some(CSV_HEADER),
            "{} is not a report with the expected header",
            path.display()
        );
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    for row in rows {
        row.check_invariants()?;
        writeln!(text, "{}", row.csv_line())?;
    }
    write_atomic(path, text.as_bytes())
}

pub fn cmd_enumerate_configs(classes: usize, out: &mut dyn Write) -> Result<()> {
    let shapes = enumerate_configs(classes)?;
    writeln!(out, "#\tM\tm\tV\ts\tN\tK\tR")?;
    let symbolic = |k: usize| if k == 1 { "L".to_string() } else { format!("{k}L") };
    for (i, s) in shapes.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            classes,
            s.bootstrap_size,
            s.overlap,
            s.effective_shift,
            s.bootstrap_count,
            symbolic(s.bootstrap_count),
            symbolic(s.classifiers_per_class_per_layer())
        )?;
    }
    Ok(())
}

pub fn cmd_preprocess(input: &Path, output: &Path, size: (usize, usize), out: &mut dyn Write) -> Result<()> {
    let classes = load_image_dir(input)?;
    let mut written = 0;
    for class in &classes {
        let dir = output.join(&class.name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (path, img) in &class.images {
            let v = preprocess(img, size.0, size.1).with_context(|| format!("preprocessing {}", path.display()))?;
            let stem = path.file_stem().context("image without a file name")?;
            let mut buf = Vec::new();
            write_vector(&mut buf, &v)?;
            write_atomic(&dir.join(stem).with_extension(VECTOR_EXTENSION), &buf)?;
            written += 1;
        }
    }
    writeln!(
        out,
        "wrote {written} vectors of dimension {} in {} classes to {}",
        size.0 * size.1,
        classes.len(),
        output.display()
    )?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let split = load_split(&args.data)?;
    let config = derive_config(split.train.class_count(), &args.config)?;
    writeln!(out, "{config}")?;
    let sys = train_system(
        &config,
        &split.train,
        args.seed,
        &CommitteeParams::default(),
        args.threshold_factor,
    )?;
    write_atomic(&args.output, &encode_model(&sys))?;
    let row = evaluate(&sys, &split.train)?;
    writeln!(out, "training split:")?;
    writeln!(out, "C02 member bootstrap accuracy  {:8.3} %", row.c02)?;
    writeln!(out, "C03 member whole-set accuracy  {:8.3} %", row.c03)?;
    writeln!(out, "C04 weights before pruning     {:8}", row.c04)?;
    writeln!(out, "C05 weights after pruning      {:8}", row.c05)?;
    writeln!(out, "model written to {}", args.output.display())?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = fs::read(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let sys = decode_model(&bytes).with_context(|| format!("loading {}", args.model.display()))?;
    let split = load_split(&args.data)?;
    let data = if args.on_train { &split.train } else { &split.test };
    let row = evaluate(&sys, data)?;
    row.check_invariants()?;
    writeln!(out, "{CSV_HEADER}")?;
    writeln!(out, "{}", row.csv_line())?;
    if let Some(path) = &args.report {
        append_report(path, &[row])?;
    }
    Ok(())
}

pub fn cmd_stability(args: &StabilityArgs, out: &mut dyn Write) -> Result<StabilityReport> {
    let split = load_split(&args.data)?;
    let config = derive_config(split.train.class_count(), &args.config)?;
    writeln!(out, "{config}")?;
    let report = run_stability(
        &split,
        &config,
        args.trials,
        args.seed,
        &CommitteeParams::default(),
        args.threshold_factor,
    )?;
    writeln!(out, "{report}")?;
    if let Some(path) = &args.report {
        write_atomic(path, report.csv().as_bytes())?;
    }
    Ok(report)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<Vec<ExperimentRow>> {
    let split = load_split(&args.data)?;
    let classes = split.train.class_count();
    writeln!(out, "{CSV_HEADER}")?;
    let mut rows = Vec::new();
    for shape in enumerate_configs(classes)? {
        let config = EnsembleConfig::derive(classes, shape.bootstrap_size, shape.overlap, args.layers)?;
        match train_system(
            &config,
            &split.train,
            args.seed,
            &CommitteeParams::default(),
            args.threshold_factor,
        ) {
            Ok(sys) => {
                let row = evaluate(&sys, &split.test)?;
                writeln!(out, "{}", row.csv_line())?;
                rows.push(row);
            }
            Err(e @ Error::SlotExhausted { .. }) => eprintln!("skipping {config}: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &args.report {
        append_report(path, &rows)?;
    }
    Ok(rows)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::EnumerateConfigs { classes } => cmd_enumerate_configs(*classes, out),
        Command::Preprocess { input, output, size } => cmd_preprocess(input, output, *size, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Stability(a) => cmd_stability(a, out).map(drop),
        Command::Sweep(a) => {
            if cmd_sweep(a, out)?.is_empty() {
                bail!("no configuration could be trained");
            }
            Ok(())
        }
    }
}
