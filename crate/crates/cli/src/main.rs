use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nfa_inspect::evalkit::{
    calibrate_h0, evaluate_category, find_categories, EvalReport, NoiseSpec,
};
use nfa_inspect::fusion::mask_to_png_bytes;
use nfa_inspect::imagio::{multilight_pca, save_gray8, MultiLightSet, Tensor};
use nfa_inspect::{load_image, Detector, DetectorConfig, Error, Extractor, Strategy};

const CONFIG_ENV: &str = "NFA_INSPECT_CONFIG";

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DETECTED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nfa-inspect",
    version,
    about = "A-contrario texture anomaly detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect anomalies in one image or one multi-light set.
    Detect(DetectArgs),
    /// Pixel-level ROC AUC over a dataset root or a single category.
    Eval(EvalArgs),
    /// Count false alarms on synthetic noise images.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_parser = ["pca", "gabor", "external"])]
    extractor: Option<String>,
    #[arg(long, value_parser = ["pixel", "block", "region"])]
    nfa: Option<String>,
    #[arg(long)]
    scales: Option<usize>,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    block_stride: Option<usize>,
    #[arg(long)]
    tail_p: Option<f64>,
    #[arg(long)]
    stilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    threshold_as: Option<f64>,
    #[arg(long)]
    keep_last: Option<usize>,
    #[arg(long, value_parser = ["bilinear", "nearest"])]
    upsampling: Option<String>,
    #[arg(long)]
    exclude_border: Option<bool>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the resolved configuration as `key = value` lines and exit.
    #[arg(long)]
    dump_config: bool,
}

impl ConfigArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("extractor", self.extractor.clone());
        push("nfa", self.nfa.clone());
        push("scales", self.scales.map(|v| v.to_string()));
        push("patch-size", self.patch_size.map(|v| v.to_string()));
        push("components", self.components.map(|v| v.to_string()));
        push("block-size", self.block_size.map(|v| v.to_string()));
        push("block-stride", self.block_stride.map(|v| v.to_string()));
        push("tail-p", self.tail_p.map(|v| format!("{v:?}")));
        push("stilde", self.stilde.map(|v| format!("{v:?}")));
        push("threshold-as", self.threshold_as.map(|v| format!("{v:?}")));
        push("keep-last", self.keep_last.map(|v| v.to_string()));
        push("upsampling", self.upsampling.clone());
        push("exclude-border", self.exclude_border.map(|v| v.to_string()));
        out
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Input image (PNG).
    #[arg(required_unless_present = "multilight", conflicts_with = "multilight")]
    input: Option<PathBuf>,
    /// Five views of the same scene under different lights.
    #[arg(long, num_args = 5, value_names = ["A", "B", "C", "D", "E"])]
    multilight: Option<Vec<PathBuf>>,
    /// Feature tensor (NFAT) for the external extractor; repeat for several layers.
    #[arg(long)]
    features_path: Vec<PathBuf>,
    #[arg(long)]
    out_map: Option<PathBuf>,
    #[arg(long)]
    out_png: Option<PathBuf>,
    #[arg(long)]
    out_mask: Option<PathBuf>,
    #[arg(long)]
    out_regions: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset root holding category directories, or one category directory.
    root: PathBuf,
    /// Directory of precomputed feature tensors for the external extractor.
    #[arg(long)]
    features_path: Option<PathBuf>,
    /// Where to write the CSV report (stdout when absent).
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, value_parser = ["gaussian", "uniform"], default_value = "gaussian")]
    noise: String,
    /// Where to write the CSV report (stdout when absent).
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Calibrate(a) => run_calibrate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("nfa-inspect: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored.
fn parse_config_text(text: &str, cfg: &mut DetectorConfig) -> Result<(), Failure> {
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !cfg.set(key, value)? {
            return Err(Failure::usage(format!(
                "config line {}: unknown key {key:?}",
                n + 1
            )));
        }
    }
    Ok(())
}

fn resolve_config(args: &ConfigArgs) -> Result<DetectorConfig, Failure> {
    let mut cfg = DetectorConfig::default();
    if let Some(path) = std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()) {
        let text = std::fs::read_to_string(&path).map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("cannot read {}: {e}", Path::new(&path).display()),
        })?;
        parse_config_text(&text, &mut cfg)?;
    }
    for (key, value) in args.pairs() {
        cfg.set(key, &value)?;
    }
    cfg.validate()?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(cfg)
}

fn config_text(cfg: &DetectorConfig) -> String {
    let mut out = String::new();
    for (k, v) in cfg.to_kv() {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn run_detect(args: DetectArgs) -> Outcome {
    let cfg = resolve_config(&args.config)?;
    if args.config.dump_config {
        print!("{}", config_text(&cfg));
        return Ok(0);
    }
    if cfg.extractor == Extractor::External && args.features_path.is_empty() {
        return Err(Failure::usage(
            "--extractor external requires --features-path",
        ));
    }
    if cfg.extractor != Extractor::External && !args.features_path.is_empty() {
        return Err(Failure::usage(
            "--features-path is only used with --extractor external",
        ));
    }
    if args.out_regions.is_some() && cfg.nfa != Strategy::Region {
        return Err(Failure::usage("--out-regions requires --nfa region"));
    }

    let image = match (&args.input, &args.multilight) {
        (_, Some(views)) => {
            let stacks = views
                .iter()
                .map(load_image)
                .collect::<Result<Vec<_>, _>>()?;
            multilight_pca(&MultiLightSet::from_stacks(stacks)?, cfg.keep_last)?
        }
        (Some(path), None) => load_image(path)?,
        (None, None) => return Err(Failure::usage("an input image or --multilight is required")),
    };
    let tensors = args
        .features_path
        .iter()
        .map(Tensor::read)
        .collect::<Result<Vec<_>, _>>()?;

    let detection = Detector::new(cfg.clone())?.detect(&image, &tensors)?;
    let anomaly = &detection.anomaly;
    let (w, h) = anomaly.scores.dims();
    let mask = detection.mask(cfg.threshold_as);

    if let Some(p) = &args.out_map {
        anomaly.to_tensor()?.write(p)?;
    }
    if let Some(p) = &args.out_png {
        anomaly.save_visualization(p)?;
    }
    if let Some(p) = &args.out_mask {
        save_gray8(p, w, h, mask_to_png_bytes(&mask))?;
    }
    if let Some(p) = &args.out_regions {
        let mut text = String::new();
        for ch in &detection.channels {
            for (k, set) in ch.regions.iter().enumerate() {
                let _ = writeln!(
                    text,
                    "# scale {} channel {} component {k}",
                    ch.scale_index, ch.channel_index
                );
                text.push_str(&set.to_text());
            }
        }
        write_file(p, text.as_bytes())?;
    }

    let flagged = mask.iter().filter(|&&m| m).count();
    let (_, max_as) = anomaly.scores.min_max();
    println!(
        "{flagged} of {} pixels above AS {} (max AS {max_as:.3})",
        w * h,
        cfg.threshold_as
    );
    Ok(if flagged > 0 { EXIT_DETECTED } else { 0 })
}

fn run_eval(args: EvalArgs) -> Outcome {
    let cfg = resolve_config(&args.config)?;
    if args.config.dump_config {
        print!("{}", config_text(&cfg));
        return Ok(0);
    }
    if cfg.extractor == Extractor::External && args.features_path.is_none() {
        return Err(Failure::usage(
            "--extractor external requires --features-path",
        ));
    }
    let categories = find_categories(&args.root)?;
    let mut report = EvalReport::default();
    for dir in &categories {
        let features = args.features_path.as_ref().map(|f| {
            if categories.len() == 1 && dir == &args.root {
                f.clone()
            } else {
                f.join(dir.file_name().unwrap_or_default())
            }
        });
        let (row, issues) = evaluate_category(dir, &cfg, features.as_deref())?;
        report.rows.extend(row);
        report.issues.extend(issues);
    }
    eprint!("{}", report.to_text());
    if report.rows.is_empty() {
        return Err(Failure::usage(format!(
            "no evaluable category under {}",
            args.root.display()
        )));
    }
    let csv = report.to_csv();
    match &args.out_csv {
        Some(p) => write_file(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_calibrate(args: CalibrateArgs) -> Outcome {
    let cfg = resolve_config(&args.config)?;
    if args.config.dump_config {
        print!("{}", config_text(&cfg));
        return Ok(0);
    }
    if cfg.extractor == Extractor::External {
        return Err(Failure::usage("calibration needs an image-based extractor"));
    }
    let noise = match args.noise.as_str() {
        "uniform" => NoiseSpec::Uniform,
        _ => NoiseSpec::default(),
    };
    let report = calibrate_h0(
        &noise,
        &cfg,
        args.width,
        args.height,
        args.trials,
        args.config.seed,
    )?;
    let csv = report.to_csv();
    match &args.out_csv {
        Some(p) => write_file(p, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(0)
}
