//! Command-line front end for the purification codec.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use purejpeg::defense::{
    self, bim, distortion, fgsm, AnalysisScope, AttackConfig, AttackKind, ModelJson, PurifyConfig,
    PurifyMode, ToyClassifier,
};
use purejpeg::freq::{analyze_image, dm_table, BandStatsJson, DmParams};
use purejpeg::image_io::{read_pnm, write_pnm, PixelImage};
use purejpeg::jpeg;
use purejpeg::quant::{default_luma_table, scale_by_qf, QuantTable};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "purejpeg",
    version,
    about = "DCT-domain image purification codec with a two-band quantization table synthesizer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Two-band table from per-band deviation ranking.
    Dm,
    /// One quantization step for all bands (requires --qs).
    Uniform,
    /// Standard luminance table scaled by a factor (requires --qf).
    Jpeg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scope {
    PerImage,
    Corpus,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackName {
    Fgsm,
    Bim,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-band coefficient statistics of an image as JSON
    Analyze {
        input: PathBuf,
        /// Also write the JSON document to a file
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Synthesize the two-band quantization table for an image
    Qtable {
        input: PathBuf,
        /// Accuracy-sensitive band size
        #[arg(long, default_value_t = 15)]
        n: usize,
        /// Coarse step for the malicious-defense band
        #[arg(long, default_value_t = 40)]
        s1: u8,
        /// Fine step for the accuracy-sensitive band
        #[arg(long, default_value_t = 1)]
        s2: u8,
        /// Write the 64-entry zig-zag table JSON to a file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compress-decompress an image through the purification pipeline
    Purify {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Dm)]
        mode: Mode,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s1: Option<u8>,
        #[arg(long)]
        s2: Option<u8>,
        /// Uniform quantization step (mode=uniform)
        #[arg(long)]
        qs: Option<u32>,
        /// Quantization factor (mode=jpeg)
        #[arg(long)]
        qf: Option<u32>,
        /// Also write a real JPEG carrying the synthesized table
        #[arg(long)]
        emit_jpeg: Option<PathBuf>,
    },
    /// Encode a PNM image as baseline JFIF
    Encode {
        input: PathBuf,
        output: PathBuf,
        /// Scale the standard table by this quantization factor
        #[arg(long)]
        qf: Option<u32>,
        /// Use a 64-entry zig-zag table from a JSON file instead
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Decode a baseline JFIF file to PNM
    Decode { input: PathBuf, output: PathBuf },
    /// Craft a gradient-sign adversarial example against a model
    Attack {
        input: PathBuf,
        output: PathBuf,
        /// True class label of the input
        #[arg(long)]
        label: usize,
        /// Perturbation budget in 0..255 pixel units
        #[arg(long)]
        eps: f64,
        /// Use the iterative attack instead of single-step
        #[arg(long)]
        bim: bool,
        /// Per-iteration step of the iterative attack
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Iteration cap of the iterative attack
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Classifier JSON file
        #[arg(long)]
        model: PathBuf,
    },
    /// Run the attack/defense harness over a corpus directory
    Evaluate {
        /// Directory with labels.txt plus one PNM image per line
        #[arg(long)]
        corpus: PathBuf,
        /// Classifier JSON file
        #[arg(long)]
        model: PathBuf,
        /// Directory of externally-crafted adversarial PNM images paired
        /// with the corpus by sorted filename (replaces the built-in
        /// attack)
        #[arg(long)]
        adv: Option<PathBuf>,
        /// Perturbation budget in 0..255 pixel units
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Dm)]
        mode: Mode,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s1: Option<u8>,
        #[arg(long)]
        s2: Option<u8>,
        #[arg(long)]
        qs: Option<u32>,
        #[arg(long)]
        qf: Option<u32>,
        #[arg(long, value_enum, default_value_t = AttackName::Fgsm)]
        attack: AttackName,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        /// Weight of legitimate accuracy in the combined score
        #[arg(long)]
        pl: Option<f64>,
        /// Weight of adversarial accuracy in the combined score
        #[arg(long)]
        pm: Option<f64>,
        #[arg(long, value_enum, default_value_t = Scope::PerImage)]
        scope: Scope,
        /// Sample attacked seeds with this RNG seed instead of taking the
        /// first correctly-classified images
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report JSON to a file
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print L-infinity, L2 and L0 distortion between two images
    Metrics { a: PathBuf, b: PathBuf },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_image(path: &Path) -> Result<PixelImage, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    read_pnm(&bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn save_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ToyClassifier, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let json: ModelJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(ToyClassifier::from_model_json(&json)?)
}

fn load_table(path: &Path) -> Result<QuantTable, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let entries: Vec<u8> = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let zz: [u8; 64] = entries.try_into().map_err(|_| {
        CliError::Runtime(format!("{}: table must have 64 entries", path.display()))
    })?;
    Ok(QuantTable::from_zigzag(&zz)?)
}

/// Resolves the mode flags shared by `purify` and `evaluate` into a
/// purification config, rejecting flags that do not belong to the mode.
#[allow(clippy::too_many_arguments)]
fn resolve_mode(
    mode: Mode,
    n: Option<usize>,
    s1: Option<u8>,
    s2: Option<u8>,
    qs: Option<u32>,
    qf: Option<u32>,
    scope: Scope,
) -> Result<PurifyConfig, CliError> {
    let reject = |cond: bool, what: &str, mode: &str| {
        if cond {
            Err(CliError::usage(format!(
                "{what} is not a flag of mode {mode}"
            )))
        } else {
            Ok(())
        }
    };
    let mode = match mode {
        Mode::Dm => {
            reject(qs.is_some(), "--qs", "dm")?;
            reject(qf.is_some(), "--qf", "dm")?;
            let defaults = DmParams::default();
            PurifyMode::Dm(DmParams {
                n: n.unwrap_or(defaults.n),
                s1: s1.unwrap_or(defaults.s1),
                s2: s2.unwrap_or(defaults.s2),
            })
        }
        Mode::Uniform => {
            reject(n.is_some(), "--n", "uniform")?;
            reject(s1.is_some(), "--s1", "uniform")?;
            reject(s2.is_some(), "--s2", "uniform")?;
            reject(qf.is_some(), "--qf", "uniform")?;
            let step = qs.ok_or_else(|| CliError::usage("mode uniform requires --qs"))?;
            PurifyMode::Uniform { step }
        }
        Mode::Jpeg => {
            reject(n.is_some(), "--n", "jpeg")?;
            reject(s1.is_some(), "--s1", "jpeg")?;
            reject(s2.is_some(), "--s2", "jpeg")?;
            reject(qs.is_some(), "--qs", "jpeg")?;
            let qf = qf.ok_or_else(|| CliError::usage("mode jpeg requires --qf"))?;
            PurifyMode::DefaultJpeg { qf }
        }
    };
    Ok(PurifyConfig {
        mode,
        scope: match scope {
            Scope::PerImage => AnalysisScope::PerImage,
            Scope::Corpus => AnalysisScope::Corpus,
        },
        corpus_stats: None,
    })
}

fn read_corpus(dir: &Path) -> Result<Vec<(PixelImage, usize)>, CliError> {
    let labels_path = dir.join("labels.txt");
    let labels_text = std::fs::read_to_string(&labels_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", labels_path.display())))?;
    let labels: Vec<usize> = labels_text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| CliError::Runtime(format!("bad label line {l:?} in labels.txt")))
        })
        .collect::<Result<_, _>>()?;

    let mut images: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    images.sort();
    if images.len() != labels.len() {
        return Err(CliError::Runtime(format!(
            "corpus has {} images but labels.txt has {} lines",
            images.len(),
            labels.len()
        )));
    }
    images
        .iter()
        .zip(labels)
        .map(|(path, label)| Ok((load_image(path)?, label)))
        .collect()
}

/// Adversarial images paired with a corpus: PNM files in sorted filename
/// order, one per corpus entry.
fn read_adv_images(dir: &Path, expected: usize) -> Result<Vec<PixelImage>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    files.sort();
    if files.len() != expected {
        return Err(CliError::Runtime(format!(
            "adversarial directory has {} images, corpus has {expected}",
            files.len()
        )));
    }
    files.iter().map(|p| load_image(p)).collect()
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze { input, json } => {
            let img = load_image(&input)?;
            let stats = analyze_image(&img);
            let doc = serde_json::to_string_pretty(&BandStatsJson::from(&stats))
                .expect("stats serialize");
            if let Some(path) = json {
                save_file(&path, doc.as_bytes())?;
            }
            println!("{doc}");
        }
        Command::Qtable {
            input,
            n,
            s1,
            s2,
            out,
        } => {
            let img = load_image(&input)?;
            let params = DmParams { n, s1, s2 };
            let table = dm_table(&analyze_image(&img), &params)?;
            let doc = serde_json::to_string(&table.to_zigzag().to_vec()).expect("table serialize");
            if let Some(path) = out {
                save_file(&path, doc.as_bytes())?;
            }
            println!("{doc}");
        }
        Command::Purify {
            input,
            output,
            mode,
            n,
            s1,
            s2,
            qs,
            qf,
            emit_jpeg,
        } => {
            let img = load_image(&input)?;
            let cfg = resolve_mode(mode, n, s1, s2, qs, qf, Scope::PerImage)?;
            let (purified, table) = defense::purify(&img, &cfg)?;
            save_file(&output, &write_pnm(&purified))?;
            if let Some(path) = emit_jpeg {
                let bytes = jpeg::encode(&img, &table)?;
                save_file(&path, &bytes)?;
            }
        }
        Command::Encode {
            input,
            output,
            qf,
            table,
        } => {
            let img = load_image(&input)?;
            let table = match (qf, table) {
                (Some(_), Some(_)) => {
                    return Err(CliError::usage("--qf and --table are mutually exclusive"))
                }
                (None, Some(path)) => load_table(&path)?,
                (qf, None) => scale_by_qf(&default_luma_table(), qf.unwrap_or(90))?,
            };
            let bytes = jpeg::encode(&img, &table)?;
            save_file(&output, &bytes)?;
        }
        Command::Decode { input, output } => {
            let bytes = std::fs::read(&input)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", input.display())))?;
            let (img, _) = jpeg::decode(&bytes)?;
            save_file(&output, &write_pnm(&img))?;
        }
        Command::Attack {
            input,
            output,
            label,
            eps,
            bim: use_bim,
            alpha,
            iters,
            model,
        } => {
            let img = load_image(&input)?;
            let clf = load_model(&model)?;
            let adversarial = if use_bim {
                bim(&img, label, &clf, eps, alpha, iters)?
            } else {
                fgsm(&img, label, &clf, eps)?
            };
            save_file(&output, &write_pnm(&adversarial))?;
        }
        Command::Evaluate {
            corpus,
            model,
            adv,
            eps,
            mode,
            n,
            s1,
            s2,
            qs,
            qf,
            attack,
            alpha,
            iters,
            pl,
            pm,
            scope,
            seed,
            report,
        } => {
            let weights = match (pl, pm) {
                (None, None) => None,
                (Some(pl), Some(pm)) => Some((pl, pm)),
                _ => return Err(CliError::usage("--pl and --pm must be given together")),
            };
            let corpus_items = read_corpus(&corpus)?;
            let clf = load_model(&model)?;
            let cfg = resolve_mode(mode, n, s1, s2, qs, qf, scope)?;
            let result = if let Some(adv_dir) = &adv {
                if eps.is_some() || alpha.is_some() || iters.is_some() || seed.is_some() {
                    return Err(CliError::usage(
                        "--adv supplies ready-made adversarial images; \
                         --eps/--alpha/--iters/--seed do not apply",
                    ));
                }
                let adversarial = read_adv_images(adv_dir, corpus_items.len())?;
                defense::evaluate_paired(&corpus_items, &adversarial, &clf, &cfg, weights, 100)?
            } else {
                let eps = eps.ok_or_else(|| CliError::usage("--eps is required without --adv"))?;
                let attack_cfg = AttackConfig {
                    kind: match attack {
                        AttackName::Fgsm => AttackKind::Fgsm,
                        AttackName::Bim => AttackKind::Bim {
                            alpha: alpha.unwrap_or(1.0),
                            iters: iters.unwrap_or(10),
                        },
                    },
                    epsilon: eps,
                    max_seeds: 100,
                    seed,
                };
                defense::evaluate(&corpus_items, &clf, &attack_cfg, &cfg, weights)?
            };
            #[derive(serde::Serialize)]
            struct ReportConfig {
                mode: &'static str,
                n: Option<usize>,
                s1: Option<u8>,
                s2: Option<u8>,
                qs: Option<u32>,
                qf: Option<u32>,
                attack: &'static str,
                epsilon: Option<f64>,
                scope: &'static str,
                p_l: Option<f64>,
                p_m: Option<f64>,
                seed: Option<u64>,
            }
            let config = ReportConfig {
                mode: match mode {
                    Mode::Dm => "dm",
                    Mode::Uniform => "uniform",
                    Mode::Jpeg => "default_jpeg",
                },
                n,
                s1,
                s2,
                qs,
                qf,
                attack: if adv.is_some() {
                    "external"
                } else {
                    match attack {
                        AttackName::Fgsm => "fgsm",
                        AttackName::Bim => "bim",
                    }
                },
                epsilon: eps,
                scope: match scope {
                    Scope::PerImage => "per_image",
                    Scope::Corpus => "corpus",
                },
                p_l: pl,
                p_m: pm,
                seed,
            };
            let doc = serde_json::to_string_pretty(&result.document(config)).expect("report");
            if let Some(path) = report {
                save_file(&path, doc.as_bytes())?;
            }
            println!("{doc}");
        }
        Command::Metrics { a, b } => {
            let (ia, ib) = (load_image(&a)?, load_image(&b)?);
            let m = distortion(&ia, &ib)?;
            let mut line = String::new();
            write!(line, "linf={} l2={} l0={}", m.l_inf, m.l2, m.l0).expect("format");
            println!("{line}");
        }
    }
    Ok(())
}
