//! `baseshap`: compute game-theoretic attributions for expression or MLP
//! games and learn baseline vectors, from the command line.

use baseshap::attribution::{
    context_saliency, interaction_table, order_spectrum, shapley_exact, shapley_order,
    shapley_sampled, DEFAULT_CONTEXT_CAP,
};
use baseshap::game::{Coalition, GameManifest, GameSpec};
use baseshap::learn::{accuracy, learn, LearnConfig};
use baseshap::mlp::{Dataset, MlpModel};
use baseshap::synth::{generate_corpus, read_jsonl, verify, SynthFunction, VerifyConfig};
use baseshap::Error;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "baseshap", version, about = "Shapley attributions, interactions, and baseline-value learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when omitted. A run manifest is written next to
    /// the file (or to stderr for stdout output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate v(S) for one coalition of a game.
    Eval {
        /// Game manifest (JSON).
        #[arg(long)]
        game: PathBuf,
        /// Coalition as a decimal bit pattern; bit i-1 is variable xi.
        #[arg(long)]
        coalition: u32,
        #[command(flatten)]
        out: OutArg,
    },
    /// Shapley values, exact or permutation-sampled (JSON report).
    Shapley {
        #[arg(long)]
        game: PathBuf,
        /// Exact enumeration over all coalitions.
        #[arg(long, conflicts_with = "perms")]
        exact: bool,
        /// Number of sampled permutations.
        #[arg(long)]
        perms: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// All interactions I(S) up to a maximum order (CSV).
    Interactions {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        max_order: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Multi-order components phi_i^(m) for one variable (CSV).
    Orders {
        #[arg(long)]
        game: PathBuf,
        /// Variable index, 1-based.
        #[arg(long)]
        var: usize,
        /// Contexts sampled per order when exact enumeration is too large.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Interaction-strength ratio per order (CSV).
    Spectrum {
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Context-saliency distribution p(j|i) for one variable (CSV).
    Saliency {
        #[arg(long)]
        game: PathBuf,
        /// Variable index, 1-based.
        #[arg(long)]
        var: usize,
        /// Fraction of contexts ranked most salient.
        #[arg(long, default_value_t = 0.05)]
        top: f64,
        /// Contexts sampled when exact enumeration is too large.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Learn a baseline vector from a config file (JSON out).
    Learn {
        /// Learn config (JSON): game path plus optimizer settings.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Synthetic-corpus commands.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// MLP commands.
    #[command(subcommand)]
    Mlp(MlpCmd),
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Generate a corpus of annotated functions (JSON lines).
    Gen {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Learn baselines for every corpus function and score them (CSV).
    Verify {
        /// Corpus file (JSON lines) or `tsang` for the bundled suite.
        #[arg(long)]
        corpus: String,
        /// Verify config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parallel learning jobs; does not change results.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum MlpCmd {
    /// Train a softmax classifier on a CSV dataset and save weights.
    Train {
        /// CSV with a header row; the last column is an integer label.
        #[arg(long)]
        data: PathBuf,
        /// Hidden-layer widths, comma-separated (e.g. 16,16).
        #[arg(long, default_value = "16,16")]
        arch: String,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weights file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
}

/// Echo of the resolved run, written alongside every result.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    seed: Option<u64>,
    output: Option<String>,
    format: &'static str,
    version: &'static str,
    config: serde_json::Value,
}

impl RunManifest {
    fn new(command: &str, inputs: &[&Path], seed: Option<u64>, format: &'static str) -> Self {
        RunManifest {
            command: command.into(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed,
            output: None,
            format,
            version: env!("CARGO_PKG_VERSION"),
            config: serde_json::Value::Null,
        }
    }

    fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }
}

fn emit(out: &OutArg, content: String, mut manifest: RunManifest) -> Result<(), Error> {
    match &out.out {
        Some(path) => {
            manifest.output = Some(path.display().to_string());
            std::fs::write(path, content)?;
            let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
            std::fs::write(mpath, serde_json::to_string_pretty(&manifest)?)?;
        }
        None => {
            print!("{content}");
            eprintln!("{}", serde_json::to_string(&manifest)?);
        }
    }
    Ok(())
}

fn load_game(path: &Path) -> Result<GameSpec, Error> {
    let manifest = GameManifest::load(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(manifest.build(base)?.with_memo())
}

/// Learn config file: the game to optimize over plus LearnConfig fields
/// and optional ground truth for scoring.
#[derive(Deserialize, Serialize)]
struct LearnFile {
    game: PathBuf,
    #[serde(flatten)]
    learn: LearnConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<Vec<Option<f64>>>,
}

#[derive(Serialize)]
struct LearnOutput {
    b: Vec<f64>,
    loss_trace: Vec<f64>,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Eval { game, coalition, out } => {
            let spec = load_game(&game)?;
            let s = Coalition::new(coalition, spec.x().len())?;
            let value = spec.evaluate(s)?;
            let body = serde_json::json!({
                "bits": s.bits(),
                "members": s.members().map(|i| i + 1).collect::<Vec<_>>(),
                "value": value,
            });
            let manifest = RunManifest::new("eval", &[&game], None, "json")
                .with_config(serde_json::json!({ "coalition": coalition }));
            emit(&out, format!("{}\n", serde_json::to_string_pretty(&body)?), manifest)
        }
        Cmd::Shapley { game, exact, perms, seed, out } => {
            let spec = load_game(&game)?;
            let report = match (exact, perms) {
                (_, None) => shapley_exact(&spec)?,
                (false, Some(k)) => shapley_sampled(&spec, k, seed)?,
                (true, Some(_)) => unreachable!("clap conflict"),
            };
            let manifest = RunManifest::new("shapley", &[&game], Some(seed), "json")
                .with_config(serde_json::json!({ "exact": perms.is_none(), "perms": perms }));
            emit(&out, format!("{}\n", serde_json::to_string_pretty(&report)?), manifest)
        }
        Cmd::Interactions { game, max_order, out } => {
            let spec = load_game(&game)?;
            let table = interaction_table(&spec, max_order)?;
            let mut csv = String::from("coalition_bits,order,value\n");
            for &(s, v) in table.entries() {
                csv.push_str(&format!("{},{},{}\n", s.bits(), s.cardinality(), v));
            }
            let manifest = RunManifest::new("interactions", &[&game], None, "csv")
                .with_config(serde_json::json!({ "max_order": max_order }));
            emit(&out, csv, manifest)
        }
        Cmd::Orders { game, var, samples, seed, out } => {
            let spec = load_game(&game)?;
            let n = spec.x().len();
            let i = to_index(var, n)?;
            let mut csv = String::from("order,value\n");
            for m in 0..n {
                let v = shapley_order(&spec, i, m, DEFAULT_CONTEXT_CAP, Some((samples, seed)))?;
                csv.push_str(&format!("{},{}\n", m, v));
            }
            let manifest = RunManifest::new("orders", &[&game], Some(seed), "csv")
                .with_config(serde_json::json!({ "var": var, "samples": samples }));
            emit(&out, csv, manifest)
        }
        Cmd::Spectrum { game, out } => {
            let spec = load_game(&game)?;
            let spectrum = order_spectrum(&spec)?;
            let mut csv = String::from("order,ratio\n");
            for (m, r) in spectrum.r.iter().enumerate().skip(1) {
                csv.push_str(&format!("{},{}\n", m, r));
            }
            let manifest = RunManifest::new("spectrum", &[&game], None, "csv")
                .with_config(serde_json::json!({ "degenerate": spectrum.degenerate }));
            emit(&out, csv, manifest)
        }
        Cmd::Saliency { game, var, top, samples, seed, out } => {
            let spec = load_game(&game)?;
            let n = spec.x().len();
            let i = to_index(var, n)?;
            let p = context_saliency(&spec, i, top, DEFAULT_CONTEXT_CAP, Some((samples, seed)))?;
            let mut csv = String::from("variable,p\n");
            for (j, pj) in p.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", j + 1, pj));
            }
            let manifest = RunManifest::new("saliency", &[&game], Some(seed), "csv")
                .with_config(serde_json::json!({ "var": var, "top": top, "samples": samples }));
            emit(&out, csv, manifest)
        }
        Cmd::Learn { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let file: LearnFile = serde_json::from_str(&text)?;
            let game_path = if file.game.is_absolute() {
                file.game.clone()
            } else {
                config.parent().unwrap_or_else(|| Path::new(".")).join(&file.game)
            };
            let template = load_game(&game_path)?;
            let state = learn(&file.learn, &template)?;
            let score = match &file.truth {
                Some(truth) => Some(accuracy(&state.b, truth)?),
                None => None,
            };
            let body = LearnOutput {
                b: state.b.values().to_vec(),
                loss_trace: state.loss_trace,
                converged: state.converged,
                accuracy: score,
            };
            let manifest = RunManifest::new("learn", &[&config, &game_path], Some(file.learn.seed), "json")
                .with_config(serde_json::to_value(&file)?);
            emit(&out, format!("{}\n", serde_json::to_string_pretty(&body)?), manifest)
        }
        Cmd::Synth(SynthCmd::Gen { count, seed, out }) => {
            let corpus = generate_corpus(count, seed)?;
            let mut body = String::new();
            for f in &corpus {
                body.push_str(&serde_json::to_string(f)?);
                body.push('\n');
            }
            let manifest = RunManifest::new("synth gen", &[], Some(seed), "jsonl")
                .with_config(serde_json::json!({ "count": count }));
            emit(&out, body, manifest)
        }
        Cmd::Synth(SynthCmd::Verify { corpus, config, jobs, seed, out }) => {
            let functions: Vec<SynthFunction> = if corpus == "tsang" {
                baseshap::synth::tsang_suite()
            } else {
                read_jsonl(Path::new(&corpus))?
            };
            let mut cfg: VerifyConfig = match &config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => VerifyConfig::default(),
            };
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let rows = verify(&functions, &cfg)?;
            let mut csv = String::from("function,loss,init,accuracy,final_loss,steps\n");
            for r in &rows {
                let loss = match r.loss {
                    baseshap::LossKind::Shapley => "shapley",
                    baseshap::LossKind::Marginal => "marginal",
                };
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.function, loss, r.init, r.accuracy, r.final_loss, r.steps
                ));
            }
            let manifest = RunManifest::new("synth verify", &[Path::new(&corpus)], Some(cfg.seed), "csv")
                .with_config(serde_json::to_value(&cfg)?);
            emit(&out, csv, manifest)
        }
        Cmd::Mlp(MlpCmd::Train { data, arch, epochs, lr, seed, out }) => {
            let dataset = Dataset::load_csv(&data)?;
            let widths = parse_arch(&arch)?;
            let (model, trace) = MlpModel::train(&dataset, &widths, epochs, lr, seed)?;
            model.save(&out)?;
            let manifest = RunManifest::new("mlp train", &[&data], Some(seed), "json")
                .with_config(serde_json::json!({
                    "arch": widths,
                    "epochs": epochs,
                    "lr": lr,
                    "final_loss": trace.last(),
                }));
            let mpath = PathBuf::from(format!("{}.manifest.json", out.display()));
            std::fs::write(mpath, serde_json::to_string_pretty(&manifest)?)?;
            Ok(())
        }
    }
}

/// 1-based CLI variable index to internal 0-based.
fn to_index(var: usize, n: usize) -> Result<usize, Error> {
    if var == 0 || var > n {
        return Err(Error::Argument(format!(
            "variable index {var} out of range 1..={n}"
        )));
    }
    Ok(var - 1)
}

fn parse_arch(arch: &str) -> Result<Vec<usize>, Error> {
    arch.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad hidden width {p:?}")))
        })
        .collect()
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain { .. }
        | Error::Evaluation { .. }
        | Error::Training { .. }
        | Error::Capability(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
