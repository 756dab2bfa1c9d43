use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use varorder::corpus::{load_corpus, sample_instances, write_corpus};
use varorder::dqn::{train_with, validation_seed, LogRow, Precision, TrainConfig, TrainOutcome, LOG_HEADER};
use varorder::eval::{evaluate, paired_t_test, EvalReport, EvalSettings, PolicySpec};
use varorder::format::load_instance;
use varorder::nn::{load_checkpoint, save_checkpoint, NetParams, Scalar};
use varorder::rbgen::{preset, Preset};
use varorder::search::{solve, Outcome, SearchLimits, Transition};

#[derive(Parser)]
#[command(name = "varorder", version, about = "CSP search with learned variable ordering")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Search node limit per solve.
    #[arg(long, global = true, default_value_t = SearchLimits::DEFAULT_NODE_CUTOFF)]
    cutoff_nodes: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a corpus of model RB instances and its manifest.
    Generate {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Write one line per search-tree edge to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train the ordering network.
    Train {
        /// key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` overrides applied after the file.
        #[arg(long = "set")]
        overrides: Vec<String>,
        /// Validation corpus; drawn from the training class when absent.
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Evaluate policies on a corpus.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma separated policy names.
        #[arg(long, value_delimiter = ',', default_value = "mindom,domddeg,impact")]
        policies: Vec<PolicySpec>,
        #[arg(long)]
        reference: Option<PolicySpec>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-sided paired t-test that the first sample has the smaller mean.
    Ttest {
        /// Per-instance CSV from `evaluate`.
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        policy: PolicySpec,
        #[arg(long)]
        reference: PolicySpec,
    },
}

#[derive(Args)]
struct PolicyArgs {
    /// mindom, domddeg, impact, random, drl or drl-k.
    #[arg(long, default_value = "domddeg")]
    policy: String,
    /// Depth bound of the drl-k hybrid.
    #[arg(long, default_value_t = 3)]
    k_depth: usize,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl PolicyArgs {
    fn spec(&self) -> Result<PolicySpec, String> {
        match self.policy.as_str() {
            "drl-k" => Ok(PolicySpec::DrlK(self.k_depth)),
            other => other.parse().map_err(|e| format!("{e}")),
        }
    }
}

type CliResult<T> = Result<T, String>;

fn err<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{context}: {e}")
}

fn hex_digest(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Records the exact invocation and a hash of the effective configuration.
fn write_run_manifest(dir: &Path, config_text: &str) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(err("creating run directory"))?;
    let args: Vec<String> = std::env::args().collect();
    let text = format!(
        "invocation: {}\nversion: {}\nconfig_sha256: {}\n",
        args.join(" "),
        env!("CARGO_PKG_VERSION"),
        hex_digest(config_text.as_bytes())
    );
    fs::write(dir.join("run.txt"), text).map_err(err("writing run.txt"))
}

fn load_params(path: Option<&Path>) -> CliResult<Option<NetParams<f64>>> {
    path.map(|p| load_checkpoint::<f64>(p).map_err(err("loading checkpoint"))).transpose()
}

fn cmd_generate(cli: &Cli, preset_: Preset, n: usize, count: usize, out: &Path) -> CliResult<ExitCode> {
    let class = preset(&preset_.to_string(), n).map_err(err("preset"))?;
    let seed = cli.seed.unwrap_or(0);
    let entries = write_corpus(out, class, count, seed).map_err(err("generate"))?;
    write_run_manifest(out, &format!("preset={preset_} n={n} count={count} seed={seed}"))?;
    println!("wrote {} instances to {}", entries.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(cli: &Cli, path: &Path, args: &PolicyArgs, trace: Option<&Path>) -> CliResult<ExitCode> {
    let net = load_instance(path).map_err(err(&path.display().to_string()))?;
    let spec = args.spec()?;
    let params = load_params(args.checkpoint.as_deref())?;
    let mut policy = spec.build(params.as_ref(), cli.seed.unwrap_or(0)).map_err(err("policy"))?;
    let mut lines = Vec::new();
    let mut sink = |t: &Transition| lines.push(t.trace_line());
    let sink: Option<&mut dyn FnMut(&Transition)> = if trace.is_some() { Some(&mut sink) } else { None };
    let r = solve(&net, &mut policy, SearchLimits::nodes(cli.cutoff_nodes), sink);
    if let Some(path) = trace {
        let mut text = lines.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(err("writing trace"))?;
    }
    let s = &r.stats;
    println!(
        "{{\"instance\": \"{}\", \"policy\": \"{}\", \"outcome\": \"{}\", \"nodes\": {}, \"failures\": {}, \"total_seconds\": {}, \"inference_seconds\": {}}}",
        net.id(),
        spec.name(),
        s.outcome.as_str(),
        s.nodes,
        s.failures,
        s.total_seconds,
        s.inference_seconds
    );
    Ok(ExitCode::from(match s.outcome {
        Outcome::Sat => 0,
        Outcome::Unsat => 1,
        Outcome::Cutoff => 2,
    }))
}

fn write_training<T: Scalar>(dir: &Path, out: &TrainOutcome<T>) -> CliResult<()> {
    save_checkpoint(&out.best, dir.join("best.ckpt")).map_err(err("writing checkpoint"))?;
    save_checkpoint(&out.last, dir.join("last.ckpt")).map_err(err("writing checkpoint"))?;
    let summary = format!(
        "random_baseline_mean_nodes = {}\nbest_episode = {}\nbest_val_mean_nodes = {}\nbest_val_mean_failures = {}\nglobal_steps = {}\ngradient_steps = {}\n",
        out.baseline.mean_nodes,
        out.best_episode,
        out.best_validation.mean_nodes,
        out.best_validation.mean_failures,
        out.global_steps,
        out.gradient_steps
    );
    fs::write(dir.join("summary.txt"), &summary).map_err(err("writing summary"))?;
    print!("{summary}");
    Ok(())
}

fn cmd_train(cli: &Cli, config: Option<&Path>, overrides: &[String], validation: Option<&Path>, dir: &Path) -> CliResult<ExitCode> {
    let mut text = match config {
        Some(p) => fs::read_to_string(p).map_err(err("reading config"))?,
        None => String::new(),
    };
    for o in overrides {
        text.push('\n');
        text.push_str(o);
    }
    if let Some(seed) = cli.seed {
        text.push_str(&format!("\nseed = {seed}"));
    }
    let cfg = TrainConfig::parse(&text).map_err(err("config"))?;
    let effective = cfg.to_text();
    write_run_manifest(dir, &effective)?;
    fs::write(dir.join("config.txt"), &effective).map_err(err("writing config"))?;
    let val = match validation {
        Some(p) => load_corpus(p).map_err(err("validation corpus"))?.into_iter().map(|(_, n)| n).collect(),
        None => sample_instances(cfg.instance_class(), cfg.val_size, validation_seed(&cfg)).map_err(err("validation set"))?,
    };
    let log_path = dir.join("train_log.csv");
    let mut log = fs::File::create(&log_path).map_err(err("creating log"))?;
    writeln!(log, "{LOG_HEADER}").map_err(err("writing log"))?;
    let mut progress = |row: &LogRow| {
        let _ = writeln!(log, "{}", row.csv());
        if let Some((nodes, fails)) = row.validation {
            eprintln!("episode {} step {} eps {:.3} val nodes {nodes:.2} failures {fails:.2}", row.episode, row.global_step, row.epsilon);
        }
    };
    match cfg.precision {
        Precision::F64 => {
            let out = train_with::<f64>(&cfg, &val, &mut progress).map_err(err("training"))?;
            write_training(dir, &out)?;
        }
        Precision::F32 => {
            let out = train_with::<f32>(&cfg, &val, &mut progress).map_err(err("training"))?;
            write_training(dir, &out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(
    cli: &Cli,
    corpus: &Path,
    policies: &[PolicySpec],
    reference: Option<PolicySpec>,
    checkpoint: Option<&Path>,
    out: &Path,
) -> CliResult<ExitCode> {
    let instances: Vec<_> = load_corpus(corpus).map_err(err("corpus"))?.into_iter().map(|(_, n)| n).collect();
    let params = load_params(checkpoint)?;
    let settings = EvalSettings { node_cutoff: cli.cutoff_nodes, workers: cli.workers, seed: cli.seed.unwrap_or(0) };
    let report = evaluate(&instances, policies, params.as_ref(), settings, reference).map_err(err("evaluate"))?;
    let names: Vec<String> = policies.iter().map(|p| p.name()).collect();
    write_run_manifest(
        out,
        &format!(
            "corpus={} policies={} reference={} cutoff={} seed={}",
            corpus.display(),
            names.join(","),
            reference.map(|r| r.name()).unwrap_or_default(),
            settings.node_cutoff,
            settings.seed
        ),
    )?;
    fs::write(out.join("results.csv"), report.to_csv()).map_err(err("writing results"))?;
    let table = report.to_table();
    fs::write(out.join("summary.txt"), &table).map_err(err("writing summary"))?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_ttest(csv: &Path, policy: PolicySpec, reference: PolicySpec) -> CliResult<ExitCode> {
    let text = fs::read_to_string(csv).map_err(err("reading csv"))?;
    let rows = EvalReport::parse_csv(&text).map_err(err("csv"))?;
    let report = EvalReport::from_rows(rows, Some(&reference.name())).map_err(err("report"))?;
    let c = report
        .comparisons
        .iter()
        .find(|c| c.policy == policy.name())
        .ok_or_else(|| format!("policy {} not in {}", policy.name(), csv.display()))?;
    let (a, b): (Vec<f64>, Vec<f64>) = report
        .rows
        .iter()
        .filter(|r| r.policy == reference.name() && r.solved())
        .filter_map(|r| {
            report
                .rows
                .iter()
                .find(|o| o.policy == c.policy && o.instance == r.instance && o.solved())
                .map(|o| (o.nodes as f64, r.nodes as f64))
        })
        .unzip();
    let p = paired_t_test(&a, &b).map_err(err("t-test"))?;
    println!("pairs {} reduction {:?} p_value {p:e}", a.len(), c.node_reduction);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    match &cli.command {
        Command::Generate { preset, n, count, out } => cmd_generate(cli, *preset, *n, *count, out),
        Command::Solve { instance, policy, trace } => cmd_solve(cli, instance, policy, trace.as_deref()),
        Command::Train { config, overrides, validation, run_dir } => {
            cmd_train(cli, config.as_deref(), overrides, validation.as_deref(), run_dir)
        }
        Command::Evaluate { corpus, policies, reference, checkpoint, out } => {
            cmd_evaluate(cli, corpus, policies, *reference, checkpoint.as_deref(), out)
        }
        Command::Ttest { csv, policy, reference } => cmd_ttest(csv, *policy, *reference),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
