use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gnl::config::ModelConfig;
use gnl::harness::{
    all_windows, evaluate, export_attention, grad_check_suite, load_csv, make_windows, train, Dataset, Split,
};
use gnl::model::{Checkpoint, GnlModel, WindowSample};
use gnl::optim::convex::{verify_theorem_bounds, ConvexLassoInstance, ProxMethod};

#[derive(Parser)]
#[command(name = "gnl", version, about = "Graph neural lasso for dynamic network regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint plus per-epoch history
    Train {
        #[arg(long)]
        config: PathBuf,
        /// wide CSV: timestamp column, then one column per node
        #[arg(long)]
        data: PathBuf,
        /// checkpoint path
        #[arg(long)]
        out: PathBuf,
        /// optional edge list restricting candidate links
        #[arg(long)]
        edges: Option<PathBuf>,
        /// history CSV, defaults to `<out>.history.csv`
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Forecast the snapshots following the last window of the data
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// forecast CSV, stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score recursive forecasts on a chronological split
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value_t = SplitPart::Test)]
        split: SplitPart,
        /// metrics report, stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the influence matrices of one window as CSV files
    ExportAttention {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// output directory
        #[arg(long)]
        out: PathBuf,
        /// first row of the window, defaults to the last full window
        #[arg(long)]
        start: Option<usize>,
    },
    /// Check the proximal convergence bounds on a convex lasso instance
    VerifyBounds {
        #[arg(long, default_value = "apg")]
        method: String,
        #[arg(long, default_value_t = 200)]
        k: usize,
        /// instance dimension
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// step size as a fraction of 1/L
        #[arg(long, default_value_t = 0.9)]
        step_fraction: f64,
        /// per-iteration report, stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of the model gradients
    GradCheck {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitPart {
    Train,
    Val,
    Test,
    All,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            data,
            out,
            edges,
            history,
        } => run_train(&config, &data, &out, edges.as_deref(), history),
        Command::Predict {
            model,
            data,
            horizon,
            out,
        } => run_predict(&model, &data, horizon, out.as_deref()),
        Command::Eval {
            model,
            data,
            horizon,
            split,
            out,
        } => run_eval(&model, &data, horizon, split, out.as_deref()),
        Command::ExportAttention { model, data, out, start } => run_export(&model, &data, &out, start),
        Command::VerifyBounds {
            method,
            k,
            n,
            seed,
            step_fraction,
            out,
        } => run_verify(&method, k, n, seed, step_fraction, out.as_deref()),
        Command::GradCheck { seeds, eps, tolerance } => run_grad_check(seeds, eps, tolerance),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_train(config: &Path, data: &Path, out: &Path, edges: Option<&Path>, history: Option<PathBuf>) -> Result<()> {
    let cfg = ModelConfig::load(config)?;
    let mut dataset = load_csv(data, cfg.d_x)?;
    if let Some(e) = edges {
        dataset.load_prior_edges(e)?;
    }
    let trained = train(&cfg, &dataset)?;
    let ckpt = Checkpoint::from_model(&trained.model, dataset.node_ids.clone(), Some(trained.prepared.stats.clone()));
    ckpt.save(out)?;
    let history_path = history.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".history.csv");
        PathBuf::from(p)
    });
    std::fs::write(&history_path, trained.history.to_csv())
        .with_context(|| format!("cannot write {}", history_path.display()))?;
    let best = trained
        .history
        .best_epoch
        .map_or_else(|| "initial".to_string(), |e| e.to_string());
    println!(
        "trained {} epochs on {} windows; kept epoch {best}; checkpoint {}",
        cfg.epochs,
        trained.prepared.windows.train.len(),
        out.display()
    );
    Ok(())
}

/// The checkpointed model and the data normalized with its statistics.
fn load_model_and_data(model: &Path, data: &Path) -> Result<(Checkpoint, GnlModel, Dataset)> {
    let ckpt = Checkpoint::load(model)?;
    let net = ckpt.model()?;
    let mut dataset = load_csv(data, ckpt.config.d_x)?;
    if dataset.node_ids != ckpt.node_ids {
        bail!(
            "{} has nodes {:?} but the model was trained on {:?}",
            data.display(),
            dataset.node_ids,
            ckpt.node_ids
        );
    }
    if let Some(stats) = &ckpt.stats {
        dataset.rows = dataset.rows.iter().map(|r| stats.normalize(r)).collect();
    }
    Ok((ckpt, net, dataset))
}

fn run_predict(model: &Path, data: &Path, horizon: Option<usize>, out: Option<&Path>) -> Result<()> {
    let (ckpt, net, dataset) = load_model_and_data(model, data)?;
    let horizon = horizon.unwrap_or(ckpt.config.horizon);
    let window = ckpt.config.window;
    if dataset.len() < window {
        bail!("{} has {} rows, fewer than the window of {window}", data.display(), dataset.len());
    }
    let inputs = &dataset.rows[dataset.len() - window..];
    let forecasts = net.predict_horizon(inputs, horizon)?;
    let mut text = String::from("step");
    for id in &ckpt.node_ids {
        for f in 0..ckpt.config.d_x {
            if ckpt.config.d_x == 1 {
                let _ = write!(text, ",{id}");
            } else {
                let _ = write!(text, ",{id}_{f}");
            }
        }
    }
    text.push('\n');
    for (k, row) in forecasts.iter().enumerate() {
        let values = match &ckpt.stats {
            Some(s) => s.denormalize(row),
            None => row.clone(),
        };
        let _ = write!(text, "{}", k + 1);
        for v in values {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    emit(&text, out)
}

fn run_eval(model: &Path, data: &Path, horizon: Option<usize>, part: SplitPart, out: Option<&Path>) -> Result<()> {
    let (ckpt, net, dataset) = load_model_and_data(model, data)?;
    let horizon = horizon.unwrap_or(ckpt.config.horizon);
    let window = ckpt.config.window;
    let samples: Vec<WindowSample> = match part {
        SplitPart::All => all_windows(&dataset.rows, window, horizon)?,
        _ => {
            let (train_frac, val_frac) = Split::DEFAULT_FRACTIONS;
            let split = Split::chronological(dataset.len(), train_frac, val_frac)?;
            let w = make_windows(&dataset.rows, window, horizon, &split)?;
            match part {
                SplitPart::Train => w.train,
                SplitPart::Val => w.val,
                _ => w.test,
            }
        }
    };
    if samples.is_empty() {
        bail!("no evaluation windows in {} for window {window} and horizon {horizon}", data.display());
    }
    let report = evaluate(&net, &samples, ckpt.stats.as_ref())?;
    emit(&report.to_text(), out)
}

fn run_export(model: &Path, data: &Path, out: &Path, start: Option<usize>) -> Result<()> {
    let (ckpt, net, dataset) = load_model_and_data(model, data)?;
    let window = ckpt.config.window;
    if dataset.len() < window {
        bail!("{} has {} rows, fewer than the window of {window}", data.display(), dataset.len());
    }
    let start = start.unwrap_or(dataset.len() - window);
    if start + window > dataset.len() {
        bail!("window starting at row {start} runs past the {} rows of {}", dataset.len(), data.display());
    }
    let files = export_attention(&net, &dataset.rows[start..start + window], &ckpt.node_ids, out)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn run_verify(method: &str, k: usize, n: usize, seed: u64, fraction: f64, out: Option<&Path>) -> Result<()> {
    let method: ProxMethod = method.parse()?;
    if n == 0 {
        bail!("instance dimension must be positive");
    }
    let inst = ConvexLassoInstance::random_well_conditioned(n, seed)?;
    let report = verify_theorem_bounds(&inst, method, fraction / inst.lipschitz, k)?;
    emit(&report.to_delimited(), out)?;
    let violations = report.violations();
    eprintln!(
        "{method:?}: {k} iterations, L = {:.6}, optimum objective {:.9}, {} violations",
        inst.lipschitz,
        inst.optimal_value,
        violations.len()
    );
    if !violations.is_empty() {
        bail!("bound violated at k = {:?}", violations.iter().map(|r| r.k).collect::<Vec<_>>());
    }
    Ok(())
}

fn run_grad_check(seeds: u64, eps: f64, tolerance: f64) -> Result<()> {
    let cases = grad_check_suite(seeds, eps)?;
    let mut worst: f64 = 0.0;
    for c in &cases {
        println!("seed {} {:?}: max relative error {:.3e}", c.seed, c.regularizer, c.max_rel_error);
        worst = worst.max(c.max_rel_error);
    }
    println!("worst: {worst:.3e}");
    if worst >= tolerance {
        bail!("gradient check failed: {worst:.3e} >= {tolerance:.1e}");
    }
    Ok(())
}
