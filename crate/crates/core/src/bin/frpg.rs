use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use frpg::harness::{
    compute_frpg_bound, compute_lfrpg_bound, estimate_sigma, parse_config, prepare, run_experiment,
    AlgorithmName, BoundConstants, BoundCurve,
};
use frpg::{Error, ModelVector, Result};

#[derive(Parser)]
#[command(name = "frpg", version, about = "Byzantine-resilient federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its per-round metrics CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `hyper.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output.metrics`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the convergence envelope of a synthetic problem as CSV.
    Bound {
        #[arg(long)]
        config: PathBuf,
        /// Destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mini-batch draws for the noise estimate when `hyper.sigma` is unset.
        #[arg(long, default_value_t = 1000)]
        sigma_draws: usize,
    },
    /// Print the per-worker label histograms of the partition as CSV.
    Partition {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = parse_config(&config)?;
    if let Some(s) = seed {
        cfg.hyper.seed = s;
    }
    if let Some(o) = out {
        cfg.output.metrics = o;
        cfg.output.resolved_config = None;
    }
    let summary = run_experiment(&cfg)?;
    println!(
        "{} rounds, final loss_F {:.6e}, metrics {}, resolved config {}",
        summary.rounds,
        summary.last.loss_f,
        summary.metrics_path.display(),
        summary.resolved_path.display()
    );
    Ok(())
}

fn bound(config: PathBuf, out: Option<PathBuf>, sigma_draws: usize) -> Result<()> {
    let cfg = parse_config(&config)?;
    let prepared = prepare(&cfg)?;
    let p = &prepared.problem;
    let inst = prepared.synthetic.as_ref().ok_or_else(|| {
        Error::Config("bound needs a synthetic problem (data.kind = \"synthetic\") for u*".into())
    })?;
    let mut params = p.params.clone();
    let zero = ModelVector::zeros(p.dim());
    if params.sigma.is_none() {
        params.sigma = Some(estimate_sigma(p, &zero, sigma_draws)?);
    }
    let c = BoundConstants::from_params(&params, &p.reliable)?;
    let zeros = vec![zero.clone(); p.reliable.len()];
    let f_init = p.objective.value(&zero, &zeros)?;
    let init_v = vec![zero; p.reliable.len() + 1];
    let rounds: Vec<usize> = (0..=params.rounds).collect();
    let curve: BoundCurve = match prepared.config.algorithm.name {
        AlgorithmName::Frpg => compute_frpg_bound(
            &c,
            f_init - inst.optimum_value,
            Some(&inst.optimum),
            &init_v,
            &rounds,
        )?,
        AlgorithmName::Lfrpg => compute_lfrpg_bound(
            &c,
            f_init,
            inst.optimum_value,
            Some(&inst.optimum),
            &init_v,
            &rounds,
        )?,
        other => {
            return Err(Error::Config(format!(
                "no convergence envelope for algorithm {other:?}"
            )))
        }
    };
    let mut text = String::from("round,bound,neighborhood_scale\n");
    for (k, v) in curve.rounds.iter().zip(&curve.values) {
        text.push_str(&format!("{k},{v:.16e},{:.16e}\n", curve.neighborhood_scale));
    }
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn partition(config: PathBuf) -> Result<()> {
    let cfg = parse_config(&config)?;
    let prepared = prepare(&cfg)?;
    let p = &prepared.problem;
    let (Some(assignment), Some(train)) = (&prepared.assignment, &p.train) else {
        return Err(Error::Config("partition needs an idx or csv dataset".into()));
    };
    let hist = assignment.label_histograms(train);
    let labels: Vec<String> = (0..train.classes()).map(|c| format!("label_{c}")).collect();
    println!("worker,faulty,size,{}", labels.join(","));
    for (n, h) in hist.iter().enumerate() {
        let counts: Vec<String> = h.iter().map(usize::to_string).collect();
        println!(
            "{n},{},{},{}",
            p.attack.is_faulty(n),
            assignment.shard(n).len(),
            counts.join(",")
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::Bound {
            config,
            out,
            sigma_draws,
        } => bound(config, out, sigma_draws),
        Command::Partition { config } => partition(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = e.class();
            let record = serde_json::json!({
                "error": class.as_str(),
                "message": e.to_string(),
                "exit_code": class.exit_code(),
            });
            eprintln!("{record}");
            ExitCode::from(class.exit_code() as u8)
        }
    }
}
