use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use negbias::experiments::{identity_suite, run_bias, BiasRunConfig};
use negbias::{emb, tables};
use negbias_core::metrics::evaluate;
use negbias_core::positives::synthesize_bank;
use negbias_core::scoring::{score_all, ScoringContext};
use negbias_core::selection::select_and_partition;
use negbias_core::synthetic::{build_benchmark, BenchmarkConfig, Spreads};
use negbias_core::{GroupingMode, Method, ScoreConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "negbias", version, about = "Debiased negative-label OOD scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank a wild corpus by representativeness, keep the top L and split them into B groups.
    Select {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        alpha: usize,
        #[arg(long)]
        top: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long, value_enum, default_value_t = Grouping::RoundRobin)]
        grouping: Grouping,
        /// Seed for random grouping.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Perturb ID label embeddings into synthetic positives.
    SynthPositives {
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score test images.
    Score {
        #[arg(long)]
        id: PathBuf,
        /// The wild corpus that `--groups` indexes into.
        #[arg(long)]
        wild: Option<PathBuf>,
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Positive bank; synthesized from the config's sigma and seed when absent.
        #[arg(long)]
        positives: Option<PathBuf>,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Numerical checks of the estimator.
    Verify {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random label spaces for `oracle-eq7`.
        #[arg(long, default_value_t = 100)]
        spaces: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic benchmark.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// AUROC and FPR at a target TPR from two score files.
    Eval {
        #[arg(long)]
        id_scores: PathBuf,
        #[arg(long)]
        ood_scores: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        tpr: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grouping {
    RoundRobin,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mcm,
    Neglabel,
    Debiased,
    Grouped,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mcm => Method::Mcm,
            MethodArg::Neglabel => Method::NegLabel,
            MethodArg::Debiased => Method::Debiased,
            MethodArg::Grouped => Method::GroupedDebiased,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    /// Enumeration against the binomial expansion over random label spaces.
    #[value(name = "oracle-eq7")]
    ExpansionIdentity,
    /// Monte-Carlo bias against its closed-form bound.
    #[value(name = "thm2")]
    BiasRate,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Select {
            corpus,
            alpha,
            top,
            groups,
            grouping,
            seed,
            out,
        } => select(&corpus, alpha, top, groups, grouping, seed, &out),
        Command::SynthPositives { id, sigma, seed, out } => {
            let labels = emb::read(&id)?;
            let bank = synthesize_bank(&labels, sigma, seed)?;
            emb::write(&out, &bank.vectors)?;
            Ok(())
        }
        Command::Score {
            id,
            wild,
            groups,
            positives,
            images,
            config,
            method,
            out,
        } => score(
            &id,
            wild.as_deref(),
            groups.as_deref(),
            positives.as_deref(),
            &images,
            config.as_deref(),
            method.into(),
            &out,
        ),
        Command::Verify {
            experiment,
            seed,
            spaces,
            config,
            out,
        } => verify(experiment, seed, spaces, config.as_deref(), out.as_deref()),
        Command::Synth { config, out } => synth(config.as_deref(), &out),
        Command::Eval {
            id_scores,
            ood_scores,
            tpr,
            out,
        } => {
            let id = tables::read_scores(&id_scores)?;
            let ood = tables::read_scores(&ood_scores)?;
            let report = evaluate(&id, &ood, tpr)?;
            tables::write_json(&out, &report)?;
            println!(
                "auroc {} fpr {} beta {}",
                report.auroc, report.fpr95, report.threshold_beta
            );
            Ok(())
        }
    }
}

fn select(
    corpus: &Path,
    alpha: usize,
    top: usize,
    groups: usize,
    grouping: Grouping,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let corpus = emb::read(corpus)?;
    let config = ScoreConfig {
        alpha,
        top,
        groups,
        seed,
        grouping: match grouping {
            Grouping::RoundRobin => GroupingMode::RoundRobin,
            Grouping::Random => GroupingMode::Random,
        },
        ..ScoreConfig::default()
    };
    let result = select_and_partition(&corpus, &config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    emb::write(out.join("selected.emb"), &corpus.select_rows(&result.selected))?;
    tables::write_order(&out.join("order.csv"), &result.order, &result.rep_scores)?;
    tables::write_groups(&out.join("groups.csv"), &result.groups)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn score(
    id: &Path,
    wild: Option<&Path>,
    groups: Option<&Path>,
    positives: Option<&Path>,
    images: &Path,
    config: Option<&Path>,
    method: Method,
    out: &Path,
) -> Result<()> {
    let config: ScoreConfig = match config {
        Some(p) => tables::read_json(p)?,
        None => ScoreConfig::default(),
    };
    let id_texts = emb::read(id)?;
    let images = emb::read(images)?;
    let wild = match (wild, groups) {
        (Some(w), Some(g)) => Some((emb::read(w)?, tables::read_groups(g)?)),
        (None, None) if method == Method::Mcm => None,
        (None, None) => bail!("--wild and --groups are required for this method"),
        _ => bail!("--wild and --groups must be given together"),
    };
    let positives = match positives {
        Some(p) => Some(emb::read(p)?),
        None if matches!(method, Method::Debiased | Method::GroupedDebiased) => {
            Some(synthesize_bank(&id_texts, config.sigma, config.seed)?.vectors)
        }
        None => None,
    };
    let ctx = ScoringContext::from_embeddings(
        &images,
        &id_texts,
        wild.as_ref().map(|(w, g)| (w, g.as_slice())),
        positives.as_ref(),
        config,
    )?;
    let report = score_all(&ctx, method)?;
    tables::write_scores(out, &report.scores)?;
    if report.clamp_count > 0 {
        eprintln!(
            "{} of {} inputs hit the mass floor ({} events)",
            report.clamp_count,
            report.scores.len(),
            report.clamp_events
        );
    }
    Ok(())
}

fn verify(experiment: Experiment, seed: u64, spaces: usize, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    match experiment {
        Experiment::ExpansionIdentity => {
            let suite = identity_suite(seed, spaces)?;
            println!(
                "max deviation {:e} over {} evaluations",
                suite.max_deviation, suite.evaluations
            );
            if let Some(out) = out {
                tables::write_json(out, &suite)?;
            }
        }
        Experiment::BiasRate => {
            let (Some(config), Some(out)) = (config, out) else {
                bail!("this experiment needs --config and --out");
            };
            let config: BiasRunConfig = tables::read_json(config)?;
            let report = run_bias(&config)?;
            tables::write_json(out, &report)?;
            println!(
                "bound holds: {}, slope_m: {}",
                report.bound_holds(),
                report.slope_m.map_or("n/a".into(), |s| format!("{s:.4}"))
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    true_tau: f64,
    seed: u64,
    spreads: Spreads,
    config: &'a BenchmarkConfig,
}

fn synth(config: Option<&Path>, out: &Path) -> Result<()> {
    let config: BenchmarkConfig = match config {
        Some(p) => tables::read_json(p)?,
        None => BenchmarkConfig::default(),
    };
    let bench = build_benchmark(&config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    emb::write(out.join("id_texts.emb"), &bench.id_texts)?;
    emb::write(out.join("id_images.emb"), &bench.id_images)?;
    emb::write(out.join("ood_images.emb"), &bench.ood_images)?;
    emb::write(out.join("wild.emb"), &bench.wild_corpus)?;
    tables::write_wild_truth(&out.join("wild_truth.csv"), &bench.wild_truth)?;
    tables::write_json(
        &out.join("meta.json"),
        &Meta {
            true_tau: bench.true_tau,
            seed: config.seed,
            spreads: config.spreads,
            config: &config,
        },
    )?;
    Ok(())
}
