use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nosql_advisor::advisor::{predict_all, train_bundle, AdvisorBundle, BundleParams, DEFAULT_SEED};
use nosql_advisor::clustering::{cluster_count_scan, compare_partitions, fit_subset, summarize_clusters, Partition};
use nosql_advisor::dataset::{
    feature_frequencies, load_dataset, project, validate_dataset, Area, Feature, FeatureMatrix, FeatureVector, SubsetId,
};
use nosql_advisor::service::{serve, AppState, ServeConfig};
use nosql_advisor::stats::{
    export_heatmap, pairwise_matrix, AssociationKind, MODERATE_CORRELATION, SIGNIFICANCE_LEVEL,
};
use nosql_advisor::tree::{run_experiment, ExperimentConfig};

/// Feature analysis, clustering and per-area suitability advice for NoSQL
/// solutions.
#[derive(Debug, Parser)]
#[command(name = "nosql-advisor", version)]
struct Cli {
    /// Dataset CSV to use instead of the built-in one.
    #[arg(long, global = true, env = "NOSQL_ADVISOR_DATASET")]
    dataset: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the dataset against the record invariants.
    Validate,
    /// Spearman and chi-square matrices, written as grid CSV and SVG heatmaps.
    Stats {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Skip the SVG files.
        #[arg(long)]
        no_svg: bool,
    },
    /// k-modes cluster sizes for k = 3..9 on every feature configuration.
    Scan {
        /// Write the grid here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit k-modes and describe the clusters.
    Cluster {
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value = "all")]
        config: SubsetId,
        #[arg(long)]
        json: bool,
    },
    /// Train the advisor bundle and/or the repeated-split accuracy report.
    Train {
        /// Number of seeded splits for the report (seeds 0..N).
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        /// Print the per-area accuracy and importance table (the default
        /// when `--out` is not given).
        #[arg(long)]
        report: bool,
        /// Write a bundle trained with `--seed` to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Per-area verdicts for a feature vector.
    Predict {
        /// Nine bits in the order document_oriented, graph, key_value,
        /// wide_column, consistent, available, partition_tolerant, free,
        /// proprietary.
        #[arg(long)]
        features: FeatureVector,
        /// Bundle file; the built-in bundle when omitted.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Directory of static UI assets served for non-API paths.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

/// Raised for a dataset that loads but breaks record invariants.
#[derive(Debug)]
struct ValidationFailed;

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("dataset validation failed")
    }
}

impl std::error::Error for ValidationFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dataset(path: Option<&Path>) -> Result<FeatureMatrix> {
    match path {
        Some(p) => load_dataset(p).with_context(|| format!("loading dataset {}", p.display())),
        None => Ok(FeatureMatrix::canonical()),
    }
}

fn bundle(path: Option<&Path>) -> Result<AdvisorBundle> {
    match path {
        Some(p) => AdvisorBundle::load(p).with_context(|| format!("loading bundle {}", p.display())),
        None => Ok(AdvisorBundle::canonical()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let ds = cli.dataset.as_deref();
    match cli.command {
        Command::Validate => validate(ds),
        Command::Stats { out_dir, no_svg } => stats(&dataset(ds)?, &out_dir, !no_svg),
        Command::Scan { out } => {
            let report = cluster_count_scan(&dataset(ds)?)?;
            let text = format!("{}# {}\n", report.to_csv(), report.note);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Cluster { k, config, json } => cluster(&dataset(ds)?, k, config, json),
        Command::Train { seeds, report, out, seed, json } => train(&dataset(ds)?, seeds, report, out, seed, json),
        Command::Predict { features, bundle: path, json } => {
            let b = bundle(path.as_deref())?;
            let r = predict_all(&b, &features)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print!("{r}");
            }
            Ok(())
        }
        Command::Serve { addr, bundle: path, static_dir } => {
            let state = AppState::new(dataset(ds)?, bundle(path.as_deref())?)
                .map_err(|e| anyhow::anyhow!("{}", serde_json::json!({ "error": e })))?;
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            rt.block_on(serve(state, ServeConfig { addr, static_dir }))?;
            Ok(())
        }
    }
}

fn validate(ds: Option<&Path>) -> Result<()> {
    let m = match dataset(ds) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Err(ValidationFailed.into());
        }
    };
    let violations = validate_dataset(&m);
    let freq = feature_frequencies(&m);
    println!("{} records, dataset {}", m.len(), m.version());
    for (f, c) in Feature::ALL.iter().zip(&freq.features) {
        println!("  {:<20} {c}", f.name());
    }
    for (a, c) in Area::ALL.iter().zip(&freq.areas) {
        println!("  {:<24} {c}", a.name());
    }
    for v in &violations {
        println!("violation: {v:?}");
    }
    if violations.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(ValidationFailed.into())
    }
}

fn stats(m: &FeatureMatrix, out_dir: &Path, svg: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (kind, stem) in [
        (AssociationKind::SpearmanRho, "spearman_rho"),
        (AssociationKind::ChiSquareP, "chi_square_p"),
        (AssociationKind::ChiSquareStat, "chi_square_stat"),
    ] {
        let a = pairwise_matrix(m, kind);
        let csv = out_dir.join(format!("{stem}.csv"));
        let svg_path = out_dir.join(format!("{stem}.svg"));
        export_heatmap(&a, &csv, svg.then_some(svg_path.as_path()))?;
        println!("wrote {}", csv.display());
        match kind {
            AssociationKind::SpearmanRho => {
                let moderate = a.pairs_where(|r| r.abs() >= MODERATE_CORRELATION);
                println!("|rho| >= {MODERATE_CORRELATION}: {} pairs", moderate.len());
                for p in moderate {
                    println!("  {} ~ {}: {:+.4}", p.first, p.second, p.value);
                }
            }
            AssociationKind::ChiSquareP => {
                let sig = a.pairs_where(|p| p < SIGNIFICANCE_LEVEL);
                println!("chi-square p < {SIGNIFICANCE_LEVEL}: {} pairs", sig.len());
                for p in sig {
                    println!("  {} ~ {}: p = {:.3e}", p.first, p.second, p.value);
                }
            }
            AssociationKind::ChiSquareStat => {}
        }
        for (x, y) in a.undefined_pairs() {
            println!("  undefined: {x} ~ {y}");
        }
    }
    Ok(())
}

fn cluster(m: &FeatureMatrix, k: usize, config: SubsetId, json: bool) -> Result<()> {
    let model = fit_subset(m, config, k)?;
    let profiles = summarize_clusters(&model, &project(m, config), m);
    let agreement = match Partition::published(m) {
        Ok(p) => Some(compare_partitions(&Partition::new(model.assignment.clone()), &p)?),
        Err(_) => None,
    };
    if json {
        let body = serde_json::json!({
            "k": k, "config": config, "sizes": model.sorted_sizes(), "cost": model.cost,
            "iterations": model.iterations, "clusters": profiles, "published_agreement": agreement,
        });
        println!("{}", serde_json::to_string_pretty(&body)?);
        return Ok(());
    }
    println!(
        "k={k} on {}: sizes {:?}, cost {}, {} iterations{}",
        config.label(),
        model.sorted_sizes(),
        model.cost,
        model.iterations,
        if model.converged { "" } else { " (cap reached)" }
    );
    for p in &profiles {
        let mode: String = p.mode.iter().map(|v| v.to_string()).collect();
        println!("cluster {} ({} members, mode {mode}): {}", p.cluster, p.size, p.characterization.join(" "));
        println!("  {}", p.members.join(", "));
    }
    if let Some(a) = agreement {
        println!(
            "agreement with published six-class composition: ARI {:.4}, Rand {:.4}",
            a.adjusted_rand_index, a.rand_index
        );
    }
    Ok(())
}

fn train(m: &FeatureMatrix, seeds: u64, report: bool, out: Option<PathBuf>, seed: u64, json: bool) -> Result<()> {
    let report = report || out.is_none();
    if let Some(path) = out {
        let b = train_bundle(m, BundleParams::default(), seed)?;
        b.save(&path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote bundle {} (seed {seed}, dataset {})", path.display(), b.dataset_version);
    }
    if report {
        if seeds == 0 {
            bail!("--seeds must be at least 1");
        }
        let r = run_experiment(m, &ExperimentConfig::with_seeds(seeds))?;
        if json {
            println!("{}", serde_json::to_string_pretty(&r.areas)?);
        } else {
            print!("{}", r.to_table());
        }
    }
    Ok(())
}
