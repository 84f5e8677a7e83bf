//! Batch driver: parse a run configuration, build the group model, run the
//! selected verification suites and emit a JSON report. Exit code 0 means
//! every check passed.

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};
use k1lab_core::pgroup::CATALOG;
use k1lab_core::sampler::{random_unit, Rng};
use k1lab_core::suite::{run_suites, RunConfig, SUITES};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "k1lab", about = "Exact verification of unit congruences in twisted p-adic group rings", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a JSON report.
    Verify {
        /// JSON configuration file (flags below override its fields)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        f: Option<usize>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        d_t: Option<u32>,
        /// catalog group name
        #[arg(long)]
        group: Option<String>,
        /// comma-separated subset of suites
        #[arg(long)]
        suites: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        sparsity: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// adversarial mode: perturb one tuple component before checking
        #[arg(long)]
        mutate: bool,
        /// report output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one reproducible random unit as sorted sparse JSON.
    GenUnit {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long, default_value = "heis27")]
        group: String,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        f: usize,
        #[arg(long, default_value_t = 4)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 3)]
        d: u32,
        #[arg(long, default_value_t = 3)]
        d_t: u32,
        #[arg(long, default_value_t = 4)]
        sparsity: usize,
    },
    /// Catalog inspection.
    Catalog {
        #[command(subcommand)]
        what: CatalogCmd,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List the built-in group models.
    List,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading configuration {}", p.display()))?;
            let cfg: RunConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing configuration {}", p.display()))?;
            Ok(cfg)
        }
        None => Ok(serde_json::from_str("{}").expect("defaults parse")),
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            config,
            p,
            f,
            n,
            r,
            d,
            d_t,
            group,
            suites,
            samples,
            sparsity,
            seed,
            mutate,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(v) = p {
                cfg.p = v;
            }
            if let Some(v) = f {
                cfg.f = v;
            }
            if let Some(v) = n {
                cfg.n = v;
            }
            if let Some(v) = r {
                cfg.r = v;
            }
            if let Some(v) = d {
                cfg.d = v;
            }
            if let Some(v) = d_t {
                cfg.d_t = v;
            }
            if let Some(v) = group {
                cfg.group = v;
            }
            if let Some(v) = suites {
                cfg.suites = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            }
            if let Some(v) = samples {
                cfg.samples = v;
            }
            if let Some(v) = sparsity {
                cfg.sparsity = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            cfg.mutate |= mutate;

            let report = run_suites(&cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
            let text = serde_json::to_string_pretty(&report)?;
            match &out {
                Some(path) => {
                    std::fs::write(path, &text)
                        .with_context(|| format!("writing report {}", path.display()))?;
                    let failed = report.checks.iter().filter(|c| !c.pass).count();
                    eprintln!(
                        "{}: {} checks, {} failures, {} ms -> {}",
                        report.group,
                        report.checks.len(),
                        failed,
                        report.timing_ms,
                        path.display()
                    );
                }
                None => println!("{text}"),
            }
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::GenUnit { seed, index, group, p, f, n, r, d, d_t, sparsity } => {
            let cfg = RunConfig {
                group,
                p,
                f,
                n,
                r,
                d,
                d_t,
                suites: vec![],
                samples: 0,
                sparsity,
                seed,
                mutate: false,
            };
            cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            let ctx = cfg.context().map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut rng = Rng::seed_indexed(seed, index);
            let u = random_unit(&ctx, &mut rng, sparsity);
            // serialize at the configured precision in canonical sparse form
            let sparse = ctx.main.to_sparse(&u, ctx.n_user);
            let json: Vec<serde_json::Value> = sparse
                .iter()
                .map(|(g, terms)| {
                    serde_json::json!({
                        "g": g,
                        "coeff": terms
                            .iter()
                            .map(|(e, c)| serde_json::json!({"exp": e, "scalar": c}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({
                "seed": seed,
                "index": index,
                "group": cfg.group,
                "unit": json,
            }))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Catalog { what: CatalogCmd::List } => {
            for name in CATALOG {
                println!("{name}");
            }
            let _ = SUITES;
            Ok(ExitCode::SUCCESS)
        }
    }
}
