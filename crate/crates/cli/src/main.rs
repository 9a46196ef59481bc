use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use commatch::bounds::{achievability_check, converse_check, BoundsError};
use commatch::graphgen::{anonymize, pair_from_json, sample_pair, GraphError, Mode, PairFile};
use commatch::matcher::{run_matching, MatchError, MatcherConfig, DEFAULT_CANDIDATE_CAP};
use commatch::model::{CommunityLayout, ModelError, ModelFile, PairedEdgeModel};
use commatch::oracle::{check_exponent_bound, check_permutation_invariance, OracleError};
use commatch_cli::campaign::{run_campaign, sub_seeds, CampaignSpec, EpsChoice};
use commatch_cli::output::{config_hash, csv_header_comment, csv_string, stamp, to_json_line};
use commatch_cli::scan::scan_region;

#[derive(Debug, Parser)]
#[command(
    name = "commatch",
    version,
    about = "Typicality matching of correlated community-structured graphs"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall-clock timings in outputs. Makes outputs non-reproducible.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a correlated pair of graphs.
    Generate {
        #[arg(long)]
        model: PathBuf,
        /// Vertex count; community sizes are scaled from the model file.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Anonymize a sampled pair and match it.
    Match {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value = "csi")]
        mode: Mode,
        #[command(flatten)]
        eps: EpsArgs,
        #[command(flatten)]
        matcher: MatcherArgs,
    },
    /// Evaluate the achievability condition on an α grid.
    Region {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Grid step for α and the allocations (default 1/n).
        #[arg(long)]
        grid: Option<f64>,
    },
    /// Evaluate the converse condition.
    Converse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Check exact probabilities against the invariances or the exponent bound.
    Verify {
        #[arg(long, value_enum)]
        check: Check,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        model: PathBuf,
        /// Community pair whose edge distribution is used, 1-based.
        #[arg(long, value_delimiter = ',', default_values_t = [1, 1])]
        block: Vec<usize>,
        /// Fixed-point fractions for the exponent check (default 0, 1/n, and
        /// the largest multiple of 1/n not above 1/2).
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
    /// Run seeded matching trials and summarize them.
    Campaign {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "csi")]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        eps: EpsArgs,
        #[command(flatten)]
        matcher: MatcherArgs,
    },
    /// Tabulate achievability and converse verdicts over several n.
    Scan {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        grid: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Check {
    Prop1,
    Thm1,
}

#[derive(Debug, Args)]
struct EpsArgs {
    /// Fixed typicality tolerance.
    #[arg(long, conflicts_with = "kappa")]
    eps: Option<f64>,
    /// Tolerance schedule kappa * log2(n) / n.
    #[arg(long)]
    kappa: Option<f64>,
}

impl EpsArgs {
    fn choice(&self) -> Result<EpsChoice> {
        let c = match (self.eps, self.kappa) {
            (Some(e), _) => EpsChoice::Fixed(e),
            (None, Some(k)) => EpsChoice::Kappa(k),
            (None, None) => EpsChoice::default(),
        };
        let v = match c {
            EpsChoice::Fixed(v) | EpsChoice::Kappa(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            bail!(InvalidInput("eps and kappa must be positive".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct MatcherArgs {
    /// Search all n! labelings instead of community-preserving ones.
    #[arg(long)]
    unrestricted: bool,
    /// Without side-information, sweep every assignment of vertices to
    /// communities (n <= 8).
    #[arg(long)]
    full_sweep: bool,
    /// Refuse candidate spaces larger than this.
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    cap: u64,
}

impl MatcherArgs {
    fn config(&self) -> MatcherConfig {
        MatcherConfig {
            candidate_cap: self.cap,
            community_preserving: !self.unrestricted,
            full_sweep: self.full_sweep,
        }
    }

    fn describe(&self) -> Value {
        json!({"unrestricted": self.unrestricted, "full_sweep": self.full_sweep, "cap": self.cap})
    }
}

#[derive(Debug)]
struct InvalidInput(String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<MatchError>() {
            return match e {
                MatchError::SizeGuard { .. } | MatchError::FullSweepTooLarge(_) => 3,
                MatchError::EmptyAmbiguitySet(_) => 1,
                _ => 2,
            };
        }
        if let Some(OracleError::SizeGuard { .. }) = cause.downcast_ref::<OracleError>() {
            return 3;
        }
        if cause.is::<ModelError>()
            || cause.is::<GraphError>()
            || cause.is::<BoundsError>()
            || cause.is::<InvalidInput>()
        {
            return 2;
        }
        if cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn read_model(path: &Path) -> Result<(PairedEdgeModel, CommunityLayout, Value)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let canonical = serde_json::to_value(&file)?;
    let (model, layout) = file
        .into_parts()
        .with_context(|| format!("validating {}", path.display()))?;
    Ok((model, layout, canonical))
}

fn sized(layout: &CommunityLayout, n: Option<usize>) -> Result<CommunityLayout> {
    Ok(match n {
        Some(n) if n != layout.n() => layout.scaled_to(n)?,
        _ => layout.clone(),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!(InvalidInput("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let seed = cli.seed;
    match &cli.command {
        Command::Generate { model, n } => {
            let (m, layout, canonical) = read_model(model)?;
            let layout = sized(&layout, *n)?;
            let hash = config_hash(&json!({"command": "generate", "model": canonical, "n": layout.n(), "seed": seed}));
            let pair = sample_pair(&m, &layout, seed)?;
            let value = stamp(serde_json::to_value(PairFile::from_pair(&pair))?, &hash);
            emit(&cli.out, &format!("{}\n", serde_json::to_string(&value)?))?;
        }
        Command::Match {
            pair,
            mode,
            eps,
            matcher,
        } => {
            let text = std::fs::read_to_string(pair).with_context(|| format!("reading {}", pair.display()))?;
            let pair_value: Value = serde_json::from_str(&text)?;
            let p = pair_from_json(&text)?;
            let choice = eps.choice()?;
            let mut pair_core = pair_value;
            if let Value::Object(map) = &mut pair_core {
                for k in ["tool", "version", "config_hash"] {
                    map.remove(k);
                }
            }
            let hash = config_hash(&json!({
                "command": "match", "pair": pair_core, "mode": mode, "eps": choice,
                "matcher": matcher.describe(), "seed": seed,
            }));
            let [_, shuffle, select] = sub_seeds(seed);
            let eps_value = choice.schedule().at(p.n());
            let (inst, truth) = anonymize(&p, *mode, shuffle);
            let outcome = run_matching(&inst, &truth, *mode, eps_value, select, &matcher.config());
            let value = match outcome {
                Ok(o) => {
                    let mut diag = serde_json::to_value(&o.diagnostics)?;
                    if !cli.timings {
                        diag.as_object_mut().expect("object").remove("elapsed_ms");
                    }
                    json!({"status": "ok", "labeling": o.labeling, "accuracy": o.accuracy, "diagnostics": diag})
                }
                Err(MatchError::EmptyAmbiguitySet(d)) => {
                    let mut diag = serde_json::to_value(&*d)?;
                    if !cli.timings {
                        diag.as_object_mut().expect("object").remove("elapsed_ms");
                    }
                    json!({"status": "empty", "labeling": null, "accuracy": 0.0, "diagnostics": diag})
                }
                Err(e) => return Err(e.into()),
            };
            emit(&cli.out, &to_json_line(&stamp(value, &hash)))?;
        }
        Command::Region { model, n, delta, grid } => {
            let (m, layout, canonical) = read_model(model)?;
            let step = grid.unwrap_or(1.0 / *n as f64);
            let hash =
                config_hash(&json!({"command": "region", "model": canonical, "n": n, "delta": delta, "grid": step}));
            let verdict = achievability_check(&m, &layout, *n, *delta, step)?;
            #[derive(serde::Serialize)]
            struct Row {
                alpha: f64,
                lhs: f64,
                rhs: f64,
                margin: f64,
                allocation: String,
            }
            let rows: Vec<Row> = verdict
                .rows
                .iter()
                .map(|r| Row {
                    alpha: r.alpha,
                    lhs: r.lhs,
                    rhs: r.rhs,
                    margin: r.margin,
                    allocation: r.allocation.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                })
                .collect();
            let summary = json!({
                "satisfied": verdict.satisfied, "worst_alpha": verdict.worst_alpha,
                "worst_allocation": verdict.worst_allocation, "margin": verdict.margin,
            });
            let text = format!(
                "{}{}# verdict {}\n",
                csv_header_comment(&hash),
                csv_string(&rows),
                serde_json::to_string(&summary)?
            );
            emit(&cli.out, &text)?;
        }
        Command::Converse { model, n } => {
            let (m, layout, canonical) = read_model(model)?;
            let hash = config_hash(&json!({"command": "converse", "model": canonical, "n": n}));
            let verdict = converse_check(&m, &layout, *n)?;
            emit(&cli.out, &to_json_line(&stamp(serde_json::to_value(verdict)?, &hash)))?;
        }
        Command::Verify {
            check,
            n,
            eps,
            model,
            block,
            alpha,
        } => {
            let (m, _, canonical) = read_model(model)?;
            if block.len() != 2 || block.iter().any(|&b| b == 0 || b > m.communities()) {
                bail!(InvalidInput(format!(
                    "--block needs two community indices in 1..={}",
                    m.communities()
                )));
            }
            let p = m.block(block[0] - 1, block[1] - 1);
            let mut alphas = alpha.clone();
            if alphas.is_empty() {
                alphas = vec![0.0, 1.0 / *n as f64, (*n / 2) as f64 / *n as f64];
                alphas.dedup();
            }
            let hash = config_hash(&json!({
                "command": "verify", "check": format!("{check:?}"), "model": canonical,
                "block": block, "n": n, "eps": eps, "alpha": alphas,
            }));
            let (table, passed) = match check {
                Check::Prop1 => {
                    let rows = check_permutation_invariance(&p, *n, *eps)?;
                    let ok = rows.iter().all(|r| r.passed());
                    #[derive(serde::Serialize)]
                    struct Row {
                        m: usize,
                        lengths: String,
                        probability: f64,
                        joint_matches_identity: bool,
                        arbitrary_matches_standard: bool,
                        result: &'static str,
                    }
                    let rows: Vec<Row> = rows
                        .iter()
                        .map(|r| Row {
                            m: r.m,
                            lengths: r.lengths.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                            probability: r.standard,
                            joint_matches_identity: r.joint_matches_identity,
                            arbitrary_matches_standard: r.arbitrary_matches_standard,
                            result: if r.passed() { "pass" } else { "fail" },
                        })
                        .collect();
                    (csv_string(&rows), ok)
                }
                Check::Thm1 => {
                    let rows = check_exponent_bound(&p, *n, *eps, &alphas)?;
                    let ok = rows.iter().all(|r| r.holds);
                    #[derive(serde::Serialize)]
                    struct Row {
                        alpha: f64,
                        lengths: String,
                        probability: f64,
                        bound_log2: f64,
                        result: &'static str,
                    }
                    let rows: Vec<Row> = rows
                        .iter()
                        .map(|r| Row {
                            alpha: r.alpha,
                            lengths: r.lengths.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                            probability: r.probability,
                            bound_log2: r.bound_log2,
                            result: if r.holds { "pass" } else { "fail" },
                        })
                        .collect();
                    (csv_string(&rows), ok)
                }
            };
            let text = format!(
                "{}{}# result {}\n",
                csv_header_comment(&hash),
                table,
                if passed { "pass" } else { "fail" }
            );
            emit(&cli.out, &text)?;
            if !passed {
                return Ok(1);
            }
        }
        Command::Campaign {
            model,
            n,
            mode,
            trials,
            eps,
            matcher,
        } => {
            if *trials == 0 {
                bail!(InvalidInput("--trials must be at least 1".into()));
            }
            let (m, layout, canonical) = read_model(model)?;
            let layout = sized(&layout, *n)?;
            let choice = eps.choice()?;
            let hash = config_hash(&json!({
                "command": "campaign", "model": canonical, "n": layout.n(), "mode": mode, "trials": trials,
                "eps": choice, "matcher": matcher.describe(), "seed": seed,
            }));
            let spec = CampaignSpec {
                model: m,
                layout,
                mode: *mode,
                eps: choice,
                trials: *trials,
                master_seed: seed,
                matcher: matcher.config(),
            };
            let (records, summary) = run_campaign(&spec, cli.timings);
            let csv = format!("{}{}", csv_header_comment(&hash), csv_string(&records));
            let summary = to_json_line(&stamp(serde_json::to_value(summary)?, &hash));
            match &cli.out {
                Some(path) => {
                    emit(&cli.out, &csv)?;
                    emit(&Some(summary_path(path)), &summary)?;
                }
                None => {
                    print!("{csv}");
                    eprint!("{summary}");
                }
            }
        }
        Command::Scan {
            model,
            n_values,
            delta,
            grid,
        } => {
            let (m, layout, canonical) = read_model(model)?;
            let hash = config_hash(&json!({
                "command": "scan", "model": canonical, "n_values": n_values, "delta": delta, "grid": grid,
            }));
            let rows = scan_region(&m, &layout, n_values, *delta, *grid)?;
            emit(&cli.out, &format!("{}{}", csv_header_comment(&hash), csv_string(&rows)))?;
        }
    }
    Ok(0)
}

/// `results.csv` -> `results.summary.json`.
fn summary_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.summary.json"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
