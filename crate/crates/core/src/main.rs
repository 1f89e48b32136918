//! `pcfr`: refine probabilistic integer programs and analyse their runtime.
//!
//! Exit status: 0 on success, 1 when the analysis answers negatively (no
//! bound, failed embedding, exhausted caps), 2 on usage or input errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::ToPrimitive;

use pcfr::bounds::{analyze, default_cover, BoundOutcome};
use pcfr::cfr::{refine, refine_and_prune, RefinementResult};
use pcfr::invariants::infer;
use pcfr::io::config::RunConfig;
use pcfr::io::dot::print_dot;
use pcfr::io::parse::parse;
use pcfr::io::print::print_program;
use pcfr::io::report;
use pcfr::poly::State;
use pcfr::program::Pip;
use pcfr::semantics::embedding::check_embedding;
use pcfr::semantics::enumerate::enumerate;
use pcfr::semantics::mdp::mdp_sup_truncated;
use pcfr::semantics::simulate::monte_carlo;
use pcfr::semantics::SemanticsError;

#[derive(Parser)]
#[command(name = "pcfr", version, about = "Control-flow refinement and expected-runtime analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Args)]
struct Common {
    /// Program file.
    program: PathBuf,
    /// Run configuration (`.cfr.json`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    /// Initial state, e.g. `x=0,y=2`.
    #[arg(long)]
    sigma0: Option<String>,
    /// Values the scheduler may pick for temporaries, e.g. `1,2`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    temp_values: Option<Vec<i64>>,
    /// Number of steps after which runs are cut off.
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a program and print the result.
    Refine {
        #[command(flatten)]
        common: Common,
        /// Keep transitions and locations that invariants show dead.
        #[arg(long)]
        no_prune: bool,
    },
    /// Print location invariants.
    Invariants {
        #[command(flatten)]
        common: Common,
    },
    /// Compute an expected runtime bound.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Refine with the configuration before bounding.
        #[arg(long)]
        refine: bool,
    },
    /// Enumerate all admissible paths up to a horizon.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        /// List every path.
        #[arg(long)]
        paths: bool,
    },
    /// Estimate the expected runtime by sampling.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        samples: Option<usize>,
        /// Falls back to the configuration, then to `PCFR_SEED`, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        step_cap: Option<usize>,
    },
    /// Maximise the expected truncated runtime over all schedulers.
    MdpSup {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check that refinement preserves paths under the configured policy.
    CheckEmbedding {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the program as a Graphviz graph.
    ExportDot {
        #[command(flatten)]
        common: Common,
    },
}

/// Errors that end the run with status 1.
#[derive(Debug)]
struct Negative(String);

impl std::fmt::Display for Negative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Negative {}

struct Output {
    text: String,
    negative: bool,
}

impl Output {
    fn ok(text: String) -> Output {
        Output { text, negative: false }
    }
}

fn load(common: &Common) -> Result<(Pip, RunConfig)> {
    let src = std::fs::read_to_string(&common.program)
        .with_context(|| format!("cannot read {}", common.program.display()))?;
    let p = parse(&src).map_err(|e| anyhow!("{}: {e}", common.program.display()))?;
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.validate(&p)?;
    Ok((p, cfg))
}

fn parse_state(text: &str) -> Result<State> {
    let mut m = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (v, x) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `var=value` in `{part}`"))?;
        m.insert(v.trim().to_string(), x.trim().parse::<i64>().with_context(|| format!("bad value in `{part}`"))?);
    }
    Ok(State::from_pairs(m.iter().map(|(v, x)| (v.as_str(), *x))))
}

// Command-line values override the configuration.
fn apply_run(cfg: &mut RunConfig, run: &RunArgs) -> Result<()> {
    if let Some(s) = &run.sigma0 {
        cfg.sigma0 = parse_state(s)?
            .iter()
            .map(|(v, x)| Ok((v.to_string(), x.to_i64().ok_or_else(|| anyhow!("value too large"))?)))
            .collect::<Result<_>>()?;
    }
    if let Some(t) = &run.temp_values {
        cfg.temp_values = t.clone();
    }
    if let Some(h) = run.horizon {
        cfg.horizon = Some(h);
    }
    Ok(())
}

fn sigma0(p: &Pip, cfg: &RunConfig) -> Result<State> {
    let s = cfg.sigma0();
    for v in &p.program_vars {
        if s.get(v).is_none() {
            bail!("initial state does not assign {v}");
        }
    }
    Ok(s)
}

fn refined(p: &Pip, cfg: &RunConfig, prune: bool) -> Result<RefinementResult> {
    let s = cfg.selection(p)?;
    let layers = cfg.layers(p)?;
    Ok(if prune {
        refine_and_prune(p, &s, &layers)?
    } else {
        refine(p, &s, &layers)?
    })
}

fn semantic(e: SemanticsError) -> anyhow::Error {
    match e {
        SemanticsError::PathCap { .. } | SemanticsError::StateCap { .. } => Negative(e.to_string()).into(),
        other => other.into(),
    }
}

fn text_or_json(format: Format, text: impl FnOnce() -> String, json: impl FnOnce() -> String) -> Result<String> {
    match format {
        Format::Text => Ok(text()),
        Format::Json => Ok(json()),
        Format::Dot => bail!("--format dot is only available for refine and export-dot"),
    }
}

fn execute(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Refine { common, no_prune } => {
            let (p, cfg) = load(common)?;
            let r = refined(&p, &cfg, !no_prune)?;
            Ok(Output::ok(match common.format {
                Format::Text => print_program(&r.program),
                Format::Dot => print_dot(&r.program),
                Format::Json => report::refine(&r).to_json(),
            }))
        }
        Command::Invariants { common } => {
            let (p, _) = load(common)?;
            let inv = infer(&p);
            text_or_json(common.format, || inv.to_string(), || report::invariants(&inv).to_json()).map(Output::ok)
        }
        Command::Bound { common, refine } => {
            let (p, cfg) = load(common)?;
            let p = if *refine { refined(&p, &cfg, true)?.program } else { p };
            let cover = match cfg.cover(&p)? {
                Some(c) => c,
                None => default_cover(&p),
            };
            let out = analyze(&p, &infer(&p), &cover)?;
            let text = || match &out {
                BoundOutcome::Bound(b) => {
                    let mut s = format!("{}\n", b.total);
                    for e in &b.entries {
                        let targets: Vec<String> = e.targets.iter().map(|&gi| p.gts[gi].label()).collect();
                        let f: Vec<String> = e.plrf.f.iter().map(|(l, a)| format!("{l}: {a}")).collect();
                        s.push_str(&format!(
                            "  {}: {} ({} PLRF {{{}}})\n",
                            targets.join(" + "),
                            e.bound,
                            e.plrf.kind,
                            f.join(", ")
                        ));
                    }
                    s
                }
                BoundOutcome::NoBound(failing) => {
                    let mut s = "no finite bound\n".to_string();
                    for (gi, reason) in failing {
                        s.push_str(&format!("  {}: {reason}\n", p.gts[*gi].label()));
                    }
                    s
                }
            };
            let text = text_or_json(common.format, text, || report::bound(&p, &out).to_json())?;
            Ok(Output {
                text,
                negative: matches!(out, BoundOutcome::NoBound(_)),
            })
        }
        Command::Enumerate { common, run, paths } => {
            let (p, mut cfg) = load(common)?;
            apply_run(&mut cfg, run)?;
            let e = enumerate(&p, &cfg.policy(&p)?, sigma0(&p, &cfg)?, cfg.horizon.unwrap_or(20), &cfg.caps())
                .map_err(semantic)?;
            let listed = if *paths { e.paths.as_slice() } else { &[] };
            let text = || {
                let r = &e.report;
                let mut s = format!(
                    "horizon: {}\ntotal_mass: {}\nexpected_truncated_runtime: {}\nterminated_mass: {}\nresidual_mass: {}\npaths: {}\n",
                    r.horizon,
                    r.total_mass,
                    r.expected_truncated_runtime,
                    r.terminated_mass,
                    r.residual_mass,
                    e.paths.len()
                );
                for (g, x) in &r.per_gt {
                    s.push_str(&format!("count {g}: {x}\n"));
                }
                for f in listed {
                    s.push_str(&format!("{} [{}]\n", f.render(&p), f.probability));
                }
                s
            };
            text_or_json(common.format, text, || report::enumerate(&p, &e.report, listed).to_json()).map(Output::ok)
        }
        Command::Simulate {
            common,
            run,
            samples,
            seed,
            step_cap,
        } => {
            let (p, mut cfg) = load(common)?;
            apply_run(&mut cfg, run)?;
            let seed = match seed.or(cfg.seed) {
                Some(s) => s,
                None => match std::env::var("PCFR_SEED") {
                    Ok(v) => v.parse().context("PCFR_SEED must be an unsigned integer")?,
                    Err(_) => 0,
                },
            };
            let samples = samples.or(cfg.samples).unwrap_or(10_000);
            if samples == 0 {
                bail!("--samples must be at least 1");
            }
            let cap = step_cap.unwrap_or(cfg.caps().steps);
            let r = monte_carlo(&p, &cfg.policy(&p)?, &sigma0(&p, &cfg)?, samples, cap, seed).map_err(semantic)?;
            let text = || format!("mean: {}\nstderr: {}\nsamples: {}\ncensored: {}\n", r.mean, r.stderr, r.samples, r.censored);
            text_or_json(common.format, text, || report::simulate(&r).to_json()).map(Output::ok)
        }
        Command::MdpSup { common, run } => {
            let (p, mut cfg) = load(common)?;
            apply_run(&mut cfg, run)?;
            let horizon = cfg.horizon.unwrap_or(20);
            let v = mdp_sup_truncated(&p, &sigma0(&p, &cfg)?, horizon, &cfg.temp_values(), &cfg.caps())
                .map_err(semantic)?;
            let text = || format!("{v}\n~ {}\n", v.to_f64().unwrap_or(f64::NAN));
            text_or_json(common.format, text, || report::mdp_sup(horizon, &v).to_json()).map(Output::ok)
        }
        Command::CheckEmbedding { common, run } => {
            let (p, mut cfg) = load(common)?;
            apply_run(&mut cfg, run)?;
            let r = refined(&p, &cfg, true)?;
            let rep = check_embedding(
                &p,
                &r,
                &cfg.policy(&p)?,
                &sigma0(&p, &cfg)?,
                cfg.horizon.unwrap_or(12),
                &cfg.caps(),
            )
            .map_err(semantic)?;
            let text = || match &rep.counterexample {
                None => format!("ok: {} paths embedded\n", rep.original_paths),
                Some(c) => format!("counterexample: {}\nreason: {}\n", c.path, c.reason),
            };
            let text = text_or_json(common.format, text, || report::check_embedding(&rep).to_json())?;
            Ok(Output {
                text,
                negative: !rep.ok(),
            })
        }
        Command::ExportDot { common } => {
            let (p, _) = load(common)?;
            Ok(Output::ok(print_dot(&p)))
        }
    }
}

fn out_path(cmd: &Command) -> Option<&Path> {
    let common = match cmd {
        Command::Refine { common, .. }
        | Command::Invariants { common }
        | Command::Bound { common, .. }
        | Command::Enumerate { common, .. }
        | Command::Simulate { common, .. }
        | Command::MdpSup { common, .. }
        | Command::CheckEmbedding { common, .. }
        | Command::ExportDot { common } => common,
    };
    common.out.as_deref()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            let written = match out_path(&cli.command) {
                Some(path) => std::fs::write(path, &out.text).with_context(|| format!("cannot write {}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            ExitCode::from(u8::from(out.negative))
        }
        Err(e) if e.is::<Negative>() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
