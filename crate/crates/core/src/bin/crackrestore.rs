use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crackrestore::config::RunConfig;
use crackrestore::metrics::format_table;
use crackrestore::pipeline;
use crackrestore::{Error, Result};

/// Annotation-free craquelure detection and virtual restoration.
#[derive(Parser)]
#[command(name = "crackrestore", version, arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batch work (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Keep detector and refined masks written by `restore`.
    #[arg(long, global = true)]
    keep_intermediate: bool,
    /// Override any config key, e.g. `--set detect.threshold=170`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a synthetic clean/masks/damaged dataset.
    Generate {
        /// Directory of source PNGs; omit with --procedural.
        sources: Option<PathBuf>,
        /// Render this many procedural paintings instead of reading sources.
        #[arg(long)]
        procedural: Option<usize>,
    },
    /// Detect crack candidates with top-hat filtering.
    Detect {
        /// Images or directories of PNGs.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Also write the mask before size filtering.
        #[arg(long)]
        no_size_filter: bool,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        se: Option<String>,
        #[arg(long)]
        threshold: Option<u8>,
    },
    /// Refine a detector mask with the configured provider.
    Refine {
        image: PathBuf,
        mask: PathBuf,
        /// `passthrough` or `external`.
        #[arg(long)]
        provider: Option<String>,
        /// External command template using {image}, {mask} and {out}.
        #[arg(long)]
        command: Option<String>,
    },
    /// Fill masked pixels.
    Inpaint {
        image: PathBuf,
        mask: PathBuf,
        /// `ad` or `mtm`.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Score predictions against a dataset.
    Evaluate { dataset: PathBuf, predictions: PathBuf },
    /// Detect, refine and inpaint in one pass.
    Restore {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        command: Option<String>,
    },
}

fn push(overrides: &mut Vec<String>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        overrides.push(format!("{key}={}", v.to_string()));
    }
}

// Quoted so TOML parsing cannot reinterpret the value.
fn push_str(overrides: &mut Vec<String>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        overrides.push(format!("{key}={}", toml::Value::String(v.to_string())));
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let g = &cli.global;
    let mut o = g.set.clone();
    push(&mut o, "seed", g.seed);
    push(&mut o, "jobs", g.jobs);
    push_str(&mut o, "out", g.out.as_ref().map(|p| p.display().to_string()));
    match cli.command.as_ref() {
        None => {}
        Some(Cmd::Generate { procedural, .. }) => push(&mut o, "generate.procedural", *procedural),
        Some(Cmd::Detect { variant, se, threshold, .. }) => {
            push_str(&mut o, "detect.variant", variant.as_ref());
            push_str(&mut o, "detect.se", se.as_ref());
            push(&mut o, "detect.threshold", *threshold);
        }
        Some(Cmd::Refine { provider, command, .. }) => {
            push_str(&mut o, "refine.provider", provider.as_ref());
            push_str(&mut o, "refine.command", command.as_ref());
        }
        Some(Cmd::Inpaint { method, iterations, .. }) => {
            push_str(&mut o, "inpaint.method", method.as_ref());
            push(&mut o, "inpaint.iterations", *iterations);
        }
        Some(Cmd::Restore { method, provider, command, .. }) => {
            push_str(&mut o, "inpaint.method", method.as_ref());
            push_str(&mut o, "refine.provider", provider.as_ref());
            push_str(&mut o, "refine.command", command.as_ref());
        }
        Some(Cmd::Evaluate { .. }) => {}
    }
    RunConfig::load(g.config.as_deref(), &o)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = build_config(cli)?;
    if cli.global.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config("missing subcommand (see --help)".into()));
    };
    match command {
        Cmd::Generate { sources, .. } => {
            let m = pipeline::cmd_generate(&cfg, sources.as_deref())?;
            println!("wrote {} triplets to {}", m.images.len(), cfg.out.display());
            Ok(true)
        }
        Cmd::Detect { inputs, no_size_filter, .. } => {
            let outcome = pipeline::cmd_detect(&cfg, inputs, *no_size_filter)?;
            for p in &outcome.written {
                println!("{}", p.display());
            }
            for (p, e) in &outcome.failures {
                eprintln!("error: {}: {e}", p.display());
            }
            Ok(outcome.all_ok())
        }
        Cmd::Refine { image, mask, .. } => {
            println!("{}", pipeline::cmd_refine(&cfg, image, mask)?.display());
            Ok(true)
        }
        Cmd::Inpaint { image, mask, .. } => {
            let r = pipeline::cmd_inpaint(&cfg, image, mask)?;
            println!(
                "{}: {} pixels filled with {} in {:.3}s",
                r.image_id, r.masked_pixels, r.method, r.seconds
            );
            Ok(true)
        }
        Cmd::Evaluate { dataset, predictions } => {
            let eval = pipeline::cmd_evaluate(&cfg, dataset, predictions)?;
            let mut rows = eval.images.clone();
            rows.push(eval.mean.clone());
            print!("{}", format_table(&rows));
            for m in &eval.missing {
                eprintln!("warning: no prediction for {m}");
            }
            Ok(true)
        }
        Cmd::Restore { images, .. } => {
            let files = pipeline::expand_inputs(images)?;
            let mut ok = true;
            for f in &files {
                match pipeline::cmd_restore(&cfg, f, cli.global.keep_intermediate) {
                    Ok(r) => println!("{}: {} crack pixels", display_name(f), r.refined_pixels),
                    Err(e) => {
                        eprintln!("error: {}: {e}", f.display());
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
    }
}

fn display_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
