//! `fidelity` command-line entry point.

mod commands;
mod failure;
mod run_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fidelity", version, about = "Persona prompting and distributional alignment of open-ended survey answers")]
struct Cli {
    /// Log filter, e.g. `info` or `fidelity_core=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a respondent CSV and write a normalized copy.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a respondent population.
    Synth {
        /// Population TOML; the built-in population is used when omitted.
        #[arg(long)]
        population: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated wave ids.
        #[arg(long, value_delimiter = ',')]
        waves: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render persona prompts for every respondent.
    RenderPrompts {
        #[arg(long)]
        respondents: PathBuf,
        /// Prompt variant id, repeatable (all_vars, base, 1_var_age, without_region, ...).
        #[arg(long = "variant", default_value = "all_vars")]
        variants: Vec<String>,
        /// Render all 14 ablation variants.
        #[arg(long, conflicts_with = "variants")]
        ablations: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Send rendered prompts to a chat backend.
    Generate {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long, default_value = "mock")]
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Code survey answers or generated outputs into topic labels.
    Classify {
        /// Generation records (JSONL).
        #[arg(long, conflicts_with = "respondents", required_unless_present = "respondents")]
        records: Option<PathBuf>,
        /// Respondent CSV whose answers are coded as survey labels.
        #[arg(long)]
        respondents: Option<PathBuf>,
        /// Classifier service base URL; the keyword baseline is used when omitted.
        #[arg(long)]
        classifier_url: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment described by an experiment file.
    Evaluate(RunArgs),
    /// Run the 14-variant prompt ablation.
    Ablate(RunArgs),
    /// Compare survey waves with each other.
    Drift(RunArgs),
    /// Emit tables and figures for a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Figure kind, or `all` for every figure the report supports.
        #[arg(long, default_value = "all")]
        figure: String,
        /// Table format: csv, json or markdown.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output directory; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BackendArgs {
    /// Backend TOML (kind, base_url, api_key_env, temperature, ...).
    #[arg(long)]
    backend_config: Option<PathBuf>,
    /// OpenAI-compatible base URL; selects the HTTP backend.
    #[arg(long)]
    base_url: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::new(&cli.log))
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(commands::dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
