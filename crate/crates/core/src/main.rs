use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use asymptolab::cli::{exit_code, run, Command, RunConfig};
use asymptolab::error::Error;

/// Porosity at infinity, pretangent-space samples and cross-checks for
/// unbounded metric spaces.
#[derive(Parser, Debug)]
#[command(name = "asymptolab", version)]
struct Args {
    /// JSON run configuration (family or rule, overrides, graph settings).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Command to run; overrides the one in the spec file.
    #[arg(long, value_enum)]
    command: Option<Command>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    prefix_length: Option<usize>,
    /// log2 of the largest porosity horizon.
    #[arg(long)]
    horizon_max: Option<f64>,
    /// Window spread for the F_n scan.
    #[arg(long)]
    lambda: Option<f64>,
    /// Directory for reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn config(args: &Args) -> Result<RunConfig, Error> {
    let mut c = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if args.command.is_some() {
        c.command = args.command;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    let o = &mut c.overrides;
    o.eps_rel = args.eps_rel.or(o.eps_rel);
    o.prefix_length = args.prefix_length.or(o.prefix_length);
    o.horizon_log2_max = args.horizon_max.or(o.horizon_log2_max);
    o.lambda = args.lambda.or(o.lambda);
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ASYMPTOLAB_LOG", "error")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = config(&args).and_then(|c| run(&c, &args.out));
    match &result {
        Ok(o) => {
            for f in &o.files {
                println!("{}", args.out.join(f).display());
            }
            for f in &o.flags {
                eprintln!("inconsistency: {f}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
