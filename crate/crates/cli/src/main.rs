use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kdvb_cli::{exit_code, report_error, run_file};

/// Pseudospectral KdV-Burgers laboratory. The subcommand is named in the config file.
#[derive(Parser, Debug)]
#[command(name = "kdvb", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
        {
            eprintln!("{{\"error\":\"threads\",\"message\":\"{e}\",\"exit_code\":1}}");
            return ExitCode::from(1);
        }
    }
    match run_file(&args.config, args.out, args.seed) {
        Ok(a) => {
            println!("{}", a.output.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&mut std::io::stderr(), &e);
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
