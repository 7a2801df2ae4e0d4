use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use xikernel::cli::run;
use xikernel::config::RunConfig;

/// Weighted xi-Bergman kernels: kernel evaluation, psh scans, jet-ideal
/// annihilators, Lambda scans and minimal extensions.
#[derive(Parser, Debug)]
#[command(name = "xikernel", version)]
struct Args {
    /// JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized steps; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(t) = args.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match fs::read_to_string(&args.config)
        .map_err(xikernel::Error::from)
        .and_then(|s| RunConfig::from_json(&s))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let out = match run(&cfg, args.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg.command());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    for a in &out.artifacts {
        let path = args.out.join(&a.name);
        if let Err(e) = fs::write(&path, &a.contents) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for s in &out.summary {
        println!("{}: {s}", cfg.command());
    }
    if out.failed {
        println!("{}: FAIL", cfg.command());
        ExitCode::from(1)
    } else {
        println!("{}: PASS", cfg.command());
        ExitCode::SUCCESS
    }
}
