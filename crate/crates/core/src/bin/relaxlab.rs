use clap::Parser;
use relaxlab::harness::{run, Kind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run a relaxation experiment from a JSON config.
#[derive(Parser)]
#[command(name = "relaxlab", version)]
struct Cli {
    /// simulate, sweep, floquet, porous, tracer or verify.
    kind: Kind,
    /// Experiment config (optional for verify).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`, then `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to RELAXLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var("RELAXLAB_THREADS").ok().and_then(|v| v.trim().parse().ok()));
    if let Some(n) = threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("relaxlab: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.kind, cli.config.as_deref(), cli.out.as_deref()) {
        Ok(m) => {
            for c in m.checks.iter().filter(|c| !c.pass) {
                eprintln!("relaxlab: check failed: {}{}", c.name, c.detail.as_ref().map(|d| format!(" ({d})")).unwrap_or_default());
            }
            println!("{} {} ({} artifacts)", m.kind, if m.pass { "PASS" } else { "FAIL" }, m.artifacts.len());
            ExitCode::from(m.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("relaxlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
