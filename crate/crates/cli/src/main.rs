use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ehrenfest_cli::run::{peaks_path, trajectory_path};
use ehrenfest_cli::{run, RunConfig, RunError};

/// Derives and integrates Ehrenfest equations for the configured bosonic system.
#[derive(Parser, Debug)]
#[command(name = "ehrenfest", version)]
struct Args {
    /// JSON run configuration; repeat to run several configurations in parallel.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Print the equations of motion and exit.
    #[arg(long)]
    derive_only: bool,
    /// Compare against exact state-vector evolution.
    #[arg(long)]
    check_oracle: bool,
    /// Also report agreement of the order-k BCH series for <q[0]>.
    #[arg(long, value_name = "K")]
    bch_order: Option<usize>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, value_name = "PATH", default_value = ".")]
    out_dir: PathBuf,
}

fn load_all(args: &Args) -> Result<Vec<RunConfig>, RunError> {
    let mut configs = Vec::new();
    for path in &args.configs {
        let mut c = RunConfig::load(path)?;
        c.outputs.derive_only |= args.derive_only;
        c.outputs.oracle_check |= args.check_oracle;
        if args.bch_order.is_some() {
            c.outputs.bch_order = args.bch_order;
        }
        configs.push(c);
    }
    let mut seen = HashSet::new();
    for c in configs.iter().filter(|c| !c.outputs.derive_only) {
        for p in std::iter::once(trajectory_path(c, &args.out_dir)).chain(peaks_path(c, &args.out_dir)) {
            if !seen.insert(p.clone()) {
                return Err(RunError::Config(format!("several runs would write {}", p.display())));
            }
        }
    }
    Ok(configs)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let configs = match load_all(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let results: Vec<Result<String, RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(|| run(c, &args.out_dir))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(RunError::Other("run panicked".into())))).collect()
    });
    let mut code = 0;
    for (path, result) in args.configs.iter().zip(results) {
        if configs.len() > 1 {
            println!("== {}", path.display());
        }
        match result {
            Ok(report) => print!("{report}"),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                if code == 0 {
                    code = e.exit_code();
                }
            }
        }
    }
    ExitCode::from(code as u8)
}
