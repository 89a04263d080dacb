use std::process::ExitCode;

use clap::Parser;
use regsel_core::cli::{load_dataset, run, summary_line, Args};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = args.into_config().and_then(|cfg| {
        let summary = run(&cfg)?;
        let dataset = load_dataset(&cfg)?;
        for r in &summary.runs {
            println!("{}", summary_line(&dataset, r));
        }
        Ok(summary.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
