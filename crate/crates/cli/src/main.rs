use std::process::ExitCode;

use risklab_cli::{execute, parse_args, thread_limit, CliError, THREADS_ENV};

fn run() -> Result<String, CliError> {
    let command = parse_args(std::env::args().skip(1))?;
    let threads = thread_limit(std::env::var(THREADS_ENV).ok().as_deref())?;
    match threads {
        None => execute(&command),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::new(risklab_cli::FailureKind::Usage, e.to_string()))?;
            pool.install(|| execute(&command))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
