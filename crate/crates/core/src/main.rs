use std::io::Write;
use std::process::ExitCode;

use bohr_lab::cli::{parse_config, run};

fn thread_pool() -> Result<(), String> {
    let threads = match std::env::var("BOHR_LAB_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("BOHR_LAB_THREADS must be a count, got {v:?}"))?,
        Err(_) => return Ok(()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(e) if e.code == 0 => {
            print!("{}", e.message);
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{}", e.message);
            if !e.message.ends_with('\n') {
                eprintln!();
            }
            return ExitCode::from(e.code as u8);
        }
    };
    if let Err(e) = thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(bohr_lab::cli::EXIT_RANGE as u8);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let stdin = std::io::stdin();
    let mut input = stdin.lock();
    match run(&config, &mut input, &mut out) {
        Ok(()) => {
            out.flush().ok();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
