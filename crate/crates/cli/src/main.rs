use clap::Parser;

use fitest::{exit_code, resolve, run, Cli, SEED_ENV};

fn main() {
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = resolve(&cli, env_seed.as_deref()).and_then(|s| run(&s));
    match &result {
        Ok(outcome) => print!("{}", outcome.stdout),
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
