use clap::Parser;

use statecap_cli::args::{Cli, Command};
use statecap_cli::commands;
use statecap_cli::error::{exit, CliError};

fn run(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Capacity(a) => commands::capacity(a),
        Command::Region(a) => commands::region(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: worker pool: {e}");
            std::process::exit(exit::RUNTIME);
        }
    }
    let code = run(&cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    std::process::exit(code);
}
