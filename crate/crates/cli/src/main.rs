use clap::Parser;
use vartrace_cli::cli::{execute, Cli, Command};

fn main() {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => execute(args, &mut std::io::stdout(), &mut std::io::stderr()),
    };
    std::process::exit(code);
}
