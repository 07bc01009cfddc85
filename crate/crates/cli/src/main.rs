use clap::Parser;
use extremal_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = run(cli, &mut stdout.lock()) {
        eprintln!("extremal: {e}");
        std::process::exit(e.exit_code());
    }
}
