use clap::error::ErrorKind;
use clap::Parser;

use sigjoin_cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = sigjoin_cli::run(cli) {
        eprintln!("sigjoin: {err}");
        std::process::exit(err.exit_code());
    }
}
