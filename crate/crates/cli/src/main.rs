use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match ccbound_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors, not partial failures
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ccbound_cli::EXIT_OK,
                _ => ccbound_cli::EXIT_CONFIG,
            };
            std::process::exit(code);
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = ccbound_cli::run(&cli, &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
