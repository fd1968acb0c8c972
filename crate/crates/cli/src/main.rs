use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match canteen_cli::parse(std::env::args().skip(1)) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match canteen_cli::execute(&cli.command, &mut io::stdout().lock(), &mut io::stderr()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
