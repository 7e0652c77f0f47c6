use std::process::ExitCode;

use ntd::CliError;

fn main() -> ExitCode {
    match ntd::run(std::env::args_os()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("ntd: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
