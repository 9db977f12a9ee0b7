use std::process::ExitCode;

fn main() -> ExitCode {
    let code = match ufo_cli::parse(std::env::args_os()) {
        Ok((cli, args)) => {
            ufo_cli::init_logging(cli.verbose, cli.quiet);
            match ufo_cli::commands::dispatch(cli, &args) {
                Ok(outcome) => {
                    for line in &outcome.report {
                        println!("{line}");
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(ufo_cli::CliError::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                ufo_cli::EXIT_USAGE
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
