use std::process::ExitCode;

fn main() -> ExitCode {
    let args = std::env::args().collect();
    let code = cladesim::cli::run(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
