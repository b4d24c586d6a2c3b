use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(congrua::cli::run())
}
