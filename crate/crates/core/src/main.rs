use std::process::ExitCode;

fn main() -> ExitCode {
    noisy_duel::cli::main()
}
