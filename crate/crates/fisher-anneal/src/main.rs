fn main() -> std::process::ExitCode {
    let code = fisher_anneal::cli::run(std::env::args_os());
    std::process::ExitCode::from(u8::try_from(code).unwrap_or(1))
}
