fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(transmon_lru::cli::main_with_args(std::env::args_os()))
}
