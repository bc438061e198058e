fn main() -> std::process::ExitCode {
    qsd::cli::run()
}
