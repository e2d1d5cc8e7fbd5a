fn main() -> std::process::ExitCode {
    plp::cli::main()
}
