fn main() -> std::process::ExitCode {
    azitrack::cli::main()
}
