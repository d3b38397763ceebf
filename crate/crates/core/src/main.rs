fn main() -> std::process::ExitCode {
    ogs::cli::main()
}
