fn main() -> std::process::ExitCode {
    nlcs::cli::main()
}
