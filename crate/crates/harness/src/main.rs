fn main() -> std::process::ExitCode {
    retrolab_harness::cli::main()
}
