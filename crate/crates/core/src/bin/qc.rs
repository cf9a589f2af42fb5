fn main() -> std::process::ExitCode {
    qc_core::cli::main()
}
