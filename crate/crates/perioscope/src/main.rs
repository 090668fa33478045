fn main() -> std::process::ExitCode {
    perioscope::cli::main()
}
