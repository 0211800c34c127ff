fn main() -> std::process::ExitCode {
    iqtomo::cli::main()
}
