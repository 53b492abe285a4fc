fn main() -> std::process::ExitCode {
    mpprl::cli::main()
}
