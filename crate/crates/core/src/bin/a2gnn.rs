fn main() -> std::process::ExitCode {
    a2gnn::cli::main()
}
