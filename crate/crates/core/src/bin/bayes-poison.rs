fn main() -> std::process::ExitCode {
    bayes_poison::cli::main()
}
