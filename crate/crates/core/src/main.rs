fn main() {
    let code = splitgauntlet::cli::run(std::env::args_os());
    std::process::exit(code);
}
