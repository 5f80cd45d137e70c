fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(gl4::cli::run(&argv));
}
