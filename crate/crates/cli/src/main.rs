fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(valdet_cli::run(&args));
}
