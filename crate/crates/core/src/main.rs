fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = x10clocks_core::cli::main(&args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code.code());
}
