use neb::cli;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(cli::run(&argv));
}
