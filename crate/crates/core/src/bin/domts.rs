fn main() { std::process::exit(domts::cli::main()); }
