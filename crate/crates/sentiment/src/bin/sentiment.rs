fn main() {
    std::process::exit(sentiment_protocol::cli::main_with_args(std::env::args()));
}
