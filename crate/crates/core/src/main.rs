fn main() {
    std::process::exit(caption_xray::cli::run(std::env::args_os()));
}
