fn main() {
    std::process::exit(jedi_confetti::cli::dispatch(std::env::args_os()));
}
