fn main() {
    std::process::exit(subbundle_lab::cli::dispatch(std::env::args_os()));
}
