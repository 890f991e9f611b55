fn main() {
    std::process::exit(voidfwi::cli::dispatch(std::env::args_os()));
}
