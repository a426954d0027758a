fn main() {
    std::process::exit(autolabel3d::cli::cli_main(std::env::args_os()));
}
