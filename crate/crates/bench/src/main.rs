fn main() {
    std::process::exit(dpim_bench::cli::main());
}
