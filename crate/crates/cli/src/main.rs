fn main() {
    std::process::exit(oda_bench::run(std::env::args_os()));
}
