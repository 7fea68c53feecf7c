fn main() {
    std::process::exit(mvjoint::cli::run(std::env::args_os()));
}
