fn main() {
    std::process::exit(skillsphere::cli::run(std::env::args_os()));
}
