fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HARMTILE_LOG", "warn")).init();
    std::process::exit(harmtile::cli::run(std::env::args_os()));
}
