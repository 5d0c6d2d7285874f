use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CUBOID_TRACK_LOG", "info"))
        .format_timestamp(None)
        .init();
    log::info!("{}", cuboid_track_cli::defaults_line());
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = cuboid_track_cli::run(std::env::args_os(), &mut out);
    let _ = out.flush();
    std::process::exit(code);
}
