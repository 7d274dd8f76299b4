use robust_rating::cli;

fn main() {
    // honor the thread cap before anything touches the global rayon pool
    if let Ok(raw) = std::env::var("ROBUST_RATING_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
    if let Err(e) = cli::run() {
        eprintln!("error: {e}");
        std::process::exit(cli::exit_code(&e));
    }
}
