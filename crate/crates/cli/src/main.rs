use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    // a second interrupt falls through to the default behaviour
    if let Err(e) = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("wfc: interrupt received, finishing the current call");
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    std::process::exit(wfc_cli::main_with_args(std::env::args_os(), stop));
}
