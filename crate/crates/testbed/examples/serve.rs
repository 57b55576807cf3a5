//! Runs the testbed on a fixed port until killed: `cargo run -p wfc-testbed --example serve -- 8080`

fn main() {
    let port = std::env::args().nth(1).and_then(|p| p.parse().ok()).unwrap_or(8080);
    let bed = wfc_testbed::start_testbed(wfc_testbed::TestbedSpec {
        port,
        ..Default::default()
    })
    .expect("testbed starts");
    println!("testbed at {} (OpenAPI at {}/openapi.json)", bed.api_base(), bed.origin());
    loop {
        std::thread::park();
    }
}
