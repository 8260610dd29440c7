//! Runs the `demo` subcommand in-process: builds a synthetic corpus, explains
//! its low performers and scores the explanations against the injected labels.
//!
//! cargo run --release --example cli_demo -- [out_dir] [seed]

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "demo-out".into());
    let seed = args.next().unwrap_or_else(|| "0".into());
    let code = caption_xray::cli::run(["caption-xray", "demo", "--seed", &seed, "--size", "20", "--out", &out, "--force"]);
    if code == 0 {
        let acc = std::fs::read_to_string(std::path::Path::new(&out).join("accuracy.json")).unwrap();
        println!("{acc}");
    }
    std::process::exit(code);
}
