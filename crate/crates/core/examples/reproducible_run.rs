//! Runs an experiment into a scratch directory, replays it from its manifest
//! and compares the outputs byte for byte.

use amsim::experiments::{load_preset, replay, run_command, Command};

fn main() -> amsim::Result<()> {
    let root = std::env::temp_dir().join(format!("amsim-replay-{}", std::process::id()));
    let cfg = load_preset("toy_1d", &["run.n_mc=100".into()])?;
    let first = run_command(Command::Estimate, &cfg, &root.join("first"))?;
    let second = replay(&root.join("first/manifest.json"), &root.join("second"))?;
    assert_eq!(first.run_id, second.run_id);
    for f in &first.outputs {
        let a = std::fs::read(root.join("first").join(f))?;
        let b = std::fs::read(root.join("second").join(f))?;
        println!("{f}: {} bytes, identical = {}", a.len(), a == b);
    }
    println!("{}", std::fs::read_to_string(root.join("first/summary.csv"))?);
    std::fs::remove_dir_all(&root)?;
    Ok(())
}
