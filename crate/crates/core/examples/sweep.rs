//! Verdict matrix over (mu, s0), written through the CLI sweep driver.
use std::path::Path;

use compfront::cli::config::ScenarioConfig;
use compfront::cli::output::OutputDir;
use compfront::cli::sweep::run_sweep;

fn main() -> compfront::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/sweep.toml");
    let cfg = ScenarioConfig::load(&path)?;
    let dir = std::env::temp_dir().join("compfront-sweep-example");
    let out = OutputDir::create(&dir)?;
    let computed = run_sweep(&cfg, &out)?;
    println!("computed {computed} cells into {}", dir.display());
    let text = std::fs::read_to_string(out.path("sweep.csv"))?;
    let sweep = cfg.sweep.unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let records: Vec<_> = rows.records().collect::<Result<_, _>>()?;
    for iy in (0..sweep.y.n).rev() {
        let line: String = (0..sweep.x.n)
            .map(|ix| match &records[iy * sweep.x.n + ix][2] {
                "spreading" => 'S',
                "vanishing" => '.',
                _ => '?',
            })
            .collect();
        println!("s0 = {:>5}  {line}", &records[iy * sweep.x.n][1]);
    }
    println!("            mu from {} to {}", sweep.x.lo, sweep.x.hi);
    Ok(())
}
