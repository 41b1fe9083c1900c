//! Runs a small experiment from an inline config and prints its summary.

use morreylab::harness::{run_experiment, ExperimentConfig};

const CONFIG: &str = "
experiment = T27_sufficiency
level_max = 0
level_min = -4, -5, -6
trials = 8
seed = 7
alpha = 0.25
q1 = 4
q2 = 4
p = 2
pair = 2, 2
v = pow:0.2
w1 = pow:0.1
w2 = pow:0.1
";

fn main() -> morreylab::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let report = run_experiment(&cfg)?;
    let s = &report.summary;
    println!("{} rows, max ratio {:.4}, median {:.4}", s.rows, s.max_ratio, s.median_ratio);
    println!("per-window max {:?}", s.per_window_max);
    println!("growth {:?}, stable = {}", s.growth_factors, s.stable);
    for (k, v) in &s.extras {
        println!("  {k} = {v:.4}");
    }
    print!("{}", report.to_csv_string()?.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
