use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morreylab::czd::{check_invariants, cz_decompose, cz_decompose_alpha};
use morreylab::harness::experiments::{cube_of_peak, exponent_set};
use morreylab::harness::{draw_inputs, emit_report, InputModel, run_experiment, ExperimentConfig, RawConfig, WeightSpec};
use morreylab::weights_norms::{morrey_norm, two_weight_constant, WeightConditionKind};
use morreylab::{Error, LatticeFunction};

#[derive(Parser)]
#[command(name = "morreylab", version, about = "Weighted Morrey estimates on dyadic lattices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write `<out>.csv` / `<out>.json`.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Morrey norm of a lattice function stored as CSV.
    Norm {
        csv: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// `csv:path`, `pow:γ`, `sampled:γ` or `1`; a bare path is read as CSV.
        #[arg(long)]
        weight: Option<String>,
    },
    /// Two-weight constant of one kind on every window of a config.
    WeightConst { kind: String, config: PathBuf },
    /// Stopping-time decomposition of the config's inputs, exported as JSON.
    Decompose {
        config: PathBuf,
        #[arg(long)]
        json: PathBuf,
    },
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Validation(_) | Error::InvalidExponent(_) => ExitCode::from(2),
        Error::Invariant(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Cmd) -> morreylab::Result<ExitCode> {
    match cmd {
        Cmd::Run { config, out, seed, trials } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(t) = trials {
                cfg = cfg.with_trials(t);
            }
            let report = run_experiment(&cfg)?;
            let out = out.unwrap_or_else(|| PathBuf::from(cfg.experiment.name().to_ascii_lowercase()));
            let (csv, json) = emit_report(&report, &out)?;
            let s = &report.summary;
            println!(
                "{}: rows={} max_ratio={} median_ratio={} growth={:?} stable={} violations={}",
                cfg.experiment, s.rows, s.max_ratio, s.median_ratio, s.growth_factors, s.stable, s.invariant_violations
            );
            println!("wrote {} and {}", csv.display(), json.display());
            if s.invariant_violations > 0 {
                for v in report.violations.iter().take(10) {
                    eprintln!("violation: {v}");
                }
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Norm { csv, p, q, weight } => {
            let f = LatticeFunction::read_csv(std::fs::File::open(&csv)?)?;
            let w = match weight {
                None => None,
                Some(spec) => {
                    let spec = if spec.contains(':') || spec == "1" {
                        spec.parse::<WeightSpec>()?
                    } else {
                        WeightSpec::Csv(PathBuf::from(spec))
                    };
                    Some(spec.build(&f.window, None)?)
                }
            };
            println!("{}", morrey_norm(&f, p, q, w.as_ref())?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::WeightConst { kind, config } => {
            let kind: WeightConditionKind = kind.parse()?;
            let cfg = ExperimentConfig::from_path(&config)?;
            let regime = match cfg.raw.get("regime") {
                Some(r) => r.parse()?,
                None => default_regime(kind),
            };
            let e = exponent_set(&cfg, regime)?;
            for win in cfg.windows()? {
                let v = cfg.raw.weight("v", &win)?;
                let w1 = cfg.raw.weight("w1", &win)?;
                let w2 = cfg.raw.weight("w2", &win)?;
                let c = two_weight_constant(kind, &v, &w1, &w2, &e)?;
                println!("level_min={} constant={}", win.level_min, c);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Decompose { config, json } => {
            let raw = RawConfig::from_path(&config)?;
            decompose(raw, &json)
        }
    }
}

fn default_regime(kind: WeightConditionKind) -> morreylab::exponents::Regime {
    use morreylab::exponents::Regime;
    use WeightConditionKind::*;
    match kind {
        C22 | C23 => Regime::T21,
        C24 => Regime::T22,
        C27 => Regime::T27,
        _ => Regime::T28,
    }
}

/// Keys: `dim, level_min, level_max, seed`, inputs `f, g` (`csv:path`, or
/// seeded random when absent), `Q0` is the cube at `q0_level` holding the
/// peak of `f g`, `theta = θ1, θ2` for the plain form or
/// `pair = r1, r2` with `alpha` for the weighted form, `q0_level`.
fn decompose(mut raw: RawConfig, json: &std::path::Path) -> morreylab::Result<ExitCode> {
    if raw.get("experiment").is_none() {
        raw.set("experiment", "CZ_INV");
    }
    let cfg = ExperimentConfig::from_raw(raw)?;
    let win = cfg.windows()?.into_iter().next().expect("one window");
    let model = InputModel {
        spike_probability: cfg.raw.real_or("spike_probability", 1.0)?,
        spike_scale: cfg.raw.real_or("spike_scale", 1e6)?,
        shared_spike: cfg.raw.get("shared_spike") != Some("false"),
    };
    let random = draw_inputs(&win, cfg.seed, 0, &model)?;
    let load = |key: &str, fallback: LatticeFunction| -> morreylab::Result<LatticeFunction> {
        let Some(spec) = cfg.raw.get(key) else { return Ok(fallback) };
        let path = PathBuf::from(spec.strip_prefix("csv:").unwrap_or(spec).trim());
        let path = match &cfg.raw.base_dir {
            Some(b) if path.is_relative() => b.join(path),
            _ => path,
        };
        let h = LatticeFunction::read_csv(std::fs::File::open(&path)?)?;
        if h.window != win {
            return Err(Error::InvalidArgument(format!("{} is not on the config window", path.display())));
        }
        Ok(h)
    };
    let f = load("f", random.f.clone())?;
    let g = load("g", random.g.clone())?;
    let level = cfg.raw.integer("q0_level")?.map_or(cfg.level_max, |v| v as i32);
    if !(win.level_min..=win.level_max).contains(&level) {
        return Err(Error::InvalidArgument(format!("q0_level {level} is outside the window levels")));
    }
    let q0 = cube_of_peak(&win, level, &f, &g);
    let dec = match cfg.raw.pair("theta")? {
        Some((t1, t2)) => cz_decompose(&f, &g, &q0, t1, t2)?,
        None => {
            let (r1, r2) = cfg.raw.pair("pair")?.unwrap_or((2.0, 2.0));
            cz_decompose_alpha(&f, &g, &q0, r1, r2, cfg.raw.real_or("alpha", 0.0)?)?
        }
    };
    let mut text = serde_json::to_string_pretty(&dec.to_json())?;
    text.push('\n');
    std::fs::write(json, text)?;
    let bad = check_invariants(&dec, &f, &g);
    println!("levels={} cubes={} invariant_violations={}", dec.levels.len(), dec.num_cubes(), bad.len());
    if !bad.is_empty() {
        for m in bad.iter().take(10) {
            eprintln!("violation: {m}");
        }
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
