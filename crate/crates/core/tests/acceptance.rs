//! Runs the ten acceptance criteria and prints one line per criterion.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use morreylab::harness::{emit_report, run_experiment, ExperimentConfig, Report};
use morreylab::operators::{bilinear_fractional, commutator_iterated, commutator_nested, CommutatorSpec, Slot};
use morreylab::{BoxRegion, LatticeFunction, Window};

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(name: &str) -> Result<Report, String> {
    let cfg = ExperimentConfig::from_path(&configs().join(name)).map_err(|e| e.to_string())?;
    run_experiment(&cfg).map_err(|e| e.to_string())
}

fn extras_with(r: &Report, prefix: &str) -> Vec<f64> {
    r.summary.extras.iter().filter(|(k, _)| k.starts_with(prefix)).map(|(_, v)| *v).collect()
}

fn quadrature() -> Outcome {
    let start = Instant::now();
    let w = Window::centered(1, -8, 0).map_err(|e| e.to_string())?;
    let chi = LatticeFunction::indicator(&w, &BoxRegion::new(vec![-1.0], vec![1.0]));
    let b = bilinear_fractional(&chi, &chi, 0.5).map_err(|e| e.to_string())?;
    let v = b.value_at(&[0.0]);
    let secs = start.elapsed().as_secs_f64();
    let err = (v - 4.0).abs() / 4.0;
    let msg = format!("value {v:.6}, relative error {err:.2e}, {secs:.2} s");
    if err < 0.02 && secs < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn oracles() -> Outcome {
    let (count, bad) = common::oracle_sweep(0..200, 1e-12);
    let windows = common::all_small_windows().len();
    if bad.is_empty() {
        Ok(format!("{count} comparisons on {windows} windows × 200 seeds"))
    } else {
        Err(format!("{} mismatches, first: {}", bad.len(), bad[0]))
    }
}

fn cz_invariants() -> Outcome {
    let r = run("cz_inv.cfg")?;
    let levels = extras_with(&r, "cz_levels").into_iter().fold(0.0, f64::max);
    let msg = format!(
        "{} trials, {} violations, deepest chain {} levels",
        r.provenance.trials, r.summary.invariant_violations, levels
    );
    if r.summary.invariant_violations == 0 && r.provenance.trials >= 100 && levels >= 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn domination() -> Outcome {
    let r = run("bh_dom.cfg")?;
    let excess = extras_with(&r, "max_excess").into_iter().fold(f64::NEG_INFINITY, f64::max);
    let msg = format!("{} trials, max excess {excess:e}, {} violations", r.provenance.trials, r.summary.invariant_violations);
    if r.summary.invariant_violations == 0 && excess <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn commutators() -> Outcome {
    let w = Window::centered(1, -4, 0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rand_fn = |rng: &mut ChaCha8Rng| {
        LatticeFunction::new(w.clone(), (0..w.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let mut worst_perm = 0.0f64;
    let mut worst_const = 0.0f64;
    for trial in 0..10 {
        let f = rand_fn(&mut rng);
        let g = rand_fn(&mut rng);
        for n in 1..=3usize {
            let b: Vec<LatticeFunction> = (0..n).map(|_| rand_fn(&mut rng)).collect();
            let beta: Vec<Slot> = (0..n).map(|i| if (trial + i) % 2 == 0 { Slot::First } else { Slot::Second }).collect();
            let spec = CommutatorSpec::new(b, beta.clone()).unwrap();
            let base_it = commutator_iterated(&spec, &f, &g, 0.5).unwrap();
            let base_ne = commutator_nested(&spec, &f, &g, 0.5).unwrap();
            let scale = base_it.max_abs().max(1.0);
            let perms: &[&[usize]] = match n {
                1 => &[&[0]],
                2 => &[&[1, 0]],
                _ => &[&[1, 0, 2], &[2, 0, 1], &[1, 2, 0], &[2, 1, 0], &[0, 2, 1]],
            };
            for p in perms {
                let s = spec.permuted(p);
                let it = commutator_iterated(&s, &f, &g, 0.5).unwrap();
                let ne = commutator_nested(&s, &f, &g, 0.5).unwrap();
                for c in 0..it.len() {
                    worst_perm = worst_perm.max((it.values[c] - base_it.values[c]).abs() / scale);
                    worst_perm = worst_perm.max((ne.values[c] - base_ne.values[c]).abs() / scale);
                }
            }
            let consts: Vec<LatticeFunction> = (0..n).map(|i| LatticeFunction::constant(&w, 0.5 + i as f64)).collect();
            let spec = CommutatorSpec::new(consts, beta).unwrap();
            let t = bilinear_fractional(&f, &g, 0.5).unwrap().max_abs().max(1.0);
            for out in [commutator_iterated(&spec, &f, &g, 0.5).unwrap(), commutator_nested(&spec, &f, &g, 0.5).unwrap()] {
                worst_const = worst_const.max(out.max_abs() / t);
            }
        }
    }
    let msg = format!("permutation gap {worst_perm:e}, constant-symbol residue {worst_const:e}");
    if worst_perm <= 1e-12 && worst_const <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn growth_line(r: &Report) -> String {
    format!("per-window max {:?}, growth {:?}", r.summary.per_window_max, r.summary.growth_factors)
}

fn control() -> Outcome {
    let r = run("t25.cfg")?;
    let finite = r.summary.per_window_max.iter().all(|v| v.is_finite());
    let ok = finite && r.provenance.trials >= 50 && r.summary.growth_factors.iter().all(|&g| g < 2.0);
    let msg = growth_line(&r);
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn weak_type() -> Outcome {
    let s = run("t27_sufficiency.cfg")?;
    let n = run("t27_necessity.cfg")?;
    let worst = extras_with(&n, "extremal_ratio_over_observed_constant").into_iter().fold(0.0, f64::max);
    let ok = s.summary.stable
        && s.summary.per_window_max.len() >= 3
        && n.summary.invariant_violations == 0
        && worst <= 2.0;
    let msg = format!(
        "sufficiency {}; necessity: {} violations over {} trials, worst extremal ratio / observed constant {worst:.4}",
        growth_line(&s),
        n.summary.invariant_violations,
        n.provenance.trials
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn stein_weiss() -> Outcome {
    let good = run("sw101.cfg")?;
    let bad = run("sw101_divergent.cfg")?;
    let grows = !bad.summary.growth_factors.is_empty() && bad.summary.growth_factors.iter().all(|&g| g >= 1.5);
    let ok = good.summary.stable && good.summary.per_window_max.len() >= 3 && grows;
    let msg = format!("balanced: {}; divergent: {}", growth_line(&good), growth_line(&bad));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn john_nirenberg() -> Outcome {
    let r = run("jn.cfg")?;
    let ratios = extras_with(&r, "oscillation_ratio_e");
    let pairs = extras_with(&r, "telescoping_pairs").into_iter().fold(0.0, f64::max);
    let ok = ratios.len() >= 3 && ratios.iter().all(|v| v.is_finite()) && r.summary.invariant_violations == 0 && pairs > 0.0;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let msg = format!(
        "{} ratios, max {worst:.4}; {} telescoping violations over {pairs} pairs",
        ratios.len(),
        r.summary.invariant_violations
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for name in ["t25.cfg", "t27_necessity.cfg", "cz_inv.cfg"] {
        let mut outputs = Vec::new();
        for i in 0..2 {
            let cfg = ExperimentConfig::from_path(&configs().join(name)).map_err(|e| e.to_string())?;
            let trials = cfg.trials.min(10);
            let cfg = cfg.with_trials(trials);
            let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let (csv, json) = emit_report(&r, &dir.path().join(format!("{name}.{i}"))).map_err(|e| e.to_string())?;
            outputs.push((std::fs::read(csv).unwrap(), std::fs::read(json).unwrap()));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{name} differs between runs"));
        }
        checked.push(name);
    }
    Ok(format!("byte-identical CSV and JSON for {checked:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quadrature benchmark", quadrature),
        ("oracle equivalence", oracles),
        ("stopping-time invariants", cz_invariants),
        ("pointwise domination", domination),
        ("commutator identities", commutators),
        ("maximal control", control),
        ("weak-type characterisation", weak_type),
        ("power-weight bound", stein_weiss),
        ("oscillation bounds", john_nirenberg),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(m) => println!("criterion {} ({name}): PASS [{secs:.1} s] {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1} s] {m}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
