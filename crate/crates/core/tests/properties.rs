mod common;

use proptest::prelude::*;

use morreylab::czd::{check_invariants, cz_decompose, cz_decompose_alpha};
use morreylab::harness::{run_experiment, ExperimentConfig};
use morreylab::maximal::{m_alpha_r, Mode};
use morreylab::operators::{bh_maximal, bilinear_fractional, commutator_iterated, commutator_nested, CommutatorSpec, Slot};
use morreylab::weights_norms::{ap_constant, rh_constant, two_weight_constant, weak_morrey_functional};
use morreylab::{Cube, LatticeFunction, Weight, Window};

fn win1() -> Window {
    Window::centered(1, -3, 0).unwrap()
}

fn field(win: &Window, vals: &[f64]) -> LatticeFunction {
    LatticeFunction::new(win.clone(), vals.to_vec()).unwrap()
}

fn values(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bilinear_integral_is_bilinear(
        f1 in values(16, -2.0, 2.0), f2 in values(16, -2.0, 2.0),
        g in values(16, -2.0, 2.0), c in -3.0..3.0f64,
    ) {
        let w = win1();
        let (f1, f2, g) = (field(&w, &f1), field(&w, &f2), field(&w, &g));
        let mix = f1.zip_with(&f2, |a, b| c * a + b).unwrap();
        let lhs = bilinear_fractional(&mix, &g, 0.5).unwrap();
        let a = bilinear_fractional(&f1, &g, 0.5).unwrap();
        let b = bilinear_fractional(&f2, &g, 0.5).unwrap();
        let scale = lhs.max_abs().max(a.max_abs()).max(1.0);
        for i in 0..lhs.len() {
            prop_assert!((lhs.values[i] - (c * a.values[i] + b.values[i])).abs() <= 1e-10 * scale);
        }
        let swapped = bilinear_fractional(&g, &mix, 0.5).unwrap();
        prop_assert!(swapped.max_abs().is_finite());
    }

    #[test]
    fn bh_is_dominated_by_centred_maximal(
        f in values(16, 0.0, 3.0), g in values(16, 0.0, 3.0), r1 in 1.0..6.0f64,
    ) {
        let w = win1();
        let (f, g) = (field(&w, &f), field(&w, &g));
        let r2 = if r1 == 1.0 { f64::INFINITY } else { r1 / (r1 - 1.0) };
        let bh = bh_maximal(&f, &g).unwrap();
        let m = m_alpha_r(&f, &g, 0.0, (r1, r2), Mode::Centered).unwrap();
        for (a, b) in bh.values.iter().zip(&m.values) {
            prop_assert!(*a <= b + 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn weak_functional_below_strong(
        level in values(16, 0.0, 5.0), v in values(16, 0.5, 2.0), t in 0.5..4.0f64,
    ) {
        let w = win1();
        let f = field(&w, &level);
        let v = Weight::new(field(&w, &v)).unwrap();
        let q0 = Cube::new(0, vec![-1]);
        let s = 2.0 * t;
        let weak = weak_morrey_functional(&f, &v, t, s, &q0).unwrap();
        let mut integral = 0.0;
        w.for_each_cell_in_cube(&q0, |c| integral += (f.values[c] * v.values()[c]).powf(t) * w.cell_volume());
        let strong = q0.volume().powf(1.0 / s - 1.0 / t) * integral.powf(1.0 / t);
        prop_assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn reverse_holder_and_ap_at_least_one(v in values(16, 0.1, 10.0), nu in 1.1..4.0f64, p in 1.1..4.0f64) {
        let wt = Weight::new(field(&win1(), &v)).unwrap();
        prop_assert!(rh_constant(&wt, nu).unwrap() >= 1.0 - 1e-12);
        prop_assert!(ap_constant(&wt, p).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn weight_constants_grow_with_the_window(a in 0.1..3.0f64, b in -0.4..0.4f64) {
        // the larger window keeps every cell and cube of the smaller one
        let small = win1();
        let large = Window::new(1, -3, 1, vec![-1], vec![2]).unwrap();
        let wt = |w: &Window, e: f64| Weight::new(LatticeFunction::from_fn(w, |x| a + x[0].abs().powf(e)).unwrap()).unwrap();
        for kind in common::ALL_KINDS {
            let e = common::exponent_set_for(kind, 1);
            let cs = two_weight_constant(kind, &wt(&small, b), &wt(&small, 0.2), &wt(&small, -0.1), &e).unwrap();
            let cl = two_weight_constant(kind, &wt(&large, b), &wt(&large, 0.2), &wt(&large, -0.1), &e).unwrap();
            prop_assert!(cl >= cs * (1.0 - 1e-12), "{kind:?}: {cl} < {cs}");
        }
    }

    #[test]
    fn stopping_cubes_satisfy_invariants(
        base in values(64, 0.0, 1.0), spike in 0usize..64, height in 1.0..1e8f64, shared in any::<bool>(),
    ) {
        let w = Window::single(&Cube::unit(1), -6).unwrap();
        let mut fv = base.clone();
        fv[spike] += height;
        let mut gv: Vec<f64> = base.iter().rev().copied().collect();
        if shared {
            gv[spike] += height;
        }
        let (f, g) = (field(&w, &fv), field(&w, &gv));
        let q0 = Cube::unit(1);
        let d = cz_decompose(&f, &g, &q0, 1.05, 1.05).unwrap();
        let bad = check_invariants(&d, &f, &g);
        prop_assert!(bad.is_empty(), "{:?}", bad);
        let d = cz_decompose_alpha(&f, &g, &q0, 2.0, 2.0, 0.1).unwrap();
        let bad = check_invariants(&d, &f, &g);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn commutator_routes_agree_and_permute(
        b1 in values(16, -1.0, 1.0), b2 in values(16, -1.0, 1.0), b3 in values(16, -1.0, 1.0),
        f in values(16, -1.0, 1.0), g in values(16, -1.0, 1.0), slots in prop::collection::vec(any::<bool>(), 3),
    ) {
        let w = win1();
        let bs = vec![field(&w, &b1), field(&w, &b2), field(&w, &b3)];
        let beta: Vec<Slot> = slots.iter().map(|&s| if s { Slot::First } else { Slot::Second }).collect();
        let spec = CommutatorSpec::new(bs, beta).unwrap();
        let (f, g) = (field(&w, &f), field(&w, &g));
        let it = commutator_iterated(&spec, &f, &g, 0.5).unwrap();
        let ne = commutator_nested(&spec, &f, &g, 0.5).unwrap();
        let scale = it.max_abs().max(1.0);
        for i in 0..it.len() {
            prop_assert!((it.values[i] - ne.values[i]).abs() <= 1e-10 * scale);
        }
        let p = commutator_iterated(&spec.permuted(&[2, 0, 1]), &f, &g, 0.5).unwrap();
        for i in 0..it.len() {
            prop_assert!(close(it.values[i], p.values[i], 1e-12));
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let text = "experiment = T25\nlevel_max = 0\nlevel_min = -3, -4\ntrials = 3\nseed = 5\n\
                alpha = 0.5\np = 2\nq = 1\npair = 2, 2\nw = pow:0.5\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    let c = run_experiment(&cfg.clone().with_seed(6)).unwrap();
    assert_ne!(a.to_csv_string().unwrap(), c.to_csv_string().unwrap());
}

#[test]
fn domination_survives_extreme_pairs() {
    let w = win1();
    let f = LatticeFunction::from_fn(&w, |x| 2.5 + x[0]).unwrap();
    let g = LatticeFunction::from_fn(&w, |x| 3.0 - x[0] * x[0]).unwrap();
    let bh = bh_maximal(&f, &g).unwrap();
    let r1 = 1.0 + 1e-7;
    let m = m_alpha_r(&f, &g, 0.0, (r1, r1 / (r1 - 1.0)), Mode::Centered).unwrap();
    for (a, b) in bh.values.iter().zip(&m.values) {
        assert!(b.is_finite() && *a <= b + 1e-12 * b);
    }
}
