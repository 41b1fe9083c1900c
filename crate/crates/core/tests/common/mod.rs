//! Brute-force reference implementations. Cubes are enumerated from the window
//! bounds and cells are assigned to cubes by testing their centres, so nothing
//! here goes through the library's pyramids or slot arithmetic.
#![allow(dead_code)]

use morreylab::exponents::ExponentSet;
use morreylab::weights_norms::WeightConditionKind;
use morreylab::{LatticeFunction, Weight, Window};

#[derive(Debug, Clone)]
pub struct RefCube {
    pub level: i32,
    pub lo: Vec<f64>,
    pub side: f64,
    pub cells: Vec<usize>,
}

impl RefCube {
    pub fn volume(&self) -> f64 {
        self.side.powi(self.lo.len() as i32)
    }

    pub fn contains(&self, other: &RefCube) -> bool {
        other.level <= self.level
            && self.lo.iter().zip(&other.lo).all(|(a, b)| *b >= *a && *b + other.side <= *a + self.side)
    }
}

fn centre(win: &Window, c: usize) -> Vec<f64> {
    // row-major, last axis fastest
    let h = 2f64.powi(win.level_min);
    let shape: Vec<usize> = (0..win.dim).map(|i| (win.extent[i] as usize) << (win.level_max - win.level_min)).collect();
    let mut rem = c;
    let mut idx = vec![0usize; win.dim];
    for axis in (0..win.dim).rev() {
        idx[axis] = rem % shape[axis];
        rem /= shape[axis];
    }
    (0..win.dim)
        .map(|i| win.origin_offset[i] as f64 * 2f64.powi(win.level_max) + (idx[i] as f64 + 0.5) * h)
        .collect()
}

pub fn cubes(win: &Window) -> Vec<RefCube> {
    let n = win.num_cells();
    let centres: Vec<Vec<f64>> = (0..n).map(|c| centre(win, c)).collect();
    let top = 2f64.powi(win.level_max);
    let lo: Vec<f64> = win.origin_offset.iter().map(|&o| o as f64 * top).collect();
    let hi: Vec<f64> = lo.iter().zip(&win.extent).map(|(l, &e)| l + e as f64 * top).collect();
    let mut out = Vec::new();
    for k in win.level_min..=win.level_max {
        let side = 2f64.powi(k);
        let counts: Vec<usize> = (0..win.dim).map(|i| ((hi[i] - lo[i]) / side).round() as usize).collect();
        let total: usize = counts.iter().product();
        for lin in 0..total {
            let mut rem = lin;
            let mut corner = vec![0.0; win.dim];
            for axis in (0..win.dim).rev() {
                corner[axis] = lo[axis] + (rem % counts[axis]) as f64 * side;
                rem /= counts[axis];
            }
            let cells = (0..n)
                .filter(|&c| centres[c].iter().zip(&corner).all(|(x, a)| *x >= *a && *x < *a + side))
                .collect();
            out.push(RefCube { level: k, lo: corner, side, cells });
        }
    }
    out
}

/// `(mean |v|^e)^{1/e}`; `e = ∞` is the max, negative `e` allowed for positive data.
pub fn mean_pow(vals: &[f64], cells: &[usize], e: f64) -> f64 {
    if e.is_infinite() {
        return cells.iter().map(|&c| vals[c].abs()).fold(0.0, f64::max);
    }
    let s: f64 = cells.iter().map(|&c| vals[c].abs().powf(e)).sum();
    (s / cells.len() as f64).powf(1.0 / e)
}

pub fn conj(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x == 1.0 {
        f64::INFINITY
    } else {
        x / (x - 1.0)
    }
}

pub fn m_alpha_r(f: &LatticeFunction, g: &LatticeFunction, alpha: f64, r: (f64, f64)) -> Vec<f64> {
    let win = &f.window;
    let n = win.dim as f64;
    let cs = cubes(win);
    (0..win.num_cells())
        .map(|c| {
            cs.iter()
                .filter(|q| q.cells.contains(&c))
                .map(|q| q.volume().powf(alpha / n) * mean_pow(&f.values, &q.cells, r.0) * mean_pow(&g.values, &q.cells, r.1))
                .fold(0.0, f64::max)
        })
        .collect()
}

pub fn morrey_norm(f: &LatticeFunction, p: f64, q: f64, w: Option<&Weight>) -> f64 {
    cubes(&f.window)
        .iter()
        .map(|cube| {
            let s: f64 = cube
                .cells
                .iter()
                .map(|&c| f.values[c].abs().powf(q) * w.map_or(1.0, |w| w.values()[c]))
                .sum();
            cube.volume().powf(1.0 / p) * (s / cube.cells.len() as f64).powf(1.0 / q)
        })
        .fold(0.0, f64::max)
}

/// `(fint_Q w^{-x})^{1/x}`, `x = ∞` giving `max 1/w`.
fn dual(w: &Weight, cells: &[usize], x: f64) -> f64 {
    if x.is_infinite() {
        return cells.iter().map(|&c| 1.0 / w.values()[c]).fold(0.0, f64::max);
    }
    let s: f64 = cells.iter().map(|&c| w.values()[c].powf(-x)).sum();
    (s / cells.len() as f64).powf(1.0 / x)
}

pub fn two_weight_constant(kind: WeightConditionKind, v: &Weight, w1: &Weight, w2: &Weight, e: &ExponentSet) -> f64 {
    use WeightConditionKind::*;
    let cs = cubes(v.window());
    let (s, t, a) = (e.s, e.t, e.a);
    match kind {
        C210 | C211 => {
            let (r1, r2) = if kind == C210 { (e.r1, e.r2) } else { (e.q1 / e.q, e.q2 / e.q) };
            cs.iter()
                .map(|q| {
                    let joint: f64 = q
                        .cells
                        .iter()
                        .map(|&c| w1.values()[c].powf(s / e.q1) * w2.values()[c].powf(s / e.q2))
                        .sum::<f64>()
                        / q.cells.len() as f64;
                    let part = |u: &Weight, qi: f64, ri: f64| {
                        let m: f64 = q.cells.iter().map(|&c| u.values()[c].powf(-ri / (qi - ri))).sum::<f64>()
                            / q.cells.len() as f64;
                        m.powf((qi - ri) / (ri * qi))
                    };
                    joint.powf(1.0 / s) * part(w1, e.q1, r1) * part(w2, e.q2, r2)
                })
                .fold(0.0, f64::max)
        }
        _ => {
            let ratio_exp = match kind {
                C22 => (1.0 - s) / (a * s),
                C23 => (1.0 - a * s) / (a * s),
                C24 => 1.0 / (a * s),
                _ => 1.0 / s,
            };
            let v_exp = match kind {
                C22 | C23 if t == 1.0 => f64::INFINITY,
                C22 | C23 => a * t / (1.0 - t),
                C24 => a * t,
                _ => t,
            };
            let w_exp = |qi: f64, ri: f64| match kind {
                C22 | C23 | C24 => conj(qi / a),
                C27 if qi == ri => f64::INFINITY,
                C27 => ri * conj(qi / ri),
                _ => ri * conj(qi / (a * ri)),
            };
            let r_fac = |qp: &RefCube| if kind == CBH || e.r.is_infinite() { 1.0 } else { qp.volume().powf(1.0 / e.r) };
            let mut best = 0.0f64;
            for q in &cs {
                for qp in cs.iter().filter(|qp| qp.contains(q)) {
                    let val = (q.volume() / qp.volume()).powf(ratio_exp)
                        * r_fac(qp)
                        * mean_pow(v.values(), &q.cells, v_exp)
                        * dual(w1, &qp.cells, w_exp(e.q1, e.r1))
                        * dual(w2, &qp.cells, w_exp(e.q2, e.r2));
                    best = best.max(val);
                }
            }
            best
        }
    }
}

/// Small windows: at most three levels and sixteen cells.
pub fn small_windows() -> Vec<Window> {
    vec![
        Window::centered(1, -2, 0).unwrap(),
        Window::centered(1, -1, 0).unwrap(),
        Window::new(1, -2, 0, vec![0], vec![1]).unwrap(),
        Window::new(1, -1, 1, vec![-1], vec![2]).unwrap(),
        Window::new(1, -3, -1, vec![3], vec![2]).unwrap(),
        Window::centered(2, -1, 0).unwrap(),
        Window::new(2, -2, 0, vec![0, -1], vec![1, 1]).unwrap(),
        Window::new(2, 0, 0, vec![-2, 0], vec![4, 4]).unwrap(),
    ]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Every window with at most three levels and sixteen cells, in one and two
/// dimensions, with a couple of placements each.
pub fn all_small_windows() -> Vec<Window> {
    let mut out = Vec::new();
    for span in 0..=2i32 {
        for lmax in [-1, 0, 1] {
            let per = 1i64 << span;
            for e in 1..=16 / per {
                for off in [0, -(e / 2) - 1] {
                    out.push(Window::new(1, lmax - span, lmax, vec![off], vec![e]).unwrap());
                }
            }
            let per2 = per * per;
            for e1 in 1..=16 / per2 {
                for e2 in 1..=(16 / per2) / e1 {
                    out.push(Window::new(2, lmax - span, lmax, vec![-1, 0], vec![e1, e2]).unwrap());
                }
            }
        }
    }
    out
}

/// Exponent set for `kind` in dimension `n`; `α` scales with `n` so that
/// `s` and `t` do not depend on the dimension.
pub fn exponent_set_for(kind: WeightConditionKind, n: usize) -> ExponentSet {
    use morreylab::exponents::Regime;
    use WeightConditionKind::*;
    let nf = n as f64;
    let inf = f64::INFINITY;
    let (regime, alpha, q, p, r, a, pair) = match kind {
        C22 => (Regime::T21, 0.9, 1.2, 0.6, 2.0, 1.1, None),
        C23 => (Regime::T21, 0.9, 1.2, 0.8, 2.0, 1.1, None),
        C24 => (Regime::T22, 0.25, 4.0, 2.0, inf, 2.0, None),
        C27 => (Regime::T27, 0.25, 4.0, 2.0, inf, 1.0, Some((2.0, 2.0))),
        C29 | CBH => (Regime::T28, 0.25, 4.0, 2.0, inf, 1.5, Some((2.0, 2.0))),
        C210 | C211 => (Regime::T28, 0.25, 4.0, 2.0, inf, 1.0, Some((2.0, 2.0))),
    };
    let mut e = ExponentSet::solved(regime, n, alpha * nf, q, q, p, r, a).unwrap();
    if let Some((r1, r2)) = pair {
        e.r1 = r1;
        e.r2 = r2;
    }
    e
}

pub const ALL_KINDS: [WeightConditionKind; 8] = {
    use WeightConditionKind::*;
    [C22, C23, C24, C27, C29, C210, C211, CBH]
};

fn random_field(win: &Window, rng: &mut impl rand::Rng, lo: f64, hi: f64) -> LatticeFunction {
    let vals = (0..win.num_cells()).map(|_| rng.gen_range(lo..hi)).collect();
    LatticeFunction::new(win.clone(), vals).unwrap()
}

fn random_weight(win: &Window, rng: &mut impl rand::Rng) -> Weight {
    Weight::new(random_field(win, rng, 0.5, 2.0)).unwrap()
}

/// Compares the library against the brute-force versions for each seed on
/// every small window. Returns `(comparisons, mismatches)`.
pub fn oracle_sweep(seeds: std::ops::Range<u64>, tol: f64) -> (usize, Vec<String>) {
    use morreylab::maximal::{m_alpha_r as lib_m, Mode};
    use morreylab::weights_norms::{morrey_norm as lib_norm, two_weight_constant as lib_const};
    use rand::SeedableRng;
    let inf = f64::INFINITY;
    let windows = all_small_windows();
    let mut count = 0usize;
    let mut bad = Vec::new();
    for seed in seeds {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for win in &windows {
            let f = random_field(win, &mut rng, -2.0, 2.0);
            let g = random_field(win, &mut rng, -2.0, 2.0);
            let (v, w1, w2) = (random_weight(win, &mut rng), random_weight(win, &mut rng), random_weight(win, &mut rng));
            let tag = |what: &str| format!("seed {seed}, {what}, window {win:?}");
            for (alpha, pair) in [(0.0, (2.0, 2.0)), (0.3, (1.5, 3.0)), (0.7, (1.0, inf)), (0.5, (inf, inf))] {
                let got = lib_m(&f, &g, alpha, pair, Mode::Dyadic).unwrap();
                let want = m_alpha_r(&f, &g, alpha, pair);
                count += 1;
                if let Some(c) = (0..want.len()).find(|&c| !rel_close(got.values[c], want[c], tol)) {
                    bad.push(tag(&format!("M α={alpha} {pair:?} cell {c}: {} vs {}", got.values[c], want[c])));
                }
            }
            for (p, q) in [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)] {
                for w in [None, Some(&v)] {
                    let got = lib_norm(&f, p, q, w).unwrap();
                    let want = morrey_norm(&f, p, q, w);
                    count += 1;
                    if !rel_close(got, want, tol) {
                        bad.push(tag(&format!("Morrey p={p} q={q} weighted={}: {got} vs {want}", w.is_some())));
                    }
                }
            }
            for kind in ALL_KINDS {
                let e = exponent_set_for(kind, win.dim);
                let got = lib_const(kind, &v, &w1, &w2, &e).unwrap();
                let want = two_weight_constant(kind, &v, &w1, &w2, &e);
                count += 1;
                if !rel_close(got, want, tol) {
                    bad.push(tag(&format!("{kind:?}: {got} vs {want}")));
                }
            }
        }
    }
    (count, bad)
}
