//! Quadrature for the bilinear fractional integral, its multilinear
//! generalisation, iterated commutators and the bilinear maximal operator.
//!
//! The output is sampled at finest-cell centres `x_j`. The `y` variable runs
//! over cells of the same size centred at `m h`, so `x_j ± y_m` are again
//! cell centres and
//!
//! ```text
//! B_α(f,g)(x_j) = Σ_m K̄_m f_{j-m} g_{j+m} h^n,   K̄_m = fint_{y-cell m} |y|^{α-n}
//! ```
//!
//! with the kernel averaged exactly. Samples outside the window are zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::Window;
use crate::error::{Error, Result};
use crate::field::LatticeFunction;
use crate::quadrature;

/// Which argument a commutator symbol acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    First = 1,
    Second = 2,
}

/// Symbols `b_1..b_N` and their slots `β_1..β_N` of an iterated commutator.
#[derive(Debug, Clone)]
pub struct CommutatorSpec {
    pub b: Vec<LatticeFunction>,
    pub beta: Vec<Slot>,
}

impl CommutatorSpec {
    pub fn new(b: Vec<LatticeFunction>, beta: Vec<Slot>) -> Result<Self> {
        if b.len() != beta.len() {
            return Err(Error::InvalidArgument(format!(
                "{} symbols but {} slots",
                b.len(),
                beta.len()
            )));
        }
        Ok(CommutatorSpec { b, beta })
    }

    pub fn empty() -> Self {
        CommutatorSpec { b: Vec::new(), beta: Vec::new() }
    }

    /// Number of symbols acting on the first slot.
    pub fn m(&self) -> usize {
        self.beta.iter().filter(|&&s| s == Slot::First).count()
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Reorders symbols and slots together: entry `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        CommutatorSpec {
            b: perm.iter().map(|&i| self.b[i].clone()).collect(),
            beta: perm.iter().map(|&i| self.beta[i]).collect(),
        }
    }
}

/// Exact averages of `|y|^γ` over the `y`-cells, indexed by `|m|` per axis.
struct KernelTable {
    radius: Vec<usize>,
    values: Vec<f64>,
}

impl KernelTable {
    fn new(window: &Window, gamma: f64, radius: Vec<usize>) -> Self {
        let h = window.cell_side();
        let n = window.dim;
        let total: usize = radius.iter().map(|r| r + 1).product();
        let values = (0..total)
            .into_par_iter()
            .map(|lin| {
                let m = unravel(lin, &radius.iter().map(|r| r + 1).collect::<Vec<_>>());
                let lo: Vec<f64> = m.iter().map(|&k| (k as f64 - 0.5) * h).collect();
                let hi: Vec<f64> = m.iter().map(|&k| (k as f64 + 0.5) * h).collect();
                if n == 1 {
                    quadrature::power_integral_1d(lo[0], hi[0], gamma) / h
                } else {
                    quadrature::power_average(&lo, &hi, gamma, quadrature::DEFAULT_DEPTH)
                }
            })
            .collect();
        KernelTable { radius, values }
    }

    #[inline]
    fn get(&self, m: &[i64]) -> f64 {
        let mut lin = 0usize;
        for (a, &k) in m.iter().enumerate() {
            let k = k.unsigned_abs() as usize;
            if k > self.radius[a] {
                return 0.0;
            }
            lin = lin * (self.radius[a] + 1) + k;
        }
        self.values[lin]
    }
}

fn unravel(mut lin: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; shape.len()];
    for a in (0..shape.len()).rev() {
        out[a] = lin % shape[a];
        lin /= shape[a];
    }
    out
}

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::InvalidExponent(format!("α = {alpha} outside (0, {n})")));
    }
    Ok(())
}

fn same_window(fs: &[&LatticeFunction]) -> Result<Window> {
    let w = fs[0].window.clone();
    if fs.iter().any(|f| f.window != w) {
        return Err(Error::InvalidArgument("inputs live on different windows".into()));
    }
    Ok(w)
}

/// Runs `body(j, m)` over every offset `m` with `j - m` and `j + m` inside
/// the window, in lexicographic order of `m`.
#[inline]
fn for_each_symmetric_offset(shape: &[usize], j: &[usize], mut body: impl FnMut(&[i64])) {
    let n = shape.len();
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for a in 0..n {
        let (ja, na) = (j[a] as i64, shape[a] as i64);
        lo[a] = (-ja).max(ja - (na - 1));
        hi[a] = ja.min(na - 1 - ja);
    }
    let mut m = lo.clone();
    loop {
        body(&m);
        let mut a = n;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            m[a] += 1;
            if m[a] <= hi[a] {
                break;
            }
            m[a] = lo[a];
        }
    }
}

#[inline]
fn offset_index(shape: &[usize], j: &[usize], m: &[i64], sign: i64) -> usize {
    let mut lin = 0usize;
    for a in 0..shape.len() {
        lin = lin * shape[a] + (j[a] as i64 + sign * m[a]) as usize;
    }
    lin
}

/// Shared evaluation of `Σ_m K̄_m Φ(j, m) f_{j-m} g_{j+m} h^n`, where `Φ`
/// is a per-offset factor (1 for the plain operator).
fn bilinear_core(
    f: &LatticeFunction,
    g: &LatticeFunction,
    alpha: f64,
    factor: impl Fn(usize, usize, usize) -> f64 + Sync,
) -> Result<LatticeFunction> {
    let w = same_window(&[f, g])?;
    check_alpha(alpha, w.dim)?;
    let shape = w.shape();
    let kernel = KernelTable::new(&w, alpha - w.dim as f64, shape.iter().map(|s| s - 1).collect());
    let hn = w.cell_volume();
    let values: Vec<f64> = (0..w.num_cells())
        .into_par_iter()
        .map(|jl| {
            let j = w.local_index(jl);
            let mut acc = 0.0;
            for_each_symmetric_offset(&shape, &j, |m| {
                let minus = offset_index(&shape, &j, m, -1);
                let plus = offset_index(&shape, &j, m, 1);
                let fg = f.values[minus] * g.values[plus];
                if fg != 0.0 {
                    acc += kernel.get(m) * (fg * factor(jl, minus, plus));
                }
            });
            acc * hn
        })
        .collect();
    LatticeFunction::new(w, values)
}

/// `B_α(f,g)(x) = ∫ f(x-y) g(x+y) |y|^{α-n} dy` at every cell centre.
pub fn bilinear_fractional(f: &LatticeFunction, g: &LatticeFunction, alpha: f64) -> Result<LatticeFunction> {
    bilinear_core(f, g, alpha, |_, _, _| 1.0)
}

/// `BT_α = B_{n-α}`.
pub fn bt_alpha(f: &LatticeFunction, g: &LatticeFunction, alpha: f64) -> Result<LatticeFunction> {
    let n = f.window.dim as f64;
    check_alpha(alpha, f.window.dim)?;
    bilinear_fractional(f, g, n - alpha)
}

/// Iterated commutator `[b⃗, B_α]_β⃗(f,g)` by the product formula
/// `∏_{β_i=1}(b_i(x)-b_i(x-y)) ∏_{β_i=2}(b_i(x)-b_i(x+y))`.
pub fn commutator_iterated(
    spec: &CommutatorSpec,
    f: &LatticeFunction,
    g: &LatticeFunction,
    alpha: f64,
) -> Result<LatticeFunction> {
    for b in &spec.b {
        if b.window != f.window {
            return Err(Error::InvalidArgument("symbol on a different window".into()));
        }
    }
    bilinear_core(f, g, alpha, |j, minus, plus| {
        let mut prod = 1.0;
        for (b, slot) in spec.b.iter().zip(&spec.beta) {
            let other = match slot {
                Slot::First => minus,
                Slot::Second => plus,
            };
            prod *= b.values[j] - b.values[other];
        }
        prod
    })
}

/// The same commutator from its nested definition
/// `[b, T]_1(f,g) = b T(f,g) - T(b f, g)`, `[b, T]_2(f,g) = b T(f,g) - T(f, b g)`.
/// Costs `2^N` evaluations of `B_α`.
pub fn commutator_nested(
    spec: &CommutatorSpec,
    f: &LatticeFunction,
    g: &LatticeFunction,
    alpha: f64,
) -> Result<LatticeFunction> {
    fn go(
        spec: &CommutatorSpec,
        depth: usize,
        f: &LatticeFunction,
        g: &LatticeFunction,
        alpha: f64,
    ) -> Result<LatticeFunction> {
        if depth == 0 {
            return bilinear_fractional(f, g, alpha);
        }
        let b = &spec.b[depth - 1];
        let inner = go(spec, depth - 1, f, g, alpha)?;
        let moved = match spec.beta[depth - 1] {
            Slot::First => go(spec, depth - 1, &b.zip_with(f, |x, y| x * y)?, g, alpha)?,
            Slot::Second => go(spec, depth - 1, f, &b.zip_with(g, |x, y| x * y)?, alpha)?,
        };
        let lhs = b.zip_with(&inner, |x, y| x * y)?;
        lhs.zip_with(&moved, |x, y| x - y)
    }
    go(spec, spec.len(), f, g, alpha)
}

/// `I_{α,k}(f_1..f_k)(x) = ∫ ∏ f_j(x - θ_j y) |y|^{α-n} dy`, with point
/// lookup of `f_j` at `x - θ_j y_m` (half-open cells; zero outside).
pub fn multilinear_fractional(fs: &[LatticeFunction], thetas: &[f64], alpha: f64) -> Result<LatticeFunction> {
    if fs.is_empty() || fs.len() != thetas.len() {
        return Err(Error::InvalidArgument("need one θ per function".into()));
    }
    if let Some(i) = thetas.iter().position(|&t| t == 0.0 || !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("θ_{} must be nonzero", i + 1)));
    }
    let refs: Vec<&LatticeFunction> = fs.iter().collect();
    let w = same_window(&refs)?;
    check_alpha(alpha, w.dim)?;
    let n = w.dim;
    let h = w.cell_side();
    let shape = w.shape();
    let min_theta = thetas.iter().fold(f64::INFINITY, |m, t| m.min(t.abs()));
    // any y with |θ y| beyond the window width gives a zero sample
    let radius: Vec<usize> = shape
        .iter()
        .map(|&s| (s as f64 / min_theta).ceil() as usize + 1)
        .collect();
    let kernel = KernelTable::new(&w, alpha - n as f64, radius.clone());
    let hn = w.cell_volume();
    let values: Vec<f64> = (0..w.num_cells())
        .into_par_iter()
        .map(|jl| {
            let x = w.cell_center(jl);
            let mut acc = 0.0;
            let mut m: Vec<i64> = radius.iter().map(|&r| -(r as i64)).collect();
            let mut pt = vec![0.0; n];
            'outer: loop {
                let mut prod = 1.0;
                for (f, &th) in fs.iter().zip(thetas) {
                    for a in 0..n {
                        pt[a] = x[a] - th * (m[a] as f64 * h);
                    }
                    prod *= f.value_at(&pt);
                    if prod == 0.0 {
                        break;
                    }
                }
                if prod != 0.0 {
                    acc += kernel.get(&m) * prod;
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break 'outer;
                    }
                    a -= 1;
                    m[a] += 1;
                    if m[a] <= radius[a] as i64 {
                        break;
                    }
                    m[a] = -(radius[a] as i64);
                }
            }
            acc * hn
        })
        .collect();
    LatticeFunction::new(w, values)
}

/// Dyadic radii `2^{level_min-1}, …, 2^{level_max}` used by the centred sups.
pub fn dyadic_radii(window: &Window) -> Vec<f64> {
    (window.level_min - 1..=window.level_max).map(|k| 2f64.powi(k)).collect()
}

/// `BH(f,g)(x) = sup_r (2r)^{-n} ∫_{[-r,r]^n} |f(x-y) g(x+y)| dy` over the
/// dyadic radii. The integrand is constant on the `y`-cells, so each
/// average is an exact overlap sum.
pub fn bh_maximal(f: &LatticeFunction, g: &LatticeFunction) -> Result<LatticeFunction> {
    let w = same_window(&[f, g])?;
    let n = w.dim;
    let h = w.cell_side();
    let shape = w.shape();
    let radii = dyadic_radii(&w);
    let values: Vec<f64> = (0..w.num_cells())
        .into_par_iter()
        .map(|jl| {
            let j = w.local_index(jl);
            let mut best = 0.0f64;
            for &r in &radii {
                let mut acc = 0.0;
                for_each_symmetric_offset(&shape, &j, |m| {
                    let mut ov = 1.0;
                    for a in 0..n {
                        let lo = ((m[a] as f64 - 0.5) * h).max(-r);
                        let hi = ((m[a] as f64 + 0.5) * h).min(r);
                        ov *= (hi - lo).max(0.0);
                    }
                    if ov > 0.0 {
                        let minus = offset_index(&shape, &j, m, -1);
                        let plus = offset_index(&shape, &j, m, 1);
                        acc += (f.values[minus] * g.values[plus]).abs() * ov;
                    }
                });
                best = best.max(acc / (2.0 * r).powi(n as i32));
            }
            best
        })
        .collect();
    LatticeFunction::new(w, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{BoxRegion, Cube};

    fn centered(level_min: i32) -> Window {
        Window::centered(1, level_min, 0).unwrap()
    }

    #[test]
    fn indicator_benchmark() {
        let w = centered(-6);
        let one = LatticeFunction::constant(&w, 1.0);
        let out = bilinear_fractional(&one, &one, 0.5).unwrap();
        let h = w.cell_side();
        let at0 = out.value_at(&[0.0]);
        assert!((at0 - 4.0 * (1.0 - h / 2.0).sqrt()).abs() < 1e-12, "{at0}");
    }

    #[test]
    fn zero_input_gives_zero() {
        let w = centered(-3);
        let z = LatticeFunction::zeros(&w);
        let g = LatticeFunction::from_fn(&w, |x| 1.0 + x[0]).unwrap();
        assert!(bilinear_fractional(&z, &g, 0.5).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(bt_alpha(&g, &z, 0.3).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(bilinear_fractional(&g, &g, 0.0).is_err());
        assert!(bilinear_fractional(&g, &g, 1.0).is_err());
    }

    #[test]
    fn multilinear_reduces_to_bilinear() {
        let w = centered(-3);
        let f = LatticeFunction::from_fn(&w, |x| (3.0 * x[0]).sin() + 1.5).unwrap();
        let g = LatticeFunction::from_fn(&w, |x| x[0] * x[0]).unwrap();
        let b = bilinear_fractional(&f, &g, 0.4).unwrap();
        let m = multilinear_fractional(&[f, g], &[1.0, -1.0], 0.4).unwrap();
        assert_eq!(b.values, m.values);
    }

    #[test]
    fn commutator_routes_agree() {
        let w = centered(-3);
        let f = LatticeFunction::from_fn(&w, |x| 1.0 + x[0].abs()).unwrap();
        let g = LatticeFunction::from_fn(&w, |x| 2.0 - x[0]).unwrap();
        let b1 = LatticeFunction::from_fn(&w, |x| x[0]).unwrap();
        let b2 = LatticeFunction::from_fn(&w, |x| (x[0] * 4.0).cos()).unwrap();
        let spec = CommutatorSpec::new(vec![b1, b2], vec![Slot::Second, Slot::First]).unwrap();
        assert_eq!(spec.m(), 1);
        let a = commutator_iterated(&spec, &f, &g, 0.5).unwrap();
        let b = commutator_nested(&spec, &f, &g, 0.5).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12 * (1.0 + x.abs()), "{x} {y}");
        }
    }

    #[test]
    fn empty_commutator_is_the_operator() {
        let w = centered(-2);
        let f = LatticeFunction::from_fn(&w, |x| 1.0 + x[0]).unwrap();
        let a = commutator_iterated(&CommutatorSpec::empty(), &f, &f, 0.5).unwrap();
        assert_eq!(a, bilinear_fractional(&f, &f, 0.5).unwrap());
    }

    #[test]
    fn bh_of_indicators() {
        let w = Window::single(&Cube::unit(1), 0).unwrap();
        let one = LatticeFunction::constant(&w, 1.0);
        let bh = bh_maximal(&one, &one).unwrap();
        assert_eq!(bh.values, vec![1.0]);
        let w = centered(-3);
        let chi = LatticeFunction::indicator(&w, &BoxRegion::new(vec![0.0], vec![1.0]));
        let bh = bh_maximal(&chi, &chi).unwrap();
        // at x = 1/2 - h/2 the radius-h/2 window sees a full product
        let x = 0.5 - w.cell_side() / 2.0;
        assert_eq!(bh.value_at(&[x]), 1.0);
        assert_eq!(bh.value_at(&[-0.5]), 0.0);
    }

    #[test]
    fn two_dimensional_kernel_is_finite() {
        let w = Window::centered(2, -2, 0).unwrap();
        let one = LatticeFunction::constant(&w, 1.0);
        let out = bilinear_fractional(&one, &one, 1.0).unwrap();
        assert!(out.values.iter().all(|v| v.is_finite() && *v > 0.0));
        let m = multilinear_fractional(&[one.clone(), one.clone()], &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(out.values, m.values);
    }
}
