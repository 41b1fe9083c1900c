//! Integrals of `|x|^γ` over axis-aligned boxes.
//!
//! In one dimension the antiderivative is used directly. In higher
//! dimensions a box with the origin as a corner is handled by exact
//! self-similarity, other boxes by tensor Gauss–Legendre with dyadic
//! subdivision near the origin.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Default subdivision depth near the origin.
pub const DEFAULT_DEPTH: u32 = 12;

const GL_POINTS: usize = 10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration.
pub fn gauss_legendre(npts: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; npts];
    let mut weights = vec![0.0; npts];
    let n = npts as f64;
    for i in 0..npts.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=npts {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[npts - 1 - i] = x;
        weights[i] = w;
        weights[npts - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_table() -> &'static (Vec<f64>, Vec<f64>) {
    static T: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    T.get_or_init(|| gauss_legendre(GL_POINTS))
}

/// `∫_a^b |x|^γ dx` in one dimension. Requires `γ > -1` when `[a,b]` meets 0.
pub fn power_integral_1d(a: f64, b: f64, gamma: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        prim(b, gamma) - prim(a, gamma)
    } else if b <= 0.0 {
        prim(-a, gamma) - prim(-b, gamma)
    } else {
        prim(-a, gamma) + prim(b, gamma)
    }
}

/// `∫_0^x t^γ dt` for `x >= 0`, with the `γ = -1` case as a log difference
/// (only used away from 0, where it cancels).
fn prim(x: f64, gamma: f64) -> f64 {
    if (gamma + 1.0).abs() < 1e-300 {
        x.ln()
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(gamma + 1.0) / (gamma + 1.0)
    }
}

fn dist_to_origin(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| {
            let d = if l > 0.0 {
                l
            } else if h < 0.0 {
                -h
            } else {
                0.0
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn gl_box(lo: &[f64], hi: &[f64], gamma: f64) -> f64 {
    let (nodes, weights) = gl_table();
    let n = lo.len();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).collect();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (h + l)).collect();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut r2 = 0.0;
        let mut w = 1.0;
        for a in 0..n {
            let x = mid[a] + half[a] * nodes[idx[a]];
            r2 += x * x;
            w *= weights[idx[a]];
        }
        total += w * r2.powf(0.5 * gamma);
        let mut a = n;
        loop {
            if a == 0 {
                let jac: f64 = half.iter().product();
                return total * jac;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < GL_POINTS {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// `∫_{[0,1)^n} |x|^γ dx`, cached per `(n, γ)`.
pub fn unit_corner_integral(n: usize, gamma: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, gamma.to_bits());
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return *v;
    }
    let v = if n == 1 {
        1.0 / (gamma + 1.0)
    } else {
        // J(1) = J(1/2) + ring, J(1/2) = 2^{-(n+γ)} J(1)
        let mut ring = 0.0;
        for mask in 1..1usize << n {
            let lo: Vec<f64> = (0..n).map(|a| if (mask >> a) & 1 == 1 { 0.5 } else { 0.0 }).collect();
            let hi: Vec<f64> = lo.iter().map(|l| l + 0.5).collect();
            ring += adaptive(&lo, &hi, gamma, 0, 20);
        }
        ring / (1.0 - 2f64.powf(-(n as f64 + gamma)))
    };
    cache.lock().unwrap().insert(key, v);
    v
}

fn is_corner_cube(lo: &[f64], hi: &[f64]) -> Option<f64> {
    let s = hi[0] - lo[0];
    for (&l, &h) in lo.iter().zip(hi) {
        if !(l == 0.0 || h == 0.0) || ((h - l) - s).abs() > 1e-14 * s {
            return None;
        }
    }
    Some(s)
}

fn adaptive(lo: &[f64], hi: &[f64], gamma: f64, depth: u32, max_depth: u32) -> f64 {
    let n = lo.len();
    if let Some(s) = is_corner_cube(lo, hi) {
        return s.powf(n as f64 + gamma) * unit_corner_integral(n, gamma);
    }
    let diam = lo
        .iter()
        .zip(hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt();
    let d = dist_to_origin(lo, hi);
    if d >= 2.0 * diam || depth >= max_depth || gamma == 0.0 {
        if d == 0.0 {
            // origin touches a non-cubic piece at the depth limit: midpoint
            let c: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
            let r: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let vol: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
            return r.powf(gamma) * vol;
        }
        return gl_box(lo, hi, gamma);
    }
    let mut total = 0.0;
    for mask in 0..1usize << n {
        let mut clo = vec![0.0; n];
        let mut chi = vec![0.0; n];
        for a in 0..n {
            let m = 0.5 * (lo[a] + hi[a]);
            if (mask >> a) & 1 == 0 {
                clo[a] = lo[a];
                chi[a] = m;
            } else {
                clo[a] = m;
                chi[a] = hi[a];
            }
        }
        total += adaptive(&clo, &chi, gamma, depth + 1, max_depth);
    }
    total
}

/// `∫_B |x|^γ dx` over the box `[lo, hi)`. Requires `γ > -n` when the box
/// meets the origin.
pub fn power_integral(lo: &[f64], hi: &[f64], gamma: f64, depth: u32) -> f64 {
    let n = lo.len();
    if n == 1 {
        return power_integral_1d(lo[0], hi[0], gamma);
    }
    // split at the origin on every axis it crosses, so that each piece
    // either avoids 0 or has it as a corner
    let mut pieces: Vec<(Vec<f64>, Vec<f64>)> = vec![(lo.to_vec(), hi.to_vec())];
    for a in 0..n {
        if lo[a] < 0.0 && hi[a] > 0.0 {
            pieces = pieces
                .into_iter()
                .flat_map(|(l, h)| {
                    let mut h1 = h.clone();
                    h1[a] = 0.0;
                    let mut l2 = l.clone();
                    l2[a] = 0.0;
                    [(l, h1), (l2, h)]
                })
                .collect();
        }
    }
    pieces
        .iter()
        .map(|(l, h)| adaptive(l, h, gamma, 0, depth))
        .sum()
}

/// Mean of `|x|^γ` over the box.
pub fn power_average(lo: &[f64], hi: &[f64], gamma: f64, depth: u32) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    let vol: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
    power_integral(lo, hi, gamma, depth) / vol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_POINTS);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        for deg in 0..2 * GL_POINTS {
            let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((num - exact).abs() < 1e-13, "deg {deg}");
        }
    }

    #[test]
    fn one_dimensional_closed_forms() {
        assert!((power_integral_1d(0.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((power_integral_1d(-1.0, 1.0, -0.5) - 4.0).abs() < 1e-14);
        let h = 0.125;
        assert!((power_average(&[0.0], &[h], -0.5, 12) - 2.0 / h.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn square_quadratic_is_exact() {
        // ∫_{[0,1)^2} x^2 + y^2 = 2/3
        let v = power_integral(&[0.0, 0.0], &[1.0, 1.0], 2.0, 12);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let v = power_integral(&[-1.0, -1.0], &[1.0, 1.0], 2.0, 12);
        assert!((v - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn corner_integral_matches_polar_disk_bound() {
        // γ = -1 in n = 2: ∫_{[0,1)^2} 1/|x| = 2 ln(1 + √2)
        let v = unit_corner_integral(2, -1.0);
        assert!((v - 2.0 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn scaling_of_origin_boxes() {
        let g = -0.7;
        let a = power_integral(&[-0.5, -0.5], &[0.5, 0.5], g, 12);
        let b = power_integral(&[-1.0, -1.0], &[1.0, 1.0], g, 12);
        assert!((b / a - 2f64.powf(2.0 + g)).abs() < 1e-10);
    }

    #[test]
    fn off_origin_box_against_fine_midpoint() {
        let g = -1.3;
        let lo = [0.25, 0.0];
        let hi = [0.5, 0.25];
        let v = power_integral(&lo, &hi, g, 12);
        let m = 2000;
        let h = 0.25 / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = 0.25 + (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                s += (x * x + y * y).powf(0.5 * g) * h * h;
            }
        }
        assert!((v - s).abs() / s < 1e-6, "{v} {s}");
    }
}
