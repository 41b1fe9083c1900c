//! Bilinear fractional maximal operators: the dyadic `M_{α,R⃗}`, a centred
//! variant for comparison with `BH`, the single-function `M_θ`, and the
//! weighted 3Q-averaged operator used in the two-weight estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{BoxRegion, Window};
use crate::error::{Error, Result};
use crate::field::{cube_power_means, dilate3_power_means, LatticeFunction, Weight, INF};
use crate::operators::dyadic_radii;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mode {
    /// Sup over dyadic window cubes containing the cell.
    #[default]
    Dyadic,
    /// Sup over boxes `[x-r, x+r]^n` with dyadic `r`, averages taken over
    /// the part inside the window.
    Centered,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dyadic" => Ok(Mode::Dyadic),
            "centered" | "centred" => Ok(Mode::Centered),
            other => Err(Error::Parse(format!("unknown maximal mode `{other}`"))),
        }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::InvalidExponent(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

fn check_same(a: &Window, b: &Window) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument("inputs live on different windows".into()));
    }
    Ok(())
}

/// `|Q|^{α/n}` for a cube of level `k`.
fn scale(k: i32, alpha: f64) -> f64 {
    2f64.powf(k as f64 * alpha)
}

/// `M_{α,R⃗}(f,g)(x) = sup_{Q∋x} |Q|^{α/n} (fint_Q |f|^{r1})^{1/r1} (fint_Q |g|^{r2})^{1/r2}`.
/// Either exponent may be `INF`.
pub fn m_alpha_r(
    f: &LatticeFunction,
    g: &LatticeFunction,
    alpha: f64,
    pair: (f64, f64),
    mode: Mode,
) -> Result<LatticeFunction> {
    check_same(&f.window, &g.window)?;
    check_positive("r1", pair.0)?;
    check_positive("r2", pair.1)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidExponent(format!("α = {alpha} must be ≥ 0")));
    }
    let w = &f.window;
    match mode {
        Mode::Dyadic => {
            let a = cube_power_means(w, &f.values, pair.0)?;
            let b = cube_power_means(w, &g.values, pair.1)?;
            let per: Vec<Vec<f64>> = a
                .iter()
                .zip(&b)
                .enumerate()
                .map(|(j, (la, lb))| {
                    let c = scale(w.level_min + j as i32, alpha);
                    la.iter().zip(lb).map(|(x, y)| c * x * y).collect()
                })
                .collect();
            LatticeFunction::new(w.clone(), w.sup_over_ancestors(&per))
        }
        Mode::Centered => {
            let radii = dyadic_radii(w);
            let values = (0..w.num_cells())
                .into_par_iter()
                .map(|c| {
                    let x = w.cell_center(c);
                    let mut best = 0.0f64;
                    for &r in &radii {
                        let b = BoxRegion::centered(&x, r);
                        let v = (2.0 * r).powf(alpha)
                            * f.power_avg(&b, pair.0)?
                            * g.power_avg(&b, pair.1)?;
                        best = best.max(v);
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<f64>>>()?;
            LatticeFunction::new(w.clone(), values)
        }
    }
}

/// Dyadic `M_θ f(x) = sup_{Q∋x} (fint_Q |f|^θ)^{1/θ}`.
pub fn m_theta(f: &LatticeFunction, theta: f64) -> Result<LatticeFunction> {
    check_positive("θ", theta)?;
    let w = &f.window;
    let per = cube_power_means(w, &f.values, theta)?;
    LatticeFunction::new(w.clone(), w.sup_over_ancestors(&per))
}

/// `sup_{Q∋x} |Q|^{α/n} (fint_{3Q}|f|^{ρ1})^{1/ρ1} (fint_{3Q}|g|^{ρ2})^{1/ρ2} (fint_Q v^{e})^{1/e}`
/// with `3Q` clipped to the window and `e = w_exp` (`INF` is the max of `v` on `Q`).
pub fn m_joint_weighted(
    f: &LatticeFunction,
    g: &LatticeFunction,
    v: &Weight,
    alpha: f64,
    rho: (f64, f64),
    w_exp: f64,
) -> Result<LatticeFunction> {
    check_same(&f.window, &g.window)?;
    check_same(&f.window, v.window())?;
    check_positive("ρ1", rho.0)?;
    check_positive("ρ2", rho.1)?;
    check_positive("weight exponent", w_exp)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidExponent(format!("α = {alpha} must be ≥ 0")));
    }
    let w = &f.window;
    let a = dilate3_power_means(w, &f.values, rho.0)?;
    let b = dilate3_power_means(w, &g.values, rho.1)?;
    let c = cube_power_means(w, v.values(), w_exp)?;
    let per: Vec<Vec<f64>> = (0..a.len())
        .map(|j| {
            let s = scale(w.level_min + j as i32, alpha);
            (0..a[j].len()).map(|i| s * a[j][i] * b[j][i] * c[j][i]).collect()
        })
        .collect();
    LatticeFunction::new(w.clone(), w.sup_over_ancestors(&per))
}

/// Weight exponent of the weighted maximal operator for a given `t`:
/// `θ3 t/(1-t)` for `t < 1`, `INF` for `t = 1`, `a t` for `t > 1`.
pub fn joint_weight_exponent(t: f64, theta3: f64, a: f64) -> f64 {
    if (t - 1.0).abs() < 1e-12 {
        INF
    } else if t < 1.0 {
        theta3 * t / (1.0 - t)
    } else {
        a * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Cube;
    use crate::operators::bh_maximal;

    fn ramp(w: &Window) -> LatticeFunction {
        LatticeFunction::from_fn(w, |x| 1.0 + x.iter().sum::<f64>().abs()).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let w = Window::centered(1, -3, 0).unwrap();
        let one = LatticeFunction::constant(&w, 1.0);
        let m = m_alpha_r(&one, &one, 0.0, (2.0, 2.0), Mode::Dyadic).unwrap();
        assert!(m.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let c = LatticeFunction::constant(&w, 3.5);
        let m = m_theta(&c, 1.5).unwrap();
        assert!(m.values.iter().all(|&v| (v - 3.5).abs() < 1e-14));
    }

    #[test]
    fn single_cube_window_has_one_candidate() {
        let top = Cube::new(1, vec![0]);
        let w = Window::single(&top, 1).unwrap();
        let f = LatticeFunction::new(w.clone(), vec![3.0]).unwrap();
        let g = LatticeFunction::new(w.clone(), vec![0.5]).unwrap();
        let m = m_alpha_r(&f, &g, 0.5, (2.0, 3.0), Mode::Dyadic).unwrap();
        assert!((m.values[0] - 2f64.powf(0.5) * 1.5).abs() < 1e-14);
    }

    #[test]
    fn dyadic_matches_cube_list() {
        let w = Window::centered(1, -2, 0).unwrap();
        let f = ramp(&w);
        let g = LatticeFunction::from_fn(&w, |x| (5.0 * x[0]).cos().abs()).unwrap();
        let m = m_alpha_r(&f, &g, 0.3, (1.5, 3.0), Mode::Dyadic).unwrap();
        for c in 0..w.num_cells() {
            let mut best = 0.0f64;
            for q in w.cubes_containing(&w.cell_center(c)).unwrap() {
                let v = q.volume().powf(0.3)
                    * f.cube_power_avg(&q, 1.5).unwrap()
                    * g.cube_power_avg(&q, 3.0).unwrap();
                best = best.max(v);
            }
            assert!((m.values[c] - best).abs() < 1e-12 * best);
        }
    }

    #[test]
    fn own_cell_is_a_candidate() {
        let w = Window::centered(2, -2, 0).unwrap();
        let f = ramp(&w);
        let m = m_theta(&f, 1.0).unwrap();
        assert!(f.values.iter().zip(&m.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn bh_below_centered() {
        let w = Window::centered(1, -4, 0).unwrap();
        let f = ramp(&w);
        let g = LatticeFunction::from_fn(&w, |x| if x[0] > 0.2 { 4.0 } else { 0.5 }).unwrap();
        let bh = bh_maximal(&f, &g).unwrap();
        for pair in [(2.0, 2.0), (1.5, 3.0), (4.0, 4.0 / 3.0), (1.0, INF)] {
            let m = m_alpha_r(&f, &g, 0.0, pair, Mode::Centered).unwrap();
            for (a, b) in bh.values.iter().zip(&m.values) {
                assert!(*a <= b + 1e-12, "{a} > {b} for {pair:?}");
            }
        }
    }

    #[test]
    fn joint_with_unit_weight() {
        let w = Window::centered(1, -2, 0).unwrap();
        let f = ramp(&w);
        let one = Weight::unit(&w);
        let a = m_joint_weighted(&f, &f, &one, 0.0, (1.0, 1.0), INF).unwrap();
        // 3Q of the top cubes is the whole window, so the sup is at least the global mean squared
        let mean = f.values.iter().sum::<f64>() / f.len() as f64;
        assert!(a.values.iter().all(|&v| v >= mean * mean - 1e-12));
        assert_eq!(joint_weight_exponent(1.0, 2.0, 3.0), INF);
        assert_eq!(joint_weight_exponent(0.5, 2.0, 3.0), 2.0);
        assert_eq!(joint_weight_exponent(2.0, 2.0, 3.0), 6.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        let w = Window::centered(1, -1, 0).unwrap();
        let f = ramp(&w);
        assert!(m_alpha_r(&f, &f, 0.0, (0.0, 1.0), Mode::Dyadic).is_err());
        assert!(m_theta(&f, -1.0).is_err());
    }
}
