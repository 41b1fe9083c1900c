//! Morrey norms, the weak-type Morrey functional, the two-weight constants
//! and A_p / reverse-Hölder constants, all as sups over window cubes.

use serde::{Deserialize, Serialize};

use crate::dyadic::{Cube, Window};
use crate::error::{Error, Result};
use crate::exponents::{conj, ensure_valid, recip, validate, ExponentSet, Regime, TOL};
use crate::field::{cube_power_means, LatticeFunction, Weight, INF};

/// Which two-weight condition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightConditionKind {
    /// `t ≤ 1`, `s < 1`: ratio exponent `(1-s)/(as)`, `v^{at/(1-t)}`.
    C22,
    /// `t ≤ 1`, `s ≥ 1`: ratio exponent `(1-as)/(as)`.
    C23,
    /// `t > 1`: ratio exponent `1/(as)`, `v^{at}`.
    C24,
    /// Weak-type characterisation: `w_i^{-r_i (q_i/r_i)'}`.
    C27,
    /// Strong maximal: `w_i^{-r_i (q_i/(a r_i))'}`.
    C29,
    /// Single-cube condition on `u1, u2`.
    C210,
    /// `C210` with `r_i = q_i / q`.
    C211,
    /// `C29` without the `|Q'|^{1/r}` factor.
    CBH,
}

impl std::str::FromStr for WeightConditionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use WeightConditionKind::*;
        match s.trim().to_ascii_uppercase().as_str() {
            "C22" => Ok(C22),
            "C23" => Ok(C23),
            "C24" => Ok(C24),
            "C27" => Ok(C27),
            "C29" => Ok(C29),
            "C210" => Ok(C210),
            "C211" => Ok(C211),
            "CBH" => Ok(CBH),
            other => Err(Error::Parse(format!("unknown weight condition `{other}`"))),
        }
    }
}

fn same_window(a: &Window, b: &Window) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument("inputs live on different windows".into()));
    }
    Ok(())
}

/// `|Q|^{x}` for a cube of level `k` in dimension `n`.
fn vol_pow(n: usize, k: i32, x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        2f64.powf(n as f64 * k as f64 * x)
    }
}

/// Max over window cubes of `|Q|^{1/p} (fint_Q |f|^q w)^{1/q}`, normalised
/// by `|Q|`; `w = None` is the unweighted norm.
pub fn morrey_norm(f: &LatticeFunction, p: f64, q: f64, w: Option<&Weight>) -> Result<f64> {
    if !(q > 0.0 && q <= p * (1.0 + TOL) && p.is_finite()) {
        return Err(Error::InvalidExponent(format!("Morrey exponents need 0<q≤p<∞, got p={p}, q={q}")));
    }
    let win = &f.window;
    let integrand: Vec<f64> = match w {
        None => f.values.iter().map(|v| v.abs().powf(q)).collect(),
        Some(w) => {
            same_window(win, w.window())?;
            f.values.iter().zip(w.values()).map(|(v, w)| v.abs().powf(q) * w).collect()
        }
    };
    let means = cube_power_means(win, &integrand, 1.0)?;
    let mut best = 0.0f64;
    for (j, level) in means.iter().enumerate() {
        let c = vol_pow(win.dim, win.level_min + j as i32, 1.0 / p);
        for &m in level {
            best = best.max(c * m.powf(1.0 / q));
        }
    }
    Ok(best)
}

/// Per cube, `|Q|^{1/p} (fint (|f| w1)^{q1})^{1/q1} (fint (|g| w2)^{q2})^{1/q2}`.
fn bilinear_morrey_terms(
    f: &LatticeFunction,
    g: &LatticeFunction,
    w1: &Weight,
    w2: &Weight,
    p: f64,
    q1: f64,
    q2: f64,
) -> Result<Vec<Vec<f64>>> {
    let win = &f.window;
    same_window(win, &g.window)?;
    same_window(win, w1.window())?;
    same_window(win, w2.window())?;
    if !(q1 > 0.0 && q2 > 0.0 && p > 0.0) {
        return Err(Error::InvalidExponent(format!("need p, q1, q2 > 0, got {p}, {q1}, {q2}")));
    }
    let fw: Vec<f64> = f.values.iter().zip(w1.values()).map(|(a, b)| a.abs() * b).collect();
    let gw: Vec<f64> = g.values.iter().zip(w2.values()).map(|(a, b)| a.abs() * b).collect();
    let a = cube_power_means(win, &fw, q1)?;
    let b = cube_power_means(win, &gw, q2)?;
    Ok(a.iter()
        .zip(&b)
        .enumerate()
        .map(|(j, (la, lb))| {
            let c = vol_pow(win.dim, win.level_min + j as i32, recip(p));
            la.iter().zip(lb).map(|(x, y)| c * x * y).collect()
        })
        .collect())
}

/// `sup_Q |Q|^{1/p} (fint_Q (|f|w1)^{q1})^{1/q1} (fint_Q (|g|w2)^{q2})^{1/q2}`.
pub fn rhs_bilinear_morrey(
    f: &LatticeFunction,
    g: &LatticeFunction,
    w1: &Weight,
    w2: &Weight,
    p: f64,
    q1: f64,
    q2: f64,
) -> Result<f64> {
    let terms = bilinear_morrey_terms(f, g, w1, w2, p, q1, q2)?;
    Ok(terms.iter().flatten().fold(0.0f64, |m, &v| m.max(v)))
}

/// The same sup restricted to window cubes `Q ⊇ Q0`.
#[allow(clippy::too_many_arguments)]
pub fn rhs_bilinear_morrey_above(
    f: &LatticeFunction,
    g: &LatticeFunction,
    w1: &Weight,
    w2: &Weight,
    p: f64,
    q1: f64,
    q2: f64,
    q0: &Cube,
) -> Result<f64> {
    let win = &f.window;
    if !win.contains_cube(q0) {
        return Err(Error::OutsideWindow(format!("{q0:?}")));
    }
    let terms = bilinear_morrey_terms(f, g, w1, w2, p, q1, q2)?;
    let mut best = 0.0f64;
    for k in q0.level..=win.level_max {
        let anc = q0.ancestor_at(k);
        best = best.max(terms[(k - win.level_min) as usize][win.cube_slot(&anc)]);
    }
    Ok(best)
}

/// `rhs_bilinear_morrey_above` for every window cube at once: entry
/// `[j][slot]` is the sup over the cube at level `level_min + j` and its ancestors.
#[allow(clippy::too_many_arguments)]
pub fn rhs_bilinear_morrey_above_table(
    f: &LatticeFunction,
    g: &LatticeFunction,
    w1: &Weight,
    w2: &Weight,
    p: f64,
    q1: f64,
    q2: f64,
) -> Result<Vec<Vec<f64>>> {
    let win = &f.window;
    let mut terms = bilinear_morrey_terms(f, g, w1, w2, p, q1, q2)?;
    for j in (0..terms.len().saturating_sub(1)).rev() {
        let parents = win.parent_slots(win.level_min + j as i32);
        let (lo, hi) = terms.split_at_mut(j + 1);
        for (v, &ps) in lo[j].iter_mut().zip(&parents) {
            *v = v.max(hi[0][ps]);
        }
    }
    Ok(terms)
}

/// `sup_λ |Q0|^{1/s-1/t} λ (v^t{x ∈ Q0 : F(x) > λ})^{1/t}`, with λ running
/// just below each value taken by `F = level` on `Q0`.
pub fn weak_morrey_functional(level: &LatticeFunction, v: &Weight, t: f64, s: f64, q0: &Cube) -> Result<f64> {
    let win = &level.window;
    same_window(win, v.window())?;
    if !(t > 0.0 && s > 0.0) {
        return Err(Error::InvalidExponent(format!("need t, s > 0, got t={t}, s={s}")));
    }
    if !win.contains_cube(q0) {
        return Err(Error::OutsideWindow(format!("{q0:?}")));
    }
    let cell_vol = win.cell_volume();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    win.for_each_cell_in_cube(q0, |c| {
        pts.push((level.values[c].abs(), v.values()[c].powf(t) * cell_vol));
    });
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let lam = pts[i].0;
        while i < pts.len() && pts[i].0 == lam {
            mass += pts[i].1;
            i += 1;
        }
        if lam > 0.0 {
            best = best.max(lam * mass.powf(1.0 / t));
        }
    }
    Ok(vol_pow(win.dim, q0.level, 1.0 / s - 1.0 / t) * best)
}

/// Regime checks required before a constant of the given kind is computed.
pub fn validate_for_kind(kind: WeightConditionKind, e: &ExponentSet) -> Result<()> {
    use WeightConditionKind::*;
    let mut checked = e.clone();
    let extra = |ok: bool, what: &str, obs: String| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(vec![crate::error::Violation {
                constraint: what.into(),
                observed: obs,
            }]))
        }
    };
    match kind {
        C22 | C23 => {
            checked.regime = Regime::T21;
            ensure_valid(validate(&checked))?;
            if kind == C22 {
                extra(e.s < 1.0, "0<s<1", format!("s={}", e.s))
            } else {
                extra(e.s >= 1.0, "s≥1", format!("s={}", e.s))
            }
        }
        C24 => {
            checked.regime = Regime::T22;
            ensure_valid(validate(&checked))
        }
        C27 => {
            checked.regime = Regime::T27;
            ensure_valid(validate(&checked))
        }
        C29 | CBH => {
            checked.regime = Regime::T28;
            ensure_valid(validate(&checked))
        }
        C210 => extra(
            e.s > 0.0 && e.s.is_finite() && 0.0 < e.r1 && e.r1 < e.q1 && 0.0 < e.r2 && e.r2 < e.q2,
            "0<s<∞, 0<r_i<q_i",
            format!("s={}, r1={}, q1={}, r2={}, q2={}", e.s, e.r1, e.q1, e.r2, e.q2),
        ),
        C211 => extra(
            e.s > 0.0 && e.s.is_finite() && e.q > 1.0,
            "0<s<∞, q>1 (so that r_i=q_i/q<q_i)",
            format!("s={}, q={}", e.s, e.q),
        ),
    }
}

/// Exponents of a pair-type condition: `(|Q|/|Q'|)` power, whether the
/// `|Q'|^{1/r}` factor enters, the `v` mean exponent, and the two dual
/// exponents of `w_i` (`INF` meaning `‖w_i^{-1}‖_∞`).
struct PairShape {
    ratio: f64,
    with_r: bool,
    v_exp: f64,
    w_exp: [f64; 2],
}

fn pair_shape(kind: WeightConditionKind, e: &ExponentSet) -> PairShape {
    use WeightConditionKind::*;
    let (a, s, t) = (e.a, e.s, e.t);
    let v_low = if (t - 1.0).abs() < TOL { INF } else { a * t / (1.0 - t) };
    let q = [e.q1, e.q2];
    let r = [e.r1, e.r2];
    let dual = |f: &dyn Fn(usize) -> f64| [f(0), f(1)];
    match kind {
        C22 => PairShape {
            ratio: (1.0 - s) / (a * s),
            with_r: true,
            v_exp: v_low,
            w_exp: dual(&|i| conj(q[i] / a)),
        },
        C23 => PairShape {
            ratio: (1.0 - a * s) / (a * s),
            with_r: true,
            v_exp: v_low,
            w_exp: dual(&|i| conj(q[i] / a)),
        },
        C24 => PairShape {
            ratio: 1.0 / (a * s),
            with_r: true,
            v_exp: a * t,
            w_exp: dual(&|i| conj(q[i] / a)),
        },
        C27 => PairShape {
            ratio: 1.0 / s,
            with_r: true,
            v_exp: t,
            w_exp: dual(&|i| {
                if (q[i] - r[i]).abs() <= TOL * q[i] {
                    INF
                } else {
                    r[i] * conj(q[i] / r[i])
                }
            }),
        },
        C29 | CBH => PairShape {
            ratio: 1.0 / s,
            with_r: kind == C29,
            v_exp: t,
            w_exp: dual(&|i| r[i] * conj(q[i] / (a * r[i]))),
        },
        C210 | C211 => unreachable!("single-cube kinds have no pair shape"),
    }
}

/// `(fint w^{-x})^{1/x}` per cube; `x = INF` is `max 1/w`.
fn dual_means(w: &Weight, x: f64) -> Result<Vec<Vec<f64>>> {
    let m = cube_power_means(w.window(), w.values(), -x)?;
    Ok(m.into_iter().map(|l| l.into_iter().map(|v| 1.0 / v).collect()).collect())
}

/// Max of a pair-type condition over all nested window pairs `Q ⊆ Q'`.
/// For fixed `Q'` and level of `Q` only the largest `v`-term matters, so
/// the `v`-terms are lifted by a max pyramid.
fn pair_constant(shape: &PairShape, v: &Weight, w1: &Weight, w2: &Weight, r: f64) -> Result<f64> {
    let win = v.window();
    let n = win.dim;
    let vm = cube_power_means(win, v.values(), shape.v_exp)?;
    let d1 = dual_means(w1, shape.w_exp[0])?;
    let d2 = dual_means(w2, shape.w_exp[1])?;
    let inv_r = if shape.with_r { recip(r) } else { 0.0 };
    let mut best = 0.0f64;
    for k in win.level_min..=win.level_max {
        let sub = win.with_level_min(k)?;
        let lifted = sub.aggregate(&vm[(k - win.level_min) as usize], f64::max);
        for (jj, level) in lifted.iter().enumerate() {
            let kp = k + jj as i32;
            let jp = (kp - win.level_min) as usize;
            let c = vol_pow(n, k - kp, shape.ratio) * vol_pow(n, kp, inv_r);
            for (slot, &vmax) in level.iter().enumerate() {
                best = best.max(c * vmax * d1[jp][slot] * d2[jp][slot]);
            }
        }
    }
    Ok(best)
}

/// Single-cube condition `sup_Q (fint u1^{s/q1} u2^{s/q2})^{1/s} ∏ (fint u_i^{-r_i/(q_i-r_i)})^{(q_i-r_i)/(r_i q_i)}`.
fn single_cube_constant(u1: &Weight, u2: &Weight, s: f64, q: [f64; 2], r: [f64; 2]) -> Result<f64> {
    let win = u1.window();
    same_window(win, u2.window())?;
    let prod: Vec<f64> = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| a.powf(1.0 / q[0]) * b.powf(1.0 / q[1]))
        .collect();
    let pm = cube_power_means(win, &prod, s)?;
    let mut parts = Vec::new();
    for (i, u) in [u1, u2].into_iter().enumerate() {
        let x = r[i] / (q[i] - r[i]);
        let d = dual_means(u, x)?;
        parts.push(
            d.into_iter()
                .map(|l| l.into_iter().map(|v| v.powf(1.0 / q[i])).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
    }
    let mut best = 0.0f64;
    for j in 0..pm.len() {
        for slot in 0..pm[j].len() {
            best = best.max(pm[j][slot] * parts[0][j][slot] * parts[1][j][slot]);
        }
    }
    Ok(best)
}

/// The two-weight constant of `kind` over the window. For `C210`/`C211`
/// the weights `w1, w2` play the roles of `u1, u2` and `v` is unused.
pub fn two_weight_constant(
    kind: WeightConditionKind,
    v: &Weight,
    w1: &Weight,
    w2: &Weight,
    e: &ExponentSet,
) -> Result<f64> {
    use WeightConditionKind::*;
    validate_for_kind(kind, e)?;
    same_window(v.window(), w1.window())?;
    same_window(v.window(), w2.window())?;
    match kind {
        C210 => single_cube_constant(w1, w2, e.s, [e.q1, e.q2], [e.r1, e.r2]),
        C211 => single_cube_constant(w1, w2, e.s, [e.q1, e.q2], [e.q1 / e.q, e.q2 / e.q]),
        _ => pair_constant(&pair_shape(kind, e), v, w1, w2, e.r),
    }
}

/// `sup_Q (fint w)(fint w^{-1/(p-1)})^{p-1}`.
pub fn ap_constant(w: &Weight, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(format!("A_p needs p > 1, got {p}")));
    }
    let win = w.window();
    let mean = cube_power_means(win, w.values(), 1.0)?;
    let dual = dual_means(w, 1.0 / (p - 1.0))?;
    Ok(max_product(&[&mean, &dual]))
}

/// `sup_Q (fint w^ν)^{1/ν} / fint w`.
pub fn rh_constant(w: &Weight, nu: f64) -> Result<f64> {
    if !(nu > 1.0) {
        return Err(Error::InvalidExponent(format!("RH_ν needs ν > 1, got {nu}")));
    }
    let win = w.window();
    let top = cube_power_means(win, w.values(), nu)?;
    let mean = cube_power_means(win, w.values(), 1.0)?;
    let inv: Vec<Vec<f64>> = mean.iter().map(|l| l.iter().map(|v| 1.0 / v).collect()).collect();
    Ok(max_product(&[&top, &inv]))
}

fn max_product(parts: &[&Vec<Vec<f64>>]) -> f64 {
    let mut best = 0.0f64;
    for j in 0..parts[0].len() {
        for slot in 0..parts[0][j].len() {
            best = best.max(parts.iter().map(|p| p[j][slot]).product::<f64>());
        }
    }
    best
}

/// Joint multiple-weight constant and the three A_p constants it is
/// equivalent to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiWeightCheck {
    pub joint_const: f64,
    /// `[(w1 w2)^{t̂} in A_{1+t̂(2-1/q)}, w1^{-q1'} in A_{q1'(1/t̂+2-1/q)}, same for w2]`.
    pub memberships: [f64; 3],
}

pub fn lemma39_check(w1: &Weight, w2: &Weight, q1: f64, q2: f64, t_hat: f64) -> Result<MultiWeightCheck> {
    let q = 1.0 / (1.0 / q1 + 1.0 / q2);
    if !(q1 > 1.0 && q2 > 1.0) {
        return Err(Error::InvalidExponent(format!("need q1, q2 > 1, got {q1}, {q2}")));
    }
    if t_hat < q * (1.0 - TOL) {
        return Err(Error::InvalidExponent(format!("need t̂ ≥ q = {q}, got {t_hat}")));
    }
    let win = w1.window();
    same_window(win, w2.window())?;
    let (c1, c2) = (conj(q1), conj(q2));
    let prod: Vec<f64> = w1.values().iter().zip(w2.values()).map(|(a, b)| a * b).collect();
    let joint = max_product(&[
        &cube_power_means(win, &prod, t_hat)?,
        &dual_means(w1, c1)?,
        &dual_means(w2, c2)?,
    ]);
    let u = Weight::new(LatticeFunction::new(win.clone(), prod.iter().map(|v| v.powf(t_hat)).collect())?)?;
    let m0 = ap_constant(&u, 1.0 + t_hat * (2.0 - 1.0 / q))?;
    let tail = 1.0 / t_hat + 2.0 - 1.0 / q;
    let m1 = ap_constant(&w1.pow(-c1), c1 * tail)?;
    let m2 = ap_constant(&w2.pow(-c2), c2 * tail)?;
    Ok(MultiWeightCheck { joint_const: joint, memberships: [m0, m1, m2] })
}
