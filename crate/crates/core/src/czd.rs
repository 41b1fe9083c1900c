//! Stopping-time decompositions of a cube `Q0` by level sets of
//! `|Q|^{α/n} (fint_{3Q}|f|^{θ1})^{1/θ1} (fint_{3Q}|g|^{θ2})^{1/θ2}`, and the
//! extremal pair used to test necessity of the weak-type weight condition.

use serde::{Deserialize, Serialize};

use crate::dyadic::{Cube, Window};
use crate::error::{Error, Result};
use crate::exponents::{ExponentSet, TOL};
use crate::field::{dilate3_power_means, LatticeFunction, Weight};

/// Cubes emitted at one threshold `γ A^k`, with their exceptional sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompLevel {
    pub k: u32,
    pub cubes: Vec<Cube>,
    /// `E_j^k = Q_j^k \ D_{k+1}` as window cell indices, one list per cube.
    pub e_cells: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub base: Cube,
    pub gamma: f64,
    pub factor: f64,
    pub theta: (f64, f64),
    pub alpha: f64,
    pub levels: Vec<DecompLevel>,
    /// `E_0 = Q0 \ D_1`.
    pub e0_cells: Vec<usize>,
    /// Set when the level loop stopped at the safety cap instead of running dry.
    pub hit_cap: bool,
}

impl Decomposition {
    /// `2^{n(1/θ1+1/θ2)}`, the upper sandwich constant.
    pub fn sandwich_factor(&self) -> f64 {
        2f64.powf(self.base.dim() as f64 * (1.0 / self.theta.0 + 1.0 / self.theta.1))
    }

    pub fn num_cubes(&self) -> usize {
        self.levels.iter().map(|l| l.cubes.len()).sum()
    }

    /// Inspection export `{gamma, factor, levels: [{k, cubes}], e_cells}`;
    /// `e_cells[0]` is `E_0`, followed by `E_j^k` in level order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut e_cells = vec![serde_json::json!({"k": 0, "cells": self.e0_cells})];
        for l in &self.levels {
            for (q, e) in l.cubes.iter().zip(&l.e_cells) {
                e_cells.push(serde_json::json!({"k": l.k, "cube": q, "cells": e}));
            }
        }
        serde_json::json!({
            "base": self.base,
            "gamma": self.gamma,
            "factor": self.factor,
            "theta": [self.theta.0, self.theta.1],
            "alpha": self.alpha,
            "hit_cap": self.hit_cap,
            "levels": self.levels.iter().map(|l| serde_json::json!({"k": l.k, "cubes": l.cubes})).collect::<Vec<_>>(),
            "e_cells": e_cells,
        })
    }
}

/// Threshold functional on every window cube, by level and slot.
fn functional(f: &LatticeFunction, g: &LatticeFunction, theta: (f64, f64), alpha: f64) -> Result<Vec<Vec<f64>>> {
    let w = &f.window;
    let a = dilate3_power_means(w, &f.values, theta.0)?;
    let b = dilate3_power_means(w, &g.values, theta.1)?;
    Ok((0..a.len())
        .map(|j| {
            let c = 2f64.powf((w.level_min + j as i32) as f64 * alpha);
            a[j].iter().zip(&b[j]).map(|(x, y)| c * x * y).collect()
        })
        .collect())
}

fn decompose(
    f: &LatticeFunction,
    g: &LatticeFunction,
    q0: &Cube,
    theta: (f64, f64),
    alpha: f64,
) -> Result<Decomposition> {
    let w = &f.window;
    if *w != g.window {
        return Err(Error::InvalidArgument("inputs live on different windows".into()));
    }
    if !w.contains_cube(q0) {
        return Err(Error::OutsideWindow(format!("{q0:?}")));
    }
    let n = w.dim as f64;
    let factor = (4.0 * 18f64.powf(n)).powf(1.0 / theta.0 + 1.0 / theta.1);
    let phi = functional(f, g, theta, alpha)?;
    let at = |q: &Cube| phi[(q.level - w.level_min) as usize][w.cube_slot(q)];
    let gamma = at(q0);
    let base_cells = w.cells_in_cube(q0);
    let mut dec = Decomposition {
        base: q0.clone(),
        gamma,
        factor,
        theta,
        alpha,
        levels: Vec::new(),
        e0_cells: Vec::new(),
        hit_cap: false,
    };
    if gamma == 0.0 {
        dec.e0_cells = base_cells;
        return Ok(dec);
    }
    let cap = (q0.level - w.level_min + 1) as u32 * 64;
    // deepest threshold level reached by each window cell
    let mut depth = vec![0u32; w.num_cells()];
    let mut k = 1u32;
    loop {
        if k > cap {
            dec.hit_cap = true;
            break;
        }
        let threshold = gamma * factor.powi(k as i32);
        let mut cubes = Vec::new();
        let mut stack = vec![q0.clone()];
        while let Some(q) = stack.pop() {
            if at(&q) > threshold {
                cubes.push(q);
            } else if q.level > w.level_min {
                // reversed so that the pop order is lexicographic
                stack.extend(q.children().into_iter().rev());
            }
        }
        if cubes.is_empty() {
            break;
        }
        for q in &cubes {
            w.for_each_cell_in_cube(q, |c| depth[c] = k);
        }
        dec.levels.push(DecompLevel { k, cubes, e_cells: Vec::new() });
        k += 1;
    }
    for l in &mut dec.levels {
        l.e_cells = l
            .cubes
            .iter()
            .map(|q| w.cells_in_cube(q).into_iter().filter(|&c| depth[c] == l.k).collect())
            .collect();
    }
    dec.e0_cells = base_cells.into_iter().filter(|&c| depth[c] == 0).collect();
    Ok(dec)
}

/// Decomposition with `A = (4·18^n)^{1/θ1+1/θ2}` and `γ` the functional at `Q0`.
pub fn cz_decompose(f: &LatticeFunction, g: &LatticeFunction, q0: &Cube, theta1: f64, theta2: f64) -> Result<Decomposition> {
    if !(theta1 > 1.0 && theta2 > 1.0) {
        return Err(Error::InvalidExponent(format!("need θ1, θ2 > 1, got {theta1}, {theta2}")));
    }
    decompose(f, g, q0, (theta1, theta2), 0.0)
}

/// The `|Q|^{α/n}`-weighted decomposition for a Hölder pair `(r1, r2)`.
pub fn cz_decompose_alpha(
    f: &LatticeFunction,
    g: &LatticeFunction,
    q0: &Cube,
    r1: f64,
    r2: f64,
    alpha: f64,
) -> Result<Decomposition> {
    if !(r1 > 0.0 && r2 > 0.0) || (1.0 / r1 + 1.0 / r2 - 1.0).abs() > TOL {
        return Err(Error::InvalidExponent(format!("(r1, r2) = ({r1}, {r2}) is not a Hölder pair")));
    }
    let n = f.window.dim as f64;
    if !(0.0..n).contains(&alpha) {
        return Err(Error::InvalidExponent(format!("need 0 ≤ α < {n}, got {alpha}")));
    }
    decompose(f, g, q0, (r1, r2), alpha)
}

/// Checks sandwich, measure, partition and maximality against the data,
/// recomputing every cube functional by direct overlap averaging. Returns
/// one message per violation.
pub fn check_invariants(dec: &Decomposition, f: &LatticeFunction, g: &LatticeFunction) -> Vec<String> {
    let mut out = Vec::new();
    let w = &f.window;
    let direct = |q: &Cube| -> f64 {
        let b = q.dilate3();
        q.volume().powf(dec.alpha / q.dim() as f64)
            * f.power_avg(&b, dec.theta.0).unwrap_or(0.0)
            * g.power_avg(&b, dec.theta.1).unwrap_or(0.0)
    };
    let slack = 1e-12;
    let upper = dec.sandwich_factor();
    let mut owner = vec![0usize; w.num_cells()];
    let base: Vec<usize> = w.cells_in_cube(&dec.base);
    for &c in &dec.e0_cells {
        owner[c] += 1;
    }
    if (base.len() as u64) > 2 * dec.e0_cells.len() as u64 {
        out.push(format!("|Q0| = {} cells > 2|E0| = {}", base.len(), 2 * dec.e0_cells.len()));
    }
    for l in &dec.levels {
        let thr = dec.gamma * dec.factor.powi(l.k as i32);
        for (q, e) in l.cubes.iter().zip(&l.e_cells) {
            if !dec.base.contains(q) {
                out.push(format!("{q:?} not inside Q0"));
                continue;
            }
            let v = direct(q);
            if !(v > thr) || v > upper * thr * (1.0 + slack) {
                out.push(format!("sandwich fails at k={} for {q:?}: {thr} < {v} ≤ {}", l.k, upper * thr));
            }
            let size = 1u64 << (q.dim() as u32 * (q.level - w.level_min) as u32);
            if size > 2 * e.len() as u64 {
                out.push(format!("|Q| = {size} cells > 2|E| = {} at k={} for {q:?}", 2 * e.len(), l.k));
            }
            for &c in e {
                owner[c] += 1;
            }
            for kk in q.level + 1..=dec.base.level {
                let anc = q.ancestor_at(kk);
                if direct(&anc) > thr * (1.0 + slack) {
                    out.push(format!("{q:?} is not maximal: ancestor {anc:?} exceeds level {}", l.k));
                }
            }
        }
    }
    for &c in &base {
        if owner[c] != 1 {
            out.push(format!("cell {c} covered {} times by the E-sets", owner[c]));
        }
    }
    if owner.iter().sum::<usize>() != base.len() {
        out.push("E-sets leave Q0".into());
    }
    for pair in dec.levels.windows(2) {
        for q in &pair[1].cubes {
            if !pair[0].cubes.iter().any(|p| p.contains(q)) {
                out.push(format!("{q:?} at k={} has no parent at k={}", pair[1].k, pair[0].k));
            }
        }
    }
    out
}

/// Extremal pair `f = χ_{Q'} w1^{-q1/(q1-r1)}`, `g = χ_{Q'} w2^{-q2/(q2-r2)}`
/// and `λ = ½|Q'|^{α/n} (fint_{Q'} f^{r1})^{1/r1} (fint_{Q'} g^{r2})^{1/r2}`.
pub fn necessity_pair(
    w1: &Weight,
    w2: &Weight,
    qp: &Cube,
    e: &ExponentSet,
) -> Result<(LatticeFunction, LatticeFunction, f64)> {
    let win: &Window = w1.window();
    if win != w2.window() {
        return Err(Error::InvalidArgument("weights live on different windows".into()));
    }
    if !win.contains_cube(qp) {
        return Err(Error::OutsideWindow(format!("{qp:?}")));
    }
    if !(e.r1 < e.q1 && e.r2 < e.q2) {
        return Err(Error::InvalidExponent(format!(
            "extremal pair needs r_i < q_i, got r=({}, {}), q=({}, {})",
            e.r1, e.r2, e.q1, e.q2
        )));
    }
    let mut inside = vec![false; win.num_cells()];
    win.for_each_cell_in_cube(qp, |c| inside[c] = true);
    let build = |w: &Weight, q: f64, r: f64| -> Result<LatticeFunction> {
        let x = q / (q - r);
        LatticeFunction::new(
            win.clone(),
            w.values()
                .iter()
                .zip(&inside)
                .map(|(&v, &i)| if i { v.powf(-x) } else { 0.0 })
                .collect(),
        )
    };
    let f = build(w1, e.q1, e.r1)?;
    let g = build(w2, e.q2, e.r2)?;
    let lambda = 0.5
        * qp.volume().powf(e.alpha / e.n as f64)
        * f.cube_power_avg(qp, e.r1)?
        * g.cube_power_avg(qp, e.r2)?;
    Ok((f, g, lambda))
}
