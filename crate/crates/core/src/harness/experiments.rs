//! Per-experiment LHS/RHS evaluation and the trial loop.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig};
use super::report::{Provenance, Report, Row};
use crate::czd::{check_invariants, cz_decompose, cz_decompose_alpha, necessity_pair, Decomposition};
use crate::dyadic::{Cube, Window};
use crate::error::{Error, Result, Violation};
use crate::exponents::{
    conj, ensure_valid, harmonic_q, recip, validate, validate_commutator,
    validate_power_weights, ExponentSet, Regime, TOL,
};
use crate::field::{bmo_norm, cube_sums, oscillation_sup, sampled_power_weight, LatticeFunction, Weight};
use crate::maximal::{m_alpha_r, Mode};
use crate::operators::{bh_maximal, bilinear_fractional, bt_alpha, commutator_iterated, CommutatorSpec, Slot};
use crate::weights_norms::{
    lemma39_check, morrey_norm, rhs_bilinear_morrey, rhs_bilinear_morrey_above,
    rhs_bilinear_morrey_above_table, two_weight_constant, validate_for_kind, weak_morrey_functional,
    WeightConditionKind,
};

/// Cellwise violation tolerance of the pointwise domination check.
pub const DOMINATION_TOL: f64 = 1e-12;

const NOTE_MORREY: &str =
    "weighted Morrey norms integrate |f|^q w and normalise by |Q| (Lebesgue average)";
const NOTE_BMO: &str = "BMO norms are dyadic: sup over window cubes of fint_Q |b - m_Q b|";
const NOTE_FINITE: &str =
    "on a finite lattice both sides are always finite, so ratios are reported unconditionally";
const NOTE_WINDOW: &str = "sups over cubes run over the dyadic cubes of each window only";

/// Random nonnegative inputs drawn on the coarsest window.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub f: LatticeFunction,
    pub g: LatticeFunction,
    pub descriptor: String,
}

/// How random inputs are drawn: cellwise uniform `[0,1)` values, and with
/// probability `spike_probability` one cell per function replaced by a spike of
/// height in `[spike_scale, 3 spike_scale)`. With `shared_spike` both functions
/// spike on the same cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputModel {
    pub spike_probability: f64,
    pub spike_scale: f64,
    pub shared_spike: bool,
}

impl Default for InputModel {
    fn default() -> Self {
        InputModel { spike_probability: 0.25, spike_scale: 10.0, shared_spike: false }
    }
}

impl InputModel {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let d = InputModel::default();
        Ok(InputModel {
            spike_probability: cfg.raw.real_or("spike_probability", d.spike_probability)?,
            spike_scale: cfg.raw.real_or("spike_scale", d.spike_scale)?,
            shared_spike: cfg.raw.get("shared_spike") == Some("true"),
        })
    }
}

fn draw_one(n: usize, rng: &mut ChaCha8Rng, model: &InputModel, at: Option<usize>) -> (Vec<f64>, String, Option<usize>) {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let spike = rng.gen::<f64>() < model.spike_probability;
    let cell = rng.gen_range(0..n);
    let height = model.spike_scale * (1.0 + 2.0 * rng.gen::<f64>());
    if !spike {
        return (v, "uniform".into(), None);
    }
    let c = at.unwrap_or(cell);
    v[c] = height;
    (v, format!("uniform+spike(cell={c},height={height:.4})"), Some(c))
}

/// Seeded inputs for one trial; the stream depends only on `(seed, trial)`.
pub fn draw_inputs(base: &Window, seed: u64, trial: usize, model: &InputModel) -> Result<Inputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let n = base.num_cells();
    let (fv, fd, fc) = draw_one(n, &mut rng, model, None);
    let (gv, gd, _) = draw_one(n, &mut rng, model, if model.shared_spike { fc } else { None });
    Ok(Inputs {
        f: LatticeFunction::new(base.clone(), fv)?,
        g: LatticeFunction::new(base.clone(), gv)?,
        descriptor: format!("f={fd};g={gd}"),
    })
}

/// Restriction of a coarse function to a finer window with the same bounds.
pub fn upsample(f: &LatticeFunction, win: &Window) -> Result<LatticeFunction> {
    LatticeFunction::from_fn(win, |x| f.value_at(x))
}

/// BMO test symbols, sampled at cell centres.
pub fn symbol(name: &str, win: &Window) -> Result<LatticeFunction> {
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    match name {
        "log" => LatticeFunction::from_fn(win, |x| norm(x).ln()),
        "sqrt" => LatticeFunction::from_fn(win, |x| norm(x).sqrt()),
        "abs" => LatticeFunction::from_fn(win, norm),
        "sign" => LatticeFunction::from_fn(win, |x| if x[0] < 0.0 { -1.0 } else { 1.0 }),
        "const" => Ok(LatticeFunction::constant(win, 1.0)),
        other => Err(Error::Parse(format!("unknown symbol `{other}` (log, sqrt, abs, sign, const)"))),
    }
}

#[derive(Debug, Clone)]
struct Commutator {
    symbols: Vec<String>,
    slots: Vec<Slot>,
}

impl Commutator {
    fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let symbols = cfg.raw.words("symbols").unwrap_or_else(|| vec!["log".into()]);
        let slots: Vec<Slot> = match cfg.raw.integers("slots")? {
            None => vec![Slot::First; symbols.len()],
            Some(v) => v
                .into_iter()
                .map(|s| match s {
                    1 => Ok(Slot::First),
                    2 => Ok(Slot::Second),
                    _ => Err(Error::Parse(format!("slot {s} must be 1 or 2"))),
                })
                .collect::<Result<_>>()?,
        };
        if slots.len() != symbols.len() {
            return Err(Error::Parse(format!("{} symbols but {} slots", symbols.len(), slots.len())));
        }
        Ok(Commutator { symbols, slots })
    }

    /// The spec on `win` and the product of the symbols' BMO norms.
    fn build(&self, win: &Window) -> Result<(CommutatorSpec, f64)> {
        let b: Vec<LatticeFunction> = self.symbols.iter().map(|s| symbol(s, win)).collect::<Result<_>>()?;
        let norm = b.iter().map(bmo_norm).product();
        Ok((CommutatorSpec::new(b, self.slots.clone())?, norm))
    }
}

#[derive(Debug, Clone)]
enum Plan {
    /// Two-weight bounds for `B_α` or its commutators.
    TwoWeight { e: ExponentSet, kind: WeightConditionKind, comm: Option<Commutator> },
    /// Weighted Morrey control by the maximal operator.
    Control { alpha: f64, p: f64, q: f64, pair: (f64, f64), comm: Option<Commutator>, mode: Mode },
    WeakMaximal { e: ExponentSet, mode: Mode },
    StrongMaximal { e: ExponentSet, kind: WeightConditionKind, mode: Mode },
    SteinWeiss { e: ExponentSet, beta: f64, gamma: (f64, f64) },
    JohnNirenberg { exps: Vec<f64> },
    CzInvariants { theta: (f64, f64), pair: (f64, f64), alpha: f64, q0_level: i32 },
    BhDomination { pairs: Vec<(f64, f64)> },
    MultiWeight { q1: f64, q2: f64, t_hat: f64 },
}

fn violation(constraint: &str, observed: String) -> Violation {
    Violation { constraint: constraint.into(), observed }
}

fn mode_of(cfg: &ExperimentConfig) -> Result<Mode> {
    cfg.raw.get("mode").map_or(Ok(Mode::Dyadic), str::parse)
}

/// `ExponentSet` from `alpha, q1, q2, p, r, a` and an optional `pair = r1, r2`.
pub fn exponent_set(cfg: &ExperimentConfig, regime: Regime) -> Result<ExponentSet> {
    let raw = &cfg.raw;
    let alpha = raw.require("alpha")?;
    let (q1, q2) = (raw.require("q1")?, raw.require("q2")?);
    let r = raw.real_or("r", f64::INFINITY)?;
    let a = raw.real_or("a", 1.0)?;
    let (p, p1, p2) = match regime {
        Regime::SW => {
            let (p1, p2) = (raw.require("p1")?, raw.require("p2")?);
            (harmonic_q(p1, p2), Some(p1), Some(p2))
        }
        _ => (raw.require("p")?, None, None),
    };
    let mut e = ExponentSet::solved(regime, cfg.dim, alpha, q1, q2, p, r, a)?;
    if let Some((r1, r2)) = raw.pair("pair")? {
        e.r1 = r1;
        e.r2 = r2;
    }
    e.p1 = p1;
    e.p2 = p2;
    Ok(e)
}

fn plan(cfg: &ExperimentConfig) -> Result<(Plan, Vec<String>)> {
    use Experiment::*;
    let raw = &cfg.raw;
    let mut notes = vec![NOTE_WINDOW.to_string()];
    let plan = match cfg.experiment {
        T21 | T23 | T22 | T24 => {
            let regime = if matches!(cfg.experiment, T21 | T23) { Regime::T21 } else { Regime::T22 };
            let e = exponent_set(cfg, regime)?;
            let comm = if matches!(cfg.experiment, T23 | T24) {
                ensure_valid(validate_commutator(&e))?;
                notes.push(NOTE_BMO.into());
                Some(Commutator::from_config(cfg)?)
            } else {
                ensure_valid(validate(&e))?;
                None
            };
            let kind = match regime {
                Regime::T21 if e.s < 1.0 => WeightConditionKind::C22,
                Regime::T21 => WeightConditionKind::C23,
                _ => WeightConditionKind::C24,
            };
            validate_for_kind(kind, &e)?;
            Plan::TwoWeight { e, kind, comm }
        }
        T25 | T26 => {
            let alpha = raw.require("alpha")?;
            let (p, q) = (raw.require("p")?, raw.require("q")?);
            let pair = raw.pair("pair")?.unwrap_or((2.0, 2.0));
            let n = cfg.dim as f64;
            let mut bad = Vec::new();
            if !(alpha > 0.0 && alpha < n) {
                bad.push(violation("0<α<n", format!("α={alpha}")));
            }
            if !(q > 0.0 && q <= p && p.is_finite()) {
                bad.push(violation("0<q≤p<∞", format!("q={q}, p={p}")));
            }
            if (recip(pair.0) + recip(pair.1) - 1.0).abs() > TOL || pair.0 < 1.0 || pair.1 < 1.0 {
                bad.push(violation("1/r1+1/r2=1", format!("r1={}, r2={}", pair.0, pair.1)));
            }
            let (comm, pair) = if cfg.experiment == T26 {
                let th = raw.pair("vartheta")?.unwrap_or((1.5, 1.5));
                if !(th.0 > 1.0 && th.1 > 1.0) {
                    bad.push(violation("ϑ1,ϑ2>1", format!("ϑ=({}, {})", th.0, th.1)));
                }
                notes.push(NOTE_BMO.into());
                (Some(Commutator::from_config(cfg)?), (th.0 * pair.0, th.1 * pair.1))
            } else {
                (None, pair)
            };
            ensure_valid(bad)?;
            notes.push(NOTE_MORREY.into());
            notes.push(NOTE_FINITE.into());
            Plan::Control { alpha, p, q, pair, comm, mode: mode_of(cfg)? }
        }
        T27Sufficiency | T27Necessity => {
            let e = exponent_set(cfg, Regime::T27)?;
            validate_for_kind(WeightConditionKind::C27, &e)?;
            if cfg.experiment == T27Necessity && !(e.r1 < e.q1 && e.r2 < e.q2) {
                ensure_valid(vec![violation(
                    "r_i<q_i (extremal pair)",
                    format!("r=({}, {}), q=({}, {})", e.r1, e.r2, e.q1, e.q2),
                )])?;
            }
            Plan::WeakMaximal { e, mode: mode_of(cfg)? }
        }
        T28 => {
            let e = exponent_set(cfg, Regime::T28)?;
            validate_for_kind(WeightConditionKind::C29, &e)?;
            Plan::StrongMaximal { e, kind: WeightConditionKind::C29, mode: mode_of(cfg)? }
        }
        T29 => {
            let e = exponent_set(cfg, Regime::T28)?;
            let mut bad = validate(&e);
            // the strong-type regime's `a` and `s<r` are not hypotheses here
            bad.retain(|v| !v.constraint.starts_with("1<a") && v.constraint != "s<r");
            ensure_valid(bad)?;
            validate_for_kind(WeightConditionKind::C210, &e)?;
            notes.push("w1, w2 are read as u1, u2; v = u1^{1/q1} u2^{1/q2}, w_i = u_i^{1/q_i}".into());
            Plan::StrongMaximal { e, kind: WeightConditionKind::C210, mode: mode_of(cfg)? }
        }
        CorBh => {
            let e = exponent_set(cfg, Regime::T28)?;
            validate_for_kind(WeightConditionKind::CBH, &e)?;
            let mut bad = Vec::new();
            if (1.0 / e.r1 + 1.0 / e.r2 - 1.0).abs() > TOL || !(e.r1 > 1.0 && e.r2 > 1.0) {
                bad.push(violation("1/r1+1/r2=1, r_i>1", format!("r1={}, r2={}", e.r1, e.r2)));
            }
            ensure_valid(bad)?;
            Plan::StrongMaximal { e, kind: WeightConditionKind::CBH, mode: Mode::Centered }
        }
        Sw101 => {
            let e = exponent_set(cfg, Regime::SW)?;
            ensure_valid(validate(&e))?;
            let beta = raw.real_or("beta", 0.0)?;
            let gamma = (raw.real_or("gamma1", 0.0)?, raw.real_or("gamma2", 0.0)?);
            let bad = validate_power_weights(&e, beta, gamma.0, gamma.1);
            if !bad.is_empty() {
                if raw.get("allow_violation") == Some("true") {
                    for v in &bad {
                        notes.push(format!("deliberately violated: {v}"));
                    }
                } else {
                    return Err(Error::Validation(bad));
                }
            }
            notes.push("power weights |x|^γ are sampled at cell centres".into());
            Plan::SteinWeiss { e, beta, gamma }
        }
        Jn => {
            notes.push(NOTE_BMO.into());
            Plan::JohnNirenberg { exps: raw.reals("exponents")?.unwrap_or_else(|| vec![1.0, 2.0, 4.0]) }
        }
        CzInv => {
            let theta = raw.pair("theta")?.unwrap_or((2.0, 2.0));
            let pair = raw.pair("pair")?.unwrap_or((2.0, 2.0));
            let alpha = raw.real_or("alpha", 0.0)?;
            let q0_level = raw.integer("q0_level")?.map_or(cfg.level_max, |v| v as i32);
            if q0_level > cfg.level_max {
                return Err(Error::Parse("q0_level above level_max".into()));
            }
            notes.push("the primed decomposition uses the same construction with its own exponents".into());
            Plan::CzInvariants { theta, pair, alpha, q0_level }
        }
        BhDom => {
            let firsts = raw.reals("r1_list")?.unwrap_or_else(|| vec![2.0, 1.5, 3.0, 1.25, 5.0]);
            let pairs: Vec<(f64, f64)> = firsts.iter().map(|&r| (r, conj(r))).collect();
            if firsts.iter().any(|&r| !(r >= 1.0)) {
                return Err(Error::Parse("r1_list entries must be ≥ 1".into()));
            }
            Plan::BhDomination { pairs }
        }
        L39 => {
            let (q1, q2) = (raw.require("q1")?, raw.require("q2")?);
            let t_hat = raw.real_or("t_hat", harmonic_q(q1, q2))?;
            Plan::MultiWeight { q1, q2, t_hat }
        }
    };
    Ok((plan, notes))
}

/// Per-window data shared by all trials.
struct Prepared {
    win: Window,
    v: Weight,
    w1: Weight,
    w2: Weight,
    constant: f64,
    comm: Option<(CommutatorSpec, f64)>,
}

fn prepare(cfg: &ExperimentConfig, plan: &Plan, win: &Window) -> Result<Prepared> {
    let mut v = cfg.raw.weight("v", win)?;
    let mut w1 = cfg.raw.weight("w1", win)?;
    let mut w2 = cfg.raw.weight("w2", win)?;
    let mut comm = None;
    let constant = match plan {
        Plan::TwoWeight { e, kind, comm: c } => {
            if let Some(c) = c {
                comm = Some(c.build(win)?);
            }
            two_weight_constant(*kind, &v, &w1, &w2, e)?
        }
        Plan::Control { comm: c, .. } => {
            v = cfg.raw.weight("w", win)?;
            if let Some(c) = c {
                comm = Some(c.build(win)?);
            }
            1.0
        }
        Plan::WeakMaximal { e, .. } => two_weight_constant(WeightConditionKind::C27, &v, &w1, &w2, e)?,
        Plan::StrongMaximal { e, kind, .. } => {
            let c = two_weight_constant(*kind, &v, &w1, &w2, e)?;
            if *kind == WeightConditionKind::C210 {
                let vals: Vec<f64> = w1
                    .values()
                    .iter()
                    .zip(w2.values())
                    .map(|(a, b)| a.powf(1.0 / e.q1) * b.powf(1.0 / e.q2))
                    .collect();
                v = Weight::new(LatticeFunction::new(win.clone(), vals)?)?;
                w1 = w1.pow(1.0 / e.q1);
                w2 = w2.pow(1.0 / e.q2);
            }
            c
        }
        Plan::SteinWeiss { beta, gamma, .. } => {
            v = sampled_power_weight(-beta, win)?;
            w1 = sampled_power_weight(gamma.0, win)?;
            w2 = sampled_power_weight(gamma.1, win)?;
            1.0
        }
        _ => 1.0,
    };
    Ok(Prepared { win: win.clone(), v, w1, w2, constant, comm })
}

/// One row's worth of measurement.
struct Outcome {
    lhs: f64,
    rhs: f64,
    violations: Vec<String>,
    extras: Vec<(String, f64)>,
}

impl Outcome {
    fn plain(lhs: f64, rhs: f64) -> Self {
        Outcome { lhs, rhs, violations: Vec::new(), extras: Vec::new() }
    }
}

fn scaled(f: &LatticeFunction, w: &Weight) -> Result<LatticeFunction> {
    f.zip_with(&w.field, |a, b| a * b)
}

/// The cube at `level` holding the largest value of `f g`.
pub fn cube_of_peak(win: &Window, level: i32, f: &LatticeFunction, g: &LatticeFunction) -> Cube {
    let (mut best, mut cell) = (f64::NEG_INFINITY, 0);
    for (c, (a, b)) in f.values.iter().zip(&g.values).enumerate() {
        if a * b > best {
            best = a * b;
            cell = c;
        }
    }
    win.cell_cube(cell).ancestor_at(level)
}

/// Largest `φ(Q)/(γ A^k)` over the emitted cubes, recomputed from the data.
fn max_threshold_ratio(dec: &Decomposition, f: &LatticeFunction, g: &LatticeFunction) -> Result<f64> {
    let mut best = 0.0f64;
    for l in &dec.levels {
        let thr = dec.gamma * dec.factor.powi(l.k as i32);
        for q in &l.cubes {
            let b = q.dilate3();
            let phi = q.volume().powf(dec.alpha / q.dim() as f64)
                * f.power_avg(&b, dec.theta.0)?
                * g.power_avg(&b, dec.theta.1)?;
            best = best.max(phi / thr);
        }
    }
    Ok(best)
}

fn evaluate(plan: &Plan, prep: &Prepared, f: &LatticeFunction, g: &LatticeFunction) -> Result<Outcome> {
    let win = &prep.win;
    match plan {
        Plan::TwoWeight { e, .. } => {
            let op = match &prep.comm {
                Some((spec, _)) => commutator_iterated(spec, f, g, e.alpha)?,
                None => bilinear_fractional(f, g, e.alpha)?,
            };
            let lhs = morrey_norm(&scaled(&op, &prep.v)?, e.s, e.t, None)?;
            let bmo = prep.comm.as_ref().map_or(1.0, |c| c.1);
            let rhs = bmo * prep.constant * rhs_bilinear_morrey(f, g, &prep.w1, &prep.w2, e.p, e.q1, e.q2)?;
            Ok(Outcome::plain(lhs, rhs))
        }
        Plan::Control { alpha, p, q, pair, mode, .. } => {
            let (op, bmo) = match &prep.comm {
                Some((spec, norm)) => (commutator_iterated(spec, f, g, *alpha)?, *norm),
                None => (bilinear_fractional(f, g, *alpha)?, 1.0),
            };
            let m = m_alpha_r(f, g, *alpha, *pair, *mode)?;
            let lhs = morrey_norm(&op, *p, *q, Some(&prep.v))?;
            let rhs = bmo * morrey_norm(&m, *p, *q, Some(&prep.v))?;
            Ok(Outcome::plain(lhs, rhs))
        }
        Plan::WeakMaximal { e, mode } => {
            let m = m_alpha_r(f, g, e.alpha, (e.r1, e.r2), *mode)?;
            let table = rhs_bilinear_morrey_above_table(f, g, &prep.w1, &prep.w2, e.p, e.q1, e.q2)?;
            let mut best: Option<(f64, f64, f64)> = None;
            for q0 in win.all_cubes() {
                let lhs = weak_morrey_functional(&m, &prep.v, e.t, e.s, &q0)?;
                let rhs = prep.constant * table[(q0.level - win.level_min) as usize][win.cube_slot(&q0)];
                let ratio = Row::new(0, 0, 0, String::new(), lhs, rhs).ratio;
                if best.map_or(true, |b| ratio > b.2) {
                    best = Some((lhs, rhs, ratio));
                }
            }
            let (lhs, rhs, _) = best.unwrap_or((0.0, 0.0, 0.0));
            Ok(Outcome::plain(lhs, rhs))
        }
        Plan::StrongMaximal { e, kind, mode } => {
            let m = if *kind == WeightConditionKind::CBH {
                bh_maximal(f, g)?
            } else {
                m_alpha_r(f, g, e.alpha, (e.r1, e.r2), *mode)?
            };
            let lhs = morrey_norm(&scaled(&m, &prep.v)?, e.s, e.t, None)?;
            let rhs = prep.constant * rhs_bilinear_morrey(f, g, &prep.w1, &prep.w2, e.p, e.q1, e.q2)?;
            Ok(Outcome::plain(lhs, rhs))
        }
        Plan::SteinWeiss { e, .. } => {
            let bt = bt_alpha(f, g, e.alpha)?;
            let lhs = morrey_norm(&scaled(&bt, &prep.v)?, e.s, e.t, None)?;
            let (p1, p2) = (e.p1.unwrap_or(e.p), e.p2.unwrap_or(e.p));
            let rhs = morrey_norm(&scaled(f, &prep.w1)?, p1, e.q1, None)?
                * morrey_norm(&scaled(g, &prep.w2)?, p2, e.q2, None)?;
            Ok(Outcome::plain(lhs, rhs))
        }
        Plan::JohnNirenberg { exps } => {
            let b = symbol("log", win)?;
            let bmo = bmo_norm(&b);
            let mut out = Outcome::plain(0.0, bmo);
            for &e in exps {
                let osc = oscillation_sup(&b, e);
                out.lhs = out.lhs.max(osc);
                out.extras.push((format!("oscillation_e{e}"), osc));
                out.extras.push((format!("oscillation_ratio_e{e}"), osc / bmo));
            }
            let (checked, bad) = telescoping(&b, bmo);
            out.extras.push(("telescoping_pairs".into(), checked as f64));
            out.violations = bad;
            Ok(out)
        }
        Plan::CzInvariants { theta, pair, alpha, q0_level } => {
            let q0 = cube_of_peak(win, *q0_level, f, g);
            let a = cz_decompose(f, g, &q0, theta.0, theta.1)?;
            let b = cz_decompose_alpha(f, g, &q0, pair.0, pair.1, *alpha)?;
            let mut out = Outcome::plain(0.0, 1.0);
            for (name, dec) in [("cz", &a), ("cz_alpha", &b)] {
                let r = max_threshold_ratio(dec, f, g)? / dec.sandwich_factor();
                if r > out.lhs / out.rhs {
                    out.lhs = max_threshold_ratio(dec, f, g)?;
                    out.rhs = dec.sandwich_factor();
                }
                out.violations.extend(check_invariants(dec, f, g).into_iter().map(|m| format!("{name}: {m}")));
                if dec.hit_cap {
                    out.violations.push(format!("{name}: level cap reached"));
                }
                out.extras.push((format!("{name}_cubes"), dec.num_cubes() as f64));
                out.extras.push((format!("{name}_levels"), dec.levels.len() as f64));
            }
            Ok(out)
        }
        Plan::BhDomination { pairs } => {
            let bh = bh_maximal(f, g)?;
            let mut out = Outcome::plain(0.0, 1.0);
            let mut best_ratio = -1.0f64;
            let mut worst_excess = f64::NEG_INFINITY;
            for &pair in pairs {
                let m = m_alpha_r(f, g, 0.0, pair, Mode::Centered)?;
                for (c, (&b, &mv)) in bh.values.iter().zip(&m.values).enumerate() {
                    let ratio = if mv > 0.0 { b / mv } else if b > 0.0 { f64::INFINITY } else { 0.0 };
                    if ratio > best_ratio {
                        best_ratio = ratio;
                        out.lhs = b;
                        out.rhs = mv;
                    }
                    worst_excess = worst_excess.max(b - mv);
                    if b > mv + DOMINATION_TOL {
                        out.violations.push(format!("BH > M at cell {c} for r=({}, {}): {b} > {mv}", pair.0, pair.1));
                    }
                }
            }
            out.extras.push(("max_excess".into(), worst_excess));
            Ok(out)
        }
        Plan::MultiWeight { q1, q2, t_hat } => {
            let chk = lemma39_check(&prep.w1, &prep.w2, *q1, *q2, *t_hat)?;
            let mut out = Outcome::plain(chk.joint_const, chk.memberships.iter().copied().fold(0.0, f64::max));
            for (i, m) in chk.memberships.iter().enumerate() {
                out.extras.push((format!("membership{i}"), *m));
            }
            Ok(out)
        }
    }
}

/// Checks `|m_{Q0} b - m_Q b| ≤ k 2^n ‖b‖_BMO` for every cube `Q` and every
/// ancestor `Q0` that is `k` levels up. Returns the pair count and violations.
pub fn telescoping(b: &LatticeFunction, bmo: f64) -> (usize, Vec<String>) {
    let w = &b.window;
    let sums = cube_sums(w, &b.values);
    let means: Vec<Vec<f64>> = sums
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let count = 2f64.powi((w.dim * j) as i32);
            l.iter().map(|s| s / count).collect()
        })
        .collect();
    let bound_unit = 2f64.powi(w.dim as i32) * bmo;
    let mut checked = 0;
    let mut bad = Vec::new();
    for q in w.all_cubes() {
        let mq = means[(q.level - w.level_min) as usize][w.cube_slot(&q)];
        for k in 1..=(w.level_max - q.level) {
            let anc = q.ancestor_at(q.level + k);
            let ma = means[(anc.level - w.level_min) as usize][w.cube_slot(&anc)];
            checked += 1;
            if (ma - mq).abs() > k as f64 * bound_unit {
                bad.push(format!("|m_Q0 - m_Q| = {} > {k}·2^n·{bmo} for {q:?}", (ma - mq).abs()));
            }
        }
    }
    (checked, bad)
}

struct TrialResult {
    rows: Vec<Row>,
    violations: Vec<String>,
    extras: Vec<(String, f64)>,
}

fn coarsest(windows: &[Window]) -> Window {
    windows.iter().max_by_key(|w| w.level_min).cloned().expect("at least one window")
}

fn run_trials(
    cfg: &ExperimentConfig,
    windows: &[Window],
    body: impl Fn(usize, &Inputs) -> Result<TrialResult> + Sync,
) -> Result<Vec<TrialResult>> {
    let base = coarsest(windows);
    let model = InputModel::from_config(cfg)?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let inputs = draw_inputs(&base, cfg.seed, t, &model)?;
            body(t, &inputs)
        })
        .collect()
}

fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance {
        experiment: cfg.experiment.name().into(),
        seed: cfg.seed,
        trials: cfg.trials,
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.raw.entries.clone(),
    }
}

/// Max per key; keys are suffixed with the window's finest level.
fn merge_extras(into: &mut BTreeMap<String, f64>, items: Vec<(String, f64)>) {
    for (k, v) in items {
        into.entry(k).and_modify(|m| *m = m.max(v)).or_insert(v);
    }
}

/// Runs the configured experiment over every refinement window and trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let (plan, notes) = plan(cfg)?;
    let windows = cfg.windows()?;
    if cfg.experiment == Experiment::T27Necessity {
        return run_necessity(cfg, &plan, &windows, notes);
    }
    let prepared: Vec<Prepared> = windows.iter().map(|w| prepare(cfg, &plan, w)).collect::<Result<_>>()?;
    let mut extras = BTreeMap::new();
    for p in &prepared {
        if matches!(plan, Plan::TwoWeight { .. } | Plan::WeakMaximal { .. } | Plan::StrongMaximal { .. }) {
            extras.insert(format!("weight_constant@{}", p.win.level_min), p.constant);
        }
        if let Some((_, norm)) = &p.comm {
            extras.insert(format!("bmo_product@{}", p.win.level_min), *norm);
        }
    }
    let results = run_trials(cfg, &windows, |t, inputs| {
        let mut out = TrialResult { rows: Vec::new(), violations: Vec::new(), extras: Vec::new() };
        for p in &prepared {
            let f = upsample(&inputs.f, &p.win)?;
            let g = upsample(&inputs.g, &p.win)?;
            let o = evaluate(&plan, p, &f, &g)?;
            out.rows.push(Row::new(t, p.win.level_min, p.win.level_max, inputs.descriptor.clone(), o.lhs, o.rhs));
            out.violations.extend(o.violations.into_iter().map(|m| format!("trial {t}, level {}: {m}", p.win.level_min)));
            out.extras.extend(o.extras.into_iter().map(|(k, v)| (format!("{k}@{}", p.win.level_min), v)));
        }
        Ok(out)
    })?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for r in results {
        rows.extend(r.rows);
        violations.extend(r.violations);
        merge_extras(&mut extras, r.extras);
    }
    Ok(Report::assemble(rows, &cfg.level_mins, provenance(cfg), violations, extras, notes))
}

/// `(|Q|/|Q'|)^{1/s} |Q'|^{1/r} (fint_Q v^t)^{1/t} ∏ (fint_{Q'} w_i^{-r_i (q_i/r_i)'})^{1/(r_i (q_i/r_i)')}`.
fn c27_pair_term(prep: &Prepared, e: &ExponentSet, q: &Cube, qp: &Cube) -> Result<f64> {
    let vol = |c: &Cube| c.volume();
    let dual = |w: &Weight, qi: f64, ri: f64| -> Result<f64> {
        let x = if (qi - ri).abs() < TOL { f64::INFINITY } else { ri * conj(qi / ri) };
        w.dual_avg(&qp.to_box(), x)
    };
    Ok((vol(q) / vol(qp)).powf(1.0 / e.s)
        * vol(qp).powf(recip(e.r))
        * prep.v.power_avg(&q.to_box(), e.t)?
        * dual(&prep.w1, e.q1, e.r1)?
        * dual(&prep.w2, e.q2, e.r2)?)
}

/// Picks `Q ⊆ Q'` through a random point, with levels drawn on the coarsest window.
fn pick_nested(windows: &[Window], seed: u64, trial: usize) -> (Vec<f64>, i32, i32) {
    let base = coarsest(windows);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((2u64 << 40) + trial as u64);
    let bounds = base.bounds();
    let x: Vec<f64> = bounds.lo.iter().zip(&bounds.hi).map(|(&lo, &hi)| rng.gen_range(lo..hi)).collect();
    let outer = rng.gen_range(base.level_min..=base.level_max);
    let inner = rng.gen_range(base.level_min..=outer);
    (x, inner, outer)
}

fn run_necessity(cfg: &ExperimentConfig, plan: &Plan, windows: &[Window], mut notes: Vec<String>) -> Result<Report> {
    let (e, mode) = match plan {
        Plan::WeakMaximal { e, mode } => (e.clone(), *mode),
        _ => unreachable!("necessity runs on the weak-type plan"),
    };
    let prepared: Vec<Prepared> = windows.iter().map(|w| prepare(cfg, plan, w)).collect::<Result<_>>()?;
    // observed sufficiency constant per window, over the same random trials
    let suff = run_trials(cfg, windows, |t, inputs| {
        let mut rows = Vec::new();
        for p in &prepared {
            let f = upsample(&inputs.f, &p.win)?;
            let g = upsample(&inputs.g, &p.win)?;
            let o = evaluate(plan, p, &f, &g)?;
            rows.push(Row::new(t, p.win.level_min, p.win.level_max, String::new(), o.lhs, o.rhs));
        }
        Ok(TrialResult { rows, violations: Vec::new(), extras: Vec::new() })
    })?;
    let c_obs: Vec<f64> = prepared
        .iter()
        .map(|p| {
            suff.iter()
                .flat_map(|r| &r.rows)
                .filter(|r| r.window_min == p.win.level_min)
                .map(|r| r.ratio)
                .fold(0.0, f64::max)
        })
        .collect();
    let mut extras = BTreeMap::new();
    for (p, c) in prepared.iter().zip(&c_obs) {
        extras.insert(format!("observed_sufficiency_constant@{}", p.win.level_min), *c);
        extras.insert(format!("weight_constant@{}", p.win.level_min), p.constant);
    }
    let results: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (x, inner, outer) = pick_nested(windows, cfg.seed, t);
            let mut out = TrialResult { rows: Vec::new(), violations: Vec::new(), extras: Vec::new() };
            for (p, &c) in prepared.iter().zip(&c_obs) {
                let win = &p.win;
                let finest = win.cell_cube(win.cell_of_point(&x).expect("point drawn inside the window"));
                let (q, qp) = (finest.ancestor_at(inner), finest.ancestor_at(outer));
                let (f, g, _lambda) = necessity_pair(&p.w1, &p.w2, &qp, &e)?;
                let m = m_alpha_r(&f, &g, e.alpha, (e.r1, e.r2), mode)?;
                let lhs = weak_morrey_functional(&m, &p.v, e.t, e.s, &q)?;
                let raw_rhs = rhs_bilinear_morrey_above(&f, &g, &p.w1, &p.w2, e.p, e.q1, e.q2, &q)?;
                let row = Row::new(
                    t,
                    win.level_min,
                    win.level_max,
                    format!("extremal(Q'={:?}@{},Q={:?}@{})", qp.index, qp.level, q.index, q.level),
                    lhs,
                    p.constant * raw_rhs,
                );
                if row.ratio > 2.0 * c {
                    out.violations.push(format!(
                        "trial {t}, level {}: extremal ratio {} > 2 × observed constant {c}",
                        win.level_min, row.ratio
                    ));
                }
                let pair = c27_pair_term(p, &e, &q, &qp)?;
                if raw_rhs > 0.0 && pair > 0.0 {
                    out.extras.push((format!("extremal_ratio_over_pair_term_min@{}", win.level_min), -(lhs / raw_rhs / pair)));
                }
                out.extras.push((format!("extremal_ratio_over_observed_constant@{}", win.level_min), row.ratio / c));
                out.rows.push(row);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for r in results {
        rows.extend(r.rows);
        violations.extend(r.violations);
        merge_extras(&mut extras, r.extras);
    }
    // stored negated so the max-merge keeps the minimum
    for v in extras.iter_mut().filter(|(k, _)| k.contains("_min@")) {
        *v.1 = -*v.1;
    }
    notes.push("necessity rows: extremal pair on Q', weak functional on Q ⊆ Q', right side over cubes containing Q".into());
    notes.push("a violation means the extremal ratio exceeds twice the constant observed on random inputs".into());
    Ok(Report::assemble(rows, &cfg.level_mins, provenance(cfg), violations, extras, notes))
}
