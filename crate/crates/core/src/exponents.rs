//! Exponent bookkeeping: the index tuple, per-regime validation, the `(s, t)`
//! solver, Hölder pairs and auxiliary-index witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

pub const TOL: f64 = 1e-12;

/// Which family of hypotheses an exponent set is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Two-weight bound, `0 < t ≤ 1`.
    T21,
    /// Two-weight bound, `t > 1`, Hölder pair `(r1, r2)`.
    T22,
    /// Weak-type characterization of the maximal operator.
    T27,
    /// Strong-type maximal bound.
    T28,
    /// Power-weight (Stein–Weiss type) bound for `B_{n-α}`.
    SW,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T21" => Ok(Regime::T21),
            "T22" => Ok(Regime::T22),
            "T27" => Ok(Regime::T27),
            "T28" => Ok(Regime::T28),
            "SW" => Ok(Regime::SW),
            other => Err(Error::Parse(format!("unknown regime {other}"))),
        }
    }
}

/// `1/x` with `1/∞ = 0`.
#[inline]
pub fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Conjugate exponent `x' = x/(x-1)`, with `1' = ∞` and `∞' = 1`.
#[inline]
pub fn conj(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x == 1.0 {
        f64::INFINITY
    } else {
        x / (x - 1.0)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * 1f64.max(a.abs()).max(b.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub n: usize,
    pub alpha: f64,
    pub q1: f64,
    pub q2: f64,
    pub q: f64,
    pub p: f64,
    /// `f64::INFINITY` for `r = ∞`.
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub a: f64,
    pub r1: f64,
    pub r2: f64,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub regime: Regime,
}

/// `q` from `1/q = 1/q1 + 1/q2`.
pub fn harmonic_q(q1: f64, q2: f64) -> f64 {
    1.0 / (1.0 / q1 + 1.0 / q2)
}

/// `s = (1/p + 1/r - α/n)^{-1}`, `t = s q / p`.
pub fn solve_st(n: usize, alpha: f64, p: f64, q: f64, r: f64) -> Result<(f64, f64)> {
    if p <= 0.0 || q <= 0.0 || r <= 0.0 {
        return Err(Error::InvalidExponent("p, q, r must be positive".into()));
    }
    let inv = 1.0 / p + recip(r) - alpha / n as f64;
    if inv <= 0.0 {
        return Err(Error::InvalidExponent(format!(
            "s undefined/infinite (1/s = {inv})"
        )));
    }
    let s = 1.0 / inv;
    Ok((s, s * q / p))
}

/// `(q1/q, q2/q)`.
pub fn default_holder_pair(q1: f64, q2: f64) -> (f64, f64) {
    let q = harmonic_q(q1, q2);
    (q1 / q, q2 / q)
}

impl ExponentSet {
    /// Builds a set for the strong-type regimes, solving `s` and `t` and
    /// taking the default Hölder pair.
    pub fn solved(
        regime: Regime,
        n: usize,
        alpha: f64,
        q1: f64,
        q2: f64,
        p: f64,
        r: f64,
        a: f64,
    ) -> Result<Self> {
        let q = harmonic_q(q1, q2);
        let (s, t) = match regime {
            Regime::T27 => {
                let (s, _) = solve_st(n, alpha, p, q, r)?;
                let inv_t = 1.0 / q + recip(r) - alpha / n as f64;
                if inv_t <= 0.0 {
                    return Err(Error::InvalidExponent("t undefined/infinite".into()));
                }
                (s, 1.0 / inv_t)
            }
            Regime::SW => {
                let beta = n as f64 - alpha;
                let s = 1.0 / (1.0 / p + recip(r) - beta / n as f64);
                let t = 1.0 / (1.0 / q + recip(r) - beta / n as f64);
                if !(s > 0.0 && t > 0.0) {
                    return Err(Error::InvalidExponent("s or t undefined/infinite".into()));
                }
                (s, t)
            }
            _ => solve_st(n, alpha, p, q, r)?,
        };
        let (r1, r2) = default_holder_pair(q1, q2);
        Ok(ExponentSet { n, alpha, q1, q2, q, p, r, s, t, a, r1, r2, p1: None, p2: None, regime })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn need(&mut self, ok: bool, constraint: &str, observed: String) {
        if !ok {
            self.out.push(Violation { constraint: constraint.to_string(), observed });
        }
    }
}

/// Every violated hypothesis of the set's regime. Empty means valid.
pub fn validate(e: &ExponentSet) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let n = e.nf();
    let inv_r = recip(e.r);
    c.need(e.n >= 1, "n≥1", format!("n={}", e.n));
    c.need(
        close(1.0 / e.q, 1.0 / e.q1 + 1.0 / e.q2),
        "1/q=1/q1+1/q2",
        format!("q={}, q1={}, q2={}", e.q, e.q1, e.q2),
    );
    c.need(e.r > 0.0, "0<r≤∞", format!("r={}", e.r));
    c.need(e.q > 0.0 && e.q <= e.p * (1.0 + TOL), "0<q≤p", format!("q={}, p={}", e.q, e.p));
    c.need(e.p.is_finite(), "p<∞", format!("p={}", e.p));
    let s_identity = |c: &mut Checker, a: f64| {
        c.need(
            close(1.0 / e.s, 1.0 / e.p + inv_r - a / n),
            "1/s=1/p+1/r-α/n",
            format!("s={}, p={}, r={}, α={}", e.s, e.p, e.r, a),
        );
    };
    let ts_identity = |c: &mut Checker| {
        c.need(
            close(e.t / e.s, e.q / e.p),
            "t/s=q/p",
            format!("t={}, s={}, q={}, p={}", e.t, e.s, e.q, e.p),
        );
    };
    match e.regime {
        Regime::T21 => {
            c.need(e.alpha > 0.0 && e.alpha < n, "0<α<n", format!("α={}", e.alpha));
            c.need(e.q1 > 1.0 && e.q2 > 1.0, "1<q1,q2<∞", format!("q1={}, q2={}", e.q1, e.q2));
            c.need(e.alpha / n > inv_r, "α/n>1/r", format!("α={}, r={}", e.alpha, e.r));
            s_identity(&mut c, e.alpha);
            ts_identity(&mut c);
            c.need(e.t > 0.0 && e.t <= 1.0, "0<t≤1", format!("t={}", e.t));
            c.need(e.t <= e.s * (1.0 + TOL), "t≤s", format!("t={}, s={}", e.t, e.s));
            c.need(
                e.a > 1.0 && e.a < e.q1.min(e.q2),
                "1<a<min(q1,q2)",
                format!("a={}, q1={}, q2={}", e.a, e.q1, e.q2),
            );
        }
        Regime::T22 => {
            c.need(e.alpha > 0.0 && e.alpha < n, "0<α<n", format!("α={}", e.alpha));
            c.need(e.alpha / n > inv_r, "α/n>1/r", format!("α={}, r={}", e.alpha, e.r));
            s_identity(&mut c, e.alpha);
            ts_identity(&mut c);
            c.need(e.t > 1.0, "1<t", format!("t={}", e.t));
            c.need(e.t <= e.s * (1.0 + TOL), "t≤s", format!("t={}, s={}", e.t, e.s));
            c.need(e.s < e.r, "s<r", format!("s={}, r={}", e.s, e.r));
            c.need(
                close(1.0 / e.r1 + 1.0 / e.r2, 1.0),
                "1/r1+1/r2=1",
                format!("r1={}, r2={}", e.r1, e.r2),
            );
            c.need(
                1.0 < e.r1 && e.r1 < e.q1 && 1.0 < e.r2 && e.r2 < e.q2,
                "1<r_i<q_i",
                format!("r1={}, q1={}, r2={}, q2={}", e.r1, e.q1, e.r2, e.q2),
            );
            c.need(
                e.a > 1.0 && e.a < e.q1.min(e.q2),
                "1<a<min(q1,q2)",
                format!("a={}, q1={}, q2={}", e.a, e.q1, e.q2),
            );
        }
        Regime::T27 => {
            c.need(e.alpha >= 0.0 && e.alpha < n, "0≤α<n", format!("α={}", e.alpha));
            c.need(e.alpha / n >= inv_r, "α/n≥1/r", format!("α={}, r={}", e.alpha, e.r));
            s_identity(&mut c, e.alpha);
            c.need(
                close(1.0 / e.t, 1.0 / e.q + inv_r - e.alpha / n),
                "1/t=1/q+1/r-α/n",
                format!("t={}, q={}, r={}, α={}", e.t, e.q, e.r, e.alpha),
            );
            c.need(e.t > 0.0 && e.t <= e.s * (1.0 + TOL), "0<t≤s", format!("t={}, s={}", e.t, e.s));
            c.need(e.s < e.r, "s<r", format!("s={}, r={}", e.s, e.r));
            c.need(
                0.0 < e.r1 && e.r1 <= e.q1 && 0.0 < e.r2 && e.r2 <= e.q2,
                "0<r_i≤q_i",
                format!("r1={}, q1={}, r2={}, q2={}", e.r1, e.q1, e.r2, e.q2),
            );
        }
        Regime::T28 => {
            c.need(e.alpha >= 0.0 && e.alpha < n, "0≤α<n", format!("α={}", e.alpha));
            c.need(e.alpha / n >= inv_r, "α/n≥1/r", format!("α={}, r={}", e.alpha, e.r));
            s_identity(&mut c, e.alpha);
            ts_identity(&mut c);
            c.need(e.t > 0.0 && e.t <= e.s * (1.0 + TOL), "0<t≤s", format!("t={}, s={}", e.t, e.s));
            c.need(e.s < e.r, "s<r", format!("s={}, r={}", e.s, e.r));
            c.need(
                0.0 < e.r1 && e.r1 < e.q1 && 0.0 < e.r2 && e.r2 < e.q2,
                "0<r_i<q_i",
                format!("r1={}, q1={}, r2={}, q2={}", e.r1, e.q1, e.r2, e.q2),
            );
            c.need(
                e.a > 1.0 && e.a < (e.q1 / e.r1).min(e.q2 / e.r2),
                "1<a<min(q1/r1,q2/r2)",
                format!("a={}, q1/r1={}, q2/r2={}", e.a, e.q1 / e.r1, e.q2 / e.r2),
            );
        }
        Regime::SW => {
            c.need(e.alpha > 0.0 && e.alpha < n, "0<α<n", format!("α={}", e.alpha));
            let (p1, p2) = (e.p1.unwrap_or(f64::NAN), e.p2.unwrap_or(f64::NAN));
            c.need(
                1.0 < e.q1 && e.q1 <= p1 && 1.0 < e.q2 && e.q2 <= p2,
                "1<q_i≤p_i",
                format!("q1={}, p1={p1}, q2={}, p2={p2}", e.q1, e.q2),
            );
            c.need(
                close(1.0 / e.p, 1.0 / p1 + 1.0 / p2),
                "1/p=1/p1+1/p2",
                format!("p={}, p1={p1}, p2={p2}", e.p),
            );
            c.need(1.0 < e.t && e.t <= e.s * (1.0 + TOL), "1<t≤s", format!("t={}, s={}", e.t, e.s));
            c.need(
                e.r > n / (n - e.alpha),
                "n/(n-α)<r",
                format!("r={}, α={}", e.r, e.alpha),
            );
            s_identity(&mut c, n - e.alpha);
            c.need(
                close(1.0 / e.t, 1.0 / e.q + inv_r - (n - e.alpha) / n),
                "1/t=1/q+1/r-(n-α)/n",
                format!("t={}, q={}, r={}", e.t, e.q, e.r),
            );
        }
    }
    c.out
}

/// Extra hypotheses for the commutator bounds on top of the regime checks:
/// `t ∈ [1/2, 1]` and `s < r` for `t ≤ 1`; `s < r` otherwise.
pub fn validate_commutator(e: &ExponentSet) -> Vec<Violation> {
    let mut c = Checker { out: validate(e) };
    if e.regime == Regime::T21 {
        c.need(
            e.t >= 0.5 && e.t <= 1.0,
            "1/2≤t≤1 (1/2≤t≤s and 0<t≤1)",
            format!("t={}", e.t),
        );
        c.need(e.s < e.r, "s<r", format!("s={}, r={}", e.s, e.r));
    }
    c.out
}

/// Power-weight conditions `β < n/s`, `γ_i < n/q_i'`,
/// `α + β + γ1 + γ2 = n + n/t - n/q`, `β + γ1 + γ2 ≥ 0`.
pub fn validate_power_weights(e: &ExponentSet, beta: f64, g1: f64, g2: f64) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let n = e.nf();
    c.need(beta < n / e.s, "β<n/s", format!("β={beta}, n/s={}", n / e.s));
    c.need(g1 < n / conj(e.q1), "γ1<n/q1'", format!("γ1={g1}, n/q1'={}", n / conj(e.q1)));
    c.need(g2 < n / conj(e.q2), "γ2<n/q2'", format!("γ2={g2}, n/q2'={}", n / conj(e.q2)));
    let lhs = e.alpha + beta + g1 + g2;
    let rhs = n + n / e.t - n / e.q;
    c.need(close(lhs, rhs), "α+β+γ1+γ2=n+n/t-n/q", format!("{lhs} vs {rhs}"));
    c.need(beta + g1 + g2 >= -TOL, "β+γ1+γ2≥0", format!("{}", beta + g1 + g2));
    c.out
}

pub fn ensure_valid(violations: Vec<Violation>) -> Result<()> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(violations))
    }
}

/// Auxiliary indices for the `t ≤ 1` commutator bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaWitness {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
    pub a_star: f64,
}

/// Auxiliary indices for the `t > 1` commutator bound. The `vartheta_i`
/// multiply `r_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarthetaWitness {
    pub vartheta1: f64,
    pub vartheta2: f64,
    pub vartheta3: f64,
    pub vartheta4: f64,
    pub vartheta5: f64,
    pub a_star: f64,
    pub l: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Theta(ThetaWitness),
    Vartheta(VarthetaWitness),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible { interval: String },
}

/// Open interval `(lo, hi)` midpoint, or the interval's name if it is empty.
fn mid(lo: f64, hi: f64, name: &str) -> std::result::Result<f64, String> {
    if hi.is_finite() && hi - lo > 1e-12 {
        Ok(0.5 * (lo + hi))
    } else if hi.is_infinite() && lo.is_finite() {
        Ok(lo + 1.0)
    } else {
        Err(format!("{name} ∈ ({lo}, {hi}) is empty"))
    }
}

/// `q / (x (q/(c x))')'`: the lower bound on `a` contributed by an index `x`
/// with multiplier `c` (`c = a_*` or `1`).
pub fn index_bound(q: f64, x: f64, c: f64) -> f64 {
    q / conj(x * conj(q / (c * x)))
}

/// Searches for auxiliary indices by interval midpoints.
///
/// For `t ≤ 1` the constraints reduce to `a_* ∈ (1, a)`,
/// `θ_1 < min(q1/a_*, q1/(q1 + a_* - a))`, `θ_4 ≤ q1/(q1 - a + 1)` (and the
/// same for `θ_2, θ_5` with `q2`) and `θ_3 ∈ (1, a]`. For `t > 1` the `ϑ_i r_i`
/// play the role of the `θ_i` and `L ∈ (1, a]`, `e ∈ (t, min(r, L t))`,
/// `ϑ_3 < min(a, L t / e, t'/e')`.
pub fn feasible_auxiliary_indices(e: &ExponentSet) -> Feasibility {
    let res = match e.regime {
        Regime::T21 => theta_search(e).map(Witness::Theta),
        Regime::T22 => vartheta_search(e).map(Witness::Vartheta),
        _ => Err("auxiliary indices only exist for the T21/T22 regimes".to_string()),
    };
    match res {
        Ok(w) => Feasibility::Feasible(w),
        Err(interval) => Feasibility::Infeasible { interval },
    }
}

fn theta_search(e: &ExponentSet) -> std::result::Result<ThetaWitness, String> {
    let (q1, q2, a) = (e.q1, e.q2, e.a);
    let a_star = mid(1.0, a.min(q1).min(q2), "a_*")?;
    let theta1 = mid(1.0, (q1 / a_star).min(q1 / (q1 + a_star - a)), "θ1")?;
    let theta2 = mid(1.0, (q2 / a_star).min(q2 / (q2 + a_star - a)), "θ2")?;
    let theta4 = mid(1.0, (q1 / (q1 - a + 1.0)).min(q1), "θ4")?;
    let theta5 = mid(1.0, (q2 / (q2 - a + 1.0)).min(q2), "θ5")?;
    let theta3 = mid(1.0, a, "θ3")?;
    Ok(ThetaWitness { theta1, theta2, theta3, theta4, theta5, a_star })
}

fn vartheta_search(e: &ExponentSet) -> std::result::Result<VarthetaWitness, String> {
    let (q1, q2, r1, r2, a, t) = (e.q1, e.q2, e.r1, e.r2, e.a, e.t);
    let a_hi = a
        .min(q1 / r1)
        .min(q2 / r2)
        .min(a - q1 + q1 / r1)
        .min(a - q2 + q2 / r2);
    let a_star = mid(1.0, a_hi, "a_*")?;
    let v1 = mid(1.0, (q1 / (a_star * r1)).min(q1 / (r1 * (q1 + a_star - a))), "ϑ1")?;
    let v2 = mid(1.0, (q2 / (a_star * r2)).min(q2 / (r2 * (q2 + a_star - a))), "ϑ2")?;
    let v4 = mid(1.0, (q1 / (r1 * (q1 - a + 1.0))).min(q1 / r1), "ϑ4")?;
    let v5 = mid(1.0, (q2 / (r2 * (q2 - a + 1.0))).min(q2 / r2), "ϑ5")?;
    let l = mid(1.0, a, "L")?;
    let ee = mid(t, e.r.min(l * t), "e")?;
    let v3 = mid(1.0, a.min(l * t / ee).min(conj(t) / conj(ee)), "ϑ3")?;
    Ok(VarthetaWitness {
        vartheta1: v1,
        vartheta2: v2,
        vartheta3: v3,
        vartheta4: v4,
        vartheta5: v5,
        a_star,
        l,
        e: ee,
    })
}

/// Rechecks every hypothesis and conclusion of the index lemmas literally,
/// returning the failed ones.
pub fn check_witness(e: &ExponentSet, w: &Witness) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };
    let (q1, q2, a) = (e.q1, e.q2, e.a);
    // a conclusion `x ≤ y` is tested with a relative slack for rounding
    let le = |x: f64, y: f64| x <= y * (1.0 + 1e-12);
    match w {
        Witness::Theta(th) => {
            let s = th.a_star;
            c.need(1.0 < th.theta1 && th.theta1 < q1, "θ1∈(1,q1)", format!("{}", th.theta1));
            c.need(1.0 < th.theta4 && th.theta4 < q1, "θ4∈(1,q1)", format!("{}", th.theta4));
            c.need(1.0 < th.theta2 && th.theta2 < q2, "θ2∈(1,q2)", format!("{}", th.theta2));
            c.need(1.0 < th.theta5 && th.theta5 < q2, "θ5∈(1,q2)", format!("{}", th.theta5));
            c.need(th.theta3 > 1.0, "θ3>1", format!("{}", th.theta3));
            c.need(s > 1.0, "a_*>1", format!("{s}"));
            c.need(s * th.theta1 < q1, "a_*θ1<q1", format!("{}", s * th.theta1));
            c.need(s * th.theta2 < q2, "a_*θ2<q2", format!("{}", s * th.theta2));
            let bound = th
                .theta3
                .max(index_bound(q1, th.theta1, s))
                .max(index_bound(q2, th.theta2, s))
                .max(index_bound(q1, th.theta4, 1.0))
                .max(index_bound(q2, th.theta5, 1.0));
            c.need(le(bound, a) && bound > 1.0, "a≥max{…}>1", format!("max={bound}, a={a}"));
            let lhs1 = (th.theta1 * conj(q1 / (s * th.theta1))).max(th.theta4 * conj(q1 / th.theta4));
            let lhs2 = (th.theta2 * conj(q2 / (s * th.theta2))).max(th.theta5 * conj(q2 / th.theta5));
            c.need(le(lhs1, conj(q1 / a)), "max{…}≤(q1/a)'", format!("{lhs1} vs {}", conj(q1 / a)));
            c.need(le(lhs2, conj(q2 / a)), "max{…}≤(q2/a)'", format!("{lhs2} vs {}", conj(q2 / a)));
        }
        Witness::Vartheta(v) => {
            let (r1, r2, t) = (e.r1, e.r2, e.t);
            let s = v.a_star;
            let (x1, x2, x4, x5) = (v.vartheta1 * r1, v.vartheta2 * r2, v.vartheta4 * r1, v.vartheta5 * r2);
            c.need(r1 < x1 && x1 < q1, "ϑ1r1∈(r1,q1)", format!("{x1}"));
            c.need(r1 < x4 && x4 < q1, "ϑ4r1∈(r1,q1)", format!("{x4}"));
            c.need(r2 < x2 && x2 < q2, "ϑ2r2∈(r2,q2)", format!("{x2}"));
            c.need(r2 < x5 && x5 < q2, "ϑ5r2∈(r2,q2)", format!("{x5}"));
            c.need(v.vartheta3 > 1.0, "ϑ3>1", format!("{}", v.vartheta3));
            c.need(v.l > 1.0, "L>1", format!("{}", v.l));
            c.need(t < v.e && v.e < e.r, "e∈(t,r)", format!("e={}", v.e));
            c.need(v.e * v.vartheta3 < v.l * t, "eϑ3<Lt", format!("{}", v.e * v.vartheta3));
            c.need(conj(v.e) * v.vartheta3 < conj(t), "e'ϑ3<t'", format!("{}", conj(v.e) * v.vartheta3));
            c.need(s > 1.0, "a_*>1", format!("{s}"));
            c.need(s * x1 < q1, "a_*ϑ1r1<q1", format!("{}", s * x1));
            c.need(s * x2 < q2, "a_*ϑ2r2<q2", format!("{}", s * x2));
            let bound = v
                .vartheta3
                .max(v.l)
                .max(index_bound(q1, x1, s))
                .max(index_bound(q2, x2, s))
                .max(index_bound(q1, x4, 1.0))
                .max(index_bound(q2, x5, 1.0));
            c.need(le(bound, a) && bound > 1.0, "a≥max{…}>1", format!("max={bound}, a={a}"));
            let lhs1 = (x1 * conj(q1 / (s * x1))).max(x4 * conj(q1 / x4));
            let lhs2 = (x2 * conj(q2 / (s * x2))).max(x5 * conj(q2 / x5));
            c.need(le(lhs1, conj(q1 / a)), "max{…}≤(q1/a)'", format!("{lhs1} vs {}", conj(q1 / a)));
            c.need(le(lhs2, conj(q2 / a)), "max{…}≤(q2/a)'", format!("{lhs2} vs {}", conj(q2 / a)));
        }
    }
    c.out
}
