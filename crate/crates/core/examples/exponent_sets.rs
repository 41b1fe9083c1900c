//! Solving `s, t` for an exponent set, validating it and searching for
//! auxiliary indices.

use morreylab::exponents::{check_witness, feasible_auxiliary_indices, validate, ExponentSet, Feasibility, Regime};

fn main() -> morreylab::Result<()> {
    let e = ExponentSet::solved(Regime::T21, 1, 0.9, 1.2, 1.2, 0.6, 2.0, 1.1)?;
    println!("q = {}, s = {:.4}, t = {:.4}, (r1, r2) = ({}, {})", e.q, e.s, e.t, e.r1, e.r2);
    println!("violations: {:?}", validate(&e));
    let e = ExponentSet::solved(Regime::T21, 1, 0.5, 4.0, 4.0, 2.0, 4.0, 1.5)?;
    match feasible_auxiliary_indices(&e) {
        Feasibility::Feasible(w) => println!("witness {w:?}, failed checks {:?}", check_witness(&e, &w)),
        Feasibility::Infeasible { interval } => println!("infeasible: {interval}"),
    }
    let bad = ExponentSet::solved(Regime::T22, 1, 0.25, 4.0, 4.0, 2.0, f64::INFINITY, 0.5)?;
    for v in validate(&bad) {
        println!("violated: {} ({})", v.constraint, v.observed);
    }
    Ok(())
}
