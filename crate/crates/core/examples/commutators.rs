//! Iterated commutators of the bilinear fractional integral with `log|x|`
//! symbols, by the kernel formula and by nesting.

use morreylab::operators::{commutator_iterated, commutator_nested, CommutatorSpec, Slot};
use morreylab::{LatticeFunction, Window};

fn main() -> morreylab::Result<()> {
    let w = Window::centered(1, -5, 1)?;
    let b = LatticeFunction::from_fn(&w, |x| x[0].abs().ln())?;
    let f = LatticeFunction::from_fn(&w, |x| (-x[0] * x[0]).exp())?;
    let g = LatticeFunction::from_fn(&w, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 })?;
    let spec = CommutatorSpec::new(vec![b.clone(), b], vec![Slot::First, Slot::Second])?;
    let it = commutator_iterated(&spec, &f, &g, 0.5)?;
    let ne = commutator_nested(&spec, &f, &g, 0.5)?;
    let gap = it.values.iter().zip(&ne.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("sup |[b,b,B]| = {:.6}, kernel vs nested gap {gap:.2e}", it.max_abs());
    let p = commutator_iterated(&spec.permuted(&[1, 0]), &f, &g, 0.5)?;
    let gap = it.values.iter().zip(&p.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("permuted symbols gap {gap:.2e}");
    Ok(())
}
