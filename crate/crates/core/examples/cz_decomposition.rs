//! Stopping-time decomposition of a spiky pair and its invariants.

use morreylab::czd::{check_invariants, cz_decompose, cz_decompose_alpha};
use morreylab::{Cube, LatticeFunction, Window};

fn main() -> morreylab::Result<()> {
    let w = Window::single(&Cube::unit(1), -14)?;
    let spike = w.num_cells() / 3;
    let f = LatticeFunction::from_fn(&w, |x| 1.0 + x[0])?;
    let mut g = f.clone();
    g.values[spike] = 1e10;
    let mut f = f;
    f.values[spike] = 1e10;
    let q0 = Cube::unit(1);
    for (name, d) in [
        ("plain", cz_decompose(&f, &g, &q0, 1.05, 1.05)?),
        ("weighted", cz_decompose_alpha(&f, &g, &q0, 2.0, 2.0, 0.1)?),
    ] {
        println!("{name}: γ = {:.4e}, A = {:.4e}", d.gamma, d.factor);
        for l in &d.levels {
            println!("  k = {}: {:?}", l.k, l.cubes);
        }
        println!("  |E0| = {} cells, invariant violations: {:?}", d.e0_cells.len(), check_invariants(&d, &f, &g));
    }
    Ok(())
}
