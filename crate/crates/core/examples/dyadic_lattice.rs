//! Dyadic cubes, windows and the nested pairs the two-weight sups run over.

use morreylab::{Cube, Window};

fn main() -> morreylab::Result<()> {
    let unit = Cube::unit(1);
    println!("children of {unit:?}: {:?}", unit.children());
    let w = Window::single(&unit, -2)?;
    println!("{} cells, {} cubes", w.num_cells(), w.all_cubes().len());
    println!("cubes containing 0.3: {:?}", w.cubes_containing(&[0.3])?);
    let w = Window::single(&unit, -1)?;
    for (q, qp) in w.nested_pairs() {
        println!("  {q:?} ⊆ {qp:?}");
    }
    let w2 = Window::centered(2, -3, 1)?;
    println!("2-d window {:?}: {} cells", w2.bounds(), w2.num_cells());
    Ok(())
}
