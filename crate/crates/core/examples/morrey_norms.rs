//! Unweighted and weighted Morrey norms of a power singularity.

use morreylab::field::power_weight;
use morreylab::weights_norms::morrey_norm;
use morreylab::{LatticeFunction, Window};

fn main() -> morreylab::Result<()> {
    for lmin in [-4, -6, -8] {
        let w = Window::centered(1, lmin, 0)?;
        let f = LatticeFunction::from_fn(&w, |x| x[0].abs().powf(-0.25))?;
        let wt = power_weight(0.5, &w)?;
        println!(
            "level {lmin:>3}: ‖f‖(p=4, q=2) = {:.5}, weighted {:.5}",
            morrey_norm(&f, 4.0, 2.0, None)?,
            morrey_norm(&f, 4.0, 2.0, Some(&wt))?
        );
    }
    Ok(())
}
