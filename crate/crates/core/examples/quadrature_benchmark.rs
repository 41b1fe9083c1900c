//! Singular-kernel quadrature: `B_{1/2}(χ, χ)(0)` for `χ = χ_{[-1,1]}` is exactly 4.

use morreylab::operators::bilinear_fractional;
use morreylab::{BoxRegion, LatticeFunction, Window};

fn main() -> morreylab::Result<()> {
    let mut prev = None;
    for lmin in [-4, -6, -8] {
        let w = Window::centered(1, lmin, 0)?;
        let chi = LatticeFunction::indicator(&w, &BoxRegion::new(vec![-1.0], vec![1.0]));
        let v = bilinear_fractional(&chi, &chi, 0.5)?.value_at(&[0.0]);
        let change = prev.map_or(String::new(), |p: f64| format!("  change {:.2e}", (v - p).abs()));
        println!("finest level {lmin:>3}: {v:.8} (error {:.2e}){change}", (v - 4.0).abs());
        prev = Some(v);
    }
    Ok(())
}
