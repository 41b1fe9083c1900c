//! Dyadic and centred bilinear maximal functions against the BH maximal operator.

use morreylab::maximal::{m_alpha_r, Mode};
use morreylab::operators::bh_maximal;
use morreylab::{LatticeFunction, Window};

fn main() -> morreylab::Result<()> {
    let w = Window::centered(1, -5, 0)?;
    let f = LatticeFunction::from_fn(&w, |x| 1.0 / (0.1 + x[0].abs()))?;
    let g = LatticeFunction::from_fn(&w, |x| (3.0 * x[0]).cos().abs())?;
    let bh = bh_maximal(&f, &g)?;
    for pair in [(2.0, 2.0), (1.5, 3.0), (4.0, 4.0 / 3.0)] {
        let dy = m_alpha_r(&f, &g, 0.0, pair, Mode::Dyadic)?;
        let ce = m_alpha_r(&f, &g, 0.0, pair, Mode::Centered)?;
        let worst = bh.values.iter().zip(&ce.values).map(|(a, b)| a / b).fold(0.0, f64::max);
        println!("R = {pair:?}: max dyadic {:.4}, max centred {:.4}, max BH/centred {worst:.4}", dy.max_abs(), ce.max_abs());
    }
    Ok(())
}
