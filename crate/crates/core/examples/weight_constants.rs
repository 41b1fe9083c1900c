//! A_p, reverse-Hölder and two-weight constants of power weights as the
//! window refines toward the singularity.

use morreylab::exponents::{ExponentSet, Regime};
use morreylab::field::power_weight;
use morreylab::weights_norms::{ap_constant, lemma39_check, rh_constant, two_weight_constant, WeightConditionKind};
use morreylab::{LatticeFunction, Weight, Window};

fn main() -> morreylab::Result<()> {
    let mut e = ExponentSet::solved(Regime::T27, 1, 0.25, 4.0, 4.0, 2.0, f64::INFINITY, 1.0)?;
    e.r1 = 2.0;
    e.r2 = 2.0;
    for lmin in [-4, -6, -8] {
        let w = Window::centered(1, lmin, 0)?;
        let good = power_weight(0.5, &w)?;
        // not locally integrable, so sample it at cell centres instead of averaging
        let bad = Weight::new(LatticeFunction::from_fn(&w, |x| x[0].abs().powf(-2.0))?)?;
        let (v, wi) = (power_weight(0.2, &w)?, power_weight(0.1, &w)?);
        let l39 = lemma39_check(&wi, &wi, 4.0, 4.0, 2.0)?;
        println!(
            "level {lmin:>3}: A2(|x|^½) = {:.4}, A2(|x|^-2) = {:.3e}, RH2 = {:.4}, C27 = {:.4}, joint = {:.4}",
            ap_constant(&good, 2.0)?,
            ap_constant(&bad, 2.0)?,
            rh_constant(&good, 2.0)?,
            two_weight_constant(WeightConditionKind::C27, &v, &wi, &wi, &e)?,
            l39.joint_const
        );
    }
    Ok(())
}
