//! Critical noise strength for two noise templates on the TFIM chain.

use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::noise::{critical_gamma, depolarizing_template};

fn main() -> negmc::Result<()> {
    let lattice = Lattice::chain(6, Boundary::Periodic)?;
    for (h, j) in [(1.0, 0.5), (1.0, 1.0), (0.5, 1.0)] {
        let designed = ModelSpec::tfim_with_noise(lattice.clone(), h, j, 1.0);
        let depol = depolarizing_template(&ModelSpec::tfim(lattice.clone(), h, j));
        let a = critical_gamma(&designed, 1e-9)?;
        let b = critical_gamma(&depol, 1e-9)?;
        println!(
            "h = {h:.1} J = {j:.1}   designed template γc = {:.6}   depolarizing γc = {:.6} ({} probes)",
            a.gamma_c,
            b.gamma_c,
            b.probes.len()
        );
    }
    Ok(())
}
