//! Rate matrices of a single driven qubit and of one TFIM link.
//!
//! ```text
//! cargo run --release --example build_matrix
//! ```

use negmc::algebra::assemble::link_parts;
use negmc::algebra::assemble_model;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;

fn main() -> negmc::Result<()> {
    let qubit = assemble_model(&ModelSpec::single_qubit(1.0, 0.0))?;
    let m = &qubit.matrices[0];
    println!("H = σx, no noise\n{}", m.dump());
    println!("{}", m.sign_pattern());
    println!("negative entries {}  negative mass {}\n", m.negative_count(), m.negative_mass());

    let spec = ModelSpec::tfim_with_noise(Lattice::chain(4, Boundary::Periodic)?, 1.0, 0.5, 1.0);
    let (h, noise) = link_parts(&spec, 0)?;
    let combined = h.add(&noise);
    for (name, m) in [("hamiltonian", &h), ("noise", &noise), ("combined", &combined)] {
        println!(
            "{name:<12} negative entries {:>4}  negative mass {:>8.4}  absolute mass {:>8.4}",
            m.negative_count(),
            m.negative_mass(),
            m.absolute_mass()
        );
    }
    Ok(())
}
