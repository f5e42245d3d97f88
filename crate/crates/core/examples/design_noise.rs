//! Cheapest noise that makes one link classical, first from every family and
//! then from dephasing alone.

use negmc::algebra::Term;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::noise::{all_families, design_noise};

fn show(title: &str, families: &[Term], spec: &ModelSpec) -> negmc::Result<()> {
    let d = design_noise(spec, 0, families)?;
    println!("{title}: total weight {:.6}, residual {:.1e}", d.objective, d.residual);
    for (f, x) in d.families.iter().zip(&d.x) {
        if *x > 1e-12 {
            println!("  {f:<8} {x:.6}");
        }
    }
    Ok(())
}

fn main() -> negmc::Result<()> {
    let spec = ModelSpec::tfim(Lattice::chain(6, Boundary::Periodic)?, 1.0, 0.5);
    show("all families", &all_families(), &spec)?;
    let dephasing: Vec<Term> = ["L:sz", "L:szsz", "L:sxsx"].iter().map(|s| s.parse()).collect::<negmc::Result<_>>()?;
    match design_noise(&spec, 0, &dephasing) {
        Ok(_) => show("dephasing and xx", &dephasing, &spec)?,
        Err(e) => println!("dephasing and xx: {e}"),
    }
    Ok(())
}
