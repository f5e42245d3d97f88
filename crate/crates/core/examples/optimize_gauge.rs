//! Gauge optimization removes the negative rates of a TFIM link once the
//! noise is strong enough, and only reduces them below threshold.

use negmc::algebra::assemble::link_parts;
use negmc::gauge::optimize_gauge;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;

fn main() -> negmc::Result<()> {
    let lattice = Lattice::chain(8, Boundary::Periodic)?;
    println!("{:>6} {:>12} {:>12}", "gamma", "before", "after");
    for gamma in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25] {
        let spec = ModelSpec::tfim_with_noise(lattice.clone(), 1.0, 0.5, gamma);
        let (h, n) = link_parts(&spec, 0)?;
        let m = h.add(&n);
        let out = optimize_gauge(&m)?;
        println!("{gamma:>6.2} {:>12.6} {:>12.6}", m.negative_mass(), out.certified);
    }

    // The gauge leaves the dynamics of the diagonal projectors alone: column
    // sums stay zero.
    let spec = ModelSpec::tfim_with_noise(lattice, 1.0, 0.5, 1.5);
    let (h, n) = link_parts(&spec, 0)?;
    let out = optimize_gauge(&h.add(&n))?;
    let worst = out.gauged.column_sums().iter().fold(0f64, |a, s| a.max(s.abs()));
    println!("\nlargest column sum after gauging: {worst:.2e}");
    println!("gauge parameters: {}", out.param.lambda.len());
    Ok(())
}
