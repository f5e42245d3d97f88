//! Density-matrix integration of a small open chain, the reference the
//! sampler is checked against.

use negmc::engine::PauliString;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::oracle::{integrate, DenseState};

fn main() -> negmc::Result<()> {
    let spec = ModelSpec::tfim_with_noise(Lattice::chain(5, Boundary::Open)?, 1.0, 1.0, 0.3);
    let rho0 = DenseState::product(&"+x+x+x+x+x".parse()?)?;
    let grid: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
    let states = integrate(&spec, &rho0, &grid, None)?;
    let obs: Vec<PauliString> = ["x0", "x2", "z2", "x1 x2"].iter().map(|s| s.parse()).collect::<negmc::Result<_>>()?;
    print!("{:>5}", "t");
    for o in &obs {
        print!(" {:>9}", o.to_string());
    }
    println!(" {:>9}", "trace");
    for (t, s) in grid.iter().zip(&states) {
        s.check()?;
        print!("{t:>5.1}");
        for o in &obs {
            print!(" {:>9.5}", s.expectation(o));
        }
        println!(" {:>9.6}", s.trace().re);
    }
    Ok(())
}
