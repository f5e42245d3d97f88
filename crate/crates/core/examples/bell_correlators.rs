//! Two Bell pairs on a four-site ring under classicalizing noise. The
//! connected correlator of one pair decays as the ring scrambles it.

use std::f64::consts::FRAC_PI_4;

use negmc::algebra::assemble_model;
use negmc::engine::{run_ensemble, Correlator, EnsembleConfig, InitialState, RateTable, RunConfig};
use negmc::gauge::optimize_model;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::oracle::{integrate, DenseState};

fn main() -> negmc::Result<()> {
    let spec = ModelSpec::tfim_with_noise(Lattice::chain(4, Boundary::Periodic)?, 1.0, 0.5, 1.2);
    let model = optimize_model(&assemble_model(&spec)?)?;
    assert!(model.is_classical());
    let table = RateTable::new(&model)?;

    let init = InitialState::bell_pairs(vec![(0, 2), (1, 3)], vec![FRAC_PI_4; 2], "+z+z+z+z".parse()?)?;
    let corr = Correlator::new(vec![(1.0, "y0".parse()?)], vec![(1.0, "y2".parse()?), (1.0, "x2".parse()?)])?;
    let run = RunConfig::uniform(0.8, 9);
    let r = run_ensemble(&table, &init, &corr.observables(), &run, &EnsembleConfig { trajectories: 200_000, seed: 3, threads: None })?;
    let exact = integrate(&spec, &DenseState::from_initial(&init)?, &run.grid, None)?;

    println!("{:>5} {:>10} {:>9} {:>10}", "t", "sampled", "±", "exact");
    for (g, &t) in r.times.iter().enumerate() {
        let (v, se) = r.connected(g, &corr)?;
        let e = corr.evaluate(|p| exact[g].expectation(p));
        println!("{t:>5.2} {v:>10.5} {se:>9.5} {e:>10.5}");
    }
    println!("branchings: {}", r.branches);
    Ok(())
}
