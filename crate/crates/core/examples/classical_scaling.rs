//! Cost per event of the classical phase as the ring grows.

use std::time::Instant;

use negmc::algebra::assemble_model;
use negmc::engine::{run_ensemble, EnsembleConfig, InitialState, RateTable, RunConfig};
use negmc::gauge::optimize_model;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::state::{Axis, Configuration, Sign, SiteState};

fn main() -> negmc::Result<()> {
    for n in [64, 256, 1024, 4096] {
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(n, Boundary::Periodic)?, 1.0, 0.5, 1.5);
        let model = optimize_model(&assemble_model(&spec)?)?;
        let table = RateTable::new(&model)?;
        let init = InitialState::product(Configuration::uniform(n, SiteState::new(Axis::Z, Sign::Plus))?);
        let run = RunConfig::uniform(2.0, 5);
        let start = Instant::now();
        let r = run_ensemble(&table, &init, &["z0".parse()?], &run, &EnsembleConfig { trajectories: 200, seed: 0, threads: Some(1) })?;
        let secs = start.elapsed().as_secs_f64();
        println!(
            "N = {n:>5}  events {:>9}  {:>7.1} ns/event  max Ω {}",
            r.events,
            1e9 * secs / r.events as f64,
            r.max_omega
        );
    }
    Ok(())
}
