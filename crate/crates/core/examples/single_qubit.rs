//! A driven, dephased qubit: the signed particle ensemble against the exact
//! Bloch trajectory.
//!
//! ```text
//! cargo run --release --example single_qubit -- 0.5
//! ```

use negmc::algebra::assemble_model;
use negmc::engine::{run_ensemble, EnsembleConfig, InitialState, RateTable, RunConfig};
use negmc::model::ModelSpec;
use negmc::oracle::single_qubit_bloch;

fn main() -> negmc::Result<()> {
    let gamma: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let tau = 1.0;
    let spec = ModelSpec::single_qubit(tau, gamma);
    let model = assemble_model(&spec)?;
    let table = RateTable::new(&model)?;
    let init = InitialState::product("+z".parse()?);
    let obs = vec!["z0".parse()?, "y0".parse()?];
    let run = RunConfig::uniform(3.0, 13);
    let r = run_ensemble(&table, &init, &obs, &run, &EnsembleConfig { trajectories: 100_000, seed: 1, threads: None })?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>9} {:>9}", "t", "<z>", "±", "exact", "<y>", "exact");
    for (g, &t) in r.times.iter().enumerate() {
        let b = single_qubit_bloch(tau, gamma, [0.0, 0.0, 1.0], t);
        println!(
            "{t:>5.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            r.mean(g, 0),
            r.stderr(g, 0),
            b[2],
            r.mean(g, 1),
            b[1]
        );
    }
    println!("mean particle number at t = 3: {:.1}", r.omega_mean(r.times.len() - 1));
    Ok(())
}
