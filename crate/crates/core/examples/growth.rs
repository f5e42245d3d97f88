//! Exponential growth of the particle number below the classical threshold,
//! measured on a 3×3 torus and compared with the uniform-population estimate.

use negmc::algebra::assemble_model;
use negmc::engine::{run_ensemble, EnsembleConfig, InitialState, RateTable, RunConfig};
use negmc::gauge::optimize_model;
use negmc::lattice::{Boundary, Lattice};
use negmc::model::ModelSpec;
use negmc::predictions::{fit_growth, model_omega_saturation, model_growth_rate};
use negmc::state::{Axis, Configuration, Sign, SiteState};

fn main() -> negmc::Result<()> {
    let lattice = Lattice::square(3, 3, Boundary::Periodic)?;
    let n = lattice.num_sites();
    let init = InitialState::product(Configuration::uniform(n, SiteState::new(Axis::X, Sign::Plus))?);
    println!("{:>6} {:>10} {:>10} {:>10}", "gamma", "predicted", "fitted", "Ω(end)");
    for gamma in [0.25, 0.5, 0.75, 1.25] {
        let spec = ModelSpec::tfim_with_noise(lattice.clone(), 1.0, 0.5, gamma);
        let model = optimize_model(&assemble_model(&spec)?)?;
        let mu = model_growth_rate(&model);
        let sat = model_omega_saturation(&model)?;
        let t_max = if mu > 0.0 { 1e4f64.ln() / (n as f64 * mu) } else { 1.0 };
        let table = RateTable::new(&model)?;
        let run = RunConfig::uniform(t_max, 21);
        let r = run_ensemble(&table, &init, &[], &run, &EnsembleConfig { trajectories: 200, seed: 11, threads: None })?;
        let omega: Vec<f64> = (0..r.times.len()).map(|g| r.omega_mean(g)).collect();
        let fit = fit_growth(&r.times, &omega, n, sat.approx)?;
        println!("{gamma:>6.2} {mu:>10.4} {:>10.4} {:>10.1}", fit.mu, omega.last().unwrap());
    }
    Ok(())
}
