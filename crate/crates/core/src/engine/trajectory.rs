//! Gillespie loop for one realization of the signed particle process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::init::InitialState;
use super::observable::{ObservableTracker, PauliString};
use super::rates::{RateTable, Transition};
use super::treap::{NewNode, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::state::{Configuration, LOCAL_STATES};

/// Default cap on `Ω`.
pub const DEFAULT_OMEGA_MAX: u64 = 10_000_000;

/// Largest lattice for which the dense occupation vector can be recorded.
pub const MAX_DISTRIBUTION_SITES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_max: f64,
    /// Strictly increasing times in `[0, t_max]`.
    pub grid: Vec<f64>,
    pub omega_max: u64,
    /// Record `n_C` for every configuration (small lattices only).
    pub record_distribution: bool,
    /// Verify treap, tracker and conservation invariants after each event.
    pub check_invariants: bool,
}

impl RunConfig {
    /// `points` evenly spaced times from 0 to `t_max` inclusive.
    pub fn uniform(t_max: f64, points: usize) -> Self {
        let grid = match points {
            0 => Vec::new(),
            1 => vec![t_max],
            _ => (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect(),
        };
        RunConfig {
            t_max,
            grid,
            omega_max: DEFAULT_OMEGA_MAX,
            record_distribution: false,
            check_invariants: false,
        }
    }

    pub fn validate(&self, num_sites: usize) -> Result<()> {
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be finite and >= 0, got {}", self.t_max)));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid times must be strictly increasing".into()));
        }
        if self.grid.iter().any(|&t| !(0.0..=self.t_max).contains(&t)) {
            return Err(Error::Config("grid times must lie in [0, t_max]".into()));
        }
        if self.omega_max == 0 {
            return Err(Error::Config("omega_max must be positive".into()));
        }
        if self.record_distribution && num_sites > MAX_DISTRIBUTION_SITES {
            return Err(Error::Config(format!(
                "distribution recording needs at most {MAX_DISTRIBUTION_SITES} sites"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub omega: Vec<u64>,
    pub omega_occ: Vec<u64>,
    /// `values[g][k]`: tracker `k` at grid time `g`.
    pub values: Vec<Vec<f64>>,
    /// `distribution[g][dense index of C] = n_C`.
    pub distribution: Option<Vec<Vec<i64>>>,
    pub events: u64,
    pub branches: u64,
    pub max_omega: u64,
    pub seed: u64,
    pub stream: u64,
    /// Set when `Ω` exceeded the cap; later grid points are missing.
    pub aborted: bool,
}

impl TrajectoryRecord {
    /// Grid points actually recorded.
    pub fn recorded(&self) -> usize {
        self.omega.len()
    }
}

/// Outcome of one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub dt: f64,
    pub transition: Transition,
}

/// Reusable state of one realization.
pub struct Trajectory<'a> {
    table: &'a RateTable,
    ensemble: ParticleEnsemble,
    trackers: Vec<ObservableTracker>,
    distribution: Option<Vec<i64>>,
    rng: ChaCha8Rng,
    time: f64,
    events: u64,
    branches: u64,
}

impl<'a> Trajectory<'a> {
    pub fn new(table: &'a RateTable, observables: &[PauliString], record_distribution: bool) -> Result<Self> {
        for o in observables {
            if o.max_site().is_some_and(|s| s >= table.num_sites()) {
                return Err(Error::Config(format!("observable `{o}` outside the lattice")));
            }
        }
        let distribution = record_distribution.then(|| vec![0; LOCAL_STATES.pow(table.num_sites() as u32)]);
        Ok(Trajectory {
            table,
            ensemble: ParticleEnsemble::new(),
            trackers: observables.iter().cloned().map(ObservableTracker::new).collect(),
            distribution,
            rng: ChaCha8Rng::seed_from_u64(0),
            time: 0.0,
            events: 0,
            branches: 0,
        })
    }

    /// Clears the state, reseeds and places one `•` particle drawn from `init`.
    pub fn start(&mut self, init: &InitialState, seed: u64, stream: u64) -> Result<()> {
        if init.num_sites() != self.table.num_sites() {
            return Err(Error::Config(format!(
                "initial state has {} sites, model has {}",
                init.num_sites(),
                self.table.num_sites()
            )));
        }
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.rng.set_stream(stream);
        self.ensemble.clear();
        self.trackers.iter_mut().for_each(ObservableTracker::reset);
        if let Some(d) = &mut self.distribution {
            d.fill(0);
        }
        self.time = 0.0;
        self.events = 0;
        self.branches = 0;
        let c = init.sample(&mut self.rng);
        self.change(&c, 1, None)
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn trackers(&self) -> &[ObservableTracker] {
        &self.trackers
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn branches(&self) -> u64 {
        self.branches
    }

    /// Adds `delta` to `n_c`. `hint` carries a prepared escape index for a
    /// node that may have to be created.
    fn change(&mut self, c: &Configuration, delta: i64, hint: Option<Box<[f64]>>) -> Result<()> {
        let table = self.table;
        let prio = self.rng.random::<u64>();
        let mut hint = hint;
        self.ensemble.add(c, delta, |ens| {
            let index = if table.is_indexed() {
                Some(match hint.take() {
                    Some(ix) => ix,
                    None => match ens.take_spare_index() {
                        Some(mut ix) => {
                            table.fill_index(c, &mut ix);
                            ix
                        }
                        None => table.build_index(c),
                    },
                })
            } else {
                None
            };
            let tau = index.as_ref().map_or_else(|| table.escape(c), |ix| ix[1]);
            NewNode { tau, index, prio }
        })?;
        if let Some(ix) = hint {
            self.ensemble.recycle_index(ix);
        }
        for t in &mut self.trackers {
            t.update(c, delta);
        }
        if let Some(d) = &mut self.distribution {
            d[c.dense_index()] += delta;
        }
        Ok(())
    }

    /// Draws the waiting time to the next event, or `None` if the ensemble
    /// is stationary.
    fn waiting_time(&mut self) -> Option<f64> {
        let rate = self.ensemble.tau_tot();
        if rate > 0.0 {
            let e: f64 = Exp1.sample(&mut self.rng);
            Some(e / rate)
        } else {
            None
        }
    }

    /// Picks a particle and a transition and applies it.
    fn fire(&mut self) -> Result<Transition> {
        let x = self.rng.random::<f64>() * self.ensemble.tau_tot();
        let u = self.rng.random::<f64>();
        let (key, n, tau) = {
            let (k, n, t) = self.ensemble.draw(x).ok_or(Error::Stationary)?;
            (k.clone(), n, t)
        };
        let s = n.signum();
        let tr = self.table.sample(&key, tau, self.ensemble.index_of(&key), u);
        let dest = self.table.apply(&key, tr);
        let needs_index = self.table.is_indexed() && self.ensemble.occupation(&dest) == 0;
        self.events += 1;
        if !tr.negative {
            // The particle moves; its node's index can follow it when the
            // node empties.
            let hint = if needs_index {
                let mut ix = if n.abs() == 1 {
                    self.ensemble.take_index(&key).expect("indexed node")
                } else {
                    self.copy_index(&key)
                };
                self.table.update_index(tr.group, &dest, &mut ix);
                Some(ix)
            } else {
                None
            };
            self.change(&key, -s, None)?;
            self.change(&dest, s, hint)?;
        } else {
            self.branches += 1;
            let hint = if needs_index {
                let mut ix = self.copy_index(&key);
                self.table.update_index(tr.group, &dest, &mut ix);
                Some(ix)
            } else {
                None
            };
            self.change(&dest, -s, hint)?;
            self.change(&key, s, None)?;
        }
        Ok(tr)
    }

    fn copy_index(&mut self, key: &Configuration) -> Box<[f64]> {
        let src = self.ensemble.index_of(key).expect("indexed node").to_vec();
        match self.ensemble.take_spare_index() {
            Some(mut ix) => {
                ix.copy_from_slice(&src);
                ix
            }
            None => src.into_boxed_slice(),
        }
    }

    /// One Gillespie step: waiting time, then an event.
    pub fn step(&mut self) -> Result<Event> {
        let dt = self.waiting_time().ok_or(Error::Stationary)?;
        let transition = self.fire()?;
        self.time += dt;
        Ok(Event { dt, transition })
    }

    /// Checks treap integrity, tracker values and `S = 1`.
    pub fn check(&self) -> Result<()> {
        self.ensemble.check(|c| self.table.escape(c))?;
        if self.ensemble.signed_total() != 1 {
            return Err(Error::Invariant(format!("signed total {}", self.ensemble.signed_total())));
        }
        let entries = self.ensemble.entries();
        for t in &self.trackers {
            let direct = t.recompute(&entries);
            if (direct - t.value()).abs() > 1e-9 * (1.0 + direct.abs()) {
                return Err(Error::Invariant(format!(
                    "tracker {} holds {} but contraction gives {direct}",
                    t.observable,
                    t.value()
                )));
            }
        }
        Ok(())
    }

    /// Runs to `run.t_max`, recording on `run.grid`.
    pub fn run(&mut self, init: &InitialState, run: &RunConfig, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
        self.start(init, seed, stream)?;
        let n_grid = run.grid.len();
        let mut rec = TrajectoryRecord {
            times: run.grid.clone(),
            omega: Vec::with_capacity(n_grid),
            omega_occ: Vec::with_capacity(n_grid),
            values: Vec::with_capacity(n_grid),
            distribution: self.distribution.as_ref().map(|_| Vec::with_capacity(n_grid)),
            events: 0,
            branches: 0,
            max_omega: self.ensemble.omega(),
            seed,
            stream,
            aborted: false,
        };
        if run.check_invariants {
            self.check()?;
        }
        let mut g = 0;
        loop {
            let next = self.waiting_time().map_or(f64::INFINITY, |dt| self.time + dt);
            while g < n_grid && run.grid[g] < next {
                self.record(&mut rec);
                g += 1;
            }
            if next > run.t_max {
                break;
            }
            self.fire()?;
            self.time = next;
            let omega = self.ensemble.omega();
            rec.max_omega = rec.max_omega.max(omega);
            if run.check_invariants {
                self.check()?;
            }
            if omega > run.omega_max {
                rec.aborted = true;
                break;
            }
        }
        rec.events = self.events;
        rec.branches = self.branches;
        Ok(rec)
    }

    fn record(&self, rec: &mut TrajectoryRecord) {
        rec.omega.push(self.ensemble.omega());
        rec.omega_occ.push(self.ensemble.omega_occ());
        rec.values.push(self.trackers.iter().map(ObservableTracker::value).collect());
        if let (Some(out), Some(d)) = (&mut rec.distribution, &self.distribution) {
            out.push(d.clone());
        }
    }
}

/// One trajectory from scratch; `stream` selects an independent RNG stream
/// under `seed`.
pub fn run_trajectory(
    table: &RateTable,
    init: &InitialState,
    observables: &[PauliString],
    run: &RunConfig,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    run.validate(table.num_sites())?;
    init.validate()?;
    Trajectory::new(table, observables, run.record_distribution)?.run(init, run, seed, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::assemble_model;
    use crate::gauge::optimize_model;
    use crate::lattice::{Boundary, Lattice};
    use crate::model::ModelSpec;
    use crate::state::{Axis, Sign, SiteState};

    fn plus_z(n: usize) -> InitialState {
        InitialState::product(Configuration::uniform(n, SiteState::new(Axis::Z, Sign::Plus)).unwrap())
    }

    fn qubit(tau: f64, gamma: f64, gauge: bool) -> RateTable {
        let m = assemble_model(&ModelSpec::single_qubit(tau, gamma)).unwrap();
        let m = if gauge { optimize_model(&m).unwrap() } else { m };
        RateTable::new(&m).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let table = qubit(0.5, 0.2, false);
        let obs = [PauliString::single(0, Axis::Z)];
        let run = RunConfig::uniform(2.0, 5);
        let a = run_trajectory(&table, &plus_z(1), &obs, &run, 9, 4).unwrap();
        let b = run_trajectory(&table, &plus_z(1), &obs, &run, 9, 4).unwrap();
        let c = run_trajectory(&table, &plus_z(1), &obs, &run, 9, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_horizon_records_initial_sample() {
        let table = qubit(0.5, 0.0, false);
        let mut run = RunConfig::uniform(0.0, 1);
        run.record_distribution = true;
        let r = run_trajectory(&table, &plus_z(1), &[], &run, 1, 0).unwrap();
        assert_eq!(r.recorded(), 1);
        assert_eq!(r.events, 0);
        assert_eq!(r.omega, vec![1]);
        assert_eq!(r.distribution.unwrap()[0].iter().sum::<i64>(), 1);
    }

    #[test]
    fn classical_qubit_never_branches() {
        let table = qubit(0.5, 0.75, true);
        let run = RunConfig::uniform(5.0, 11);
        for s in 0..50 {
            let r = run_trajectory(&table, &plus_z(1), &[], &run, 3, s).unwrap();
            assert_eq!(r.branches, 0);
            assert!(r.omega.iter().all(|&o| o == 1));
        }
    }

    #[test]
    fn invariants_hold_in_quantum_phase() {
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(4, Boundary::Periodic).unwrap(), 1.0, 0.5, 0.3);
        let table = RateTable::new(&assemble_model(&spec).unwrap()).unwrap();
        let obs: Vec<PauliString> = ["z0", "y0 x2", "x1 x2"].iter().map(|s| s.parse().unwrap()).collect();
        let mut run = RunConfig::uniform(1.5, 4);
        run.check_invariants = true;
        run.omega_max = 2000;
        let mut tr = Trajectory::new(&table, &obs, false).unwrap();
        let mut branches = 0;
        for s in 0..5 {
            let r = tr.run(&plus_z(4), &run, 17, s).unwrap();
            branches += r.branches;
        }
        assert!(branches > 0);
    }

    #[test]
    fn indexed_tables_keep_invariants() {
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(40, Boundary::Periodic).unwrap(), 1.0, 0.5, 0.5);
        let table = RateTable::new(&assemble_model(&spec).unwrap()).unwrap();
        assert!(table.is_indexed());
        let mut run = RunConfig::uniform(0.2, 3);
        run.check_invariants = true;
        run.omega_max = 500;
        let r = run_trajectory(&table, &plus_z(40), &["z3".parse().unwrap()], &run, 2, 0).unwrap();
        assert!(r.events > 0);
    }

    #[test]
    fn negative_event_adds_two_particles() {
        let table = qubit(0.5, 0.0, false);
        let mut tr = Trajectory::new(&table, &[], false).unwrap();
        let mut seen = false;
        for stream in 0..100 {
            tr.start(&plus_z(1), 1, stream).unwrap();
            for _ in 0..50 {
                let before = tr.ensemble().omega();
                let Ok(ev) = tr.step() else { break };
                if ev.transition.negative && before == 1 {
                    assert_eq!(tr.ensemble().omega(), 3);
                    seen = true;
                }
                assert_eq!(tr.ensemble().signed_total(), 1);
            }
        }
        assert!(seen);
    }
}
