//! Many independent trajectories with a reduction that does not depend on
//! the thread count.

use rayon::prelude::*;

use super::init::InitialState;
use super::observable::PauliString;
use super::rates::RateTable;
use super::trajectory::{RunConfig, Trajectory, TrajectoryRecord};
use crate::error::{Error, Result};

/// Trajectories per work unit. Units are reduced in index order.
pub const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub trajectories: u64,
    /// Trajectory `i` uses stream `i` of this seed.
    pub seed: u64,
    /// `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

/// Mean and co-moment of a vector sample.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    n: u64,
    mean: Vec<f64>,
    /// Row-major `Σ (x-x̄)(x-x̄)ᵀ`.
    comoment: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Moments { n: 0, mean: vec![0.0; dim], comoment: vec![0.0; dim * dim] }
    }

    fn push(&mut self, x: &[f64]) {
        let d = self.mean.len();
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let after = x[i] - self.mean[i];
            for j in 0..d {
                self.comoment[i * d + j] += delta[j] * after;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let d = self.mean.len();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..d {
            self.mean[i] += delta[i] * nb / n;
            for j in 0..d {
                self.comoment[i * d + j] += other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        self.n += other.n;
    }

    fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.mean.len() + j] / (self.n - 1) as f64
    }
}

/// Per-entry mean and second moment of the occupation vector.
#[derive(Debug, Clone, PartialEq)]
struct DiagonalMoments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl DiagonalMoments {
    fn new(dim: usize) -> Self {
        DiagonalMoments { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[i64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let v = v as f64;
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, other: &DiagonalMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.n += other.n;
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Accumulator {
    grid: Vec<Moments>,
    distribution: Option<Vec<DiagonalMoments>>,
    trajectories: u64,
    events: u64,
    branches: u64,
    aborted: u64,
    max_omega: u64,
}

impl Accumulator {
    fn new(grid: usize, observables: usize, distribution: Option<usize>) -> Self {
        Accumulator {
            grid: (0..grid).map(|_| Moments::new(observables + 2)).collect(),
            distribution: distribution.map(|d| (0..grid).map(|_| DiagonalMoments::new(d)).collect()),
            trajectories: 0,
            events: 0,
            branches: 0,
            aborted: 0,
            max_omega: 0,
        }
    }

    fn push(&mut self, rec: &TrajectoryRecord) {
        let mut x = Vec::new();
        for g in 0..rec.recorded() {
            x.clear();
            x.extend_from_slice(&rec.values[g]);
            x.push(rec.omega[g] as f64);
            x.push(rec.omega_occ[g] as f64);
            self.grid[g].push(&x);
        }
        if let (Some(acc), Some(d)) = (&mut self.distribution, &rec.distribution) {
            for (a, v) in acc.iter_mut().zip(d) {
                a.push(v);
            }
        }
        self.trajectories += 1;
        self.events += rec.events;
        self.branches += rec.branches;
        self.aborted += rec.aborted as u64;
        self.max_omega = self.max_omega.max(rec.max_omega);
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.grid.iter_mut().zip(&other.grid) {
            a.merge(b);
        }
        if let (Some(a), Some(b)) = (&mut self.distribution, &other.distribution) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        self.trajectories += other.trajectories;
        self.events += other.events;
        self.branches += other.branches;
        self.aborted += other.aborted;
        self.max_omega = self.max_omega.max(other.max_omega);
    }
}

/// `⟨L R⟩ − ⟨L⟩⟨R⟩` for linear combinations `L`, `R` of Pauli strings with
/// disjoint supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlator {
    pub left: Vec<(f64, PauliString)>,
    pub right: Vec<(f64, PauliString)>,
}

impl Correlator {
    pub fn new(left: Vec<(f64, PauliString)>, right: Vec<(f64, PauliString)>) -> Result<Self> {
        let c = Correlator { left, right };
        c.joint()?;
        Ok(c)
    }

    /// `⟨σ_a^i σ_b^j⟩ − ⟨σ_a^i⟩⟨σ_b^j⟩`.
    pub fn simple(a: (usize, crate::state::Axis), b: (usize, crate::state::Axis)) -> Result<Self> {
        Self::new(vec![(1.0, PauliString::single(a.0, a.1))], vec![(1.0, PauliString::single(b.0, b.1))])
    }

    fn joint(&self) -> Result<Vec<(f64, PauliString)>> {
        let mut out = Vec::new();
        for (a, p) in &self.left {
            for (b, q) in &self.right {
                let mut f = p.factors().to_vec();
                f.extend_from_slice(q.factors());
                out.push((a * b, PauliString::new(f)?));
            }
        }
        Ok(out)
    }

    /// Every string the ensemble must track.
    /// `⟨L R⟩ − ⟨L⟩⟨R⟩` from exact expectation values.
    pub fn evaluate(&self, mut expect: impl FnMut(&PauliString) -> f64) -> f64 {
        let mut sum = |terms: &[(f64, PauliString)]| terms.iter().map(|(c, p)| c * expect(p)).sum::<f64>();
        let joint = self.joint().expect("validated on construction");
        sum(&joint) - sum(&self.left) * sum(&self.right)
    }

    pub fn observables(&self) -> Vec<PauliString> {
        let mut out: Vec<PauliString> = Vec::new();
        let joint = self.joint().expect("validated on construction");
        for p in self.left.iter().chain(&self.right).chain(&joint).map(|t| &t.1) {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}

/// Grid-wise ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub observables: Vec<PauliString>,
    pub trajectories: u64,
    pub events: u64,
    pub branches: u64,
    pub aborted: u64,
    pub max_omega: u64,
    grid: Vec<Moments>,
    distribution: Option<Vec<DiagonalMoments>>,
}

impl EnsembleResult {
    fn slot(&self, p: &PauliString) -> Result<usize> {
        self.observables
            .iter()
            .position(|o| o == p)
            .ok_or_else(|| Error::Config(format!("observable `{p}` was not tracked")))
    }

    /// Trajectories that reached grid point `g`.
    pub fn count(&self, g: usize) -> u64 {
        self.grid[g].n
    }

    pub fn mean(&self, g: usize, k: usize) -> f64 {
        self.grid[g].mean[k]
    }

    /// Zero when fewer than two trajectories reached `g`.
    pub fn stderr(&self, g: usize, k: usize) -> f64 {
        let m = &self.grid[g];
        if m.n < 2 {
            return 0.0;
        }
        (m.covariance(k, k) / m.n as f64).sqrt()
    }

    pub fn mean_of(&self, g: usize, p: &PauliString) -> Result<(f64, f64)> {
        let k = self.slot(p)?;
        Ok((self.mean(g, k), self.stderr(g, k)))
    }

    pub fn omega_mean(&self, g: usize) -> f64 {
        self.grid[g].mean[self.observables.len()]
    }

    pub fn omega_stderr(&self, g: usize) -> f64 {
        self.stderr(g, self.observables.len())
    }

    pub fn omega_occ_mean(&self, g: usize) -> f64 {
        self.grid[g].mean[self.observables.len() + 1]
    }

    /// `n̄_C` at grid point `g`, indexed densely.
    pub fn distribution(&self, g: usize) -> Option<&[f64]> {
        self.distribution.as_ref().map(|d| d[g].mean.as_slice())
    }

    pub fn distribution_stderr(&self, g: usize) -> Option<Vec<f64>> {
        self.distribution.as_ref().map(|d| {
            let m = &d[g];
            let n = m.n as f64;
            if m.n < 2 {
                return vec![0.0; m.m2.len()];
            }
            m.m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
        })
    }

    /// Connected correlator and its delta-method standard error.
    pub fn connected(&self, g: usize, corr: &Correlator) -> Result<(f64, f64)> {
        let dim = self.observables.len() + 2;
        let mut grad = vec![0.0; dim];
        let lin = |terms: &[(f64, PauliString)]| -> Result<(f64, Vec<(usize, f64)>)> {
            let mut v = 0.0;
            let mut ix = Vec::new();
            for (c, p) in terms {
                let k = self.slot(p)?;
                v += c * self.mean(g, k);
                ix.push((k, *c));
            }
            Ok((v, ix))
        };
        let (l, li) = lin(&corr.left)?;
        let (r, ri) = lin(&corr.right)?;
        let (j, ji) = lin(&corr.joint()?)?;
        for (k, c) in ji {
            grad[k] += c;
        }
        for (k, c) in li {
            grad[k] -= c * r;
        }
        for (k, c) in ri {
            grad[k] -= c * l;
        }
        let m = &self.grid[g];
        let mut var = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                if grad[a] != 0.0 && grad[b] != 0.0 {
                    var += grad[a] * grad[b] * m.covariance(a, b);
                }
            }
        }
        Ok((j - l * r, (var / m.n.max(1) as f64).sqrt()))
    }
}

/// Runs `config.trajectories` trajectories. The result is identical for any
/// thread count.
pub fn run_ensemble(
    table: &RateTable,
    init: &InitialState,
    observables: &[PauliString],
    run: &RunConfig,
    config: &EnsembleConfig,
) -> Result<EnsembleResult> {
    run.validate(table.num_sites())?;
    init.validate()?;
    if config.trajectories == 0 {
        return Err(Error::Config("need at least one trajectory".into()));
    }
    let dist = run.record_distribution.then(|| crate::state::LOCAL_STATES.pow(table.num_sites() as u32));
    let chunks = config.trajectories.div_ceil(CHUNK);
    let work = || -> Result<Vec<Accumulator>> {
        (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = Accumulator::new(run.grid.len(), observables.len(), dist);
                let mut tr = Trajectory::new(table, observables, run.record_distribution)?;
                let end = ((chunk + 1) * CHUNK).min(config.trajectories);
                for i in chunk * CHUNK..end {
                    acc.push(&tr.run(init, run, config.seed, i)?);
                }
                Ok(acc)
            })
            .collect()
    };
    let parts = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut total = Accumulator::new(run.grid.len(), observables.len(), dist);
    for p in &parts {
        total.merge(p);
    }
    Ok(EnsembleResult {
        times: run.grid.clone(),
        observables: observables.to_vec(),
        trajectories: total.trajectories,
        events: total.events,
        branches: total.branches,
        aborted: total.aborted,
        max_omega: total.max_omega,
        grid: total.grid,
        distribution: total.distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::assemble_model;
    use crate::model::ModelSpec;
    use crate::state::{Axis, Configuration, Sign, SiteState};

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<Vec<f64>> = (0..37).map(|i| vec![(i as f64).sin(), (i * i % 7) as f64]).collect();
        let mut all = Moments::new(2);
        xs.iter().for_each(|x| all.push(x));
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        xs[..11].iter().for_each(|x| a.push(x));
        xs[11..].iter().for_each(|x| b.push(x));
        a.merge(&b);
        for (u, v) in a.mean.iter().zip(&all.mean).chain(a.comoment.iter().zip(&all.comoment)) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    fn qubit_run(threads: usize) -> EnsembleResult {
        let m = assemble_model(&ModelSpec::single_qubit(0.5, 0.25)).unwrap();
        let table = RateTable::new(&m).unwrap();
        let init = InitialState::product(Configuration::uniform(1, SiteState::new(Axis::Z, Sign::Plus)).unwrap());
        let obs = vec![PauliString::single(0, Axis::Z), PauliString::single(0, Axis::Y)];
        let run = RunConfig::uniform(1.0, 5);
        let cfg = EnsembleConfig { trajectories: 700, seed: 11, threads: Some(threads) };
        run_ensemble(&table, &init, &obs, &run, &cfg).unwrap()
    }

    #[test]
    fn thread_count_does_not_change_result() {
        assert_eq!(qubit_run(1), qubit_run(3));
    }

    #[test]
    fn initial_expectation_is_exact_in_mean() {
        let r = qubit_run(2);
        let (z, se) = r.mean_of(0, &PauliString::single(0, Axis::Z)).unwrap();
        assert!((z - 1.0).abs() < 4.0 * se + 1e-12);
        assert_eq!(r.count(0), 700);
    }

    #[test]
    fn correlator_tracks_products() {
        let corr = Correlator::new(
            vec![(1.0, "y0".parse().unwrap())],
            vec![(1.0, "y1".parse().unwrap()), (1.0, "x1".parse().unwrap())],
        )
        .unwrap();
        let obs = corr.observables();
        assert_eq!(obs.len(), 5);
        assert!(Correlator::simple((0, Axis::X), (0, Axis::Y)).is_err());
    }
}
