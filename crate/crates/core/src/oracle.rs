//! Dense density-matrix integration for small lattices.
//!
//! Every Hamiltonian term and jump operator of a [`ModelSpec`] is a tensor
//! product of Paulis and ladder operators, so it maps each computational
//! basis state to at most one basis state. The generator is applied term by
//! term in `O(4^N)` without forming `2^N × 2^N` products.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::AssembledModel;
use crate::engine::{InitialState, PauliString};
use crate::error::{Error, Result};
use crate::model::{LocalJump, ModelSpec};
use crate::state::{Axis, Configuration, SiteState, LOCAL_STATES};

pub type CMatrix = DMatrix<Complex64>;

/// Largest lattice the oracle accepts.
pub const MAX_SITES: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `P|b⟩ = amp[b] |target[b]⟩`. Basis bit 0 of a site is `+z`; site 0 is
/// the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    target: Vec<usize>,
    amp: Vec<Complex64>,
}

/// `(flip, amp on |0⟩, amp on |1⟩)` of one-site factors.
fn factor(op: LocalJump) -> (bool, Complex64, Complex64) {
    match op {
        LocalJump::Pauli(Axis::X) => (true, ONE, ONE),
        LocalJump::Pauli(Axis::Y) => (true, I, -I),
        LocalJump::Pauli(Axis::Z) => (false, ONE, -ONE),
        LocalJump::Raise => (true, ZERO, ONE),
        LocalJump::Lower => (true, ONE, ZERO),
    }
}

impl Monomial {
    /// Product of one-site factors on distinct sites of an `n`-qubit register.
    pub fn new(n: usize, factors: &[(usize, LocalJump)]) -> Self {
        let dim = 1usize << n;
        let mut target: Vec<usize> = (0..dim).collect();
        let mut amp = vec![ONE; dim];
        for &(site, op) in factors {
            let bit = 1usize << (n - 1 - site);
            let (flip, a0, a1) = factor(op);
            for b in 0..dim {
                amp[b] *= if b & bit == 0 { a0 } else { a1 };
                if flip {
                    target[b] ^= bit;
                }
            }
        }
        Monomial { target, amp }
    }

    pub fn pauli_string(n: usize, p: &PauliString) -> Self {
        let f: Vec<(usize, LocalJump)> = p.factors().iter().map(|&(s, a)| (s, LocalJump::Pauli(a))).collect();
        Self::new(n, &f)
    }

    /// `out += c·P X`.
    fn left(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        for a in 0..self.target.len() {
            let f = c * self.amp[a];
            if f == ZERO {
                continue;
            }
            let r = self.target[a];
            for col in 0..x.ncols() {
                out[(r, col)] += f * x[(a, col)];
            }
        }
    }

    /// `out += c·X P`.
    fn right(&self, x: &CMatrix, c: Complex64, out: &mut CMatrix) {
        for b in 0..self.target.len() {
            let f = c * self.amp[b];
            if f == ZERO {
                continue;
            }
            let col = self.target[b];
            for row in 0..x.nrows() {
                out[(row, b)] += f * x[(row, col)];
            }
        }
    }

    /// `out += c·(P X P† − ½{P†P, X})`.
    fn dissipate(&self, x: &CMatrix, c: f64, out: &mut CMatrix) {
        let d = self.target.len();
        for a in 0..d {
            let fa = self.amp[a];
            let na = fa.norm_sqr();
            for b in 0..d {
                let v = x[(a, b)];
                let fb = self.amp[b];
                if fa != ZERO && fb != ZERO {
                    out[(self.target[a], self.target[b])] += fa * v * fb.conj() * c;
                }
                let nb = fb.norm_sqr();
                out[(a, b)] -= v * (0.5 * c * (na + nb));
            }
        }
    }

    /// `out += c·(P† X P − ½{P†P, X})`.
    fn dissipate_dual(&self, x: &CMatrix, c: f64, out: &mut CMatrix) {
        let d = self.target.len();
        for a in 0..d {
            let fa = self.amp[a];
            let na = fa.norm_sqr();
            for b in 0..d {
                let fb = self.amp[b];
                if fa != ZERO && fb != ZERO {
                    out[(a, b)] += fa.conj() * x[(self.target[a], self.target[b])] * fb * c;
                }
                out[(a, b)] -= x[(a, b)] * (0.5 * c * (na + fb.norm_sqr()));
            }
        }
    }

    /// `tr(ρ P)`.
    pub fn trace_with(&self, rho: &CMatrix) -> Complex64 {
        (0..self.target.len()).map(|a| rho[(a, self.target[a])] * self.amp[a]).sum()
    }

    pub fn dense(&self) -> CMatrix {
        let d = self.target.len();
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            m[(self.target[b], b)] += self.amp[b];
        }
        m
    }
}

/// `𝓛(ρ) = −i[H, ρ] + Σ w (LρL† − ½{L†L, ρ})` built directly from a model.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    n: usize,
    hamiltonian: Vec<(f64, Monomial)>,
    jumps: Vec<(f64, Monomial)>,
}

impl Lindbladian {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.num_sites();
        if n > MAX_SITES {
            return Err(Error::SiteCountOutOfRange { n, max: MAX_SITES });
        }
        let p = LocalJump::Pauli;
        let mut hamiltonian = Vec::new();
        let mut jumps = Vec::new();
        for (i, f) in spec.local_fields.iter().enumerate() {
            for a in Axis::ALL {
                if f[a.index()] != 0.0 {
                    hamiltonian.push((f[a.index()], Monomial::new(n, &[(i, p(a))])));
                }
            }
        }
        for (i, w) in spec.local_noise.iter().enumerate() {
            for j in LocalJump::ALL {
                if w[j.index()] != 0.0 && spec.gamma != 0.0 {
                    jumps.push((spec.gamma * w[j.index()], Monomial::new(n, &[(i, j)])));
                }
            }
        }
        for (l, &(i, j)) in spec.lattice.links().iter().enumerate() {
            for a in Axis::ALL {
                for b in Axis::ALL {
                    let c = spec.pair_couplings[l][a.index()][b.index()];
                    if c != 0.0 {
                        hamiltonian.push((c, Monomial::new(n, &[(i, p(a)), (j, p(b))])));
                    }
                    let w = spec.pair_noise[l][a.index()][b.index()] * spec.gamma;
                    if w != 0.0 {
                        jumps.push((w, Monomial::new(n, &[(i, p(a)), (j, p(b))])));
                    }
                }
            }
        }
        Ok(Lindbladian { n, hamiltonian, jumps })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    /// Upper bound on the generator's operator norm.
    pub fn norm_estimate(&self) -> f64 {
        let h: f64 = self.hamiltonian.iter().map(|t| t.0.abs()).sum();
        let w: f64 = self.jumps.iter().map(|t| t.0).sum();
        2.0 * h + 2.0 * w
    }

    /// `10⁻³ / ‖𝓛‖`, or `10⁻³` for a zero generator.
    pub fn default_dt(&self) -> f64 {
        let n = self.norm_estimate();
        if n > 0.0 {
            1e-3 / n
        } else {
            1e-3
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for (c, m) in &self.hamiltonian {
            m.left(rho, -I * *c, &mut out);
            m.right(rho, I * *c, &mut out);
        }
        for (w, m) in &self.jumps {
            m.dissipate(rho, *w, &mut out);
        }
        out
    }

    /// `𝓛*(X) = i[H, X] + Σ w (L†XL − ½{L†L, X})`.
    pub fn apply_dual(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for (c, m) in &self.hamiltonian {
            m.left(x, I * *c, &mut out);
            m.right(x, -I * *c, &mut out);
        }
        for (w, m) in &self.jumps {
            m.dissipate_dual(x, *w, &mut out);
        }
        out
    }
}

/// A density matrix on `n ≤ 8` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub n: usize,
    pub rho: CMatrix,
}

fn site_amplitudes(s: SiteState) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sg = s.sign.value() as f64;
    match s.axis {
        Axis::Z if sg > 0.0 => [ONE, ZERO],
        Axis::Z => [ZERO, ONE],
        Axis::X => [Complex64::from(h), Complex64::from(h * sg)],
        Axis::Y => [Complex64::from(h), Complex64::new(0.0, h * sg)],
    }
}

impl DenseState {
    fn check_size(n: usize) -> Result<()> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::SiteCountOutOfRange { n, max: MAX_SITES });
        }
        Ok(())
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        let d = 1usize << n;
        Ok(DenseState { n, rho: CMatrix::identity(d, d) / Complex64::from(d as f64) })
    }

    pub fn from_pure(n: usize, psi: &[Complex64]) -> Result<Self> {
        Self::check_size(n)?;
        let v = nalgebra::DVector::from_column_slice(psi);
        Ok(DenseState { n, rho: &v * v.adjoint() })
    }

    /// `|C⟩⟨C|`.
    pub fn product(c: &Configuration) -> Result<Self> {
        let n = c.len();
        Self::check_size(n)?;
        let psi: Vec<Complex64> = (0..1usize << n)
            .map(|b| (0..n).map(|i| site_amplitudes(c.get(i))[(b >> (n - 1 - i)) & 1]).product())
            .collect();
        Self::from_pure(n, &psi)
    }

    /// The pure state whose projector probabilities the engine samples.
    pub fn from_initial(init: &InitialState) -> Result<Self> {
        init.validate()?;
        match init {
            InitialState::Product { state } => Self::product(state),
            InitialState::BellPairs { pairs, phases, background } => {
                let n = background.len();
                Self::check_size(n)?;
                let mut paired = vec![false; n];
                for &(a, b) in pairs {
                    paired[a] = true;
                    paired[b] = true;
                }
                let bit = |b: usize, i: usize| (b >> (n - 1 - i)) & 1;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let psi: Vec<Complex64> = (0..1usize << n)
                    .map(|b| {
                        let mut a: Complex64 = (0..n)
                            .filter(|&i| !paired[i])
                            .map(|i| site_amplitudes(background.get(i))[bit(b, i)])
                            .product();
                        for (&(p, q), &theta) in pairs.iter().zip(phases) {
                            a *= match (bit(b, p), bit(b, q)) {
                                (0, 0) => Complex64::from(h),
                                (1, 1) => Complex64::from_polar(h, theta),
                                _ => ZERO,
                            };
                        }
                        a
                    })
                    .collect();
                Self::from_pure(n, &psi)
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Hermiticity and unit trace to `1e-10`, spectrum above `−1e-8`.
    pub fn check(&self) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if herm > 1e-10 {
            return Err(Error::Invariant(format!("density matrix not hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::Invariant(format!("trace {tr}")));
        }
        let h = (&self.rho + self.rho.adjoint()) * Complex64::from(0.5);
        let low = h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if low < -1e-8 {
            return Err(Error::Invariant(format!("negative eigenvalue {low:e}")));
        }
        Ok(())
    }

    pub fn expectation(&self, p: &PauliString) -> f64 {
        Monomial::pauli_string(self.n, p).trace_with(&self.rho).re
    }

    /// `p_C = tr(ρ ℙ_C)/3^N`, densely indexed.
    pub fn probabilities(&self) -> Vec<f64> {
        projector_probabilities(&self.rho, self.n)
    }
}

/// `p_C = tr(ρ ℙ_C)/3^N` for all `6^N` configurations, contracting one site
/// at a time.
pub fn projector_probabilities(rho: &CMatrix, n: usize) -> Vec<f64> {
    let d = 1usize << n;
    // Pair digit of site i is 2·r_i + c_i, site 0 most significant.
    let mut v = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            let mut idx = 0;
            for i in 0..n {
                let sh = n - 1 - i;
                idx = idx * 4 + 2 * ((r >> sh) & 1) + ((c >> sh) & 1);
            }
            v[idx] = rho[(r, c)];
        }
    }
    let proj: Vec<CMatrix> = SiteState::ALL.iter().map(|&s| crate::algebra::ops::projector(s)).collect();
    let mut prefix = 1;
    for i in 0..n {
        let rest = 4usize.pow((n - 1 - i) as u32);
        let mut w = vec![ZERO; prefix * LOCAL_STATES * rest];
        for p in 0..prefix {
            for (s, pm) in proj.iter().enumerate() {
                for pair in 0..4 {
                    // tr(ρ P) pairs ρ[r, c] with P[c, r].
                    let f = pm[(pair & 1, pair >> 1)];
                    if f == ZERO {
                        continue;
                    }
                    let src = (p * 4 + pair) * rest;
                    let dst = (p * LOCAL_STATES + s) * rest;
                    for t in 0..rest {
                        w[dst + t] += f * v[src + t];
                    }
                }
            }
        }
        v = w;
        prefix *= LOCAL_STATES;
    }
    let norm = 3f64.powi(n as i32);
    v.iter().map(|z| z.re / norm).collect()
}

/// States at each grid time from fixed-step RK4. Steps are shortened to land
/// on grid points exactly. `dt = None` uses [`Lindbladian::default_dt`].
pub fn integrate(spec: &ModelSpec, rho0: &DenseState, grid: &[f64], dt: Option<f64>) -> Result<Vec<DenseState>> {
    let gen = Lindbladian::new(spec)?;
    if rho0.n != gen.num_sites() {
        return Err(Error::Config(format!("state has {} sites, model has {}", rho0.n, gen.num_sites())));
    }
    let dt = dt.unwrap_or_else(|| gen.default_dt());
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    if grid.iter().any(|t| !(*t >= 0.0)) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("grid must be increasing and non-negative".into()));
    }
    rho0.check()?;
    let mut rho = rho0.rho.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid {
        while t < target {
            let h = dt.min(target - t);
            let k1 = gen.apply(&rho);
            let k2 = gen.apply(&(&rho + &k1 * Complex64::from(h / 2.0)));
            let k3 = gen.apply(&(&rho + &k2 * Complex64::from(h / 2.0)));
            let k4 = gen.apply(&(&rho + &k3 * Complex64::from(h)));
            rho += (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
            t = if target - t <= dt { target } else { t + h };
        }
        let s = DenseState { n: rho0.n, rho: rho.clone() };
        s.check()?;
        out.push(s);
    }
    Ok(out)
}

/// `𝓛*(ℙ_C)` as a dense operator.
pub fn dual_generator_action(spec: &ModelSpec, c: &Configuration) -> Result<CMatrix> {
    if c.len() != spec.num_sites() {
        return Err(Error::Config("configuration size does not match the model".into()));
    }
    let gen = Lindbladian::new(spec)?;
    Ok(gen.apply_dual(&projector_operator(c)))
}

/// `ℙ_C = ⊗_i (𝕀 + s_i σ_{β_i})/2`.
pub fn projector_operator(c: &Configuration) -> CMatrix {
    (0..c.len())
        .map(|i| crate::algebra::ops::projector(c.get(i)))
        .reduce(|a, b| a.kronecker(&b))
        .unwrap_or_else(|| CMatrix::identity(1, 1))
}

/// Largest entry of `𝓛*(ℙ_C) − Σ_{C'} M_{CC'} ℙ_{C'}` over all `C`, where `M`
/// is the dense generator of `model`. `N ≤ 4`.
pub fn dual_generator_residual(spec: &ModelSpec, model: &AssembledModel) -> Result<f64> {
    let n = spec.num_sites();
    if n > 4 {
        return Err(Error::SiteCountOutOfRange { n, max: 4 });
    }
    let gen = Lindbladian::new(spec)?;
    let m = model.dense_generator()?;
    let q = LOCAL_STATES.pow(n as u32);
    let projectors: Vec<CMatrix> = (0..q)
        .map(|i| Configuration::from_dense_index(n, i).map(|c| projector_operator(&c)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (c, pc) in projectors.iter().enumerate() {
        let mut diff = gen.apply_dual(pc);
        for (cp, pp) in projectors.iter().enumerate() {
            let v = m[(c, cp)];
            if v != 0.0 {
                diff -= pp * Complex64::from(v);
            }
        }
        worst = worst.max(diff.iter().fold(0.0f64, |a, z| a.max(z.norm())));
    }
    Ok(worst)
}

/// Bloch vector of one qubit under `H = τσ_x` and `γ L[σ_x]`.
pub fn single_qubit_bloch(tau: f64, gamma: f64, initial: [f64; 3], t: f64) -> [f64; 3] {
    // z + i y rotates at 2τ and decays at 2γ; x is conserved.
    let w0 = Complex64::new(initial[2], initial[1]);
    let w = w0 * Complex64::new(-2.0 * gamma * t, -2.0 * tau * t).exp();
    [initial[0], w.im, w.re]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::assemble_model;
    use crate::gauge::optimize_model;
    use crate::lattice::{Boundary, Lattice};
    use crate::state::Sign;

    fn plus_z(n: usize) -> Configuration {
        Configuration::uniform(n, SiteState::new(Axis::Z, Sign::Plus)).unwrap()
    }

    #[test]
    fn monomial_matches_kronecker() {
        use crate::algebra::ops::{embed, local_jump};
        let m = Monomial::new(3, &[(0, LocalJump::Pauli(Axis::Y)), (2, LocalJump::Raise)]);
        let want = embed(&local_jump(LocalJump::Pauli(Axis::Y)), 0, 3) * embed(&local_jump(LocalJump::Raise), 2, 3);
        assert!((m.dense() - want).norm() < 1e-15);
    }

    #[test]
    fn free_precession() {
        let spec = ModelSpec::single_qubit(0.5, 0.0);
        let grid: Vec<f64> = (0..=10).map(|i| 0.4 * i as f64).collect();
        let rho0 = DenseState::product(&plus_z(1)).unwrap();
        let out = integrate(&spec, &rho0, &grid, None).unwrap();
        let z = PauliString::single(0, Axis::Z);
        for (t, s) in grid.iter().zip(&out) {
            assert!((s.expectation(&z) - (2.0 * 0.5 * t).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn dephasing_matches_bloch_solution() {
        let spec = ModelSpec::single_qubit(0.5, 0.3);
        let grid = [0.5, 1.7];
        let out = integrate(&spec, &DenseState::product(&plus_z(1)).unwrap(), &grid, None).unwrap();
        for (t, s) in grid.iter().zip(&out) {
            let b = single_qubit_bloch(0.5, 0.3, [0.0, 0.0, 1.0], *t);
            for (k, a) in Axis::ALL.iter().enumerate() {
                assert!((s.expectation(&PauliString::single(0, *a)) - b[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn no_generator_no_motion() {
        let spec = ModelSpec::empty(Lattice::chain(2, Boundary::Open).unwrap());
        let rho0 = DenseState::product(&"+x-y".parse().unwrap()).unwrap();
        let out = integrate(&spec, &rho0, &[1.0], Some(0.1)).unwrap();
        assert!((&out[0].rho - &rho0.rho).norm() < 1e-15);
    }

    #[test]
    fn noisy_pair_stays_physical_and_converges() {
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(2, Boundary::Open).unwrap(), 1.0, 0.5, 0.8);
        let rho0 = DenseState::product(&plus_z(2)).unwrap();
        let grid = [1.0, 5.0];
        let a = integrate(&spec, &rho0, &grid, Some(0.01)).unwrap();
        let b = integrate(&spec, &rho0, &grid, Some(0.005)).unwrap();
        let obs: PauliString = "x0 z1".parse().unwrap();
        for (s, u) in a.iter().zip(&b) {
            assert!((s.trace() - ONE).norm() < 1e-10);
            assert!((s.expectation(&obs) - u.expectation(&obs)).abs() < 1e-8);
        }
    }

    #[test]
    fn probabilities_of_simple_states() {
        let mixed = DenseState::maximally_mixed(2).unwrap().probabilities();
        assert!(mixed.iter().all(|p| (p - 1.0 / 36.0).abs() < 1e-15));
        let p = DenseState::product(&plus_z(1)).unwrap().probabilities();
        let want = [0.5, 0.5, 0.5, 0.5, 1.0, 0.0].map(|v| v / 3.0);
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let c0: Configuration = "+x-y+z".parse().unwrap();
        let init = InitialState::product(c0.clone());
        let p = DenseState::product(&c0).unwrap().probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (i, v) in p.iter().enumerate() {
            let c = Configuration::from_dense_index(3, i).unwrap();
            assert!((v - init.probability(&c)).abs() < 1e-14);
        }
    }

    #[test]
    fn bell_state_matches_sampler_closed_form() {
        let init = InitialState::bell_pairs(vec![(2, 0)], vec![std::f64::consts::FRAC_PI_4], plus_z(3)).unwrap();
        let p = DenseState::from_initial(&init).unwrap().probabilities();
        for (i, v) in p.iter().enumerate() {
            let c = Configuration::from_dense_index(3, i).unwrap();
            assert!((v - init.probability(&c)).abs() < 1e-14, "{c}");
        }
    }

    #[test]
    fn assembled_rates_reproduce_dual_generator() {
        let q = ModelSpec::single_qubit(0.5, 0.2);
        let m = assemble_model(&q).unwrap();
        assert!(dual_generator_residual(&q, &m).unwrap() < 1e-12);
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(3, Boundary::Periodic).unwrap(), 1.0, 0.5, 0.6);
        let m = assemble_model(&spec).unwrap();
        assert!(dual_generator_residual(&spec, &m).unwrap() < 1e-10);
        assert!(dual_generator_residual(&spec, &optimize_model(&m).unwrap()).unwrap() < 1e-9);
        let zero = ModelSpec::empty(Lattice::chain(1, Boundary::Open).unwrap());
        let act = dual_generator_action(&zero, &plus_z(1)).unwrap();
        assert_eq!(act.norm(), 0.0);
    }

    #[test]
    fn rate_equation_matches_finite_difference() {
        let spec = ModelSpec::tfim_with_noise(Lattice::chain(2, Boundary::Open).unwrap(), 1.0, 0.5, 0.4);
        let m = assemble_model(&spec).unwrap().dense_generator().unwrap();
        let rho0 = DenseState::product(&"+x+z".parse().unwrap()).unwrap();
        let h = 1e-4;
        let out = integrate(&spec, &rho0, &[0.3 - h, 0.3, 0.3 + h], Some(1e-4)).unwrap();
        let (a, p, b) = (out[0].probabilities(), out[1].probabilities(), out[2].probabilities());
        let mp = &m * nalgebra::DVector::from_column_slice(&p);
        for i in 0..36 {
            let fd = (b[i] - a[i]) / (2.0 * h);
            assert!((fd - mp[i]).abs() < 1e-6);
        }
    }
}
