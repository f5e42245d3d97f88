//! Initial-state samplers: one `•` particle drawn from `p_C(0)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Axis, Configuration, Sign, SiteState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// `|C₀⟩`, one product state.
    Product { state: Configuration },
    /// `⊗_k (|+z+z⟩ + e^{iθ_k}|−z−z⟩)/√2` on `pairs`; other sites follow the
    /// product sampler around `background`.
    BellPairs {
        pairs: Vec<(usize, usize)>,
        phases: Vec<f64>,
        background: Configuration,
    },
}

impl InitialState {
    pub fn product(state: Configuration) -> Self {
        InitialState::Product { state }
    }

    pub fn bell_pairs(pairs: Vec<(usize, usize)>, phases: Vec<f64>, background: Configuration) -> Result<Self> {
        let s = InitialState::BellPairs { pairs, phases, background };
        s.validate()?;
        Ok(s)
    }

    pub fn num_sites(&self) -> usize {
        match self {
            InitialState::Product { state } => state.len(),
            InitialState::BellPairs { background, .. } => background.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let InitialState::BellPairs { pairs, phases, background } = self {
            if pairs.len() != phases.len() {
                return Err(Error::Config("one phase per bell pair".into()));
            }
            if phases.iter().any(|p| !p.is_finite()) {
                return Err(Error::Config("bell phases must be finite".into()));
            }
            let mut used = vec![false; background.len()];
            for &(a, b) in pairs {
                for s in [a, b] {
                    if s >= used.len() {
                        return Err(Error::Config(format!("bell pair site {s} outside lattice")));
                    }
                    if used[s] {
                        return Err(Error::OverlappingPairs(s));
                    }
                    used[s] = true;
                }
                if a == b {
                    return Err(Error::OverlappingPairs(a));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        match self {
            InitialState::Product { state } => sample_product_state(state, rng),
            InitialState::BellPairs { pairs, phases, background } => {
                sample_bell_state(pairs, phases, background, rng)
            }
        }
    }

    /// `p_C(0)` in closed form.
    pub fn probability(&self, c: &Configuration) -> f64 {
        match self {
            InitialState::Product { state } => product_probability(state, c),
            InitialState::BellPairs { pairs, phases, background } => {
                let mut paired = vec![false; background.len()];
                let mut p = 1.0;
                for (&(a, b), &theta) in pairs.iter().zip(phases) {
                    paired[a] = true;
                    paired[b] = true;
                    p *= bell_pair_probability(theta, c.get(a), c.get(b));
                }
                for (i, _) in paired.iter().enumerate().filter(|(_, &p)| !p) {
                    p *= site_probability(background.get(i), c.get(i));
                }
                p
            }
        }
    }
}

fn site_probability(s0: SiteState, s: SiteState) -> f64 {
    if s == s0 {
        1.0 / 3.0
    } else if s.axis == s0.axis {
        0.0
    } else {
        1.0 / 6.0
    }
}

/// `(1/3^N) Π_i |⟨s⁰_i β⁰_i | s_i β_i⟩|²`.
pub fn product_probability(c0: &Configuration, c: &Configuration) -> f64 {
    (0..c0.len()).map(|i| site_probability(c0.get(i), c.get(i))).product()
}

/// `p` of one Bell pair in states `(a, b)`.
pub fn bell_pair_probability(theta: f64, a: SiteState, b: SiteState) -> f64 {
    let ss = (a.sign.value() * b.sign.value()) as f64;
    let d = |x: SiteState, ax: Axis| (x.axis == ax) as i32 as f64;
    let term = 1.0
        + ss * theta.cos() * (d(a, Axis::X) * d(b, Axis::X) - d(a, Axis::Y) * d(b, Axis::Y))
        + ss * theta.sin() * (d(a, Axis::X) * d(b, Axis::Y) + d(a, Axis::Y) * d(b, Axis::X))
        + d(a, Axis::Z) * d(b, Axis::Z) * (2.0 * (a.sign == b.sign) as i32 as f64 - 1.0);
    term / 36.0
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> Sign {
    if rng.random_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Per site: keep `C₀`'s state with probability 1/3, otherwise a random
/// sign on one of the two other axes.
pub fn sample_product_state<R: Rng + ?Sized>(c0: &Configuration, rng: &mut R) -> Configuration {
    let mut c = c0.clone();
    for i in 0..c0.len() {
        c.set(i, sample_site(c0.get(i), rng));
    }
    c
}

fn sample_site<R: Rng + ?Sized>(s0: SiteState, rng: &mut R) -> SiteState {
    let k = rng.random_range(0..6u32);
    if k < 2 {
        return s0;
    }
    let shift = if k < 4 { 1 } else { 2 };
    let axis = Axis::from_index((s0.axis.index() + shift) % 3);
    let sign = if k % 2 == 0 { Sign::Plus } else { Sign::Minus };
    SiteState::new(axis, sign)
}

const fn st(axis: Axis, sign: Sign) -> SiteState {
    SiteState::new(axis, sign)
}

const PX: SiteState = st(Axis::X, Sign::Plus);
const MX: SiteState = st(Axis::X, Sign::Minus);
const PY: SiteState = st(Axis::Y, Sign::Plus);
const MY: SiteState = st(Axis::Y, Sign::Minus);
const PZ: SiteState = st(Axis::Z, Sign::Plus);
const MZ: SiteState = st(Axis::Z, Sign::Minus);

/// The four equally likely pair states of each of the first four branches.
const BRANCHES: [[(SiteState, SiteState); 4]; 4] = [
    [(PX, PX), (MX, MX), (PY, MY), (MY, PY)],
    [(PX, MX), (MX, PX), (PY, PY), (MY, MY)],
    [(PX, PY), (PY, PX), (MX, MY), (MY, MX)],
    [(PX, MY), (MY, PX), (MX, PY), (PY, MX)],
];

/// Branch weights `(1±cosθ)/9, (1±sinθ)/9, 1/9, 4/9`.
pub fn bell_branch_weights(theta: f64) -> [f64; 6] {
    let (s, c) = theta.sin_cos();
    [(1.0 + c) / 9.0, (1.0 - c) / 9.0, (1.0 + s) / 9.0, (1.0 - s) / 9.0, 1.0 / 9.0, 4.0 / 9.0]
}

fn sample_pair<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (SiteState, SiteState) {
    let w = bell_branch_weights(theta);
    let mut u = rng.random::<f64>();
    let mut branch = 5;
    for (k, &p) in w.iter().enumerate() {
        if u < p {
            branch = k;
            break;
        }
        u -= p;
    }
    match branch {
        0..=3 => BRANCHES[branch][rng.random_range(0..4)],
        4 => {
            if rng.random_bool(0.5) {
                (PZ, PZ)
            } else {
                (MZ, MZ)
            }
        }
        _ => {
            let (a, b) = [(Axis::X, Axis::Z), (Axis::Z, Axis::X), (Axis::Y, Axis::Z), (Axis::Z, Axis::Y)]
                [rng.random_range(0..4)];
            (st(a, random_sign(rng)), st(b, random_sign(rng)))
        }
    }
}

/// Draws each pair from its branch table and every other site from the
/// product sampler around `background`.
pub fn sample_bell_state<R: Rng + ?Sized>(
    pairs: &[(usize, usize)],
    phases: &[f64],
    background: &Configuration,
    rng: &mut R,
) -> Configuration {
    let mut paired = vec![false; background.len()];
    for &(a, b) in pairs {
        paired[a] = true;
        paired[b] = true;
    }
    let mut c = background.clone();
    for i in 0..background.len() {
        if !paired[i] {
            c.set(i, sample_site(background.get(i), rng));
        }
    }
    for (&(a, b), &theta) in pairs.iter().zip(phases) {
        let (sa, sb) = sample_pair(theta, rng);
        c.set(a, sa);
        c.set(b, sb);
    }
    c
}
