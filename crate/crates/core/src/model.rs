//! Hamiltonian and noise description of a spin lattice.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::state::Axis;

/// Single-site jump operators, indexed as stored in [`ModelSpec::local_noise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalJump {
    Pauli(Axis),
    /// `σ₊ = |↑⟩⟨↓|`, raises `-z` to `+z`.
    Raise,
    /// `σ₋ = |↓⟩⟨↑|`.
    Lower,
}

impl LocalJump {
    pub const ALL: [LocalJump; 5] = [
        LocalJump::Pauli(Axis::X),
        LocalJump::Pauli(Axis::Y),
        LocalJump::Pauli(Axis::Z),
        LocalJump::Raise,
        LocalJump::Lower,
    ];

    pub fn index(self) -> usize {
        match self {
            LocalJump::Pauli(a) => a.index(),
            LocalJump::Raise => 3,
            LocalJump::Lower => 4,
        }
    }

    pub fn name(self) -> String {
        match self {
            LocalJump::Pauli(a) => format!("s{}", a.symbol()),
            LocalJump::Raise => "s+".into(),
            LocalJump::Lower => "s-".into(),
        }
    }
}

/// Couplings `J_ab` or pair-noise weights `μ_ab`, indexed `[a][b]` by axis.
pub type AxisPairs = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub lattice: Lattice,
    /// Per site `(h_x, h_y, h_z)`.
    pub local_fields: Vec<[f64; 3]>,
    /// Per link, aligned with `lattice.links()`; `[a][b]` couples `σ_a` on
    /// the first site of the link with `σ_b` on the second.
    pub pair_couplings: Vec<AxisPairs>,
    /// Per site weights over [`LocalJump::ALL`].
    pub local_noise: Vec<[f64; 5]>,
    /// Per link weights of the `L[σ_a σ_b]` dissipators.
    pub pair_noise: Vec<AxisPairs>,
    /// Global prefactor multiplying every noise weight.
    pub gamma: f64,
}

impl ModelSpec {
    /// A noiseless model with no terms.
    pub fn empty(lattice: Lattice) -> Self {
        let n = lattice.num_sites();
        let l = lattice.links().len();
        ModelSpec {
            lattice,
            local_fields: vec![[0.0; 3]; n],
            pair_couplings: vec![[[0.0; 3]; 3]; l],
            local_noise: vec![[0.0; 5]; n],
            pair_noise: vec![[[0.0; 3]; 3]; l],
            gamma: 0.0,
        }
    }

    /// `H = Σ_j h σ_z^j + Σ_<ij> J σ_x^i σ_x^j` without noise.
    pub fn tfim(lattice: Lattice, h: f64, j: f64) -> Self {
        let mut m = Self::empty(lattice);
        for f in &mut m.local_fields {
            f[Axis::Z.index()] = h;
        }
        for c in &mut m.pair_couplings {
            c[0][0] = j;
        }
        m
    }

    /// TFIM with the classicalizing link noise
    /// `γ|J|(L^{xx} + Σ_ab L^{ab}/2) + γ|h|/2d (L^{xz} + L^{zx} + L^{yz} + L^{zy})`.
    pub fn tfim_with_noise(lattice: Lattice, h: f64, j: f64, gamma: f64) -> Self {
        let d = lattice.dimension();
        let mut m = Self::tfim(lattice, h, j);
        let template = tfim_noise_template(h, j, d);
        for w in &mut m.pair_noise {
            *w = template;
        }
        m.gamma = gamma;
        m
    }

    /// `H = τ σ_x` on a single qubit with dephasing `γ L[σ_x]`.
    pub fn single_qubit(tau: f64, gamma: f64) -> Self {
        let lattice = Lattice::chain(1, crate::lattice::Boundary::Open)
            .expect("single-site open chain is valid");
        let mut m = Self::empty(lattice);
        m.local_fields[0][Axis::X.index()] = tau;
        m.local_noise[0][LocalJump::Pauli(Axis::X).index()] = 1.0;
        m.gamma = gamma;
        m
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lattice.num_sites();
        let l = self.lattice.links().len();
        if self.local_fields.len() != n || self.local_noise.len() != n {
            return Err(Error::InvalidModel(format!(
                "per-site tables must have {n} entries"
            )));
        }
        if self.pair_couplings.len() != l || self.pair_noise.len() != l {
            return Err(Error::InvalidModel(format!(
                "per-link tables must have {l} entries"
            )));
        }
        let finite = self.local_fields.iter().flatten().all(|v| v.is_finite())
            && self.pair_couplings.iter().flatten().flatten().all(|v| v.is_finite());
        if !finite || !self.gamma.is_finite() {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        let weights = self
            .local_noise
            .iter()
            .flatten()
            .chain(self.pair_noise.iter().flatten().flatten())
            .chain(std::iter::once(&self.gamma));
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
        }
        Ok(())
    }

    /// Largest absolute Hamiltonian coefficient.
    pub fn hamiltonian_scale(&self) -> f64 {
        self.local_fields
            .iter()
            .flatten()
            .chain(self.pair_couplings.iter().flatten().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Copy with all noise removed.
    pub fn hamiltonian_only(&self) -> Self {
        let mut m = self.clone();
        m.gamma = 0.0;
        m
    }
}

/// The per-link pair-noise weights of the TFIM classicalizing noise at unit
/// prefactor on a `d`-dimensional hypercubic lattice. The field part carries
/// the same `1/2d` share as the field itself.
pub fn tfim_noise_template(h: f64, j: f64, d: usize) -> AxisPairs {
    let (x, y, z) = (0, 1, 2);
    let mut w = [[j.abs() / 2.0; 3]; 3];
    w[x][x] += j.abs();
    let q = h.abs() / (2 * d) as f64;
    w[x][z] += q;
    w[z][x] += q;
    w[y][z] += q;
    w[z][y] += q;
    w
}
