//! The projector decomposition `ℙ_C = Σ_m A_{C,m} |m)` and its left inverse.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::ops::{projector, CMatrix};
use crate::error::{Error, Result};
use crate::state::{SiteState, LOCAL_STATES};

/// Rows of `a` are the vectorized product projectors `ℙ_C` over `k` sites,
/// with operator index `m = row·2^k + col` and `C = 6·c₁ + c₂` for `k = 2`.
#[derive(Debug, Clone)]
pub struct ProjectorBasis {
    pub k: usize,
    pub a: CMatrix,
    pub a_pinv: CMatrix,
}

impl ProjectorBasis {
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(Error::UnsupportedSupport(k));
        }
        let q = LOCAL_STATES.pow(k as u32);
        let dim = 1usize << k;
        let mut a = CMatrix::zeros(q, dim * dim);
        for c in 0..q {
            let p = product_projector(k, c);
            for r in 0..dim {
                for s in 0..dim {
                    a[(c, r * dim + s)] = p[(r, s)];
                }
            }
        }
        let gram = a.adjoint() * &a;
        let inv = gram
            .try_inverse()
            .ok_or(Error::RankDeficient { expected: dim * dim, found: 0 })?;
        let a_pinv = inv * a.adjoint();
        Ok(ProjectorBasis { k, a, a_pinv })
    }

    /// Shared instance for `k ∈ {1, 2}`.
    pub fn cached(k: usize) -> Result<&'static ProjectorBasis> {
        static ONE: OnceLock<ProjectorBasis> = OnceLock::new();
        static TWO: OnceLock<ProjectorBasis> = OnceLock::new();
        let cell = match k {
            1 => &ONE,
            2 => &TWO,
            _ => return Err(Error::UnsupportedSupport(k)),
        };
        Ok(cell.get_or_init(|| ProjectorBasis::new(k).expect("projector basis is well formed")))
    }

    pub fn num_configs(&self) -> usize {
        self.a.nrows()
    }

    pub fn operator_dim(&self) -> usize {
        self.a.ncols()
    }
}

/// `ℙ_{c₁} ⊗ … ⊗ ℙ_{c_k}` for the dense local index `c`.
pub fn product_projector(k: usize, c: usize) -> CMatrix {
    let mut digits = Vec::with_capacity(k);
    let mut rest = c;
    for _ in 0..k {
        digits.push(rest % LOCAL_STATES);
        rest /= LOCAL_STATES;
    }
    digits
        .iter()
        .rev()
        .map(|&d| projector(SiteState::from_index(d)))
        .fold(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, p| {
            acc.kronecker(&p)
        })
}

/// Flattens an operator into the `|m)` coordinates used by [`ProjectorBasis`].
pub fn vectorize(op: &CMatrix) -> CMatrix {
    let d = op.nrows();
    CMatrix::from_fn(1, d * d, |_, m| op[(m / d, m % d)])
}
