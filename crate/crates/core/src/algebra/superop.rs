//! Matrix representation of the dual generator `𝓛*` in the flattened
//! operator basis.

use num_complex::Complex64;

use super::ops::{CMatrix, Term};
use crate::error::{Error, Result};

/// `m[(n, m)]` is the `|m)` coordinate of `𝓛*(|n))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMatrix {
    pub k: usize,
    pub m: CMatrix,
}

impl SuperoperatorMatrix {
    pub fn zeros(k: usize) -> Self {
        let d2 = 1usize << (2 * k);
        SuperoperatorMatrix { k, m: CMatrix::zeros(d2, d2) }
    }

    /// Tabulates an arbitrary linear map on `2^k × 2^k` operators.
    pub fn from_dual<F>(k: usize, dual: F) -> Self
    where
        F: Fn(&CMatrix) -> CMatrix,
    {
        let d = 1usize << k;
        let mut m = CMatrix::zeros(d * d, d * d);
        for n in 0..d * d {
            let mut e = CMatrix::zeros(d, d);
            e[(n / d, n % d)] = Complex64::new(1.0, 0.0);
            let image = dual(&e);
            for (idx, v) in (0..d * d).map(|i| (i, image[(i / d, i % d)])) {
                m[(n, idx)] = v;
            }
        }
        SuperoperatorMatrix { k, m }
    }

    pub fn add(&self, other: &SuperoperatorMatrix) -> Self {
        assert_eq!(self.k, other.k);
        SuperoperatorMatrix { k: self.k, m: &self.m + &other.m }
    }

    pub fn scale(&self, c: f64) -> Self {
        SuperoperatorMatrix { k: self.k, m: &self.m * Complex64::from(c) }
    }
}

/// `X ↦ i·coeff·[P, X]`, the dual of `ρ ↦ −i[coeff·P, ρ]`.
pub fn superop_unitary(term: Term, coeff: f64) -> Result<SuperoperatorMatrix> {
    if term.is_dissipator() {
        return Err(Error::UnknownTerm(format!("{term} is not a Hamiltonian term")));
    }
    let h = term.operator() * Complex64::from(coeff);
    Ok(SuperoperatorMatrix::from_dual(term.support(), |x| {
        (&h * x - x * &h) * Complex64::new(0.0, 1.0)
    }))
}

/// `X ↦ w·(L†XL − ½{L†L, X})`.
pub fn superop_dissipator(term: Term, weight: f64) -> Result<SuperoperatorMatrix> {
    if !term.is_dissipator() {
        return Err(Error::UnknownTerm(format!("{term} is not a dissipator")));
    }
    if !(weight >= 0.0) {
        return Err(Error::NegativeWeight(weight));
    }
    let l = term.operator();
    let ld = l.adjoint();
    let ldl = &ld * &l;
    let w = Complex64::from(weight);
    Ok(SuperoperatorMatrix::from_dual(term.support(), |x| {
        (&ld * x * &l - (&ldl * x + x * &ldl) * Complex64::from(0.5)) * w
    }))
}

/// Dispatches on the term kind.
pub fn superop(term: Term, coeff: f64) -> Result<SuperoperatorMatrix> {
    if term.is_dissipator() {
        superop_dissipator(term, coeff)
    } else {
        superop_unitary(term, coeff)
    }
}
