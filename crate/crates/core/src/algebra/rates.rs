//! Real local rate matrices and their sign decomposition.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::basis::ProjectorBasis;
use super::superop::SuperoperatorMatrix;
use crate::error::{Error, Result};
use crate::state::{SiteState, LOCAL_STATES};

/// Entries below this magnitude are exact zeros for sign classification.
pub const SIGN_EPS: f64 = 1e-12;

/// Largest tolerated imaginary part of `A𝓜A⁺`.
pub const IMAG_TOL: f64 = 1e-10;

/// `m[(C, C')]` is the rate from `C'` into `C`; columns sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRateMatrix {
    pub k: usize,
    pub m: DMatrix<f64>,
    /// Positive off-diagonal part.
    pub plus: DMatrix<f64>,
    /// Magnitude of the negative off-diagonal part.
    pub minus: DMatrix<f64>,
    /// `tau[C] = Σ_{C'≠C} |m[(C', C)]|`.
    pub tau: Vec<f64>,
}

pub fn local_dim(k: usize) -> usize {
    LOCAL_STATES.pow(k as u32)
}

impl LocalRateMatrix {
    /// Splits `m`. Off-diagonal entries below [`SIGN_EPS`] are zeroed and the
    /// diagonal is reset to minus the off-diagonal column sum.
    pub fn new(k: usize, mut m: DMatrix<f64>) -> Self {
        let q = m.nrows();
        assert_eq!(m.shape(), (q, q));
        assert_eq!(q, local_dim(k));
        let mut plus = DMatrix::zeros(q, q);
        let mut minus = DMatrix::zeros(q, q);
        let mut tau = vec![0.0; q];
        for c in 0..q {
            let mut off = 0.0;
            for r in 0..q {
                if r == c {
                    continue;
                }
                let v = m[(r, c)];
                if v.abs() < SIGN_EPS {
                    m[(r, c)] = 0.0;
                } else if v > 0.0 {
                    plus[(r, c)] = v;
                } else {
                    minus[(r, c)] = -v;
                }
                off += m[(r, c)];
                tau[c] += m[(r, c)].abs();
            }
            m[(c, c)] = -off;
        }
        LocalRateMatrix { k, m, plus, minus, tau }
    }

    pub fn zeros(k: usize) -> Self {
        let q = local_dim(k);
        Self::new(k, DMatrix::zeros(q, q))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn add(&self, other: &LocalRateMatrix) -> Self {
        assert_eq!(self.k, other.k);
        Self::new(self.k, &self.m + &other.m)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.k, &self.m * c)
    }

    /// Lifts a one-site matrix onto position `slot ∈ {0, 1}` of a pair.
    pub fn embed_in_pair(&self, slot: usize) -> Self {
        assert_eq!(self.k, 1);
        let eye = DMatrix::<f64>::identity(LOCAL_STATES, LOCAL_STATES);
        let m = if slot == 0 {
            self.m.kronecker(&eye)
        } else {
            eye.kronecker(&self.m)
        };
        Self::new(2, m)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.m.row_sum().iter().copied().collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.m.column_sum().iter().copied().collect()
    }

    /// `Σ_{C≠C'} M⁻_{CC'}`.
    pub fn negative_mass(&self) -> f64 {
        self.minus.sum()
    }

    /// `Σ_{C≠C'} |M_{CC'}|`.
    pub fn absolute_mass(&self) -> f64 {
        self.tau.iter().sum()
    }

    pub fn negative_count(&self) -> usize {
        self.minus.iter().filter(|&&v| v > 0.0).count()
    }

    pub fn is_classical(&self) -> bool {
        self.negative_count() == 0
    }

    pub fn max_abs_diff(&self, other: &LocalRateMatrix) -> f64 {
        (&self.m - &other.m).amax()
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.k, self.m.transpose())
    }

    /// Labels such as `+x` or `+x-z` in canonical order.
    pub fn labels(&self) -> Vec<String> {
        (0..self.dim())
            .map(|c| {
                if self.k == 1 {
                    SiteState::from_index(c).to_string()
                } else {
                    format!(
                        "{}{}",
                        SiteState::from_index(c / LOCAL_STATES),
                        SiteState::from_index(c % LOCAL_STATES)
                    )
                }
            })
            .collect()
    }

    /// Plain-text grid with row and column labels.
    pub fn dump(&self) -> String {
        let labels = self.labels();
        let mut out = String::new();
        let _ = write!(out, "{:>6}", "");
        for l in &labels {
            let _ = write!(out, " {l:>24}");
        }
        out.push('\n');
        for (r, l) in labels.iter().enumerate() {
            let _ = write!(out, "{l:>6}");
            for c in 0..self.dim() {
                let _ = write!(out, " {:>24.16e}", self.m[(r, c)] + 0.0);
            }
            out.push('\n');
        }
        out
    }

    /// One character per entry: `+`, `-`, `.` off the diagonal and `d` on it.
    pub fn sign_pattern(&self) -> String {
        let q = self.dim();
        let mut out = String::with_capacity(q * (q + 1));
        for r in 0..q {
            for c in 0..q {
                out.push(if r == c {
                    'd'
                } else if self.plus[(r, c)] > 0.0 {
                    '+'
                } else if self.minus[(r, c)] > 0.0 {
                    '-'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

/// `M = A𝓜A⁺`, rejecting a complex result.
pub fn rates_from_superop(s: &SuperoperatorMatrix, basis: &ProjectorBasis) -> Result<LocalRateMatrix> {
    if s.k != basis.k || s.m.nrows() != basis.operator_dim() {
        return Err(Error::InvalidModel("superoperator and basis shapes differ".into()));
    }
    let mc = &basis.a * &s.m * &basis.a_pinv;
    let residue = mc.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if residue > IMAG_TOL {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok(LocalRateMatrix::new(s.k, mc.map(|z| z.re)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ops::Term;
    use crate::algebra::superop::{superop, superop_unitary, SuperoperatorMatrix};
    use crate::state::Axis;

    #[test]
    fn split_is_consistent() {
        let m = DMatrix::from_fn(6, 6, |r, c| if r == c { 0.0 } else { (r as f64 - c as f64) * 0.1 });
        let l = LocalRateMatrix::new(1, m);
        for c in 0..6 {
            assert!(l.column_sums()[c].abs() < 1e-15);
            for r in 0..6 {
                if r != c {
                    let v = l.plus[(r, c)] - l.minus[(r, c)];
                    assert!((v - l.m[(r, c)]).abs() < 1e-15);
                    assert!(l.plus[(r, c)] == 0.0 || l.minus[(r, c)] == 0.0);
                }
            }
        }
    }

    #[test]
    fn tiny_entries_are_zero() {
        let mut m = DMatrix::zeros(6, 6);
        m[(1, 0)] = -1e-14;
        let l = LocalRateMatrix::new(1, m);
        assert_eq!(l.negative_count(), 0);
        assert_eq!(l.tau[0], 0.0);
    }

    #[test]
    fn zero_superoperator() {
        let b = ProjectorBasis::new(2).unwrap();
        let l = rates_from_superop(&SuperoperatorMatrix::zeros(2), &b).unwrap();
        assert_eq!(l.m.amax(), 0.0);
    }

    #[test]
    fn every_term_gives_real_conserving_rates() {
        for term in Term::all() {
            let b = ProjectorBasis::cached(term.support()).unwrap();
            let l = rates_from_superop(&superop(term, 0.9).unwrap(), b).unwrap();
            let raw = &b.a * &superop(term, 0.9).unwrap().m * &b.a_pinv;
            assert!(raw.iter().all(|z| z.im.abs() < 1e-12), "{term}");
            for s in raw.row_sum().iter() {
                assert!(s.norm() < 1e-12, "{term}");
            }
            assert!(l.column_sums().iter().all(|s| s.abs() < 1e-12));
        }
    }

    #[test]
    fn pauli_jumps_have_positive_off_diagonals() {
        use crate::algebra::table::table_rates;
        for term in Term::all().into_iter().filter(|t| t.is_dissipator()) {
            if let Term::Jump(crate::model::LocalJump::Raise | crate::model::LocalJump::Lower) = term {
                continue;
            }
            assert!(table_rates(term, 1.0).unwrap().is_classical(), "{term}");
        }
    }

    #[test]
    fn single_site_pseudoinverse_is_the_closed_form() {
        use crate::algebra::table::table_rates;
        let b = ProjectorBasis::cached(1).unwrap();
        // σ± land in a different gauge; the Pauli families coincide exactly.
        for term in Term::all().into_iter().filter(|t| t.support() == 1) {
            if let Term::Jump(crate::model::LocalJump::Raise | crate::model::LocalJump::Lower) = term {
                continue;
            }
            let l = rates_from_superop(&superop(term, 0.8).unwrap(), b).unwrap();
            assert!(l.max_abs_diff(&table_rates(term, 0.8).unwrap()) < 1e-12, "{term}");
        }
    }

    #[test]
    fn embedding_into_pair() {
        let b = ProjectorBasis::cached(1).unwrap();
        let l = rates_from_superop(&superop_unitary(Term::Field(Axis::X), 1.0).unwrap(), b).unwrap();
        let e0 = l.embed_in_pair(0);
        let e1 = l.embed_in_pair(1);
        assert_eq!(e0.m[(6 * 2 + 3, 6 * 4 + 3)], l.m[(2, 4)]);
        assert_eq!(e1.m[(3 * 6 + 2, 3 * 6 + 4)], l.m[(2, 4)]);
        assert!(e0.column_sums().iter().all(|s| s.abs() < 1e-14));
    }
}
