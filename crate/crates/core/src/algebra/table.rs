//! Closed-form rate matrices for the elementary Hamiltonian and dissipator
//! families, and the check tying them to the superoperator construction.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::ProjectorBasis;
use super::ops::Term;
use super::rates::{local_dim, LocalRateMatrix};
use super::superop::superop;
use crate::error::{Error, Result};
use crate::model::LocalJump;
use crate::state::{Axis, SiteState, LOCAL_STATES};

/// Levi-Civita symbol over axis indices, `ε_{xyz} = +1`.
pub fn epsilon(a: Axis, b: Axis, c: Axis) -> f64 {
    let (a, b, c) = (a.index(), b.index(), c.index());
    if a == b || b == c || a == c {
        0.0
    } else if (b + 3 - a) % 3 == 1 && (c + 3 - b) % 3 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn delta<T: PartialEq>(a: T, b: T) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `S_{a,α}`: `+1` when the jump axis matches the site axis, else `-1`.
pub fn sign_map(a: Axis, alpha: Axis) -> i32 {
    if a == alpha {
        1
    } else {
        -1
    }
}

fn sv(s: SiteState) -> f64 {
    f64::from(s.sign.value())
}

fn single_entry(term: Term, c: SiteState, cp: SiteState) -> f64 {
    let (s, alpha) = (sv(c), c.axis);
    let (sp, alphap) = (sv(cp), cp.axis);
    match term {
        Term::Field(a) => -s * sp * epsilon(a, alpha, alphap),
        Term::Jump(LocalJump::Pauli(a)) => {
            let target = SiteState::new(alpha, if sign_map(a, alpha) > 0 { c.sign } else { c.sign.flip() });
            delta(target, cp) - delta(c, cp)
        }
        Term::Jump(j @ (LocalJump::Raise | LocalJump::Lower)) => {
            let pm = if j == LocalJump::Raise { -1.0 } else { 1.0 };
            let on_z = delta(Axis::Z, alpha);
            -(s / 4.0) * delta(alpha, alphap) * (sp * (1.0 - on_z) + 2.0 * on_z * (sp + pm))
        }
        _ => unreachable!("two-site term in single-site table"),
    }
}

fn pair_entry(term: Term, c: (SiteState, SiteState), cp: (SiteState, SiteState)) -> f64 {
    match term {
        Term::Coupling(a, b) => {
            let half = |a: Axis, b: Axis, c1: SiteState, c2: SiteState, p1: SiteState, p2: SiteState| {
                epsilon(a, c1.axis, p1.axis)
                    * sv(c1)
                    * sv(p1)
                    * (sv(p2) + sv(c2) * delta(b, c2.axis))
                    * delta(b, p2.axis)
            };
            -0.5 * (half(a, b, c.0, c.1, cp.0, cp.1) + half(b, a, c.1, c.0, cp.1, cp.0))
        }
        Term::PairJump(a, b) => {
            let flip = |x: Axis, s: SiteState| {
                if sign_map(x, s.axis) > 0 {
                    s
                } else {
                    s.flipped()
                }
            };
            delta((flip(a, c.0), flip(b, c.1)), cp) - delta(c, cp)
        }
        _ => unreachable!("single-site term in pair table"),
    }
}

/// The closed-form matrix of `term` scaled by `coeff`, with rows `C` and
/// columns `C'`.
pub fn table_rates(term: Term, coeff: f64) -> Result<LocalRateMatrix> {
    if term.is_dissipator() && !(coeff >= 0.0) {
        return Err(Error::NegativeWeight(coeff));
    }
    let k = term.support();
    let q = local_dim(k);
    let m = DMatrix::from_fn(q, q, |r, c| {
        let v = if k == 1 {
            single_entry(term, SiteState::from_index(r), SiteState::from_index(c))
        } else {
            let split = |i: usize| {
                (
                    SiteState::from_index(i / LOCAL_STATES),
                    SiteState::from_index(i % LOCAL_STATES),
                )
            };
            pair_entry(term, split(r), split(c))
        };
        coeff * v
    });
    Ok(LocalRateMatrix::new(k, m))
}

/// `max |A𝓜 − MA|` for a rate matrix against the superoperator of `term`.
pub fn equivalence_residual(term: Term, coeff: f64, rates: &LocalRateMatrix) -> Result<f64> {
    let basis = ProjectorBasis::cached(term.support())?;
    let s = superop(term, coeff)?;
    let mc = rates.m.map(Complex64::from);
    let lhs = &basis.a * &s.m;
    let rhs = mc * &basis.a;
    Ok((lhs - rhs).iter().fold(0.0f64, |acc, z| acc.max(z.norm())))
}

/// Verifies every closed form against the pseudoinverse construction. The
/// result is computed once per process.
pub fn verify_table_conventions() -> Result<()> {
    static CHECK: OnceLock<std::result::Result<(), (String, f64)>> = OnceLock::new();
    let outcome = CHECK.get_or_init(|| {
        for term in Term::all() {
            let rates = table_rates(term, 1.0).map_err(|_| (term.to_string(), f64::NAN))?;
            let dev = equivalence_residual(term, 1.0, &rates).map_err(|_| (term.to_string(), f64::NAN))?;
            let sums = rates.column_sums().iter().fold(0.0f64, |a, s| a.max(s.abs()));
            if dev > 1e-12 || sums > 1e-12 {
                return Err((term.to_string(), dev.max(sums)));
            }
        }
        Ok(())
    });
    outcome
        .clone()
        .map_err(|(term, deviation)| Error::ConventionMismatch { term, deviation })
}
