//! Pauli operators, local terms and small dense operator helpers.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::LocalJump;
use crate::state::{Axis, SiteState};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli(axis: Axis) -> CMatrix {
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// `|+z⟩` is basis vector 0, so `σ₊ = |0⟩⟨1|`.
pub fn local_jump(jump: LocalJump) -> CMatrix {
    match jump {
        LocalJump::Pauli(a) => pauli(a),
        LocalJump::Raise => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]),
        LocalJump::Lower => CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]),
    }
}

/// `(𝕀 + s σ_α)/2`.
pub fn projector(state: SiteState) -> CMatrix {
    let s = Complex64::from(f64::from(state.sign.value()));
    (identity(2) + pauli(state.axis) * s) * Complex64::from(0.5)
}

/// Embeds a one-site operator at `site` of an `n`-qubit register (site 0 is
/// the most significant tensor factor).
pub fn embed(op: &CMatrix, site: usize, n: usize) -> CMatrix {
    let left = identity(1 << site);
    let right = identity(1 << (n - site - 1));
    left.kronecker(op).kronecker(&right)
}

/// One Hamiltonian or dissipator family acting on one or two sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// `H = σ_a`.
    Field(Axis),
    /// `H = σ_a ⊗ σ_b`.
    Coupling(Axis, Axis),
    /// `𝓛[σ_a]`, `𝓛[σ₊]`, `𝓛[σ₋]`.
    Jump(LocalJump),
    /// `𝓛[σ_a ⊗ σ_b]`.
    PairJump(Axis, Axis),
}

impl Term {
    pub fn support(self) -> usize {
        match self {
            Term::Field(_) | Term::Jump(_) => 1,
            Term::Coupling(..) | Term::PairJump(..) => 2,
        }
    }

    pub fn is_dissipator(self) -> bool {
        matches!(self, Term::Jump(_) | Term::PairJump(..))
    }

    /// The Hamiltonian term or the jump operator.
    pub fn operator(self) -> CMatrix {
        match self {
            Term::Field(a) => pauli(a),
            Term::Jump(j) => local_jump(j),
            Term::Coupling(a, b) | Term::PairJump(a, b) => pauli(a).kronecker(&pauli(b)),
        }
    }

    /// Every family, in a fixed order.
    pub fn all() -> Vec<Term> {
        let mut out: Vec<Term> = Axis::ALL.iter().map(|&a| Term::Field(a)).collect();
        for a in Axis::ALL {
            for b in Axis::ALL {
                out.push(Term::Coupling(a, b));
            }
        }
        out.extend(LocalJump::ALL.iter().map(|&j| Term::Jump(j)));
        for a in Axis::ALL {
            for b in Axis::ALL {
                out.push(Term::PairJump(a, b));
            }
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Field(a) => write!(f, "H:s{}", a.symbol()),
            Term::Coupling(a, b) => write!(f, "H:s{}s{}", a.symbol(), b.symbol()),
            Term::Jump(j) => write!(f, "L:{}", j.name()),
            Term::PairJump(a, b) => write!(f, "L:s{}s{}", a.symbol(), b.symbol()),
        }
    }
}

fn parse_axis(c: char) -> Option<Axis> {
    match c {
        'x' => Some(Axis::X),
        'y' => Some(Axis::Y),
        'z' => Some(Axis::Z),
        _ => None,
    }
}

impl FromStr for Term {
    type Err = Error;

    /// Accepts `H:sx`, `H:sxsz`, `L:sy`, `L:s+`, `L:s-`, `L:sxsx`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownTerm(s.to_string());
        let (kind, body) = s.split_once(':').ok_or_else(unknown)?;
        let chars: Vec<char> = body.trim().to_ascii_lowercase().chars().collect();
        let term = match (kind.trim(), chars.as_slice()) {
            ("H", ['s', a]) => Term::Field(parse_axis(*a).ok_or_else(unknown)?),
            ("H", ['s', a, 's', b]) => Term::Coupling(
                parse_axis(*a).ok_or_else(unknown)?,
                parse_axis(*b).ok_or_else(unknown)?,
            ),
            ("L", ['s', '+']) => Term::Jump(LocalJump::Raise),
            ("L", ['s', '-']) => Term::Jump(LocalJump::Lower),
            ("L", ['s', a]) => Term::Jump(LocalJump::Pauli(parse_axis(*a).ok_or_else(unknown)?)),
            ("L", ['s', a, 's', b]) => Term::PairJump(
                parse_axis(*a).ok_or_else(unknown)?,
                parse_axis(*b).ok_or_else(unknown)?,
            ),
            _ => return Err(unknown()),
        };
        Ok(term)
    }
}
