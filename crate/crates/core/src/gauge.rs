//! Gauge freedom of the rate-matrix representation and its optimization.
//!
//! A gauge is a matrix `Λ` with `ΛA = 0` and zero column sums. Adding it to a
//! rate matrix leaves the averaged dynamics unchanged while moving weight
//! between off-diagonal entries.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::basis::ProjectorBasis;
use crate::algebra::rates::{local_dim, LocalRateMatrix};
use crate::algebra::table::epsilon;
use crate::error::{Error, Result};
use crate::lp::{LpProblem, Simplex};
use crate::state::{Axis, SiteState, LOCAL_STATES};

/// Entries of a gauged matrix within this distance of zero are set to zero.
pub const GAUGE_CLAMP: f64 = 1e-9;

/// Spanning set `Λ_{(C,i)} = (e_C − e_last) n_iᵀ` for `C < q−1`, where the
/// `n_i` form an orthonormal basis of `{v : Σ_C v_C ℙ_C = 0}`.
#[derive(Debug, Clone)]
pub struct GaugeBasis {
    pub k: usize,
    /// Rows are the null vectors `n_i`.
    pub null: DMatrix<f64>,
}

/// Coefficients over a [`GaugeBasis`], indexed `C·r + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeParam {
    pub lambda: Vec<f64>,
}

fn unit(i: usize) -> Vec<f64> {
    let mut v = vec![0.0; LOCAL_STATES];
    v[i] = 1.0;
    v
}

fn axis_sum(a: Axis) -> Vec<f64> {
    let mut v = vec![0.0; LOCAL_STATES];
    v[2 * a.index()] = 1.0;
    v[2 * a.index() + 1] = 1.0;
    v
}

fn axis_diff(a: Axis) -> Vec<f64> {
    let mut v = vec![0.0; LOCAL_STATES];
    v[2 * a.index()] = 1.0;
    v[2 * a.index() + 1] = -1.0;
    v
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Modified Gram-Schmidt; returns the orthonormal set and the rank found.
fn orthonormalize(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, usize) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for u in &out {
            let d: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-10 {
            out.push(w.into_iter().map(|a| a / norm).collect());
        }
    }
    let r = out.len();
    (out, r)
}

impl GaugeBasis {
    pub fn new(k: usize) -> Result<Self> {
        let single_null = vec![
            sub(&axis_sum(Axis::X), &axis_sum(Axis::Y)),
            sub(&axis_sum(Axis::Y), &axis_sum(Axis::Z)),
        ];
        let raw: Vec<Vec<f64>> = match k {
            1 => single_null,
            2 => {
                let complement = [axis_sum(Axis::X), axis_diff(Axis::X), axis_diff(Axis::Y), axis_diff(Axis::Z)];
                let mut v = Vec::new();
                for n in &single_null {
                    for j in 0..LOCAL_STATES {
                        v.push(outer(n, &unit(j)));
                    }
                }
                for f in &complement {
                    for n in &single_null {
                        v.push(outer(f, n));
                    }
                }
                v
            }
            _ => return Err(Error::UnsupportedSupport(k)),
        };
        let q = local_dim(k);
        let expected = q - (1 << (2 * k));
        let (null, rank) = orthonormalize(&raw);
        if rank != expected {
            return Err(Error::RankDeficient { expected, found: rank });
        }
        let null = DMatrix::from_fn(rank, q, |i, c| null[i][c]);
        let a = &ProjectorBasis::cached(k)?.a;
        let residual = null.map(Complex64::from) * a;
        if residual.iter().any(|z| z.norm() > 1e-12) {
            return Err(Error::Invariant("gauge null vectors do not annihilate A".into()));
        }
        Ok(GaugeBasis { k, null })
    }

    pub fn cached(k: usize) -> Result<&'static GaugeBasis> {
        static ONE: OnceLock<GaugeBasis> = OnceLock::new();
        static TWO: OnceLock<GaugeBasis> = OnceLock::new();
        let cell = match k {
            1 => &ONE,
            2 => &TWO,
            _ => return Err(Error::UnsupportedSupport(k)),
        };
        Ok(cell.get_or_init(|| GaugeBasis::new(k).expect("gauge basis construction")))
    }

    pub fn num_configs(&self) -> usize {
        self.null.ncols()
    }

    /// Number of null vectors, `q^k − 4^k`.
    pub fn null_dim(&self) -> usize {
        self.null.nrows()
    }

    /// `(q^k − 4^k)(q^k − 1)`.
    pub fn dim(&self) -> usize {
        (self.num_configs() - 1) * self.null_dim()
    }

    /// The basis element with index `C·r + i`.
    pub fn element(&self, idx: usize) -> DMatrix<f64> {
        let mut lambda = vec![0.0; self.dim()];
        lambda[idx] = 1.0;
        self.gauge(&lambda)
    }

    /// `Σ λ_j Λ_j`.
    pub fn gauge(&self, lambda: &[f64]) -> DMatrix<f64> {
        let q = self.num_configs();
        let r = self.null_dim();
        assert_eq!(lambda.len(), self.dim());
        let mut l = DMatrix::zeros(q, r);
        for c in 0..q - 1 {
            for i in 0..r {
                let v = lambda[c * r + i];
                l[(c, i)] = v;
                l[(q - 1, i)] -= v;
            }
        }
        l * &self.null
    }

    /// Entry `(C, C')` of basis element `C·r + i` without forming it.
    #[inline]
    fn element_entry(&self, idx: usize, row: usize, col: usize) -> f64 {
        let q = self.num_configs();
        let r = self.null_dim();
        let (c, i) = (idx / r, idx % r);
        let coeff = if row == c {
            1.0
        } else if row == q - 1 {
            -1.0
        } else {
            0.0
        };
        coeff * self.null[(i, col)]
    }
}

/// `max(|ΛA|, |column sums|)`, zero for a valid gauge.
pub fn gauge_residual(lambda: &DMatrix<f64>, k: usize) -> Result<f64> {
    let a = &ProjectorBasis::cached(k)?.a;
    let la = lambda.map(Complex64::from) * a;
    let r1 = la.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let r2 = lambda.row_sum().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(r1.max(r2))
}

fn delta<T: PartialEq>(a: T, b: T) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn single_canonical(a: Axis, c: SiteState, cp: SiteState) -> f64 {
    let e = epsilon(a, c.axis, cp.axis);
    e * e - (1.0 - delta(a, c.axis)) * delta(c.axis, cp.axis)
}

/// `Λ^a_{CC'} = ε²_{aαα'} − δ̄_{aα} δ_{αα'}`.
pub fn canonical_gauge_single(a: Axis) -> DMatrix<f64> {
    DMatrix::from_fn(LOCAL_STATES, LOCAL_STATES, |r, c| {
        single_canonical(a, SiteState::from_index(r), SiteState::from_index(c))
    })
}

/// The two-site canonical gauge for `σ_a ⊗ σ_b`.
pub fn canonical_gauge_pair(a: Axis, b: Axis) -> DMatrix<f64> {
    let half = |a: Axis, b: Axis, c1: SiteState, c2: SiteState, p1: SiteState, p2: SiteState| {
        let s2 = f64::from(c2.sign.value());
        let s2p = f64::from(p2.sign.value());
        let off = 1.0 - delta(a, c1.axis);
        single_canonical(a, c1, p1) * delta(b, p2.axis) * (1.0 + delta(c2.axis, p2.axis) * s2 * s2p)
            + off
                * delta(c1.axis, p1.axis)
                * (delta(b, c2.axis) * (1.0 - 3.0 * delta(b, p2.axis)) + delta(b, p2.axis)
                    - delta(c2.axis, p2.axis))
    };
    let q = LOCAL_STATES * LOCAL_STATES;
    DMatrix::from_fn(q, q, |r, c| {
        let (c1, c2) = (SiteState::from_index(r / 6), SiteState::from_index(r % 6));
        let (p1, p2) = (SiteState::from_index(c / 6), SiteState::from_index(c % 6));
        0.5 * (half(a, b, c1, c2, p1, p2) + half(b, a, c2, c1, p2, p1))
    })
}

/// Result of a gauge optimization.
#[derive(Debug, Clone)]
pub struct GaugeOutcome {
    pub param: GaugeParam,
    pub gauged: LocalRateMatrix,
    /// `Σ_{C≠C'} max(0, −[M + Λ(λ)]_{CC'})` reported by the LP.
    pub objective: f64,
    /// The same quantity recomputed from the clamped gauged matrix.
    pub certified: f64,
}

/// Warm-startable optimizer over the gauge of one support size.
///
/// The LP solved is the dual of the slack formulation:
/// `min Σ_e m_e y_e` subject to `Σ_e (Λ_j)_e y_e = 0` and `0 ≤ y ≤ 1`, with
/// `e` running over off-diagonal positions. The multipliers give `λ = −π`
/// and the primal optimum is minus the dual one.
/// `(row, col)` pairs with `row ≠ col`, column-major.
pub fn off_diagonal_positions(q: usize) -> Vec<(usize, usize)> {
    (0..q)
        .flat_map(|c| (0..q).filter(move |&r| r != c).map(move |r| (r, c)))
        .collect()
}

pub struct GaugeOptimizer {
    basis: &'static GaugeBasis,
    positions: Vec<(usize, usize)>,
    simplex: Simplex,
}

impl GaugeOptimizer {
    /// Clones a phase-one-complete program built once per support size.
    pub fn new(k: usize) -> Result<Self> {
        static PROTOTYPES: [OnceLock<Simplex>; 2] = [OnceLock::new(), OnceLock::new()];
        let basis = GaugeBasis::cached(k)?;
        let positions = off_diagonal_positions(basis.num_configs());
        let slot = &PROTOTYPES[k - 1];
        let simplex = match slot.get() {
            Some(s) => s.clone(),
            None => {
                let s = Self::program(basis, &positions)?;
                slot.get_or_init(|| s).clone()
            }
        };
        Ok(GaugeOptimizer { basis, positions, simplex })
    }

    fn program(basis: &GaugeBasis, positions: &[(usize, usize)]) -> Result<Simplex> {
        let rows = basis.dim();
        let mut lp = LpProblem::new(rows, positions.len());
        for j in 0..rows {
            for (e, &(r, c)) in positions.iter().enumerate() {
                let v = basis.element_entry(j, r, c);
                if v != 0.0 {
                    lp.set(j, e, v);
                }
            }
        }
        lp.upper.iter_mut().for_each(|u| *u = 1.0);
        Ok(Simplex::new(lp)?)
    }

    pub fn basis(&self) -> &GaugeBasis {
        self.basis
    }

    pub fn optimize(&mut self, m: &LocalRateMatrix) -> Result<GaugeOutcome> {
        if m.k != self.basis.k {
            return Err(Error::InvalidModel("rate matrix and gauge basis differ in support".into()));
        }
        let cost: Vec<f64> = self.positions.iter().map(|&(r, c)| m.m[(r, c)]).collect();
        let sol = self.simplex.reoptimize(&cost)?;
        let lambda: Vec<f64> = sol.duals.iter().map(|p| -p).collect();
        let mut g = &m.m + self.basis.gauge(&lambda);
        for v in g.iter_mut() {
            if v.abs() < GAUGE_CLAMP {
                *v = 0.0;
            }
        }
        let gauged = LocalRateMatrix::new(m.k, g);
        let certified = gauged.negative_mass();
        Ok(GaugeOutcome {
            param: GaugeParam { lambda },
            gauged,
            objective: (-sol.objective).max(0.0),
            certified,
        })
    }

    /// Only the optimal negative mass, without building the gauged matrix.
    pub fn objective(&mut self, m: &LocalRateMatrix) -> Result<f64> {
        let cost: Vec<f64> = self.positions.iter().map(|&(r, c)| m.m[(r, c)]).collect();
        Ok((-self.simplex.reoptimize(&cost)?.objective).max(0.0))
    }
}

/// One-shot gauge optimization.
pub fn optimize_gauge(m: &LocalRateMatrix) -> Result<GaugeOutcome> {
    GaugeOptimizer::new(m.k)?.optimize(m)
}

/// Optimizes every distinct matrix of an assembled model.
pub fn optimize_model(model: &crate::algebra::AssembledModel) -> Result<crate::algebra::AssembledModel> {
    let mut opt: [Option<GaugeOptimizer>; 2] = [None, None];
    model.try_map_matrices(|m| {
        let slot = &mut opt[m.k - 1];
        if slot.is_none() {
            *slot = Some(GaugeOptimizer::new(m.k)?);
        }
        Ok(slot.as_mut().expect("initialized above").optimize(m)?.gauged)
    })
}
