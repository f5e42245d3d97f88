//! Distribution of a lattice model onto per-link local rate matrices.

use nalgebra::DMatrix;
use smallvec::SmallVec;

use super::ops::Term;
use super::rates::LocalRateMatrix;
use super::table::{table_rates, verify_table_conventions};
use crate::error::{Error, Result};
use crate::model::{AxisPairs, LocalJump, ModelSpec};
use crate::state::{Axis, Configuration, LOCAL_STATES};

/// A set of interacting sites and the index of its rate matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateGroup {
    pub sites: SmallVec<[usize; 2]>,
    pub matrix: usize,
}

/// Link matrices of a model. Identical matrices are stored once.
#[derive(Debug, Clone)]
pub struct AssembledModel {
    pub num_sites: usize,
    pub matrices: Vec<LocalRateMatrix>,
    pub groups: Vec<RateGroup>,
}

/// `Σ_a h_a M[σ_a]`.
pub fn field_rates(fields: &[f64; 3]) -> Result<LocalRateMatrix> {
    let mut acc = LocalRateMatrix::zeros(1);
    for a in Axis::ALL {
        if fields[a.index()] != 0.0 {
            acc = acc.add(&table_rates(Term::Field(a), fields[a.index()])?);
        }
    }
    Ok(acc)
}

/// `Σ_j ν_j M[𝓛_j]` over [`LocalJump::ALL`].
pub fn local_noise_rates(weights: &[f64; 5]) -> Result<LocalRateMatrix> {
    let mut acc = LocalRateMatrix::zeros(1);
    for j in LocalJump::ALL {
        if weights[j.index()] != 0.0 {
            acc = acc.add(&table_rates(Term::Jump(j), weights[j.index()])?);
        }
    }
    Ok(acc)
}

/// `Σ_ab J_ab M[σ_a σ_b]`.
pub fn coupling_rates(j: &AxisPairs) -> Result<LocalRateMatrix> {
    pair_sum(j, Term::Coupling)
}

/// `Σ_ab μ_ab M[𝓛^{ab}]`.
pub fn pair_noise_rates(mu: &AxisPairs) -> Result<LocalRateMatrix> {
    pair_sum(mu, Term::PairJump)
}

fn pair_sum(w: &AxisPairs, make: fn(Axis, Axis) -> Term) -> Result<LocalRateMatrix> {
    let mut acc = LocalRateMatrix::zeros(2);
    for a in Axis::ALL {
        for b in Axis::ALL {
            let v = w[a.index()][b.index()];
            if v != 0.0 {
                acc = acc.add(&table_rates(make(a, b), v)?);
            }
        }
    }
    Ok(acc)
}

/// Hamiltonian and noise contributions of one site, unscaled by its degree.
pub fn site_parts(spec: &ModelSpec, site: usize) -> Result<(LocalRateMatrix, LocalRateMatrix)> {
    let noise = local_noise_rates(&spec.local_noise[site])?.scale(spec.gamma);
    Ok((field_rates(&spec.local_fields[site])?, noise))
}

/// Hamiltonian and noise contributions of one link, including the share
/// `1/deg` of each endpoint's single-site terms.
pub fn link_parts(spec: &ModelSpec, link: usize) -> Result<(LocalRateMatrix, LocalRateMatrix)> {
    let (i, j) = spec.lattice.links()[link];
    let mut ham = coupling_rates(&spec.pair_couplings[link])?;
    let mut noise = pair_noise_rates(&spec.pair_noise[link])?.scale(spec.gamma);
    for (slot, site) in [(0, i), (1, j)] {
        let share = 1.0 / spec.lattice.degree(site) as f64;
        let (h, n) = site_parts(spec, site)?;
        ham = ham.add(&h.scale(share).embed_in_pair(slot));
        noise = noise.add(&n.scale(share).embed_in_pair(slot));
    }
    Ok((ham, noise))
}

/// Splits the model into link matrices; sites without links keep their own
/// single-site matrix.
pub fn assemble_model(spec: &ModelSpec) -> Result<AssembledModel> {
    spec.validate()?;
    verify_table_conventions()?;
    let mut out = AssembledModel {
        num_sites: spec.num_sites(),
        matrices: Vec::new(),
        groups: Vec::new(),
    };
    for (l, &(i, j)) in spec.lattice.links().iter().enumerate() {
        let (h, n) = link_parts(spec, l)?;
        out.push_group(SmallVec::from_slice(&[i, j]), h.add(&n));
    }
    for site in 0..spec.num_sites() {
        if spec.lattice.degree(site) == 0 {
            let (h, n) = site_parts(spec, site)?;
            out.push_group(SmallVec::from_slice(&[site]), h.add(&n));
        }
    }
    Ok(out)
}

impl AssembledModel {
    fn push_group(&mut self, sites: SmallVec<[usize; 2]>, m: LocalRateMatrix) {
        let idx = match self.matrices.iter().position(|x| x.m == m.m) {
            Some(idx) => idx,
            None => {
                self.matrices.push(m);
                self.matrices.len() - 1
            }
        };
        self.groups.push(RateGroup { sites, matrix: idx });
    }

    pub fn matrix_of(&self, group: &RateGroup) -> &LocalRateMatrix {
        &self.matrices[group.matrix]
    }

    /// Replaces every distinct matrix by `f(matrix)`.
    pub fn try_map_matrices<F>(&self, f: F) -> Result<AssembledModel>
    where
        F: FnMut(&LocalRateMatrix) -> Result<LocalRateMatrix>,
    {
        Ok(AssembledModel {
            num_sites: self.num_sites,
            matrices: self.matrices.iter().map(f).collect::<Result<_>>()?,
            groups: self.groups.clone(),
        })
    }

    /// Total negative off-diagonal mass summed over groups.
    pub fn negative_mass(&self) -> f64 {
        self.groups.iter().map(|g| self.matrix_of(g).negative_mass()).sum()
    }

    pub fn absolute_mass(&self) -> f64 {
        self.groups.iter().map(|g| self.matrix_of(g).absolute_mass()).sum()
    }

    pub fn is_classical(&self) -> bool {
        self.matrices.iter().all(|m| m.is_classical())
    }

    /// Dense `6^N × 6^N` generator obtained by summing the embedded group
    /// matrices. Limited to `N ≤ 5`.
    pub fn dense_generator(&self) -> Result<DMatrix<f64>> {
        let n = self.num_sites;
        if n > 5 {
            return Err(Error::SiteCountOutOfRange { n, max: 5 });
        }
        let dim = LOCAL_STATES.pow(n as u32);
        let mut g = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let src = Configuration::from_dense_index(n, col)?;
            for group in &self.groups {
                let m = self.matrix_of(group);
                let local_src = local_index(&src, &group.sites);
                for local_dst in 0..m.dim() {
                    let v = m.m[(local_dst, local_src)];
                    if v == 0.0 {
                        continue;
                    }
                    let mut dst = src.clone();
                    set_local_index(&mut dst, &group.sites, local_dst);
                    g[(dst.dense_index(), col)] += v;
                }
            }
        }
        Ok(g)
    }
}

/// Local dense index of the sites of a group within a configuration.
#[inline]
pub fn local_index(c: &Configuration, sites: &[usize]) -> usize {
    sites.iter().fold(0, |acc, &s| acc * LOCAL_STATES + c.get_index(s))
}

#[inline]
pub fn set_local_index(c: &mut Configuration, sites: &[usize], mut idx: usize) {
    for &s in sites.iter().rev() {
        c.set_index(s, idx % LOCAL_STATES);
        idx /= LOCAL_STATES;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, Lattice};

    #[test]
    fn tfim_link_carries_half_field_per_endpoint() {
        let lat = Lattice::chain(4, Boundary::Periodic).unwrap();
        let spec = ModelSpec::tfim(lat, 1.0, 0.5);
        let a = assemble_model(&spec).unwrap();
        assert_eq!(a.matrices.len(), 1);
        assert_eq!(a.groups.len(), 4);
        let expected = coupling_rates(&[[0.5, 0.0, 0.0], [0.0; 3], [0.0; 3]])
            .unwrap()
            .add(&table_rates(Term::Field(Axis::Z), 0.5).unwrap().embed_in_pair(0))
            .add(&table_rates(Term::Field(Axis::Z), 0.5).unwrap().embed_in_pair(1));
        assert!(a.matrices[0].max_abs_diff(&expected) < 1e-15);
        assert!(a.matrices[0].column_sums().iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn isolated_site_keeps_local_matrix() {
        let spec = ModelSpec::single_qubit(0.5, 0.25);
        let a = assemble_model(&spec).unwrap();
        assert_eq!(a.groups.len(), 1);
        assert_eq!(a.matrices[0].k, 1);
        let expected = table_rates(Term::Field(Axis::X), 0.5)
            .unwrap()
            .add(&table_rates(Term::Jump(LocalJump::Pauli(Axis::X)), 0.25).unwrap());
        assert!(a.matrices[0].max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn open_chain_ends_get_full_field() {
        let lat = Lattice::chain(3, Boundary::Open).unwrap();
        let spec = ModelSpec::tfim(lat, 1.0, 0.5);
        let a = assemble_model(&spec).unwrap();
        assert_eq!(a.matrices.len(), 2);
        let g = a.dense_generator().unwrap();
        for s in g.row_sum().iter() {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn local_index_round_trip() {
        let mut c: Configuration = "+x-y+z-z".parse().unwrap();
        assert_eq!(local_index(&c, &[1, 3]), 3 * 6 + 5);
        set_local_index(&mut c, &[3, 0], 2 * 6 + 4);
        assert_eq!(c.to_string(), "+z-y+z+y");
    }
}
