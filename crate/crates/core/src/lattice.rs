//! Hypercubic lattices in one and two dimensions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Square,
}

impl LatticeKind {
    pub fn dimension(self) -> usize {
        match self {
            LatticeKind::Chain => 1,
            LatticeKind::Square => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    kind: LatticeKind,
    extent: Vec<usize>,
    boundary: Boundary,
    links: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl Lattice {
    /// Builds the nearest-neighbour link list with row-major site indexing.
    ///
    /// Under periodic boundaries an extent of 2 would produce the same bond
    /// twice; the duplicate is dropped, so such sites have degree below `2d`.
    pub fn new(kind: LatticeKind, extent: &[usize], boundary: Boundary) -> Result<Self> {
        let d = kind.dimension();
        if extent.len() != d {
            return Err(Error::InvalidLattice(format!(
                "{kind:?} lattice needs {d} extents, got {}",
                extent.len()
            )));
        }
        if extent.contains(&0) {
            return Err(Error::InvalidLattice("zero extent".into()));
        }
        if boundary == Boundary::Periodic && extent.iter().any(|&e| e < 2) {
            return Err(Error::InvalidLattice(
                "periodic extent below 2 produces a self-link".into(),
            ));
        }
        let n: usize = extent.iter().product();
        let mut seen = BTreeSet::new();
        let mut links = Vec::new();
        let mut push = |a: usize, b: usize| {
            if seen.insert((a.min(b), a.max(b))) {
                links.push((a, b));
            }
        };
        match kind {
            LatticeKind::Chain => {
                let l = extent[0];
                for i in 0..l {
                    if i + 1 < l {
                        push(i, i + 1);
                    } else if boundary == Boundary::Periodic {
                        push(i, 0);
                    }
                }
            }
            LatticeKind::Square => {
                let (rows, cols) = (extent[0], extent[1]);
                let site = |r: usize, c: usize| r * cols + c;
                for r in 0..rows {
                    for c in 0..cols {
                        if c + 1 < cols {
                            push(site(r, c), site(r, c + 1));
                        } else if boundary == Boundary::Periodic {
                            push(site(r, c), site(r, 0));
                        }
                        if r + 1 < rows {
                            push(site(r, c), site(r + 1, c));
                        } else if boundary == Boundary::Periodic {
                            push(site(r, c), site(0, c));
                        }
                    }
                }
            }
        }
        let mut degree = vec![0; n];
        for &(a, b) in &links {
            degree[a] += 1;
            degree[b] += 1;
        }
        Ok(Lattice {
            kind,
            extent: extent.to_vec(),
            boundary,
            links,
            degree,
        })
    }

    pub fn chain(l: usize, boundary: Boundary) -> Result<Self> {
        Self::new(LatticeKind::Chain, &[l], boundary)
    }

    pub fn square(rows: usize, cols: usize, boundary: Boundary) -> Result<Self> {
        Self::new(LatticeKind::Square, &[rows, cols], boundary)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    pub fn num_sites(&self) -> usize {
        self.degree.len()
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn degree(&self, site: usize) -> usize {
        self.degree[site]
    }

    /// Graph distance between two sites (minimum image under periodic
    /// boundaries).
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let coords = |s: usize| -> Vec<usize> {
            match self.kind {
                LatticeKind::Chain => vec![s],
                LatticeKind::Square => vec![s / self.extent[1], s % self.extent[1]],
            }
        };
        coords(a)
            .into_iter()
            .zip(coords(b))
            .zip(&self.extent)
            .map(|((x, y), &l)| {
                let d = x.abs_diff(y);
                match self.boundary {
                    Boundary::Periodic => d.min(l - d),
                    Boundary::Open => d,
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_chain() {
        let l = Lattice::chain(4, Boundary::Periodic).unwrap();
        assert_eq!(l.links().len(), 4);
        assert!((0..4).all(|s| l.degree(s) == 2));
    }

    #[test]
    fn open_chain() {
        let l = Lattice::chain(3, Boundary::Open).unwrap();
        assert_eq!(l.links(), &[(0, 1), (1, 2)]);
        assert_eq!(l.degree(0), 1);
        assert_eq!(l.degree(1), 2);
    }

    #[test]
    fn periodic_square_3x3() {
        let l = Lattice::square(3, 3, Boundary::Periodic).unwrap();
        assert_eq!(l.links().len(), 18);
        assert!((0..9).all(|s| l.degree(s) == 4));
        let total: usize = (0..9).map(|s| l.degree(s)).sum();
        assert_eq!(total, 2 * l.links().len());
    }

    #[test]
    fn self_link_rejected() {
        assert!(Lattice::chain(1, Boundary::Periodic).is_err());
        assert!(Lattice::square(4, 1, Boundary::Periodic).is_err());
        assert!(Lattice::chain(1, Boundary::Open).is_ok());
    }

    #[test]
    fn no_duplicate_links() {
        for (kind, ext) in [
            (LatticeKind::Chain, vec![2]),
            (LatticeKind::Square, vec![2, 3]),
            (LatticeKind::Square, vec![5, 4]),
        ] {
            let l = Lattice::new(kind, &ext, Boundary::Periodic).unwrap();
            let mut set: Vec<_> = l.links().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            set.sort();
            set.dedup();
            assert_eq!(set.len(), l.links().len());
        }
    }

    #[test]
    fn degrees_on_larger_periodic_lattices() {
        let l = Lattice::square(4, 5, Boundary::Periodic).unwrap();
        assert!((0..20).all(|s| l.degree(s) == 4));
        let c = Lattice::chain(7, Boundary::Periodic).unwrap();
        assert!((0..7).all(|s| c.degree(s) == 2));
    }

    #[test]
    fn distances() {
        let c = Lattice::chain(6, Boundary::Periodic).unwrap();
        assert_eq!(c.distance(0, 5), 1);
        assert_eq!(c.distance(0, 3), 3);
        let s = Lattice::square(3, 3, Boundary::Open).unwrap();
        assert_eq!(s.distance(0, 8), 4);
    }
}
