//! Immutable transition tables shared by all trajectories.

use smallvec::SmallVec;

use crate::algebra::assemble::{local_index, set_local_index};
use crate::algebra::AssembledModel;
use crate::error::{Error, Result};
use crate::state::Configuration;

/// Models with at least this many groups keep a per-configuration index of
/// group escape rates so that sampling a transition costs `O(log G)`.
pub const INDEXED_GROUPS: usize = 32;

/// One off-diagonal transition out of a local column.
#[derive(Debug, Clone, Copy)]
pub struct Move {
    pub to: u16,
    /// Running sum of `|M|` over this column up to and including this move.
    pub cumulative: f64,
    pub negative: bool,
}

#[derive(Debug, Clone)]
struct Column {
    escape: f64,
    moves: Vec<Move>,
}

#[derive(Debug, Clone)]
struct Table {
    columns: Vec<Column>,
}

impl Table {
    fn new(m: &crate::algebra::LocalRateMatrix) -> Result<Self> {
        let q = m.dim();
        if q > u16::MAX as usize {
            return Err(Error::InvalidModel("local matrix too large".into()));
        }
        let columns = (0..q)
            .map(|c| {
                let mut acc = 0.0;
                let mut moves = Vec::new();
                for r in 0..q {
                    let v = m.m[(r, c)];
                    if r != c && v != 0.0 {
                        acc += v.abs();
                        moves.push(Move { to: r as u16, cumulative: acc, negative: v < 0.0 });
                    }
                }
                Column { escape: acc, moves }
            })
            .collect();
        Ok(Table { columns })
    }
}

/// Group `g` acting on `sites` with local matrix `matrix`.
#[derive(Debug, Clone)]
pub struct Group {
    pub sites: SmallVec<[usize; 2]>,
    pub matrix: usize,
}

/// A sampled transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub group: usize,
    pub to: usize,
    pub negative: bool,
}

/// Transition tables of an assembled model.
#[derive(Debug, Clone)]
pub struct RateTable {
    num_sites: usize,
    tables: Vec<Table>,
    groups: Vec<Group>,
    /// Groups touching each site.
    incident: Vec<SmallVec<[usize; 4]>>,
    /// Leaf offset of the segment tree, zero when unindexed.
    leaves: usize,
    max_escape: f64,
    negative_mass: f64,
}

impl RateTable {
    pub fn new(model: &AssembledModel) -> Result<Self> {
        let tables = model.matrices.iter().map(Table::new).collect::<Result<Vec<_>>>()?;
        let groups: Vec<Group> = model
            .groups
            .iter()
            .map(|g| Group { sites: g.sites.clone(), matrix: g.matrix })
            .collect();
        let mut incident = vec![SmallVec::new(); model.num_sites];
        for (gi, g) in groups.iter().enumerate() {
            for &s in &g.sites {
                incident[s].push(gi);
            }
        }
        let leaves = if groups.len() >= INDEXED_GROUPS { groups.len().next_power_of_two() } else { 0 };
        let max_escape = tables
            .iter()
            .flat_map(|t| t.columns.iter().map(|c| c.escape))
            .fold(0.0, f64::max);
        Ok(RateTable {
            num_sites: model.num_sites,
            tables,
            groups,
            incident,
            leaves,
            max_escape,
            negative_mass: model.negative_mass(),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn is_indexed(&self) -> bool {
        self.leaves > 0
    }

    /// Largest escape rate of any local column.
    pub fn max_local_escape(&self) -> f64 {
        self.max_escape
    }

    /// Total negative off-diagonal mass over all distinct matrices.
    pub fn negative_mass(&self) -> f64 {
        self.negative_mass
    }

    #[inline]
    fn column(&self, g: usize, c: &Configuration) -> &Column {
        let grp = &self.groups[g];
        &self.tables[grp.matrix].columns[local_index(c, &grp.sites)]
    }

    #[inline]
    pub fn group_escape(&self, g: usize, c: &Configuration) -> f64 {
        self.column(g, c).escape
    }

    /// `τ_C` by a full scan over groups.
    pub fn escape(&self, c: &Configuration) -> f64 {
        (0..self.groups.len()).map(|g| self.group_escape(g, c)).sum()
    }

    /// Segment tree over group escape rates; the root (slot 1) is `τ_C`.
    pub fn build_index(&self, c: &Configuration) -> Box<[f64]> {
        let mut t = vec![0.0; 2 * self.leaves].into_boxed_slice();
        self.fill_index(c, &mut t);
        t
    }

    pub fn fill_index(&self, c: &Configuration, t: &mut [f64]) {
        let p = self.leaves;
        t.fill(0.0);
        for g in 0..self.groups.len() {
            t[p + g] = self.group_escape(g, c);
        }
        for i in (1..p).rev() {
            t[i] = t[2 * i] + t[2 * i + 1];
        }
    }

    /// Refreshes the leaves of every group sharing a site with `group` after
    /// a move within `group` produced `c`.
    pub fn update_index(&self, group: usize, c: &Configuration, t: &mut [f64]) {
        let p = self.leaves;
        for &s in &self.groups[group].sites {
            for &g in &self.incident[s] {
                let mut i = p + g;
                t[i] = self.group_escape(g, c);
                while i > 1 {
                    i /= 2;
                    t[i] = t[2 * i] + t[2 * i + 1];
                }
            }
        }
    }

    /// Picks a transition out of `c` with probability `|M_{C'C}| / τ_C`,
    /// `u` uniform in `[0, 1)`.
    pub fn sample(&self, c: &Configuration, tau: f64, index: Option<&[f64]>, u: f64) -> Transition {
        let mut x = u * tau;
        let g = match index {
            Some(t) => {
                let p = self.leaves;
                let mut i = 1;
                while i < p {
                    let l = t[2 * i];
                    if x < l || t[2 * i + 1] <= 0.0 {
                        i *= 2;
                    } else {
                        x -= l;
                        i = 2 * i + 1;
                    }
                }
                (i - p).min(self.groups.len() - 1)
            }
            None => {
                let mut chosen = None;
                let mut last = 0;
                for g in 0..self.groups.len() {
                    let e = self.group_escape(g, c);
                    if e <= 0.0 {
                        continue;
                    }
                    last = g;
                    if x < e {
                        chosen = Some(g);
                        break;
                    }
                    x -= e;
                }
                chosen.unwrap_or(last)
            }
        };
        let col = self.column(g, c);
        // Rounding can push `x` to the end of the column.
        let x = x.min(col.escape);
        let k = col.moves.partition_point(|m| m.cumulative <= x).min(col.moves.len() - 1);
        let mv = col.moves[k];
        Transition { group: g, to: mv.to as usize, negative: mv.negative }
    }

    /// The configuration reached by `t` from `c`.
    pub fn apply(&self, c: &Configuration, t: Transition) -> Configuration {
        let mut d = c.clone();
        set_local_index(&mut d, &self.groups[t.group].sites, t.to);
        d
    }
}
