//! Single-site states of the overcomplete spin basis and packed lattice
//! configurations.
//!
//! A site takes one of six values: a polarization axis in `{x, y, z}` and a
//! sign. The canonical enumeration is
//! `(x,+)=0, (x,-)=1, (y,+)=2, (y,-)=3, (z,+)=4, (z,-)=5`, shared by the
//! local rate matrices and by the configuration keys.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Number of single-site states.
pub const LOCAL_STATES: usize = 6;

/// Sites packed in one 64-bit word (3 bits each).
pub const SITES_PER_WORD: usize = 21;

/// Largest lattice a configuration key can describe.
pub const MAX_SITES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Self::ALL[i]
    }

    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// One site of a classical configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteState {
    pub axis: Axis,
    pub sign: Sign,
}

impl SiteState {
    pub const ALL: [SiteState; LOCAL_STATES] = [
        SiteState::new(Axis::X, Sign::Plus),
        SiteState::new(Axis::X, Sign::Minus),
        SiteState::new(Axis::Y, Sign::Plus),
        SiteState::new(Axis::Y, Sign::Minus),
        SiteState::new(Axis::Z, Sign::Plus),
        SiteState::new(Axis::Z, Sign::Minus),
    ];

    pub const fn new(axis: Axis, sign: Sign) -> Self {
        SiteState { axis, sign }
    }

    pub fn index(self) -> usize {
        2 * self.axis.index() + usize::from(self.sign == Sign::Minus)
    }

    pub fn from_index(i: usize) -> SiteState {
        Self::ALL[i]
    }

    pub fn flipped(self) -> SiteState {
        SiteState::new(self.axis, self.sign.flip())
    }
}

impl fmt::Display for SiteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign == Sign::Plus { '+' } else { '-' };
        write!(f, "{}{}", s, self.axis.symbol())
    }
}

impl std::str::FromStr for SiteState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let (Some(sign), Some(axis), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::Config(format!("bad site state `{s}`")));
        };
        let sign = match sign {
            '+' => Sign::Plus,
            '-' => Sign::Minus,
            _ => return Err(Error::Config(format!("bad sign in `{s}`"))),
        };
        let axis = match axis.to_ascii_lowercase() {
            'x' => Axis::X,
            'y' => Axis::Y,
            'z' => Axis::Z,
            _ => return Err(Error::Config(format!("bad axis in `{s}`"))),
        };
        Ok(SiteState::new(axis, sign))
    }
}

/// A classical configuration of `n` sites, packed 3 bits per site with site 0
/// in the most significant digit of the first word. Word-wise comparison is
/// therefore lexicographic comparison of the site sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    words: SmallVec<[u64; 2]>,
    n: u32,
}

#[inline]
fn slot(site: usize) -> (usize, u32) {
    let word = site / SITES_PER_WORD;
    let shift = 3 * (SITES_PER_WORD - 1 - site % SITES_PER_WORD) as u32;
    (word, shift)
}

impl Configuration {
    /// Packs a site sequence into a key.
    pub fn encode(sites: &[SiteState]) -> Result<Self> {
        let mut c = Self::uniform(sites.len(), SiteState::ALL[0])?;
        for (i, s) in sites.iter().enumerate() {
            c.set(i, *s);
        }
        Ok(c)
    }

    /// All sites in the same state.
    pub fn uniform(n: usize, state: SiteState) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::SiteCountOutOfRange { n, max: MAX_SITES });
        }
        let words = SmallVec::from_elem(0u64, n.div_ceil(SITES_PER_WORD));
        let mut c = Configuration { words, n: n as u32 };
        if state.index() != 0 {
            for i in 0..n {
                c.set(i, state);
            }
        }
        Ok(c)
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let sites: Vec<SiteState> = indices.iter().map(|&i| SiteState::from_index(i)).collect();
        Self::encode(&sites)
    }

    pub fn decode(&self) -> Vec<SiteState> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get_index(&self, site: usize) -> usize {
        debug_assert!(site < self.len());
        let (w, shift) = slot(site);
        ((self.words[w] >> shift) & 0b111) as usize
    }

    #[inline]
    pub fn get(&self, site: usize) -> SiteState {
        SiteState::from_index(self.get_index(site))
    }

    #[inline]
    pub fn set_index(&mut self, site: usize, index: usize) {
        debug_assert!(site < self.len() && index < LOCAL_STATES);
        let (w, shift) = slot(site);
        self.words[w] = (self.words[w] & !(0b111 << shift)) | ((index as u64) << shift);
    }

    #[inline]
    pub fn set(&mut self, site: usize, state: SiteState) {
        self.set_index(site, state.index());
    }

    /// Row-major index into the 6^n dense configuration space (site 0 most
    /// significant). Only meaningful for small `n`.
    pub fn dense_index(&self) -> usize {
        (0..self.len()).fold(0, |acc, i| acc * LOCAL_STATES + self.get_index(i))
    }

    pub fn from_dense_index(n: usize, mut index: usize) -> Result<Self> {
        let mut c = Self::uniform(n, SiteState::ALL[0])?;
        for i in (0..n).rev() {
            c.set_index(i, index % LOCAL_STATES);
            index /= LOCAL_STATES;
        }
        Ok(c)
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Configuration {
    type Err = Error;

    /// Parses strings such as `+z-x+y`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.len() % 2 != 0 || !s.is_ascii() {
            return Err(Error::Config(format!("bad configuration `{s}`")));
        }
        let sites = (0..s.len() / 2)
            .map(|i| s[2 * i..2 * i + 2].parse())
            .collect::<Result<Vec<SiteState>>>()?;
        Self::encode(&sites)
    }
}

impl serde::Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumeration_is_canonical() {
        let labels: Vec<String> = SiteState::ALL.iter().map(|s| s.to_string()).collect();
        assert_eq!(labels, ["+x", "-x", "+y", "-y", "+z", "-z"]);
        for (i, s) in SiteState::ALL.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
    }

    #[test]
    fn single_site_round_trip() {
        let plus_z = SiteState::new(Axis::Z, Sign::Plus);
        let c = Configuration::encode(&[plus_z]).unwrap();
        assert_eq!(c.get_index(0), 4);
        assert_eq!(c.decode(), vec![plus_z]);
    }

    #[test]
    fn order_of_sites_matters() {
        let a: Configuration = "+z-x".parse().unwrap();
        let b: Configuration = "-x+z".parse().unwrap();
        assert_ne!(a, b);
        assert!(b < a);
    }

    #[test]
    fn two_site_keys_sorted_lexicographically() {
        let mut keys = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                keys.push(Configuration::from_indices(&[i, j]).unwrap());
            }
        }
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 36);
        assert_eq!(sorted, keys);
    }

    #[test]
    fn length_out_of_range() {
        assert!(matches!(
            Configuration::encode(&[]),
            Err(Error::SiteCountOutOfRange { .. })
        ));
        assert!(Configuration::uniform(MAX_SITES + 1, SiteState::ALL[0]).is_err());
    }

    #[test]
    fn multi_word_boundary() {
        let mut c = Configuration::uniform(43, SiteState::ALL[5]).unwrap();
        c.set_index(20, 2);
        c.set_index(21, 3);
        assert_eq!(c.get_index(20), 2);
        assert_eq!(c.get_index(21), 3);
        assert_eq!(c.get_index(42), 5);
    }

    #[test]
    fn dense_index_round_trip() {
        for idx in 0..216 {
            let c = Configuration::from_dense_index(3, idx).unwrap();
            assert_eq!(c.dense_index(), idx);
        }
    }

    fn sites(max: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0..LOCAL_STATES, 1..=max)
    }

    proptest! {
        #[test]
        fn encode_decode_identity(idx in sites(10)) {
            let c = Configuration::from_indices(&idx).unwrap();
            let back: Vec<usize> = c.decode().iter().map(|s| s.index()).collect();
            prop_assert_eq!(back, idx);
        }

        #[test]
        fn key_order_matches_site_order(n in 1usize..50, a in prop::collection::vec(0..6usize, 50), b in prop::collection::vec(0..6usize, 50)) {
            let ca = Configuration::from_indices(&a[..n]).unwrap();
            let cb = Configuration::from_indices(&b[..n]).unwrap();
            prop_assert_eq!(ca.cmp(&cb), a[..n].cmp(&b[..n]));
        }
    }
}
