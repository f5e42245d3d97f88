//! Pauli-string observables evaluated on the signed particle ensemble.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::state::{Axis, Configuration};

/// `Π_{j∈A} σ^j_{α_j}`; the empty string is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<(usize, Axis)>,
}

impl PauliString {
    pub fn new(mut factors: Vec<(usize, Axis)>) -> Result<Self> {
        factors.sort_by_key(|f| f.0);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("pauli string repeats a site".into()));
        }
        Ok(PauliString { factors })
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        PauliString { factors: vec![(site, axis)] }
    }

    pub fn pair(a: (usize, Axis), b: (usize, Axis)) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn support(&self) -> usize {
        self.factors.len()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.last().map(|f| f.0)
    }

    /// `O_C = 3^{N_A} Π_{j∈A} s_j δ_{α_j β_j}`.
    #[inline]
    pub fn coefficient(&self, c: &Configuration) -> f64 {
        let mut v = 1.0;
        for &(site, axis) in &self.factors {
            let s = c.get(site);
            if s.axis != axis {
                return 0.0;
            }
            v *= 3.0 * s.sign.value() as f64;
        }
        v
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (k, (site, axis)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", axis.symbol(), site)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `x0`, `y1 x3` or `1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Self::new(Vec::new());
        }
        let factors = s
            .split_whitespace()
            .map(|tok| {
                let mut chars = tok.chars();
                let axis = match chars.next() {
                    Some('x' | 'X') => Axis::X,
                    Some('y' | 'Y') => Axis::Y,
                    Some('z' | 'Z') => Axis::Z,
                    _ => return Err(Error::Config(format!("bad pauli factor `{tok}`"))),
                };
                let site = chars
                    .as_str()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad site in `{tok}`")))?;
                Ok((site, axis))
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return Err(Error::Config("empty pauli string".into()));
        }
        Self::new(factors)
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Running value `Σ_C O_C n_C` of one Pauli string.
#[derive(Debug, Clone)]
pub struct ObservableTracker {
    pub observable: PauliString,
    value: f64,
}

impl ObservableTracker {
    pub fn new(observable: PauliString) -> Self {
        ObservableTracker { observable, value: 0.0 }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn reset(&mut self) {
        self.value = 0.0;
    }

    /// Accounts for `n_C` changing by `delta`.
    #[inline]
    pub fn update(&mut self, c: &Configuration, delta: i64) {
        let o = self.observable.coefficient(c);
        if o != 0.0 {
            self.value += o * delta as f64;
        }
    }

    /// Direct contraction over `entries`.
    pub fn recompute(&self, entries: &[(Configuration, i64)]) -> f64 {
        entries.iter().map(|(c, n)| self.observable.coefficient(c) * *n as f64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contributions() {
        let z0 = PauliString::single(0, Axis::Z);
        let c: Configuration = "+z-x".parse().unwrap();
        assert_eq!(z0.coefficient(&c), 3.0);
        assert_eq!(PauliString::single(1, Axis::Z).coefficient(&c), 0.0);
        let yx: PauliString = "y0 x1".parse().unwrap();
        let d: Configuration = "-y+x".parse().unwrap();
        // An antiparticle there contributes -(-9) = +9.
        let mut t = ObservableTracker::new(yx);
        t.update(&d, -1);
        assert_eq!(t.value(), 9.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["x0", "y1 x3", "z12", "1"] {
            let p: PauliString = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("y1 x1".parse::<PauliString>().is_err());
        assert!("w0".parse::<PauliString>().is_err());
        let p: PauliString = "x3 y1".parse().unwrap();
        assert_eq!(p.to_string(), "y1 x3");
    }
}
