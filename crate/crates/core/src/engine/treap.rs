//! Signed particle ensemble on an arena treap keyed by configuration.
//!
//! Each node holds the signed occupation `n_C = n•_C − n°_C`; annihilation
//! is automatic because only the difference is stored. Subtree aggregates
//! are node count, particle count `Σ|n|` and escape weight `Σ τ_C |n|`, which
//! give `Ω`, `Ω_occ` and `τ_tot` at the root and drive the `O(log Ω_occ)`
//! particle draw.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::state::Configuration;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: Configuration,
    n: i64,
    tau: f64,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
    count: u64,
    weight: f64,
    index: Option<Box<[f64]>>,
}

/// What [`ParticleEnsemble::add`] did to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Change {
    pub before: i64,
    pub after: i64,
}

#[derive(Debug, Clone, Default)]
pub struct ParticleEnsemble {
    nodes: Vec<Node>,
    free: Vec<u32>,
    spare_index: Vec<Box<[f64]>>,
    root: u32,
    signed_total: i64,
}

/// Payload of a node about to be created.
pub struct NewNode {
    pub tau: f64,
    pub index: Option<Box<[f64]>>,
    pub prio: u64,
}

impl ParticleEnsemble {
    pub fn new() -> Self {
        ParticleEnsemble { root: NIL, ..Default::default() }
    }

    pub fn clear(&mut self) {
        for node in self.nodes.drain(..) {
            if let Some(ix) = node.index {
                self.spare_index.push(ix);
            }
        }
        self.free.clear();
        self.root = NIL;
        self.signed_total = 0;
    }

    /// `Ω = Σ_C |n_C|`.
    pub fn omega(&self) -> u64 {
        self.get(self.root).map_or(0, |n| n.count)
    }

    /// Number of occupied configurations.
    pub fn omega_occ(&self) -> u64 {
        self.get(self.root).map_or(0, |n| n.size as u64)
    }

    /// `τ_tot = Σ_C τ_C |n_C|`.
    pub fn tau_tot(&self) -> f64 {
        self.get(self.root).map_or(0.0, |n| n.weight)
    }

    /// `S = Σ_C n_C`.
    pub fn signed_total(&self) -> i64 {
        self.signed_total
    }

    /// A recycled escape-rate index buffer, if any.
    pub fn take_spare_index(&mut self) -> Option<Box<[f64]>> {
        self.spare_index.pop()
    }

    pub fn recycle_index(&mut self, ix: Box<[f64]>) {
        self.spare_index.push(ix);
    }

    #[inline]
    fn get(&self, i: u32) -> Option<&Node> {
        if i == NIL {
            None
        } else {
            Some(&self.nodes[i as usize])
        }
    }

    /// Occupation of `key`, zero if absent.
    pub fn occupation(&self, key: &Configuration) -> i64 {
        self.find(key).map_or(0, |i| self.nodes[i as usize].n)
    }

    fn find(&self, key: &Configuration) -> Option<u32> {
        let mut i = self.root;
        while i != NIL {
            let node = &self.nodes[i as usize];
            i = match key.cmp(&node.key) {
                Ordering::Less => node.left,
                Ordering::Greater => node.right,
                Ordering::Equal => return Some(i),
            };
        }
        None
    }

    /// The escape-rate index stored at `key`.
    pub fn index_of(&self, key: &Configuration) -> Option<&[f64]> {
        self.find(key).and_then(|i| self.nodes[i as usize].index.as_deref())
    }

    /// Removes and returns the index stored at `key`, leaving the node
    /// without one. The caller must delete the node before the next draw.
    pub fn take_index(&mut self, key: &Configuration) -> Option<Box<[f64]>> {
        let i = self.find(key)?;
        self.nodes[i as usize].index.take()
    }

    #[inline]
    fn pull(&mut self, i: u32) {
        let (l, r) = {
            let n = &self.nodes[i as usize];
            (n.left, n.right)
        };
        let (mut size, mut count, mut weight) = (1u32, 0u64, 0.0f64);
        for c in [l, r] {
            if c != NIL {
                let cn = &self.nodes[c as usize];
                size += cn.size;
                count += cn.count;
                weight += cn.weight;
            }
        }
        let n = &mut self.nodes[i as usize];
        let a = n.n.unsigned_abs();
        n.size = size;
        n.count = count + a;
        n.weight = weight + n.tau * a as f64;
    }

    fn rotate_right(&mut self, i: u32) -> u32 {
        let l = self.nodes[i as usize].left;
        self.nodes[i as usize].left = self.nodes[l as usize].right;
        self.nodes[l as usize].right = i;
        self.pull(i);
        self.pull(l);
        l
    }

    fn rotate_left(&mut self, i: u32) -> u32 {
        let r = self.nodes[i as usize].right;
        self.nodes[i as usize].right = self.nodes[r as usize].left;
        self.nodes[r as usize].left = i;
        self.pull(i);
        self.pull(r);
        r
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    fn alloc(&mut self, key: Configuration, n: i64, new: NewNode) -> u32 {
        let node = Node {
            key,
            n,
            tau: new.tau,
            prio: new.prio,
            left: NIL,
            right: NIL,
            size: 1,
            count: n.unsigned_abs(),
            weight: new.tau * n.unsigned_abs() as f64,
            index: new.index,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, i: u32) {
        if let Some(ix) = self.nodes[i as usize].index.take() {
            self.spare_index.push(ix);
        }
        self.free.push(i);
    }

    /// Adds `delta` to `n_key`, creating the node from `make` if absent and
    /// deleting it if the occupation reaches zero.
    pub fn add(&mut self, key: &Configuration, delta: i64, make: impl FnOnce(&mut Self) -> NewNode) -> Result<Change> {
        if delta == 0 {
            let n = self.occupation(key);
            return Ok(Change { before: n, after: n });
        }
        self.signed_total = self.signed_total.checked_add(delta).ok_or(Error::OccupationOverflow)?;
        let mut make = Some(make);
        let mut change = Change { before: 0, after: 0 };
        let root = self.root;
        self.root = self.add_rec(root, key, delta, &mut make, &mut change)?;
        Ok(change)
    }

    fn add_rec<F: FnOnce(&mut Self) -> NewNode>(
        &mut self,
        i: u32,
        key: &Configuration,
        delta: i64,
        make: &mut Option<F>,
        change: &mut Change,
    ) -> Result<u32> {
        if i == NIL {
            let new = (make.take().expect("make used once"))(self);
            change.after = delta;
            return Ok(self.alloc(key.clone(), delta, new));
        }
        match key.cmp(&self.nodes[i as usize].key) {
            Ordering::Equal => {
                let node = &mut self.nodes[i as usize];
                change.before = node.n;
                node.n = node.n.checked_add(delta).ok_or(Error::OccupationOverflow)?;
                change.after = node.n;
                if node.n == 0 {
                    let (l, r) = (node.left, node.right);
                    self.release(i);
                    return Ok(self.merge(l, r));
                }
                self.pull(i);
                Ok(i)
            }
            Ordering::Less => {
                let l = self.nodes[i as usize].left;
                let nl = self.add_rec(l, key, delta, make, change)?;
                self.nodes[i as usize].left = nl;
                if nl != NIL && self.nodes[nl as usize].prio > self.nodes[i as usize].prio {
                    Ok(self.rotate_right(i))
                } else {
                    self.pull(i);
                    Ok(i)
                }
            }
            Ordering::Greater => {
                let r = self.nodes[i as usize].right;
                let nr = self.add_rec(r, key, delta, make, change)?;
                self.nodes[i as usize].right = nr;
                if nr != NIL && self.nodes[nr as usize].prio > self.nodes[i as usize].prio {
                    Ok(self.rotate_left(i))
                } else {
                    self.pull(i);
                    Ok(i)
                }
            }
        }
    }

    /// The node whose cumulative escape weight interval contains `x`, for
    /// `x` in `[0, τ_tot)`; returns its key, occupation and `τ_C`.
    pub fn draw(&self, mut x: f64) -> Option<(&Configuration, i64, f64)> {
        let mut i = self.root;
        let mut fallback = None;
        while i != NIL {
            let node = &self.nodes[i as usize];
            let lw = self.get(node.left).map_or(0.0, |n| n.weight);
            let own = node.tau * node.n.unsigned_abs() as f64;
            if x < lw {
                i = node.left;
                continue;
            }
            x -= lw;
            if own > 0.0 {
                fallback = Some(i);
                if x < own {
                    break;
                }
            }
            x -= own;
            if self.get(node.right).is_none_or(|n| n.weight <= 0.0) {
                // Rounding overshoot: stay with the last positive node.
                i = fallback.unwrap_or(NIL);
                break;
            }
            i = node.right;
        }
        let i = if i == NIL { fallback? } else { i };
        let node = &self.nodes[i as usize];
        Some((&node.key, node.n, node.tau))
    }

    /// In-order `(configuration, n_C)` pairs.
    pub fn entries(&self) -> Vec<(Configuration, i64)> {
        let mut out = Vec::with_capacity(self.omega_occ() as usize);
        let mut stack = Vec::new();
        let mut i = self.root;
        while i != NIL || !stack.is_empty() {
            while i != NIL {
                stack.push(i);
                i = self.nodes[i as usize].left;
            }
            let j = stack.pop().expect("non-empty");
            let node = &self.nodes[j as usize];
            out.push((node.key.clone(), node.n));
            i = node.right;
        }
        out
    }

    /// Verifies key order, heap order, aggregates and the stored escape
    /// rates against `escape`.
    pub fn check(&self, escape: impl Fn(&Configuration) -> f64) -> Result<()> {
        fn rec(
            e: &ParticleEnsemble,
            i: u32,
            lo: Option<&Configuration>,
            hi: Option<&Configuration>,
            escape: &dyn Fn(&Configuration) -> f64,
        ) -> Result<(u32, u64, f64, i64)> {
            if i == NIL {
                return Ok((0, 0, 0.0, 0));
            }
            let n = &e.nodes[i as usize];
            let bad = |msg: &str| Err(Error::Invariant(format!("{msg} at {}", n.key)));
            if n.n == 0 {
                return bad("empty node");
            }
            if lo.is_some_and(|lo| n.key <= *lo) || hi.is_some_and(|hi| n.key >= *hi) {
                return bad("key order");
            }
            for c in [n.left, n.right] {
                if c != NIL && e.nodes[c as usize].prio > n.prio {
                    return bad("heap order");
                }
            }
            let tau = escape(&n.key);
            if (tau - n.tau).abs() > 1e-9 * (1.0 + tau) {
                return bad("stale escape rate");
            }
            if let Some(ix) = &n.index {
                if (ix[1] - n.tau).abs() > 1e-9 * (1.0 + tau) {
                    return bad("stale escape index");
                }
            }
            let l = rec(e, n.left, lo, Some(&n.key), escape)?;
            let r = rec(e, n.right, Some(&n.key), hi, escape)?;
            let a = n.n.unsigned_abs();
            let size = l.0 + r.0 + 1;
            let count = l.1 + r.1 + a;
            let weight = l.2 + r.2 + n.tau * a as f64;
            if size != n.size || count != n.count || (weight - n.weight).abs() > 1e-9 * (1.0 + weight) {
                return bad("aggregate");
            }
            Ok((size, count, weight, l.3 + r.3 + n.n))
        }
        let (_, _, _, s) = rec(self, self.root, None, None, &escape)?;
        if s != self.signed_total {
            return Err(Error::Invariant(format!("signed total {s} != tracked {}", self.signed_total)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn key(i: usize) -> Configuration {
        Configuration::from_dense_index(4, i).unwrap()
    }

    fn tau(c: &Configuration) -> f64 {
        1.0 + (c.dense_index() % 7) as f64
    }

    #[test]
    fn matches_reference_map() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut e = ParticleEnsemble::new();
        let mut reference: BTreeMap<Configuration, i64> = BTreeMap::new();
        for step in 0..20_000 {
            let k = key(rng.random_range(0..200));
            let d = if rng.random_bool(0.5) { 1 } else { -1 };
            let prio = rng.random();
            let t = tau(&k);
            let ch = e.add(&k, d, |_| NewNode { tau: t, index: None, prio }).unwrap();
            let r = reference.entry(k.clone()).or_insert(0);
            assert_eq!(ch.before, *r);
            *r += d;
            assert_eq!(ch.after, *r);
            if *r == 0 {
                reference.remove(&k);
            }
            if step % 997 == 0 {
                e.check(tau).unwrap();
            }
        }
        e.check(tau).unwrap();
        let got: Vec<_> = e.entries();
        let want: Vec<_> = reference.iter().map(|(k, v)| (k.clone(), *v)).collect();
        assert_eq!(got, want);
        assert_eq!(e.omega(), reference.values().map(|v| v.unsigned_abs()).sum::<u64>());
        assert_eq!(e.signed_total(), reference.values().sum::<i64>());
        let w: f64 = reference.iter().map(|(k, v)| tau(k) * v.unsigned_abs() as f64).sum();
        assert!((e.tau_tot() - w).abs() < 1e-9);
    }

    #[test]
    fn draw_is_proportional_to_weight() {
        let mut e = ParticleEnsemble::new();
        let weights = [(3usize, 2i64), (9, -1), (40, 3)];
        for (i, &(k, n)) in weights.iter().enumerate() {
            let kk = key(k);
            let t = tau(&kk);
            e.add(&kk, n, |_| NewNode { tau: t, index: None, prio: i as u64 * 7919 % 5 }).unwrap();
        }
        let total = e.tau_tot();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut hits = BTreeMap::new();
        let n = 100_000;
        for _ in 0..n {
            let (k, _, _) = e.draw(rng.random::<f64>() * total).unwrap();
            *hits.entry(k.clone()).or_insert(0usize) += 1;
        }
        for &(k, occ) in &weights {
            let kk = key(k);
            let p = tau(&kk) * occ.unsigned_abs() as f64 / total;
            let f = hits[&kk] as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
        // Endpoints.
        assert!(e.draw(0.0).is_some());
        assert!(e.draw(total).is_some());
    }

    #[test]
    fn annihilation_removes_node() {
        let mut e = ParticleEnsemble::new();
        let k = key(5);
        e.add(&k, 1, |_| NewNode { tau: 1.0, index: None, prio: 1 }).unwrap();
        let ch = e.add(&k, -1, |_| unreachable!()).unwrap();
        assert_eq!((ch.before, ch.after), (1, 0));
        assert_eq!(e.omega(), 0);
        assert_eq!(e.omega_occ(), 0);
        assert_eq!(e.signed_total(), 0);
    }
}
