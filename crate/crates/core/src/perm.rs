//! Permutations on vertex sets `{1..n}`: cycle-notation parsing, powers,
//! orbits, and the classification (identity / uniform / basic / general,
//! plus separability) that gates every equitable decomposition.
//!
//! Vertices are 1-based everywhere in the public API and in serialized
//! forms; storage is 0-based and never leaks.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("vertex index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("duplicate vertex {0} across cycles")]
    DuplicateIndex(usize),
    #[error("malformed cycle notation: {0}")]
    Malformed(String),
    #[error("permutation order overflows u64")]
    OrderOverflow,
    #[error("identity permutation has no separable power")]
    IdentityInput,
    #[error("permutation sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

/// A bijection of `{1..n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// images[i] is the 0-based image of 0-based point i.
    images: Vec<usize>,
}

/// Orbits of a permutation. Each orbit is listed `v, phi(v), phi^2(v), ...`
/// starting from its minimal member; orbits are ordered by minimal member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbitPartition {
    pub orbits: Vec<Vec<usize>>,
}

impl OrbitPartition {
    /// Orbits of size > 1.
    pub fn nontrivial(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.orbits.iter().filter(|o| o.len() > 1)
    }

    pub fn fixed_vertices(&self) -> Vec<usize> {
        self.orbits.iter().filter(|o| o.len() == 1).map(|o| o[0]).collect()
    }
}

/// Orbit-size shape of an automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitShape {
    Identity,
    /// Every orbit has size k.
    Uniform { k: usize },
    /// Orbit sizes in {1, k} with `fixed` singletons.
    Basic { k: usize, fixed: usize },
    /// Mixed nontrivial orbit sizes.
    General,
}

/// Classification of an automorphism: orbit shape, order, and separability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutoClass {
    pub order: u64,
    pub shape: OrbitShape,
    /// Present iff the order is squarefree. Primes are listed largest-first,
    /// the default ordering used by sequential decompositions.
    pub separable_primes: Option<Vec<u64>>,
}

impl AutoClass {
    pub fn is_separable(&self) -> bool {
        self.separable_primes.is_some()
    }

    /// Orbit size and fixed-vertex count when the shape is basic (uniform
    /// counts as basic with zero fixed vertices).
    pub fn as_basic(&self) -> Option<(usize, usize)> {
        match self.shape {
            OrbitShape::Uniform { k } => Some((k, 0)),
            OrbitShape::Basic { k, fixed } => Some((k, fixed)),
            _ => None,
        }
    }
}

/// Ordering convention for the prime factors p_0..p_h of a separable order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeOrder {
    /// 6 decomposes as 3·2; reproduces the worked examples.
    #[default]
    LargestFirst,
    Ascending,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// Build from 1-based disjoint cycles; unmentioned points are fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self, PermError> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for cycle in cycles {
            for &v in cycle {
                if v < 1 || v > n {
                    return Err(PermError::IndexOutOfRange(v, n));
                }
                if seen[v - 1] {
                    return Err(PermError::DuplicateIndex(v));
                }
                seen[v - 1] = true;
            }
            for (pos, &v) in cycle.iter().enumerate() {
                let next = cycle[(pos + 1) % cycle.len()];
                images[v - 1] = next - 1;
            }
        }
        Ok(Self { images })
    }

    /// Parse cycle notation like `"(2,5,8)(3 6 9 4 7 10)"`. Entries may be
    /// separated by commas or whitespace; the empty string is the identity.
    pub fn parse_cycles(text: &str, n: usize) -> Result<Self, PermError> {
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut current: Option<Vec<usize>> = None;
        let mut digits = String::new();
        let flush =
            |digits: &mut String, current: &mut Option<Vec<usize>>| -> Result<(), PermError> {
                if digits.is_empty() {
                    return Ok(());
                }
                let v: usize = digits
                    .parse()
                    .map_err(|_| PermError::Malformed(format!("bad index {digits:?}")))?;
                digits.clear();
                match current {
                    Some(c) => c.push(v),
                    None => return Err(PermError::Malformed(format!("index {v} outside parentheses"))),
                }
                Ok(())
            };
        for ch in text.chars() {
            match ch {
                '(' => {
                    if current.is_some() {
                        return Err(PermError::Malformed("nested '('".into()));
                    }
                    current = Some(Vec::new());
                }
                ')' => {
                    flush(&mut digits, &mut current)?;
                    let cycle =
                        current.take().ok_or_else(|| PermError::Malformed("unmatched ')'".into()))?;
                    if cycle.is_empty() {
                        return Err(PermError::Malformed("empty cycle".into()));
                    }
                    cycles.push(cycle);
                }
                '0'..='9' => digits.push(ch),
                ',' | ' ' | '\t' | '\n' | '\r' => flush(&mut digits, &mut current)?,
                other => return Err(PermError::Malformed(format!("unexpected character {other:?}"))),
            }
        }
        if current.is_some() {
            return Err(PermError::Malformed("unclosed '('".into()));
        }
        if !digits.is_empty() {
            return Err(PermError::Malformed(format!("index {digits} outside parentheses")));
        }
        Self::from_cycles(n, &cycles)
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// Image of a 1-based vertex.
    pub fn apply(&self, v: usize) -> usize {
        self.images[v - 1] + 1
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &im)| i == im)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &im) in self.images.iter().enumerate() {
            inv[im] = i;
        }
        Self { images: inv }
    }

    /// self ∘ other: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self, PermError> {
        if self.n() != other.n() {
            return Err(PermError::SizeMismatch(self.n(), other.n()));
        }
        Ok(Self { images: other.images.iter().map(|&m| self.images[m]).collect() })
    }

    /// phi^e. Exponents are reduced modulo each cycle length, so arbitrarily
    /// large exponents are exact.
    pub fn power(&self, e: u64) -> Self {
        let mut images = vec![0; self.n()];
        let mut visited = vec![false; self.n()];
        for start in 0..self.n() {
            if visited[start] {
                continue;
            }
            let mut cycle = vec![start];
            visited[start] = true;
            let mut cur = self.images[start];
            while cur != start {
                visited[cur] = true;
                cycle.push(cur);
                cur = self.images[cur];
            }
            let len = cycle.len();
            let shift = (e % len as u64) as usize;
            for (pos, &v) in cycle.iter().enumerate() {
                images[v] = cycle[(pos + shift) % len];
            }
        }
        Self { images }
    }

    pub fn orbits(&self) -> OrbitPartition {
        let mut orbits = Vec::new();
        let mut visited = vec![false; self.n()];
        for start in 0..self.n() {
            if visited[start] {
                continue;
            }
            let mut orbit = vec![start + 1];
            visited[start] = true;
            let mut cur = self.images[start];
            while cur != start {
                visited[cur] = true;
                orbit.push(cur + 1);
                cur = self.images[cur];
            }
            orbits.push(orbit);
        }
        OrbitPartition { orbits }
    }

    /// Nontrivial cycles in canonical form (minimal member first, cycles
    /// ordered by minimal member).
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        self.orbits().orbits.into_iter().filter(|o| o.len() > 1).collect()
    }

    /// Least e >= 1 with phi^e = identity (lcm of cycle lengths).
    pub fn order(&self) -> Result<u64, PermError> {
        let mut ord: u64 = 1;
        for orbit in self.orbits().orbits {
            let len = orbit.len() as u64;
            let g = gcd(ord, len);
            ord = ord.checked_mul(len / g).ok_or(PermError::OrderOverflow)?;
        }
        Ok(ord)
    }

    pub fn classify(&self) -> Result<AutoClass, PermError> {
        let orbits = self.orbits();
        let order = self.order()?;
        let mut fixed = 0usize;
        let mut nontrivial_sizes: Vec<usize> = Vec::new();
        for o in &orbits.orbits {
            if o.len() == 1 {
                fixed += 1;
            } else if !nontrivial_sizes.contains(&o.len()) {
                nontrivial_sizes.push(o.len());
            }
        }
        let shape = match (nontrivial_sizes.as_slice(), fixed) {
            ([], _) => OrbitShape::Identity,
            ([k], 0) => OrbitShape::Uniform { k: *k },
            ([k], f) => OrbitShape::Basic { k: *k, fixed: f },
            _ => OrbitShape::General,
        };
        let factors = factorize(order);
        let squarefree = factors.iter().all(|&(_, e)| e == 1);
        let separable_primes = squarefree.then(|| {
            let mut primes: Vec<u64> = factors.iter().map(|&(p, _)| p).collect();
            primes.sort_unstable_by(|a, b| b.cmp(a));
            primes
        });
        Ok(AutoClass { order, shape, separable_primes })
    }

    /// The separable power psi = phi^ell with ell the product of p^(e-1)
    /// over the factorization of |phi|; |psi| is the radical of |phi|.
    pub fn separable_power(&self) -> Result<(Self, u64), PermError> {
        if self.is_identity() {
            return Err(PermError::IdentityInput);
        }
        let order = self.order()?;
        let mut ell: u64 = 1;
        for (p, e) in factorize(order) {
            for _ in 1..e {
                ell = ell.checked_mul(p).ok_or(PermError::OrderOverflow)?;
            }
        }
        Ok((self.power(ell), ell))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, v) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PermJson {
    n: usize,
    cycles: Vec<Vec<usize>>,
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PermJson { n: self.n(), cycles: self.cycles() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PermJson::deserialize(d)?;
        Permutation::from_cycles(raw.n, &raw.cycles).map_err(D::Error::custom)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Trial-division factorization as (prime, exponent) pairs, ascending primes.
pub(crate) fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}
