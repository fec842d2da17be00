//! Multi-indices in ℕ^d and the graded ordering used for every matrix in the crate.
//!
//! Indices are ordered by degree first and then ascending lexicographically
//! on the component tuple, read left to right. For `d = 2, N = 2` the order is
//!
//! ```text
//! (0,0) | (0,1) (1,0) | (0,2) (1,1) (2,0)
//! ```
//!
//! The kernel file format refers to this order as `"graded-lex"`.

use std::fmt;

use crate::error::{Error, Result};

/// A multi-index α ∈ ℕ^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("multi-index needs dimension >= 1".into()));
        }
        Ok(Self(components))
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |α|, the sum of the components.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    /// ln(α!) = Σ ln(α_i!).
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&k| ln_factorial(k)).sum()
    }

    /// Squared Euclidean length of the component vector.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|&k| (k as f64) * (k as f64)).sum()
    }

    /// Concatenation (α, γ) ∈ ℕ^{d + d'}.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Splits into the first `at` components and the rest.
    pub fn split(&self, at: usize) -> (MultiIndex, MultiIndex) {
        assert!(at >= 1 && at < self.dim(), "split point out of range");
        (MultiIndex(self.0[..at].to_vec()), MultiIndex(self.0[at..].to_vec()))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// ln(n!) via the log-gamma function.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// Exact binomial coefficient with overflow detection.
pub fn binomial(n: usize, k: usize) -> Result<usize> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc * (n - k + i) / i stays integral: it is C(n - k + i, i).
        acc = acc
            .checked_mul((n - k + i) as u128)
            .ok_or_else(|| Error::Overflow(format!("binomial({n}, {k})")))?
            / i as u128;
    }
    usize::try_from(acc).map_err(|_| Error::Overflow(format!("binomial({n}, {k})")))
}

/// M(N, d): the number of α ∈ ℕ^d with |α| ≤ N, i.e. binomial(N + d, d).
pub fn count(dim: usize, degree: usize) -> Result<usize> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    let top = degree
        .checked_add(dim)
        .ok_or_else(|| Error::Overflow(format!("count({dim}, {degree})")))?;
    binomial(top, dim)
}

/// Number of α ∈ ℕ^d with |α| = n exactly.
fn count_exact(dim: usize, n: usize) -> usize {
    if dim == 0 {
        return usize::from(n == 0);
    }
    binomial(n + dim - 1, dim - 1).expect("degree shell size overflow")
}

/// All α ∈ ℕ^d with |α| ≤ N, in graded-lex order.
pub fn enumerate(dim: usize, degree: usize) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be positive");
    let mut out = Vec::new();
    let mut buf = vec![0usize; dim];
    for n in 0..=degree {
        push_shell(&mut buf, 0, n, &mut out);
    }
    out
}

fn push_shell(buf: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.clone()));
        return;
    }
    for first in 0..=remaining {
        buf[pos] = first;
        push_shell(buf, pos + 1, remaining - first, out);
    }
}

/// Bijection between {α : |α| ≤ N} ⊂ ℕ^d and 0..M(N, d).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedIndexMap {
    dim: usize,
    degree: usize,
    indices: Vec<MultiIndex>,
}

impl GradedIndexMap {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        let size = count(dim, degree)?;
        if size > i32::MAX as usize {
            return Err(Error::Overflow(format!(
                "truncation M({degree}, {dim}) = {size} is too large"
            )));
        }
        let indices = enumerate(dim, degree);
        debug_assert_eq!(indices.len(), size);
        Ok(Self { dim, degree, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn unrank(&self, i: usize) -> Result<&MultiIndex> {
        self.indices
            .get(i)
            .ok_or_else(|| Error::Range(format!("linear index {i} >= size {}", self.indices.len())))
    }

    /// Linear position of `alpha`, computed combinatorially.
    pub fn rank(&self, alpha: &MultiIndex) -> Result<usize> {
        if alpha.dim() != self.dim {
            return Err(Error::Range(format!(
                "multi-index {alpha} has dimension {}, map has {}",
                alpha.dim(),
                self.dim
            )));
        }
        let deg = alpha.degree();
        if deg > self.degree {
            return Err(Error::Range(format!(
                "multi-index {alpha} has degree {deg} > truncation {}",
                self.degree
            )));
        }
        let mut pos = if deg == 0 { 0 } else { count(self.dim, deg - 1)? };
        let comps = alpha.components();
        let mut remaining = deg;
        for (i, &a) in comps.iter().enumerate().take(self.dim - 1) {
            let tail = self.dim - i - 1;
            for y in 0..a {
                pos += count_exact(tail, remaining - y);
            }
            remaining -= a;
        }
        Ok(pos)
    }

    /// Degree of the index at linear position `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.indices[i].degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn enumerate_single_variable() {
        let e = enumerate(1, 5);
        assert_eq!(e.len(), 6);
        for (i, a) in e.iter().enumerate() {
            assert_eq!(a.components(), &[i]);
        }
    }

    #[test]
    fn enumerate_lex_within_degree() {
        let e = enumerate(2, 1);
        assert_eq!(e, vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0])]);
        let e = enumerate(2, 2);
        assert_eq!(&e[3..], &[mi(&[0, 2]), mi(&[1, 1]), mi(&[2, 0])]);
        assert_eq!(enumerate(3, 0), vec![mi(&[0, 0, 0])]);
    }

    #[test]
    fn counts() {
        assert_eq!(count(2, 3).unwrap(), 10);
        assert_eq!(count(1, 7).unwrap(), 8);
        assert_eq!(count(4, 2).unwrap(), 15);
        assert!(count(0, 3).is_err());
    }

    #[test]
    fn count_overflow_is_reported() {
        assert!(matches!(count(64, 1 << 40), Err(Error::Overflow(_))));
        assert!(matches!(count(3, usize::MAX), Err(Error::Overflow(_))));
    }

    #[test]
    fn rank_and_unrank_at_origin() {
        let map = GradedIndexMap::new(3, 4).unwrap();
        assert_eq!(map.rank(&MultiIndex::zero(3)).unwrap(), 0);
        assert_eq!(map.unrank(0).unwrap(), &MultiIndex::zero(3));
    }

    #[test]
    fn round_trip_exhaustive() {
        let map = GradedIndexMap::new(3, 4).unwrap();
        for i in 0..map.len() {
            assert_eq!(map.rank(map.unrank(i).unwrap()).unwrap(), i);
        }
    }

    #[test]
    fn out_of_range() {
        let map = GradedIndexMap::new(2, 3).unwrap();
        assert!(matches!(map.unrank(10), Err(Error::Range(_))));
        assert!(matches!(map.rank(&mi(&[2, 2])), Err(Error::Range(_))));
        assert!(matches!(map.rank(&mi(&[1])), Err(Error::Range(_))));
    }

    #[test]
    fn enumeration_properties_small_grid() {
        for d in 1..=4 {
            for n in 0..=12 {
                let e = enumerate(d, n);
                assert_eq!(e.len(), count(d, n).unwrap());
                let set: std::collections::BTreeSet<_> = e.iter().cloned().collect();
                assert_eq!(set.len(), e.len());
                assert!(e.windows(2).all(|w| w[0].degree() <= w[1].degree()));
                assert!(e.iter().all(|a| a.degree() <= n));
                if n > 0 {
                    let shell = count(d, n).unwrap() - count(d, n - 1).unwrap();
                    assert_eq!(shell, binomial(n + d - 1, d - 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn rank_monotone_along_enumeration() {
        let map = GradedIndexMap::new(4, 6).unwrap();
        let ranks: Vec<usize> = map.iter().map(|a| map.rank(a).unwrap()).collect();
        assert!(ranks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert!((mi(&[3, 2]).ln_factorial() - 12f64.ln()).abs() < 1e-13);
        assert!(ln_factorial(200).is_finite());
    }
}
