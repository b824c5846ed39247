//! Dense eigen-oracle and spectrum utilities.
//!
//! Eigenvalues come from a complex Schur decomposition (Hessenberg + shifted
//! QR under the hood); eigenvectors are recovered by back-substitution on the
//! triangular Schur factor, LAPACK-style, with zero-pivot guards. The oracle
//! is contract-checked, not algorithm-pinned: every returned plain eigenpair
//! satisfies `||Mv - lambda v|| <= 1e-8 ||M||`; pairs that cannot meet the
//! bound are dropped and the basis is flagged defective.

use crate::matrix::{ComplexMatrix, MatrixError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("matrix dimension {0} exceeds the dense-solve limit {1}")]
    TooLarge(usize, usize),
    #[error("Schur iteration failed to converge")]
    NoConvergence,
}

/// Hard cap on the dense solve; this oracle is desk-scale by contract.
pub const MAX_EIGEN_DIM: usize = 2000;

/// Residual bound factor for returned eigenpairs.
pub const EIGENPAIR_RESIDUAL: f64 = 1.0e-8;

/// Eigenvalues with multiplicity, canonically ordered lexicographically by
/// (real, imaginary).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMultiset {
    values: Vec<Complex64>,
}

impl SpectrumMultiset {
    pub fn from_unsorted(mut values: Vec<Complex64>) -> Self {
        values.sort_by(|a, b| {
            a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
        });
        Self { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiset union.
    pub fn union(&self, other: &Self) -> Self {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::from_unsorted(values)
    }
}

impl serde::Serialize for SpectrumMultiset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.values.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn schur(m: &ComplexMatrix) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), EigenError> {
    let n = m.require_square()?;
    if n > MAX_EIGEN_DIM {
        return Err(EigenError::TooLarge(n, MAX_EIGEN_DIM));
    }
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let schur = to_nalgebra(m)
        .try_schur(1.0e-13, 300 * n + 2000)
        .ok_or(EigenError::NoConvergence)?;
    Ok(schur.unpack())
}

/// All n eigenvalues of a square matrix, with multiplicity.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<SpectrumMultiset, EigenError> {
    let (_, t) = schur(m)?;
    let vals = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    Ok(SpectrumMultiset::from_unsorted(vals))
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm eigenvector.
    pub vector: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub pairs: Vec<EigenPair>,
    /// Set when fewer than n independent eigenvectors were found.
    pub defective: bool,
}

/// Plain (non-generalized) eigenpairs. Defective matrices yield fewer than n
/// pairs with the flag set; no Jordan chains are synthesized.
pub fn eigenpairs(m: &ComplexMatrix) -> Result<EigenBasis, EigenError> {
    let (q, t) = schur(m)?;
    let n = t.nrows();
    let t_norm = t.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let smallnum = f64::EPSILON * t_norm.max(1.0e-290);
    let m_norm = m.inf_norm().max(1.0);

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(n);
    for idx in 0..n {
        let lambda = t[(idx, idx)];
        // Solve (T - lambda I) y = 0 with y[idx] = 1 by back-substitution on
        // the leading triangle; zero pivots get the standard tiny replacement.
        let mut y = vec![Complex64::ZERO; n];
        y[idx] = Complex64::ONE;
        for i in (0..idx).rev() {
            let mut s = Complex64::ZERO;
            for j in i + 1..=idx {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smallnum {
                d = Complex64::new(smallnum, 0.0);
            }
            y[i] = -s / d;
            if y[i].norm() > 1.0e120 {
                let scale = 1.0 / y[i].norm();
                for v in y.iter_mut().take(idx + 1) {
                    *v *= scale;
                }
            }
        }
        let mut x = vec![Complex64::ZERO; n];
        for (col, &yc) in y.iter().enumerate().take(idx + 1) {
            if yc == Complex64::ZERO {
                continue;
            }
            for row in 0..n {
                x[row] += q[(row, col)] * yc;
            }
        }
        let norm = vec_norm(&x);
        if norm > 0.0 {
            for v in &mut x {
                *v /= norm;
            }
        }
        pairs.push(EigenPair { value: lambda, vector: x });
    }

    // Drop pairs that miss the residual contract (near-defective directions),
    // then prune linearly dependent vectors inside eigenvalue clusters.
    let mut defective = false;
    pairs.retain(|p| {
        let r = residual(m, p.value, &p.vector);
        let ok = r <= EIGENPAIR_RESIDUAL * m_norm;
        if !ok {
            defective = true;
        }
        ok
    });

    let cluster_tol = 1.0e-8 * m_norm;
    let kept = prune_dependent(pairs, cluster_tol);
    if kept.len() < n {
        defective = true;
    }
    Ok(EigenBasis { pairs: kept, defective })
}

/// Within each eigenvalue cluster, keep a maximal independent set of vectors
/// via modified Gram-Schmidt with a relative threshold.
fn prune_dependent(pairs: Vec<EigenPair>, cluster_tol: f64) -> Vec<EigenPair> {
    let mut kept: Vec<EigenPair> = Vec::with_capacity(pairs.len());
    let mut basis: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for pair in pairs {
        let mut v = pair.vector.clone();
        for (lam, b) in &basis {
            if (*lam - pair.value).norm() > cluster_tol {
                continue;
            }
            let proj: Complex64 =
                b.iter().zip(&v).map(|(bi, vi)| bi.conj() * *vi).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * *bi;
            }
        }
        let rem = vec_norm(&v);
        if rem > 1.0e-6 {
            for x in &mut v {
                *x /= rem;
            }
            basis.push((pair.value, v));
            kept.push(pair);
        }
    }
    kept
}

pub fn residual(m: &ComplexMatrix, lambda: Complex64, x: &[Complex64]) -> f64 {
    let mx = m.apply(x);
    let diff: Vec<Complex64> = mx.iter().zip(x).map(|(a, b)| a - lambda * b).collect();
    vec_norm(&diff)
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Multiset equality within absolute distance `tol`: canonical positional
/// pairing first, greedy nearest-match fallback for clustered values.
pub fn multiset_equal(a: &SpectrumMultiset, b: &SpectrumMultiset, tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.values.iter().zip(&b.values).all(|(x, y)| (x - y).norm() <= tol) {
        return true;
    }
    let mut used = vec![false; b.len()];
    for x in &a.values {
        let mut best: Option<(usize, f64)> = None;
        for (j, y) in b.values.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d <= tol => used[j] = true,
            _ => return false,
        }
    }
    true
}

/// The default comparison tolerance: 1e-8 absolute for entries of modest
/// magnitude, scaled by the infinity norm beyond that.
pub fn default_spectrum_tol(m: &ComplexMatrix) -> f64 {
    1.0e-8 * (m.inf_norm() / 10.0).max(1.0)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64, EigenError> {
    Ok(eigenvalues(m)?.values().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Entrywise nonnegativity and irreducibility (strong connectivity of the
/// digraph on nonzero entries, by Tarjan's algorithm).
pub fn is_irreducible_nonnegative(m: &ComplexMatrix) -> Result<(bool, bool), EigenError> {
    let n = m.require_square()?;
    let nonnegative = m.is_nonnegative(0.0);
    if n == 0 {
        return Ok((nonnegative, false));
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m.get(i, j) != Complex64::ZERO).collect())
        .collect();
    Ok((nonnegative, tarjan_scc_count(&adj) == 1))
}

/// Number of strongly connected components; iterative Tarjan.
fn tarjan_scc_count(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps = 0usize;
    // frames: (vertex, next child position)
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    comps += 1;
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        if w == v {
                            break;
                        }
                    }
                }
            }
        }
    }
    comps
}
