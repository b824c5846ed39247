//! Lifting (generalized) eigenvectors of the divisor matrix and component
//! blocks back to eigenvectors of the full matrix, and the divisor-matrix
//! route to the spectral radius of nonnegative matrices.
//!
//! A block-m eigenvector u of B_m lifts to `0_N (+) u (+) w^m u (+) ... (+)
//! w^{m(k-1)} u`; a divisor eigenvector `w (+) v` lifts to `w (+) v (+) ...
//! (+) v`. Both are images under the decomposition's similarity S of the
//! block-embedded vector, so generalized ranks survive the lift.

use crate::decomp::{unit_roots, BasicDecomposition, DecompError, SequentialDecomposition};
use crate::eigen::{self, EigenError};
use crate::graph::{automorphism_violation, GraphError};
use crate::matrix::ComplexMatrix;
use crate::perm::{PermError, Permutation};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigvecError {
    #[error("block index m={0} out of range 1..={1}")]
    BlockIndexOutOfRange(usize, usize),
    #[error("expected {expected} basis vectors for {what}, got {got}")]
    WrongBasisCount { what: String, expected: usize, got: usize },
    #[error("basis vector for {what} has length {got}, expected {expected}")]
    WrongVectorLength { what: String, expected: usize, got: usize },
    #[error("lifted vectors are rank deficient: smallest/largest singular value ratio {0:.3e}")]
    RankDeficient(f64),
    #[error("matrix entry ({0}, {1}) is negative or non-real; the divisor spectral-radius route requires a nonnegative matrix")]
    NegativeEntry(usize, usize),
    #[error("matrix is not compatible with the automorphism: entry ({0}, {1})")]
    NotAutomorphism(usize, usize),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Where a lifted vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftSource {
    /// i-th basis vector of the divisor matrix (1-based).
    Divisor { position: usize },
    /// l-th basis vector of block m (both 1-based; for sequential
    /// reconstructions m indexes the final block list).
    Block { m: usize, position: usize },
}

/// A (generalized) eigenvector of the full matrix, in original vertex order.
#[derive(Debug, Clone)]
pub struct LiftedVector {
    pub vector: Vec<Complex64>,
    pub eigenvalue: Complex64,
    pub generalized_rank: usize,
    pub source: LiftSource,
}

impl Serialize for LiftedVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Json<'a> {
            eigenvalue: [f64; 2],
            generalized_rank: usize,
            source: &'a LiftSource,
            vector: Vec<[f64; 2]>,
        }
        Json {
            eigenvalue: [self.eigenvalue.re, self.eigenvalue.im],
            generalized_rank: self.generalized_rank,
            source: &self.source,
            vector: self.vector.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl LiftedVector {
    /// The same vector in a reordered coordinate system: entry p of the
    /// result belongs to vertex `ordering[p]`.
    pub fn reordered(&self, ordering: &[usize]) -> Vec<Complex64> {
        ordering.iter().map(|&v| self.vector[v - 1]).collect()
    }
}

/// An input basis vector for one diagonal block, with its eigenvalue and
/// chain rank (1 for plain eigenvectors).
#[derive(Debug, Clone)]
pub struct BasisVector {
    pub vector: Vec<Complex64>,
    pub eigenvalue: Complex64,
    pub generalized_rank: usize,
}

impl BasisVector {
    pub fn plain(vector: Vec<Complex64>, eigenvalue: Complex64) -> Self {
        Self { vector, eigenvalue, generalized_rank: 1 }
    }
}

/// Lift a block-m basis vector: `0_N (+) u (+) w^m u (+) ... (+) w^{m(k-1)} u`.
pub fn lift_block_vector(
    u: &[Complex64],
    m: usize,
    fixed: usize,
    k: usize,
) -> Result<Vec<Complex64>, EigvecError> {
    if m < 1 || m >= k {
        return Err(EigvecError::BlockIndexOutOfRange(m, k - 1));
    }
    let roots = unit_roots(k);
    let mut out = vec![Complex64::ZERO; fixed + k * u.len()];
    for j in 0..k {
        let w = roots[(m * j) % k];
        for (pos, &x) in u.iter().enumerate() {
            out[fixed + j * u.len() + pos] = w * x;
        }
    }
    Ok(out)
}

/// Lift a divisor basis vector `w (+) v` to `w (+) v (+) ... (+) v` (k copies).
pub fn lift_divisor_vector(w: &[Complex64], v: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(w.len() + k * v.len());
    out.extend_from_slice(w);
    for _ in 0..k {
        out.extend_from_slice(v);
    }
    out
}

fn to_original_order(ordered: &[Complex64], ordering: &[usize]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; ordered.len()];
    for (pos, &v) in ordering.iter().enumerate() {
        out[v - 1] = ordered[pos];
    }
    out
}

/// Reconstruct a full (generalized) eigenbasis of the decomposed matrix from
/// eigenbases of the divisor and each block. Output vectors are in original
/// vertex order and are checked for full numerical rank.
pub fn reconstruct_eigenbasis(
    decomp: &BasicDecomposition,
    divisor_basis: &[BasisVector],
    block_bases: &[Vec<BasisVector>],
) -> Result<Vec<LiftedVector>, EigvecError> {
    let (nf, r, k) = (decomp.fixed_count, decomp.r, decomp.k);
    if divisor_basis.len() != nf + r {
        return Err(EigvecError::WrongBasisCount {
            what: "the divisor".into(),
            expected: nf + r,
            got: divisor_basis.len(),
        });
    }
    if block_bases.len() != k - 1 {
        return Err(EigvecError::WrongBasisCount {
            what: "the block list".into(),
            expected: k - 1,
            got: block_bases.len(),
        });
    }
    let ordering = decomp.plan.ordering();
    let mut out = Vec::with_capacity(nf + k * r);
    for (i, bv) in divisor_basis.iter().enumerate() {
        if bv.vector.len() != nf + r {
            return Err(EigvecError::WrongVectorLength {
                what: format!("divisor vector {}", i + 1),
                expected: nf + r,
                got: bv.vector.len(),
            });
        }
        let lifted = lift_divisor_vector(&bv.vector[..nf], &bv.vector[nf..], k);
        out.push(LiftedVector {
            vector: to_original_order(&lifted, &ordering),
            eigenvalue: bv.eigenvalue,
            generalized_rank: bv.generalized_rank,
            source: LiftSource::Divisor { position: i + 1 },
        });
    }
    for (bm, basis) in block_bases.iter().enumerate() {
        let m = bm + 1;
        if basis.len() != r {
            return Err(EigvecError::WrongBasisCount {
                what: format!("block {m}"),
                expected: r,
                got: basis.len(),
            });
        }
        for (l, bv) in basis.iter().enumerate() {
            if bv.vector.len() != r {
                return Err(EigvecError::WrongVectorLength {
                    what: format!("block {m} vector {}", l + 1),
                    expected: r,
                    got: bv.vector.len(),
                });
            }
            let lifted = lift_block_vector(&bv.vector, m, nf, k)?;
            out.push(LiftedVector {
                vector: to_original_order(&lifted, &ordering),
                eigenvalue: bv.eigenvalue,
                generalized_rank: bv.generalized_rank,
                source: LiftSource::Block { m, position: l + 1 },
            });
        }
    }
    check_full_rank(&out)?;
    Ok(out)
}

/// Reconstruct an eigenbasis of the original matrix from eigenbases of a
/// sequential decomposition's final blocks, unwinding the rounds innermost
/// to outermost (each round's similarity applied once).
pub fn reconstruct_sequential(
    decomp: &SequentialDecomposition,
    divisor_basis: &[BasisVector],
    block_bases: &[Vec<BasisVector>],
) -> Result<Vec<LiftedVector>, EigvecError> {
    let n = decomp.final_matrix().rows();
    let dim = decomp.divisor.rows();
    if divisor_basis.len() != dim {
        return Err(EigvecError::WrongBasisCount {
            what: "the final divisor".into(),
            expected: dim,
            got: divisor_basis.len(),
        });
    }
    if block_bases.len() != decomp.blocks.len() {
        return Err(EigvecError::WrongBasisCount {
            what: "the final block list".into(),
            expected: decomp.blocks.len(),
            got: block_bases.len(),
        });
    }

    // Embed each block vector into label space as a vector of the final
    // (block-diagonal) matrix.
    let mut vectors: Vec<LiftedVector> = Vec::with_capacity(n);
    let mut embed = |labels: &[usize],
                     basis: &[BasisVector],
                     source_of: &dyn Fn(usize) -> LiftSource,
                     what: &str|
     -> Result<(), EigvecError> {
        if basis.len() != labels.len() {
            return Err(EigvecError::WrongBasisCount {
                what: what.into(),
                expected: labels.len(),
                got: basis.len(),
            });
        }
        for (i, bv) in basis.iter().enumerate() {
            if bv.vector.len() != labels.len() {
                return Err(EigvecError::WrongVectorLength {
                    what: format!("{what} vector {}", i + 1),
                    expected: labels.len(),
                    got: bv.vector.len(),
                });
            }
            let mut full = vec![Complex64::ZERO; n];
            for (pos, &label) in labels.iter().enumerate() {
                full[label - 1] = bv.vector[pos];
            }
            vectors.push(LiftedVector {
                vector: full,
                eigenvalue: bv.eigenvalue,
                generalized_rank: bv.generalized_rank,
                source: source_of(i + 1),
            });
        }
        Ok(())
    };
    embed(
        &decomp.divisor_labels,
        divisor_basis,
        &|pos| LiftSource::Divisor { position: pos },
        "final divisor",
    )?;
    for (b, block) in decomp.blocks.iter().enumerate() {
        embed(
            &block.labels,
            &block_bases[b],
            &|pos| LiftSource::Block { m: b + 1, position: pos },
            &format!("final block {}", b + 1),
        )?;
    }

    for lv in &mut vectors {
        lift_through_stages(decomp, &mut lv.vector);
    }
    check_full_rank(&vectors)?;
    Ok(vectors)
}

/// Lift one vector of the fully decomposed matrix (in original label
/// coordinates, zeros off its block) back through every round: an
/// eigenvector x of a round's output maps to S x of that round's input.
pub fn lift_through_stages(decomp: &SequentialDecomposition, vector: &mut [Complex64]) {
    for stage in decomp.stages.iter().rev() {
        let ordering = stage.plan.ordering();
        let nf = stage.plan.fixed.len();
        let r = stage.plan.r();
        let k = stage.plan.k();
        let roots = unit_roots(k);
        let x: Vec<Complex64> = ordering.iter().map(|&v| vector[v - 1]).collect();
        let mut y = vec![Complex64::ZERO; x.len()];
        y[..nf].copy_from_slice(&x[..nf]);
        for bi in 0..k {
            for bj in 0..k {
                let w = roots[(bi * bj) % k];
                for pos in 0..r {
                    y[nf + bi * r + pos] += w * x[nf + bj * r + pos];
                }
            }
        }
        for (pos, &v) in ordering.iter().enumerate() {
            vector[v - 1] = y[pos];
        }
    }
}

/// Smallest/largest singular-value ratio of the column matrix of vectors,
/// via the Gram matrix.
fn check_full_rank(vectors: &[LiftedVector]) -> Result<(), EigvecError> {
    let n = match vectors.first() {
        Some(v) => v.vector.len(),
        None => return Ok(()),
    };
    debug_assert!(vectors.iter().all(|v| v.vector.len() == n));
    let dim = vectors.len();
    let gram = ComplexMatrix::from_fn(dim, dim, |i, j| {
        vectors[i].vector.iter().zip(&vectors[j].vector).map(|(a, b)| a.conj() * *b).sum()
    });
    let eigs = eigen::eigenvalues(&gram)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in eigs.values() {
        let v = z.re.max(0.0); // Gram matrix is Hermitian PSD; dust may stray
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let ratio = if hi == 0.0 { 0.0 } else { (lo / hi).sqrt() };
    if ratio <= 1.0e-8 {
        return Err(EigvecError::RankDeficient(ratio));
    }
    Ok(())
}

/// Spectral-radius computation through the divisor matrix of the
/// automorphism's orbit partition.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusReport {
    pub rho: f64,
    /// Some eigenvalue of the divisor matches rho within 1e-8 (guaranteed
    /// when the matrix is irreducible).
    pub is_divisor_eigenvalue: bool,
    pub irreducible: bool,
    pub divisor_dim: usize,
}

/// rho(M) computed from the (smaller) divisor matrix of a nonnegative M over
/// a basic or separable automorphism.
pub fn divisor_spectral_radius(
    m: &ComplexMatrix,
    phi: &Permutation,
) -> Result<RadiusReport, EigvecError> {
    let n = m.require_square().map_err(GraphError::from)?;
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            if z.im != 0.0 || z.re < 0.0 {
                return Err(EigvecError::NegativeEntry(i + 1, j + 1));
            }
        }
    }
    if let Some((i, j)) = automorphism_violation(m, phi)? {
        return Err(EigvecError::NotAutomorphism(i, j));
    }
    let class = phi.classify()?;
    if class.as_basic().is_none() && !class.is_separable() {
        return Err(DecompError::NotSeparable { order: class.order }.into());
    }
    let divisor = crate::decomp::equitable_divisor(m, &phi.orbits().orbits)?;
    let spectrum = eigen::eigenvalues(&divisor)?;
    let rho = spectrum.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = eigen::default_spectrum_tol(&divisor);
    let is_eig = spectrum
        .values()
        .iter()
        .any(|z| (z - Complex64::new(rho, 0.0)).norm() <= tol);
    let (_, irreducible) = eigen::is_irreducible_nonnegative(m)?;
    Ok(RadiusReport {
        rho,
        is_divisor_eigenvalue: is_eig,
        irreducible,
        divisor_dim: divisor.rows(),
    })
}
