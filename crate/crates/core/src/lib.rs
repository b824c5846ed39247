//! Equitable decomposition of automorphism-compatible graph matrices.
//!
//! A graph symmetry — an automorphism `phi` with `M[phi(i), phi(j)] = M[i, j]`
//! for an associated matrix M — lets M be block-diagonalized by an explicitly
//! constructed similarity into a divisor matrix and component blocks whose
//! collective spectrum equals `sigma(M)`. This crate implements:
//!
//! - permutation algebra and the basic / separable classification ([`perm`]);
//! - graph representation and the automorphism-compatible matrix
//!   constructors: adjacency, Laplacians, distance, weighted ([`graph`]);
//! - the decomposition engine: semi-transversals, component blocks, divisor
//!   matrices, DFT similarities, and the sequential prime-by-prime loop for
//!   separable automorphisms ([`decomp`]);
//! - eigenvector lifting from block eigenbases back to the full matrix and
//!   the divisor route to the spectral radius ([`eigvec`]);
//! - Gershgorin regions, containment, and union areas ([`gershgorin`]);
//! - folded quotient graphs realizing the decomposition graphically,
//!   with DOT export ([`fold`]);
//! - a dense complex eigen-oracle for verification ([`eigen`]);
//! - seeded planted-symmetry instance generators ([`plant`]).

pub mod decomp;
pub mod eigen;
pub mod eigvec;
pub mod fixtures;
pub mod fold;
pub mod gershgorin;
pub mod graph;
pub mod matrix;
pub mod perm;
pub mod plant;

pub use decomp::{
    build_similarity, choose_semi_transversal, component_blocks, decompose_basic,
    decompose_separable, divisor_matrix, equitable_divisor, induced_automorphism,
    BasicDecomposition, DecompError, FinalBlock, SemiTransversalPlan, SequentialDecomposition,
};
pub use eigen::{
    default_spectrum_tol, eigenpairs, eigenvalues, is_irreducible_nonnegative, multiset_equal,
    spectral_radius, EigenBasis, EigenError, EigenPair, SpectrumMultiset,
};
pub use eigvec::{
    divisor_spectral_radius, lift_block_vector, lift_divisor_vector, lift_through_stages,
    reconstruct_eigenbasis, reconstruct_sequential, BasisVector, EigvecError, LiftSource,
    LiftedVector, RadiusReport,
};
pub use fold::{export_dot, fold, fold_family, FoldError, FoldedGraph};
pub use gershgorin::{disk_contained, region, region_contained, union_area, Disk, GershRegion, RegionMode};
pub use graph::{
    build_block_circulant, build_matrix, is_automorphism, Edge, GraphError, MatrixKind,
    WeightedGraph,
};
pub use matrix::{ComplexMatrix, MatrixError};
pub use perm::{AutoClass, OrbitPartition, OrbitShape, PermError, Permutation, PrimeOrder};

pub use num_complex::Complex64;
