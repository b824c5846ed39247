//! A small worked-example fixture shared by tests, docs, and the CLI data:
//! a 10-vertex graph whose three degree-5 hubs (2, 5, 8) form a triangle,
//! each carrying two pendant vertices, with vertex 1 joined to every hub.
//! Its automorphism (2,5,8)(3,6,9,4,7,10) has order 6 and mixed orbit sizes,
//! so it exercises the full sequential decomposition path.

use crate::graph::{build_matrix, MatrixKind, WeightedGraph};
use crate::matrix::ComplexMatrix;
use crate::perm::Permutation;

pub fn hub10_graph() -> WeightedGraph {
    WeightedGraph::simple(
        10,
        &[
            (1, 2),
            (1, 5),
            (1, 8),
            (2, 3),
            (2, 4),
            (2, 5),
            (2, 8),
            (5, 6),
            (5, 7),
            (5, 8),
            (8, 9),
            (8, 10),
        ],
    )
    .expect("static fixture is valid")
}

pub fn hub10_adjacency() -> ComplexMatrix {
    build_matrix(&hub10_graph(), MatrixKind::Adjacency).expect("static fixture is valid")
}

/// The order-6 separable automorphism of the hub graph.
pub fn hub10_automorphism() -> Permutation {
    Permutation::parse_cycles("(2,5,8)(3,6,9,4,7,10)", 10).expect("static fixture is valid")
}
