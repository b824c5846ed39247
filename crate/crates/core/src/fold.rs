//! Folded quotient graphs: the graphs G_phi(m) whose weighted adjacencies
//! are the divisor matrix (m = 0) and the component blocks (m >= 1) of the
//! decomposition over a basic automorphism.
//!
//! Edge weights follow `nu_m(psi^m(i), psi^m(j)) = sum_l w^{lm} w(i, psi^l(j))`
//! for j in the semi-transversal, and `w(i, j)` for j fixed; fixed vertices
//! participate only in the m = 0 member.

use crate::decomp::{unit_roots, DecompError, SemiTransversalPlan};
use crate::graph::{automorphism_violation, build_matrix, GraphError, MatrixKind, WeightedGraph};
use crate::matrix::ComplexMatrix;
use crate::perm::Permutation;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("power index m={0} out of range 0..={1}")]
    PowerOutOfRange(usize, usize),
    #[error("the permutation is not an automorphism of the graph: entry ({0}, {1})")]
    NotAutomorphism(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
}

/// Weights with modulus below this produce no folded edge.
const EDGE_CUTOFF: f64 = 1.0e-12;

/// One member of the folded-graph family. Vertices keep their original
/// labels: `U ++ T_0` for m = 0, `T_m` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedGraph {
    pub m: usize,
    pub vertices: Vec<usize>,
    /// Aligned with `vertices`; true for members of the fixed set U.
    pub fixed: Vec<bool>,
    /// Directed weighted edges between vertex labels.
    pub edges: Vec<(usize, usize, Complex64)>,
}

impl FoldedGraph {
    /// Dense weighted adjacency over `vertices` order (dropped near-zero
    /// edges stay zero).
    pub fn weighted_adjacency(&self) -> ComplexMatrix {
        let pos: std::collections::HashMap<usize, usize> =
            self.vertices.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let mut m = ComplexMatrix::zeros(self.vertices.len(), self.vertices.len());
        for &(i, j, w) in &self.edges {
            m.set(pos[&i], pos[&j], w);
        }
        m
    }
}

/// Fold the graph over the basic automorphism `psi` at power index m.
pub fn fold(
    g: &WeightedGraph,
    psi: &Permutation,
    plan: &SemiTransversalPlan,
    m: usize,
) -> Result<FoldedGraph, FoldError> {
    let k = plan.k();
    if m >= k {
        return Err(FoldError::PowerOutOfRange(m, k - 1));
    }
    let w = build_matrix(g, MatrixKind::WeightedAdjacency)?;
    if plan.implied_automorphism() != *psi || psi.n() != g.n {
        return Err(DecompError::PlanMismatch.into());
    }
    if let Some((i, j)) = automorphism_violation(&w, psi)? {
        return Err(FoldError::NotAutomorphism(i, j));
    }

    let roots = unit_roots(k);
    let t0 = &plan.transversals[0];
    let tm = &plan.transversals[m];
    let r = plan.r();

    // sources: T_0 representatives (labelled psi^m of themselves) and, for
    // m = 0 only, the fixed set
    let mut vertices: Vec<usize> = Vec::new();
    let mut fixed: Vec<bool> = Vec::new();
    if m == 0 {
        vertices.extend_from_slice(&plan.fixed);
        fixed.extend(std::iter::repeat(true).take(plan.fixed.len()));
    }
    vertices.extend_from_slice(tm);
    fixed.extend(std::iter::repeat(false).take(r));

    // weight from source (pre-image i) into column j of T_0:
    // sum_l w^{lm} W[i, T_l[j]]
    let folded_to_t = |i_label: usize, j_pos: usize| -> Complex64 {
        (0..k)
            .map(|l| roots[(l * m) % k] * w.get(i_label - 1, plan.transversals[l][j_pos] - 1))
            .sum()
    };

    let mut edges: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut push = |i: usize, j: usize, weight: Complex64| {
        if weight.norm() >= EDGE_CUTOFF {
            edges.push((i, j, weight));
        }
    };
    if m == 0 {
        for &ua in &plan.fixed {
            for &ub in &plan.fixed {
                push(ua, ub, w.get(ua - 1, ub - 1));
            }
            for j_pos in 0..r {
                push(ua, t0[j_pos], folded_to_t(ua, j_pos));
            }
        }
        for &ta in t0 {
            for &ub in &plan.fixed {
                push(ta, ub, w.get(ta - 1, ub - 1));
            }
            for j_pos in 0..r {
                push(ta, t0[j_pos], folded_to_t(ta, j_pos));
            }
        }
    } else {
        for a_pos in 0..r {
            for j_pos in 0..r {
                push(tm[a_pos], tm[j_pos], folded_to_t(t0[a_pos], j_pos));
            }
        }
    }

    Ok(FoldedGraph { m, vertices, fixed, edges })
}

/// The k folded graphs G_phi(0), ..., G_phi(k-1); their weighted adjacencies
/// are the divisor matrix and B_1..B_{k-1}.
pub fn fold_family(
    g: &WeightedGraph,
    psi: &Permutation,
    plan: &SemiTransversalPlan,
) -> Result<Vec<FoldedGraph>, FoldError> {
    (0..plan.k()).map(|m| fold(g, psi, plan, m)).collect()
}

/// Render a complex weight for edge labels: integers bare, reals shortest,
/// complex as `a+bi`. Values within 1e-9 of an integer are snapped for
/// display only; stored weights are never altered.
pub fn format_weight(z: Complex64) -> String {
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() <= 1.0e-9 { r } else { x }
    };
    let z = Complex64::new(snap(z.re), snap(z.im));
    let fmt_real = |x: f64| -> String {
        if x.fract() == 0.0 && x.abs() < 1.0e15 {
            format!("{}", x as i64)
        } else {
            format!("{x}")
        }
    };
    if z.im == 0.0 {
        fmt_real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", fmt_real(z.im))
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_real(z.re), fmt_real(-z.im))
    } else {
        format!("{}+{}i", fmt_real(z.re), fmt_real(z.im))
    }
}

/// DOT digraph text. Fixed vertices get a distinct (open-circle) shape.
pub fn export_dot(f: &FoldedGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph G{} {{\n", f.m));
    for (pos, &v) in f.vertices.iter().enumerate() {
        if f.fixed[pos] {
            out.push_str(&format!("  {v} [shape=circle];\n"));
        } else {
            out.push_str(&format!("  {v};\n"));
        }
    }
    for &(i, j, w) in &f.edges {
        out.push_str(&format!("  {i} -> {j} [label=\"{}\"];\n", format_weight(w)));
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize, Deserialize)]
struct FoldedJson {
    m: usize,
    vertices: Vec<usize>,
    fixed: Vec<usize>,
    edges: Vec<(usize, usize, f64, f64)>,
}

impl Serialize for FoldedGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FoldedJson {
            m: self.m,
            vertices: self.vertices.clone(),
            fixed: self
                .vertices
                .iter()
                .zip(&self.fixed)
                .filter(|&(_, &f)| f)
                .map(|(&v, _)| v)
                .collect(),
            edges: self.edges.iter().map(|&(i, j, w)| (i, j, w.re, w.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FoldedGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = FoldedJson::deserialize(d)?;
        for f in &raw.fixed {
            if !raw.vertices.contains(f) {
                return Err(D::Error::custom(format!("fixed vertex {f} not in vertex list")));
            }
        }
        let fixed = raw.vertices.iter().map(|v| raw.fixed.contains(v)).collect();
        Ok(FoldedGraph {
            m: raw.m,
            vertices: raw.vertices,
            fixed,
            edges: raw
                .edges
                .into_iter()
                .map(|(i, j, re, im)| (i, j, Complex64::new(re, im)))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{choose_semi_transversal, decompose_basic};
    use crate::fixtures::{hub10_automorphism, hub10_graph};

    fn round1() -> (WeightedGraph, Permutation, SemiTransversalPlan) {
        let g = hub10_graph();
        let phi = hub10_automorphism();
        let psi = phi.power(2);
        let plan = choose_semi_transversal(&psi, Some(&phi)).unwrap();
        (g, psi, plan)
    }

    #[test]
    fn fold_zero_matches_divisor() {
        let (g, psi, plan) = round1();
        let f0 = fold(&g, &psi, &plan, 0).unwrap();
        assert_eq!(f0.vertices, vec![1, 2, 3, 4]);
        assert_eq!(f0.fixed, vec![true, false, false, false]);
        let loop2 = f0.edges.iter().find(|&&(i, j, _)| i == 2 && j == 2).unwrap();
        assert!((loop2.2 - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        let hub_edge = f0.edges.iter().find(|&&(i, j, _)| i == 1 && j == 2).unwrap();
        assert!((hub_edge.2 - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn fold_one_loop_weight() {
        let (g, psi, plan) = round1();
        let f1 = fold(&g, &psi, &plan, 1).unwrap();
        assert_eq!(f1.vertices, vec![8, 9, 10]);
        let loop8 = f1.edges.iter().find(|&&(i, j, _)| i == 8 && j == 8).unwrap();
        assert!((loop8.2 - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
        assert!(f1.edges.iter().any(|&(i, j, _)| i == 8 && j == 9));
        assert!(f1.edges.iter().any(|&(i, j, _)| i == 8 && j == 10));
    }

    #[test]
    fn k2_single_vertex_loop() {
        let g = WeightedGraph::simple(2, &[(1, 2)]).unwrap();
        let psi = Permutation::parse_cycles("(1,2)", 2).unwrap();
        let plan = choose_semi_transversal(&psi, None).unwrap();
        let f1 = fold(&g, &psi, &plan, 1).unwrap();
        assert_eq!(f1.vertices, vec![2]);
        assert_eq!(f1.edges.len(), 1);
        assert!((f1.edges[0].2 - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let family = fold_family(&g, &psi, &plan).unwrap();
        assert_eq!(family.len(), 2);
        let w0 = family[0].weighted_adjacency();
        assert!((w0.get(0, 0) - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn family_matches_decomposition_blocks() {
        let (g, psi, plan) = round1();
        let a = build_matrix(&g, MatrixKind::WeightedAdjacency).unwrap();
        let basic = decompose_basic(&a, &psi, &plan).unwrap();
        let family = fold_family(&g, &psi, &plan).unwrap();
        assert!(family[0].weighted_adjacency().approx_eq(&basic.divisor, 1e-10));
        for m in 1..plan.k() {
            assert!(family[m].weighted_adjacency().approx_eq(&basic.blocks[m - 1], 1e-10));
        }
    }

    #[test]
    fn dot_output() {
        let f = FoldedGraph {
            m: 1,
            vertices: vec![1],
            fixed: vec![false],
            edges: vec![(1, 1, Complex64::new(-1.0, 0.0))],
        };
        let dot = export_dot(&f);
        assert!(dot.contains("1 -> 1 [label=\"-1\"]"), "{dot}");

        let empty = FoldedGraph { m: 0, vertices: vec![], fixed: vec![], edges: vec![] };
        let dot = export_dot(&empty);
        assert_eq!(dot, "digraph G0 {\n}\n");

        let (g, psi, plan) = round1();
        let f0 = fold(&g, &psi, &plan, 0).unwrap();
        let dot = export_dot(&f0);
        assert!(dot.contains("1 -> 2 [label=\"3\"]"), "{dot}");
        assert!(dot.contains("1 [shape=circle]"), "{dot}");
    }

    #[test]
    fn weight_formatting() {
        assert_eq!(format_weight(Complex64::new(-1.0, 0.0)), "-1");
        assert_eq!(format_weight(Complex64::new(0.5, 0.0)), "0.5");
        assert_eq!(format_weight(Complex64::new(0.0, 2.0)), "2i");
        assert_eq!(format_weight(Complex64::new(1.5, -0.5)), "1.5-0.5i");
    }

    #[test]
    fn json_round_trip() {
        let (g, psi, plan) = round1();
        let f0 = fold(&g, &psi, &plan, 0).unwrap();
        let text = serde_json::to_string(&f0).unwrap();
        let back: FoldedGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(f0, back);
    }
}
