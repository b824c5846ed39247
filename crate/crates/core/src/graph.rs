//! Weighted/unweighted graphs, automorphism-compatible matrix constructors,
//! automorphism verification, and block-circulant assembly.

use crate::matrix::{ComplexMatrix, MatrixError};
use crate::perm::Permutation;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {0} out of range 1..={1}")]
    VertexOutOfRange(usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("non-finite weight on edge ({0}, {1})")]
    NonFiniteWeight(usize, usize),
    #[error("{kind} requires a simple graph: {reason}")]
    NotSimple { kind: &'static str, reason: String },
    #[error("distance matrix requires a connected graph; vertex {0} unreachable from vertex 1")]
    Disconnected(usize),
    #[error("matrix is {mrows}x{mcols} but the permutation acts on {n} points")]
    SizeMismatch { mrows: usize, mcols: usize, n: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("edge list line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },
    #[error("block-circulant shape error: {0}")]
    BlockShape(String),
}

/// A finite weighted graph; unweighted graphs carry unit weights. Undirected
/// graphs store each edge once and are symmetrized on matrix construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: Complex64,
}

/// The automorphism-compatible matrix families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
    SignlessLaplacian,
    NormalizedLaplacian,
    Distance,
    WeightedAdjacency,
}

impl WeightedGraph {
    pub fn new(n: usize, directed: bool, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        for e in &edges {
            for v in [e.i, e.j] {
                if v < 1 || v > n {
                    return Err(GraphError::VertexOutOfRange(v, n));
                }
            }
            if !e.w.re.is_finite() || !e.w.im.is_finite() {
                return Err(GraphError::NonFiniteWeight(e.i, e.j));
            }
            let key = if directed || e.i <= e.j { (e.i, e.j) } else { (e.j, e.i) };
            if seen.insert(key, ()).is_some() {
                return Err(GraphError::DuplicateEdge(e.i, e.j));
            }
        }
        Ok(Self { n, directed, edges })
    }

    /// Simple undirected graph with unit weights.
    pub fn simple(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let edges = pairs
            .iter()
            .map(|&(i, j)| Edge { i, j, w: Complex64::ONE })
            .collect();
        Self::new(n, false, edges)
    }

    /// Undirected simple in the spectral-graph sense: no loops, unit weights.
    pub fn is_simple(&self) -> Option<String> {
        if self.directed {
            return Some("graph is directed".into());
        }
        for e in &self.edges {
            if e.i == e.j {
                return Some(format!("loop at vertex {}", e.i));
            }
            if e.w != Complex64::ONE {
                return Some(format!("non-unit weight on edge ({}, {})", e.i, e.j));
            }
        }
        None
    }

    /// Parse plain edge-list text: one `i j [w]` per line, `#` comments. A
    /// leading line holding a single integer fixes the vertex count;
    /// otherwise it is the largest vertex mentioned.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut raw: Vec<(usize, usize, f64, usize)> = Vec::new();
        let mut first_data = true;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_field = |s: &str, what: &str| -> Result<usize, GraphError> {
                s.parse().map_err(|_| GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("bad {what} {s:?}"),
                })
            };
            if first_data && fields.len() == 1 {
                n = Some(parse_field(fields[0], "vertex count")?);
                first_data = false;
                continue;
            }
            first_data = false;
            if fields.len() < 2 || fields.len() > 3 {
                return Err(GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("expected `i j [w]`, got {} fields", fields.len()),
                });
            }
            let i = parse_field(fields[0], "vertex")?;
            let j = parse_field(fields[1], "vertex")?;
            let w = if fields.len() == 3 {
                fields[2].parse().map_err(|_| GraphError::EdgeListParse {
                    line: lineno + 1,
                    reason: format!("bad weight {:?}", fields[2]),
                })?
            } else {
                1.0
            };
            raw.push((i, j, w, lineno + 1));
        }
        let n = n.unwrap_or_else(|| raw.iter().map(|&(i, j, _, _)| i.max(j)).max().unwrap_or(0));
        let edges = raw
            .into_iter()
            .map(|(i, j, w, _)| Edge { i, j, w: Complex64::new(w, 0.0) })
            .collect();
        Self::new(n, false, edges)
    }

    fn degrees(&self) -> Vec<f64> {
        let adj = weighted_adjacency(self);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| adj.get(i, j).re).sum())
            .collect()
    }
}

fn weighted_adjacency(g: &WeightedGraph) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        m.set(e.i - 1, e.j - 1, e.w);
        if !g.directed {
            m.set(e.j - 1, e.i - 1, e.w);
        }
    }
    m
}

/// Build the requested matrix for the graph.
pub fn build_matrix(g: &WeightedGraph, kind: MatrixKind) -> Result<ComplexMatrix, GraphError> {
    let simple_or = |kind_name: &'static str| -> Result<(), GraphError> {
        match g.is_simple() {
            None => Ok(()),
            Some(reason) => Err(GraphError::NotSimple { kind: kind_name, reason }),
        }
    };
    match kind {
        MatrixKind::WeightedAdjacency => Ok(weighted_adjacency(g)),
        MatrixKind::Adjacency => {
            let w = weighted_adjacency(g);
            Ok(ComplexMatrix::from_fn(g.n, g.n, |i, j| {
                if w.get(i, j) != Complex64::ZERO { Complex64::ONE } else { Complex64::ZERO }
            }))
        }
        MatrixKind::Laplacian | MatrixKind::SignlessLaplacian => {
            simple_or(match kind {
                MatrixKind::Laplacian => "laplacian",
                _ => "signless_laplacian",
            })?;
            let a = weighted_adjacency(g);
            let deg = g.degrees();
            let sign = if kind == MatrixKind::Laplacian { -1.0 } else { 1.0 };
            Ok(ComplexMatrix::from_fn(g.n, g.n, |i, j| {
                if i == j {
                    Complex64::new(deg[i], 0.0)
                } else {
                    a.get(i, j) * sign
                }
            }))
        }
        MatrixKind::NormalizedLaplacian => {
            simple_or("normalized_laplacian")?;
            let a = weighted_adjacency(g);
            let deg = g.degrees();
            // isolated vertices get diagonal 0: D^{-1/2} is treated as 0 there
            let dinv: Vec<f64> =
                deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
            Ok(ComplexMatrix::from_fn(g.n, g.n, |i, j| {
                if i == j {
                    if deg[i] > 0.0 { Complex64::ONE } else { Complex64::ZERO }
                } else {
                    -a.get(i, j) * (dinv[i] * dinv[j])
                }
            }))
        }
        MatrixKind::Distance => {
            simple_or("distance")?;
            let adj: Vec<Vec<usize>> = {
                let a = weighted_adjacency(g);
                (0..g.n)
                    .map(|i| (0..g.n).filter(|&j| a.get(i, j) != Complex64::ZERO).collect())
                    .collect()
            };
            let mut dist = ComplexMatrix::zeros(g.n, g.n);
            for src in 0..g.n {
                let mut d = vec![usize::MAX; g.n];
                d[src] = 0;
                let mut queue = VecDeque::from([src]);
                while let Some(u) = queue.pop_front() {
                    for &v in &adj[u] {
                        if d[v] == usize::MAX {
                            d[v] = d[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
                for (v, &dv) in d.iter().enumerate() {
                    if dv == usize::MAX {
                        return Err(GraphError::Disconnected(v + 1));
                    }
                    dist.set(src, v, Complex64::new(dv as f64, 0.0));
                }
            }
            Ok(dist)
        }
    }
}

/// Tolerance used when comparing matrix entries under an automorphism;
/// exact-integer inputs compare exactly.
fn compat_tol(m: &ComplexMatrix) -> f64 {
    1.0e-12 * m.max_norm().max(1.0)
}

/// First index pair (1-based) violating `M[phi(i), phi(j)] = M[i, j]`, if any.
pub fn automorphism_violation(
    m: &ComplexMatrix,
    phi: &Permutation,
) -> Result<Option<(usize, usize)>, GraphError> {
    let n = m.require_square()?;
    if n != phi.n() {
        return Err(GraphError::SizeMismatch { mrows: m.rows(), mcols: m.cols(), n: phi.n() });
    }
    let tol = compat_tol(m);
    for i in 1..=n {
        for j in 1..=n {
            let a = m.get(i - 1, j - 1);
            let b = m.get(phi.apply(i) - 1, phi.apply(j) - 1);
            if (a - b).norm() > tol {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Whether `phi` is an automorphism of the matrix `M` (Definition of
/// automorphism compatibility applied entrywise).
pub fn is_automorphism(m: &ComplexMatrix, phi: &Permutation) -> Result<bool, GraphError> {
    Ok(automorphism_violation(m, phi)?.is_none())
}

/// Assemble the block-circulant matrix
/// `[[F, H, ..., H], [L, M_0, M_1, ...], [L, M_{k-1}, M_0, ...], ...]`
/// (row `l` of the circulant part holds `M_{(m-l) mod k}` in block column
/// `m`) together with its canonical basic automorphism: orbit size k, the
/// first N indices fixed, vertex `N + l*r + i` mapping to the next block.
pub fn build_block_circulant(
    f: &ComplexMatrix,
    h: &ComplexMatrix,
    l: &ComplexMatrix,
    blocks: &[ComplexMatrix],
) -> Result<(ComplexMatrix, Permutation), GraphError> {
    let k = blocks.len();
    if k < 2 {
        return Err(GraphError::BlockShape(format!("need k >= 2 circulant blocks, got {k}")));
    }
    let n_fixed = f.rows();
    let r = blocks[0].rows();
    if r == 0 {
        return Err(GraphError::BlockShape("circulant blocks must be nonempty".into()));
    }
    if f.cols() != n_fixed {
        return Err(GraphError::BlockShape(format!("F must be square, got {}x{}", f.rows(), f.cols())));
    }
    if h.rows() != n_fixed || h.cols() != r {
        return Err(GraphError::BlockShape(format!(
            "H must be {n_fixed}x{r}, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if l.rows() != r || l.cols() != n_fixed {
        return Err(GraphError::BlockShape(format!(
            "L must be {r}x{n_fixed}, got {}x{}",
            l.rows(),
            l.cols()
        )));
    }
    for (m, b) in blocks.iter().enumerate() {
        if b.rows() != r || b.cols() != r {
            return Err(GraphError::BlockShape(format!(
                "block {m} must be {r}x{r}, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
    }
    let n = n_fixed + k * r;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n_fixed {
        for j in 0..n_fixed {
            out.set(i, j, f.get(i, j));
        }
        for blk in 0..k {
            for j in 0..r {
                out.set(i, n_fixed + blk * r + j, h.get(i, j));
            }
        }
    }
    for blk in 0..k {
        for i in 0..r {
            for j in 0..n_fixed {
                out.set(n_fixed + blk * r + i, j, l.get(i, j));
            }
        }
        for col_blk in 0..k {
            let which = (col_blk + k - blk) % k;
            for i in 0..r {
                for j in 0..r {
                    out.set(n_fixed + blk * r + i, n_fixed + col_blk * r + j, blocks[which].get(i, j));
                }
            }
        }
    }
    let mut cycles = Vec::with_capacity(r);
    for i in 1..=r {
        cycles.push((0..k).map(|blk| n_fixed + blk * r + i).collect());
    }
    let phi = Permutation::from_cycles(n, &cycles).expect("canonical circulant automorphism");
    Ok((out, phi))
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    directed: bool,
    edges: Vec<EdgeJson>,
}

/// Edge rows are `[i, j]`, `[i, j, w_re]`, or `[i, j, w_re, w_im]`.
struct EdgeJson(Edge);

impl Serialize for EdgeJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let e = &self.0;
        (e.i as f64, e.j as f64, e.w.re, e.w.im).serialize(s)
    }
}

impl<'de> Deserialize<'de> for EdgeJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<f64> = Vec::deserialize(d)?;
        if raw.len() < 2 || raw.len() > 4 {
            return Err(D::Error::custom(format!(
                "edge must have 2..=4 entries, got {}",
                raw.len()
            )));
        }
        let as_vertex = |x: f64| -> Result<usize, D::Error> {
            if x.fract() == 0.0 && x >= 0.0 && x <= usize::MAX as f64 {
                Ok(x as usize)
            } else {
                Err(D::Error::custom(format!("vertex index {x} is not a nonnegative integer")))
            }
        };
        Ok(EdgeJson(Edge {
            i: as_vertex(raw[0])?,
            j: as_vertex(raw[1])?,
            w: Complex64::new(*raw.get(2).unwrap_or(&1.0), *raw.get(3).unwrap_or(&0.0)),
        }))
    }
}

impl Serialize for WeightedGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            n: self.n,
            directed: self.directed,
            edges: self.edges.iter().map(|&e| EdgeJson(e)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = GraphJson::deserialize(d)?;
        WeightedGraph::new(raw.n, raw.directed, raw.edges.into_iter().map(|e| e.0).collect())
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{hub10_adjacency, hub10_graph};

    #[test]
    fn k2_laplacian() {
        let g = WeightedGraph::simple(2, &[(1, 2)]).unwrap();
        let l = build_matrix(&g, MatrixKind::Laplacian).unwrap();
        let want = ComplexMatrix::from_real_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(l.approx_eq(&want, 0.0));
    }

    #[test]
    fn path_distance() {
        let g = WeightedGraph::simple(3, &[(1, 2), (2, 3)]).unwrap();
        let d = build_matrix(&g, MatrixKind::Distance).unwrap();
        let want = ComplexMatrix::from_real_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ]);
        assert!(d.approx_eq(&want, 0.0));
        let disconnected = WeightedGraph::simple(3, &[(1, 2)]).unwrap();
        assert!(matches!(
            build_matrix(&disconnected, MatrixKind::Distance),
            Err(GraphError::Disconnected(3))
        ));
    }

    #[test]
    fn hub10_has_its_automorphism() {
        let a = hub10_adjacency();
        let phi = Permutation::parse_cycles("(2,5,8)(3,6,9,4,7,10)", 10).unwrap();
        assert!(is_automorphism(&a, &phi).unwrap());
        assert!(is_automorphism(&a, &Permutation::identity(10)).unwrap());
        let swap = Permutation::parse_cycles("(1,2)", 10).unwrap();
        assert!(!is_automorphism(&a, &swap).unwrap());
        assert!(automorphism_violation(&a, &swap).unwrap().is_some());
    }

    #[test]
    fn hub10_graph_matches_matrix() {
        let g = hub10_graph();
        assert_eq!(g.edges.len(), 12);
        let a = build_matrix(&g, MatrixKind::Adjacency).unwrap();
        assert!(a.approx_eq(&hub10_adjacency(), 0.0));
    }

    #[test]
    fn duplicate_edges_rejected() {
        let err = WeightedGraph::simple(3, &[(1, 2), (2, 1)]);
        assert!(matches!(err, Err(GraphError::DuplicateEdge(2, 1))));
    }

    #[test]
    fn edge_list_parsing() {
        let g = WeightedGraph::parse_edge_list("# comment\n3\n").unwrap();
        assert_eq!((g.n, g.edges.len()), (3, 0));
        let g = WeightedGraph::parse_edge_list("1 2\n2 3 0.5\n").unwrap();
        assert_eq!(g.n, 3);
        assert_eq!(g.edges[1].w, Complex64::new(0.5, 0.0));
        let err = WeightedGraph::parse_edge_list("1 x\n");
        assert!(matches!(err, Err(GraphError::EdgeListParse { line: 1, .. })));
    }

    #[test]
    fn block_circulant_k2() {
        let empty = ComplexMatrix::zeros(0, 0);
        let h = ComplexMatrix::zeros(0, 1);
        let l = ComplexMatrix::zeros(1, 0);
        let m0 = ComplexMatrix::from_real_rows(&[vec![0.0]]);
        let m1 = ComplexMatrix::from_real_rows(&[vec![1.0]]);
        let (m, phi) = build_block_circulant(&empty, &h, &l, &[m0, m1]).unwrap();
        let want = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(m.approx_eq(&want, 0.0));
        assert_eq!(phi, Permutation::parse_cycles("(1,2)", 2).unwrap());
        assert!(is_automorphism(&m, &phi).unwrap());
    }

    #[test]
    fn normalized_laplacian_isolated_vertex() {
        let g = WeightedGraph::simple(3, &[(1, 2)]).unwrap();
        let nl = build_matrix(&g, MatrixKind::NormalizedLaplacian).unwrap();
        assert_eq!(nl.get(2, 2), Complex64::ZERO);
        assert_eq!(nl.get(0, 0), Complex64::ONE);
        assert_eq!(nl.get(0, 1), Complex64::new(-1.0, 0.0));
    }
}
