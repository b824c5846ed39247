//! Equitable decomposition engine.
//!
//! A basic automorphism psi (all nontrivial orbits of one size k) splits an
//! automorphism-compatible matrix M into a divisor matrix `[[F, kH], [L, B_0]]`
//! and component blocks `B_j = sum_m omega^{jm} M_m` (omega the k-th root of
//! unity), conjugate to M by an explicit DFT-structured similarity. A
//! separable automorphism (squarefree order) is handled as a sequence of
//! basic rounds, one per prime, each round decomposing the previous round's
//! output and inducing the next round's automorphism.

use crate::eigen::{EigenError, SpectrumMultiset};
use crate::graph::{automorphism_violation, GraphError};
use crate::matrix::ComplexMatrix;
use crate::perm::{OrbitShape, PermError, Permutation, PrimeOrder};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("automorphism is not basic (orbit shape {0:?})")]
    NotBasic(OrbitShape),
    #[error("identity automorphism admits no decomposition")]
    Identity,
    #[error(
        "automorphism of order {order} is neither basic nor separable; \
         decompose its separable power instead"
    )]
    NotSeparable { order: u64 },
    #[error("psi is not the expected power of phi (want psi = phi^{q})")]
    NotPowerOfPhi { q: u64 },
    #[error("semi-transversal plan does not match the automorphism")]
    PlanMismatch,
    #[error("matrix is not compatible with the automorphism: entry ({0}, {1}) breaks M[phi(i),phi(j)] = M[i,j]")]
    NotAutomorphism(usize, usize),
    #[error("partition is not equitable: row sums into class {class_j} differ across class {class_i} (vertex {vertex})")]
    NotEquitable { class_i: usize, class_j: usize, vertex: usize },
    #[error("partition invalid: {0}")]
    PartitionInvalid(String),
    #[error("internal invariant violated at stage {stage}: {reason}")]
    StageInvariant { stage: usize, reason: String },
    #[error("block-diagonal residual {residual:.3e} exceeds {bound:.3e}")]
    ResidualExceeded { residual: f64, bound: f64 },
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl DecompError {
    /// Internal invariant violations (as opposed to invalid input).
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            DecompError::StageInvariant { .. } | DecompError::ResidualExceeded { .. }
        )
    }
}

/// `omega^t` for `t = 0..k`, `omega = exp(2 pi i / k)`. Exact values are
/// substituted on the axes and the table is conjugate-symmetric, so sums of
/// mirrored powers cancel cleanly.
pub fn unit_roots(k: usize) -> Vec<Complex64> {
    assert!(k >= 1);
    let mut roots = vec![Complex64::ONE; k];
    for t in 1..k {
        if 2 * t == k {
            roots[t] = Complex64::new(-1.0, 0.0);
        } else if 4 * t == k {
            roots[t] = Complex64::new(0.0, 1.0);
        } else if 4 * t == 3 * k {
            roots[t] = Complex64::new(0.0, -1.0);
        } else if 2 * t < k {
            let angle = 2.0 * std::f64::consts::PI * t as f64 / k as f64;
            roots[t] = Complex64::new(angle.cos(), angle.sin());
        } else {
            roots[t] = roots[k - t].conj();
        }
    }
    roots
}

/// The vertex bookkeeping of one decomposition round: the fixed set U and
/// the aligned transversal powers T_0..T_{k-1} (Eq-style: T_l = psi^l(T_0)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiTransversalPlan {
    pub fixed: Vec<usize>,
    pub transversals: Vec<Vec<usize>>,
}

impl SemiTransversalPlan {
    pub fn k(&self) -> usize {
        self.transversals.len()
    }

    pub fn r(&self) -> usize {
        self.transversals[0].len()
    }

    pub fn n(&self) -> usize {
        self.fixed.len() + self.k() * self.r()
    }

    /// Full vertex sequence `U, T_0, ..., T_{k-1}`.
    pub fn ordering(&self) -> Vec<usize> {
        let mut order = self.fixed.clone();
        for t in &self.transversals {
            order.extend_from_slice(t);
        }
        order
    }

    /// The basic automorphism this plan encodes: T_l[i] -> T_{l+1}[i]
    /// cyclically, fixed on U.
    pub fn implied_automorphism(&self) -> Permutation {
        let n = self.n();
        let k = self.k();
        let mut cycles = Vec::with_capacity(self.r());
        for i in 0..self.r() {
            cycles.push((0..k).map(|l| self.transversals[l][i]).collect());
        }
        Permutation::from_cycles(n, &cycles).expect("plan transversals form disjoint cycles")
    }

    fn from_ordering(ordering: &[usize], fixed_count: usize, k: usize) -> Self {
        let r = (ordering.len() - fixed_count) / k;
        let fixed = ordering[..fixed_count].to_vec();
        let transversals = (0..k)
            .map(|l| ordering[fixed_count + l * r..fixed_count + (l + 1) * r].to_vec())
            .collect();
        Self { fixed, transversals }
    }
}

/// Choose a semi-transversal for the basic automorphism `psi`.
///
/// Plain mode (`phi = None`) takes the minimal vertex of each nontrivial
/// psi-orbit. When `phi` is supplied with `psi = phi^q`, the transversal is
/// built orbit-by-orbit over phi as `a, phi^p(a), ..., phi^{(q_a-1)p}(a)`,
/// which keeps T_0 closed under phi^p away from the fixed set and so
/// guarantees the induced automorphism of the decomposed matrix exists.
pub fn choose_semi_transversal(
    psi: &Permutation,
    phi: Option<&Permutation>,
) -> Result<SemiTransversalPlan, DecompError> {
    let class = psi.classify()?;
    let (k, _) = class.as_basic().ok_or(DecompError::NotBasic(class.shape.clone()))?;
    let psi_orbits = psi.orbits();
    let fixed = psi_orbits.fixed_vertices();

    let t0: Vec<usize> = match phi {
        None => psi_orbits.nontrivial().map(|o| o[0]).collect(),
        Some(phi) => {
            if phi.n() != psi.n() {
                return Err(PermError::SizeMismatch(phi.n(), psi.n()).into());
            }
            let p = k as u64;
            let ell = phi.order()?;
            if ell % p != 0 {
                return Err(DecompError::NotPowerOfPhi { q: ell / p });
            }
            let q = ell / p;
            if q % p == 0 || &phi.power(q) != psi {
                return Err(DecompError::NotPowerOfPhi { q });
            }
            let mut t0 = Vec::new();
            for orbit in &phi.orbits().orbits {
                let a = orbit[0];
                if psi.apply(a) == a {
                    continue;
                }
                // |orbit| = p * q_a; step through the orbit by phi^p
                let q_a = orbit.len() / k;
                let mut v = a;
                for _ in 0..q_a {
                    t0.push(v);
                    for _ in 0..k {
                        v = phi.apply(v);
                    }
                }
            }
            t0
        }
    };

    let mut transversals = vec![t0];
    for l in 1..k {
        let next = transversals[l - 1].iter().map(|&v| psi.apply(v)).collect();
        transversals.push(next);
    }
    let plan = SemiTransversalPlan { fixed, transversals };

    // one representative per nontrivial orbit, everything covered once
    let mut seen = vec![false; psi.n()];
    for &v in plan.ordering().iter() {
        if seen[v - 1] {
            return Err(DecompError::PlanMismatch);
        }
        seen[v - 1] = true;
    }
    if !seen.iter().all(|&s| s) || plan.implied_automorphism() != *psi {
        return Err(DecompError::PlanMismatch);
    }
    Ok(plan)
}

fn check_compatible(m: &ComplexMatrix, psi: &Permutation) -> Result<(), DecompError> {
    match automorphism_violation(m, psi)? {
        None => Ok(()),
        Some((i, j)) => Err(DecompError::NotAutomorphism(i, j)),
    }
}

fn zero_based(labels: &[usize]) -> Vec<usize> {
    labels.iter().map(|&v| v - 1).collect()
}

/// The component blocks `B_0..B_{k-1}` of Eq-type `B_j = sum_m omega^{jm} M_m`
/// with `M_m = M[T_0, T_m]`. Compatibility of M with the plan's automorphism
/// is checked.
pub fn component_blocks(
    m: &ComplexMatrix,
    plan: &SemiTransversalPlan,
) -> Result<Vec<ComplexMatrix>, DecompError> {
    check_compatible(m, &plan.implied_automorphism())?;
    Ok(component_blocks_unchecked(m, plan))
}

fn component_blocks_unchecked(m: &ComplexMatrix, plan: &SemiTransversalPlan) -> Vec<ComplexMatrix> {
    let k = plan.k();
    let r = plan.r();
    let roots = unit_roots(k);
    let t0 = zero_based(&plan.transversals[0]);
    let slices: Vec<ComplexMatrix> = (0..k)
        .map(|l| m.submatrix(&t0, &zero_based(&plan.transversals[l])))
        .collect();
    (0..k)
        .map(|j| {
            let mut b = ComplexMatrix::zeros(r, r);
            for (mm, slice) in slices.iter().enumerate() {
                let w = roots[(j * mm) % k];
                for a in 0..r {
                    for c in 0..r {
                        let v = b.get(a, c) + w * slice.get(a, c);
                        b.set(a, c, v);
                    }
                }
            }
            b
        })
        .collect()
}

/// The divisor matrix `[[F, kH], [L, B_0]]`; for a uniform automorphism
/// (no fixed vertices) this is just `B_0`.
pub fn divisor_matrix(
    m: &ComplexMatrix,
    plan: &SemiTransversalPlan,
) -> Result<ComplexMatrix, DecompError> {
    check_compatible(m, &plan.implied_automorphism())?;
    let blocks = component_blocks_unchecked(m, plan);
    Ok(divisor_from_parts(m, plan, &blocks[0]))
}

fn divisor_from_parts(
    m: &ComplexMatrix,
    plan: &SemiTransversalPlan,
    b0: &ComplexMatrix,
) -> ComplexMatrix {
    let fixed = zero_based(&plan.fixed);
    let t0 = zero_based(&plan.transversals[0]);
    let nf = fixed.len();
    let r = t0.len();
    let k = plan.k() as f64;
    let mut d = ComplexMatrix::zeros(nf + r, nf + r);
    for a in 0..nf {
        for b in 0..nf {
            d.set(a, b, m.get(fixed[a], fixed[b]));
        }
        for b in 0..r {
            d.set(a, nf + b, m.get(fixed[a], t0[b]) * k);
        }
    }
    for a in 0..r {
        for b in 0..nf {
            d.set(nf + a, b, m.get(t0[a], fixed[b]));
        }
        for b in 0..r {
            d.set(nf + a, nf + b, b0.get(a, b));
        }
    }
    d
}

/// The DFT-structured similarity `S = I_N (+) R`, where block (i, j) of R is
/// `omega^{ij} I_r`. Its inverse is `I_N (+) (1/k) conj(R)`.
pub fn build_similarity(fixed: usize, r: usize, k: usize) -> ComplexMatrix {
    similarity_impl(fixed, r, k, false)
}

pub fn build_similarity_inverse(fixed: usize, r: usize, k: usize) -> ComplexMatrix {
    similarity_impl(fixed, r, k, true)
}

fn similarity_impl(fixed: usize, r: usize, k: usize, inverse: bool) -> ComplexMatrix {
    assert!(r >= 1 && k >= 2);
    let roots = unit_roots(k);
    let n = fixed + k * r;
    let scale = if inverse { 1.0 / k as f64 } else { 1.0 };
    let mut s = ComplexMatrix::zeros(n, n);
    for i in 0..fixed {
        s.set(i, i, Complex64::ONE);
    }
    for bi in 0..k {
        for bj in 0..k {
            let mut w = roots[(bi * bj) % k];
            if inverse {
                w = w.conj() * scale;
            }
            for x in 0..r {
                s.set(fixed + bi * r + x, fixed + bj * r + x, w);
            }
        }
    }
    s
}

/// One basic equitable decomposition: everything needed to reassemble,
/// verify, and lift eigenvectors.
#[derive(Debug, Clone)]
pub struct BasicDecomposition {
    pub k: usize,
    pub fixed_count: usize,
    pub r: usize,
    pub plan: SemiTransversalPlan,
    /// `[[F, kH], [L, B_0]]`, labelled `U, T_0`.
    pub divisor: ComplexMatrix,
    /// `B_1..B_{k-1}`, block m labelled `T_m`.
    pub blocks: Vec<ComplexMatrix>,
    /// The similarity S with `S^{-1} M~ S = divisor (+) B_1 (+) ... (+) B_{k-1}`.
    pub similarity: ComplexMatrix,
    /// Maps an original vertex to its 1-based position in `plan.ordering()`.
    pub relabel: Permutation,
}

impl BasicDecomposition {
    /// The block-diagonal right-hand side of the similarity identity.
    pub fn block_diagonal(&self) -> ComplexMatrix {
        let mut all: Vec<&ComplexMatrix> = vec![&self.divisor];
        all.extend(self.blocks.iter());
        ComplexMatrix::direct_sum(&all)
    }

    /// sigma(divisor) U sigma(B_1) U ... U sigma(B_{k-1}).
    pub fn spectra_union(&self) -> Result<SpectrumMultiset, EigenError> {
        let mut acc = crate::eigen::eigenvalues(&self.divisor)?;
        for b in &self.blocks {
            acc = acc.union(&crate::eigen::eigenvalues(b)?);
        }
        Ok(acc)
    }

    /// Max-norm residual of `S^{-1} M~ S - (divisor (+) blocks)`.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let order = zero_based(&self.plan.ordering());
        let reordered = m.permuted(&order);
        let s_inv = build_similarity_inverse(self.fixed_count, self.r, self.k);
        let conj = s_inv.matmul(&reordered).matmul(&self.similarity);
        conj.max_abs_diff(&self.block_diagonal())
    }
}

/// Residual verification is O(n^3); beyond this size decompose_basic relies
/// on the (equivalent) compatibility check alone.
const RESIDUAL_CHECK_MAX: usize = 512;

const RESIDUAL_BOUND: f64 = 1.0e-10;

/// Decompose `m` over the basic automorphism `psi` with the given plan.
pub fn decompose_basic(
    m: &ComplexMatrix,
    psi: &Permutation,
    plan: &SemiTransversalPlan,
) -> Result<BasicDecomposition, DecompError> {
    let n = m.require_square().map_err(GraphError::from)?;
    let class = psi.classify()?;
    let (k, fixed_count) = class.as_basic().ok_or(DecompError::NotBasic(class.shape.clone()))?;
    if plan.implied_automorphism() != *psi || plan.n() != n {
        return Err(DecompError::PlanMismatch);
    }
    check_compatible(m, psi)?;

    let r = plan.r();
    let mut blocks = component_blocks_unchecked(m, plan);
    let divisor = divisor_from_parts(m, plan, &blocks[0]);
    blocks.remove(0);
    let similarity = build_similarity(fixed_count, r, k);

    let ordering = plan.ordering();
    let mut images = vec![0usize; n];
    for (pos, &v) in ordering.iter().enumerate() {
        images[v - 1] = pos;
    }
    let relabel = permutation_from_images(&images);

    let decomp = BasicDecomposition {
        k,
        fixed_count,
        r,
        plan: plan.clone(),
        divisor,
        blocks,
        similarity,
        relabel,
    };
    if n <= RESIDUAL_CHECK_MAX {
        let residual = decomp.residual(m);
        let bound = RESIDUAL_BOUND * m.max_norm().max(1.0e-300);
        if residual > bound {
            return Err(DecompError::ResidualExceeded { residual, bound });
        }
    }
    Ok(decomp)
}

fn permutation_from_images(images: &[usize]) -> Permutation {
    // build via cycle decomposition of the image map
    let n = images.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start + 1];
        seen[start] = true;
        let mut cur = images[start];
        while cur != start {
            seen[cur] = true;
            cycle.push(cur + 1);
            cur = images[cur];
        }
        if cycle.len() > 1 {
            cycles.push(cycle);
        }
    }
    Permutation::from_cycles(n, &cycles).expect("images form a bijection")
}

/// The automorphism `phi~ = phi^p` of the decomposed matrix, expressed in the
/// reordered coordinates of the decomposition (position space). Requires the
/// plan to have been built in the phi-aware mode so each part is preserved.
pub fn induced_automorphism(
    phi: &Permutation,
    p: usize,
    plan: &SemiTransversalPlan,
) -> Result<Permutation, DecompError> {
    let induced = phi.power(p as u64);
    let ordering = plan.ordering();
    let mut pos_of = vec![usize::MAX; phi.n() + 1];
    for (pos, &v) in ordering.iter().enumerate() {
        pos_of[v] = pos;
    }
    // each part must be preserved setwise
    let part_id = |v: usize| -> usize {
        let pos = pos_of[v];
        if pos < plan.fixed.len() {
            0
        } else {
            1 + (pos - plan.fixed.len()) / plan.r()
        }
    };
    for v in 1..=phi.n() {
        if part_id(v) != part_id(induced.apply(v)) {
            return Err(DecompError::PlanMismatch);
        }
    }
    let images: Vec<usize> = ordering.iter().map(|&v| pos_of[induced.apply(v)]).collect();
    Ok(permutation_from_images(&images))
}

/// One round of a sequential decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompStage {
    /// Orbit size of this round's basic automorphism (the prime p_i, except
    /// for a basic input handled in a single round).
    pub k: usize,
    /// The round's basic automorphism, in original vertex labels.
    pub psi: Permutation,
    pub plan: SemiTransversalPlan,
    pub divisor: ComplexMatrix,
    pub blocks: Vec<ComplexMatrix>,
    /// Round output in original label coordinates (block entries written
    /// back over the plan's vertex sets, zeros elsewhere).
    pub matrix_after: ComplexMatrix,
}

/// A diagonal block of the fully decomposed matrix, with the original vertex
/// labels its rows/columns carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalBlock {
    pub labels: Vec<usize>,
    pub matrix: ComplexMatrix,
}

/// A complete decomposition over a basic or separable automorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialDecomposition {
    pub stages: Vec<DecompStage>,
    /// The divisor matrix of the phi-induced equitable partition.
    pub divisor: ComplexMatrix,
    /// Original vertex labels of the divisor's rows (one per phi-orbit).
    pub divisor_labels: Vec<usize>,
    /// The remaining diagonal blocks, ordered by minimal label.
    pub blocks: Vec<FinalBlock>,
}

impl SequentialDecomposition {
    pub fn final_matrix(&self) -> &ComplexMatrix {
        &self.stages.last().expect("at least one stage").matrix_after
    }

    /// sigma(divisor) united with all block spectra.
    pub fn spectra_union(&self) -> Result<SpectrumMultiset, EigenError> {
        let mut acc = crate::eigen::eigenvalues(&self.divisor)?;
        for b in &self.blocks {
            acc = acc.union(&crate::eigen::eigenvalues(&b.matrix)?);
        }
        Ok(acc)
    }
}

fn reassemble_label_space(n: usize, basic: &BasicDecomposition) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n, n);
    let mut div_labels = basic.plan.fixed.clone();
    div_labels.extend_from_slice(&basic.plan.transversals[0]);
    for (a, &va) in div_labels.iter().enumerate() {
        for (b, &vb) in div_labels.iter().enumerate() {
            out.set(va - 1, vb - 1, basic.divisor.get(a, b));
        }
    }
    for (m_idx, block) in basic.blocks.iter().enumerate() {
        let labels = &basic.plan.transversals[m_idx + 1];
        for (a, &va) in labels.iter().enumerate() {
            for (b, &vb) in labels.iter().enumerate() {
                out.set(va - 1, vb - 1, block.get(a, b));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Cell {
    labels: Vec<usize>,
    divisor_lineage: bool,
}

fn refine_cells(cells: Vec<Cell>, plan: &SemiTransversalPlan, n: usize) -> Vec<Cell> {
    let mut parts: Vec<Vec<usize>> = Vec::with_capacity(plan.k());
    let mut part0 = plan.fixed.clone();
    part0.extend_from_slice(&plan.transversals[0]);
    parts.push(part0);
    for l in 1..plan.k() {
        parts.push(plan.transversals[l].clone());
    }
    let mut out = Vec::new();
    for cell in cells {
        let mut member = vec![false; n + 1];
        for &v in &cell.labels {
            member[v] = true;
        }
        for (pi, part) in parts.iter().enumerate() {
            let labels: Vec<usize> = part.iter().copied().filter(|&v| member[v]).collect();
            if !labels.is_empty() {
                out.push(Cell { labels, divisor_lineage: cell.divisor_lineage && pi == 0 });
            }
        }
    }
    out
}

/// Decompose `m` over a basic or separable automorphism `phi`. A basic
/// automorphism (any orbit size) is a single round; a separable one runs one
/// round per prime of its order, in the requested prime order.
pub fn decompose_separable(
    m: &ComplexMatrix,
    phi: &Permutation,
    prime_order: PrimeOrder,
) -> Result<SequentialDecomposition, DecompError> {
    let n = m.require_square().map_err(GraphError::from)?;
    if phi.n() != n {
        return Err(GraphError::SizeMismatch { mrows: m.rows(), mcols: m.cols(), n: phi.n() }.into());
    }
    let class = phi.classify()?;
    if class.shape == OrbitShape::Identity {
        return Err(DecompError::Identity);
    }
    check_compatible(m, phi)?;

    let mut cells = vec![Cell { labels: (1..=n).collect(), divisor_lineage: true }];
    let mut stages: Vec<DecompStage> = Vec::new();

    if class.as_basic().is_some() {
        let plan = choose_semi_transversal(phi, None)?;
        let basic = decompose_basic(m, phi, &plan)?;
        let matrix_after = reassemble_label_space(n, &basic);
        cells = refine_cells(cells, &plan, n);
        stages.push(DecompStage {
            k: basic.k,
            psi: phi.clone(),
            plan,
            divisor: basic.divisor,
            blocks: basic.blocks,
            matrix_after,
        });
    } else {
        let mut primes = class
            .separable_primes
            .clone()
            .ok_or(DecompError::NotSeparable { order: class.order })?;
        match prime_order {
            PrimeOrder::LargestFirst => primes.sort_unstable_by(|a, b| b.cmp(a)),
            PrimeOrder::Ascending => primes.sort_unstable(),
        }
        let mut m_cur = m.clone();
        let mut phi_cur = phi.clone();
        let mut ell = class.order;
        for (stage_idx, &p) in primes.iter().enumerate() {
            let ell_next = ell / p;
            let psi = phi_cur.power(ell_next);
            let internal = |e: DecompError| -> DecompError {
                if stage_idx == 0 {
                    e
                } else {
                    DecompError::StageInvariant { stage: stage_idx, reason: e.to_string() }
                }
            };
            let plan = choose_semi_transversal(&psi, Some(&phi_cur)).map_err(internal)?;
            let basic = decompose_basic(&m_cur, &psi, &plan).map_err(internal)?;
            let matrix_after = reassemble_label_space(n, &basic);
            cells = refine_cells(cells, &plan, n);
            m_cur = matrix_after.clone();
            stages.push(DecompStage {
                k: basic.k,
                psi,
                plan,
                divisor: basic.divisor,
                blocks: basic.blocks,
                matrix_after,
            });
            phi_cur = phi_cur.power(p);
            ell = ell_next;
        }
    }

    let final_matrix = stages.last().expect("at least one stage").matrix_after.clone();
    let divisor_cell = cells
        .iter()
        .find(|c| c.divisor_lineage)
        .ok_or(DecompError::StageInvariant { stage: stages.len(), reason: "no divisor cell".into() })?
        .clone();
    let divisor = final_matrix.submatrix(
        &zero_based(&divisor_cell.labels),
        &zero_based(&divisor_cell.labels),
    );
    if divisor.rows() != phi.orbits().orbits.len() {
        return Err(DecompError::StageInvariant {
            stage: stages.len(),
            reason: format!(
                "divisor dimension {} does not match the {} phi-orbits",
                divisor.rows(),
                phi.orbits().orbits.len()
            ),
        });
    }
    let mut blocks: Vec<FinalBlock> = cells
        .into_iter()
        .filter(|c| !c.divisor_lineage)
        .map(|c| {
            let idx = zero_based(&c.labels);
            FinalBlock { matrix: final_matrix.submatrix(&idx, &idx), labels: c.labels }
        })
        .collect();
    blocks.sort_by_key(|b| b.labels.iter().copied().min().unwrap_or(usize::MAX));

    Ok(SequentialDecomposition { stages, divisor, divisor_labels: divisor_cell.labels, blocks })
}

/// The divisor matrix of an equitable partition (classes in the given
/// order), or an error naming the first violating class pair and vertex.
pub fn equitable_divisor(
    m: &ComplexMatrix,
    partition: &[Vec<usize>],
) -> Result<ComplexMatrix, DecompError> {
    let n = m.require_square().map_err(GraphError::from)?;
    let mut seen = vec![false; n + 1];
    for class in partition {
        if class.is_empty() {
            return Err(DecompError::PartitionInvalid("empty class".into()));
        }
        for &v in class {
            if v < 1 || v > n {
                return Err(DecompError::PartitionInvalid(format!(
                    "vertex {v} out of range 1..={n}"
                )));
            }
            if seen[v] {
                return Err(DecompError::PartitionInvalid(format!("vertex {v} repeated")));
            }
            seen[v] = true;
        }
    }
    if !seen[1..].iter().all(|&s| s) {
        return Err(DecompError::PartitionInvalid("partition does not cover all vertices".into()));
    }

    let kk = partition.len();
    let tol = 1.0e-10 * m.max_norm().max(1.0);
    let mut d = ComplexMatrix::zeros(kk, kk);
    for (i, class_i) in partition.iter().enumerate() {
        for (j, class_j) in partition.iter().enumerate() {
            let row_sum = |s: usize| -> Complex64 {
                class_j.iter().map(|&t| m.get(s - 1, t - 1)).sum()
            };
            let d_ij = row_sum(class_i[0]);
            for &s in &class_i[1..] {
                if (row_sum(s) - d_ij).norm() > tol {
                    return Err(DecompError::NotEquitable {
                        class_i: i + 1,
                        class_j: j + 1,
                        vertex: s,
                    });
                }
            }
            d.set(i, j, d_ij);
        }
    }
    Ok(d)
}

#[derive(Serialize, Deserialize)]
struct StageJson {
    prime: usize,
    psi_cycles: Vec<Vec<usize>>,
    ordering: Vec<usize>,
    divisor: ComplexMatrix,
    blocks: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct SequentialJson {
    stages: Vec<StageJson>,
    final_divisor: ComplexMatrix,
    final_divisor_labels: Vec<usize>,
    final_blocks: Vec<FinalBlock>,
}

impl Serialize for SequentialDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SequentialJson {
            stages: self
                .stages
                .iter()
                .map(|st| StageJson {
                    prime: st.k,
                    psi_cycles: st.psi.cycles(),
                    ordering: st.plan.ordering(),
                    divisor: st.divisor.clone(),
                    blocks: st.blocks.clone(),
                })
                .collect(),
            final_divisor: self.divisor.clone(),
            final_divisor_labels: self.divisor_labels.clone(),
            final_blocks: self.blocks.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SequentialDecomposition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = SequentialJson::deserialize(d)?;
        let mut stages = Vec::with_capacity(raw.stages.len());
        for st in raw.stages {
            let n = st.ordering.len();
            let k = st.blocks.len() + 1;
            if k < 2 || n < st.divisor.rows() {
                return Err(D::Error::custom("inconsistent stage shape"));
            }
            let r = (n - st.divisor.rows()) / (k - 1);
            if r == 0 || st.divisor.rows() < r || st.divisor.rows() - r + k * r != n {
                return Err(D::Error::custom("inconsistent stage shape"));
            }
            let fixed_count = st.divisor.rows() - r;
            let plan = SemiTransversalPlan::from_ordering(&st.ordering, fixed_count, k);
            let psi =
                Permutation::from_cycles(n, &st.psi_cycles).map_err(D::Error::custom)?;
            if plan.implied_automorphism() != psi {
                return Err(D::Error::custom("stage cycles do not match ordering"));
            }
            let basic_like = BasicDecomposition {
                k,
                fixed_count,
                r,
                plan: plan.clone(),
                divisor: st.divisor.clone(),
                blocks: st.blocks.clone(),
                similarity: build_similarity(fixed_count, r, k),
                relabel: Permutation::identity(n),
            };
            let matrix_after = reassemble_label_space(n, &basic_like);
            stages.push(DecompStage {
                k,
                psi,
                plan,
                divisor: st.divisor,
                blocks: st.blocks,
                matrix_after,
            });
        }
        if stages.is_empty() {
            return Err(D::Error::custom("decomposition needs at least one stage"));
        }
        Ok(SequentialDecomposition {
            stages,
            divisor: raw.final_divisor,
            divisor_labels: raw.final_divisor_labels,
            blocks: raw.final_blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eigenvalues, multiset_equal};
    use crate::fixtures::{hub10_adjacency, hub10_automorphism};

    fn round1_plan() -> (Permutation, SemiTransversalPlan) {
        let phi = hub10_automorphism();
        let psi = phi.power(2);
        let plan = choose_semi_transversal(&psi, Some(&phi)).unwrap();
        (psi, plan)
    }

    #[test]
    fn unit_roots_exact_axes() {
        let r4 = unit_roots(4);
        assert_eq!(r4[1], Complex64::new(0.0, 1.0));
        assert_eq!(r4[2], Complex64::new(-1.0, 0.0));
        assert_eq!(r4[3], Complex64::new(0.0, -1.0));
        let r3 = unit_roots(3);
        assert_eq!(r3[2], r3[1].conj());
    }

    #[test]
    fn semi_transversal_worked_example() {
        let (_, plan) = round1_plan();
        assert_eq!(plan.fixed, vec![1]);
        assert_eq!(plan.transversals[0], vec![2, 3, 4]);
        assert_eq!(plan.transversals[1], vec![8, 9, 10]);
        assert_eq!(plan.transversals[2], vec![5, 7, 6]);
        assert_eq!(plan.ordering(), vec![1, 2, 3, 4, 8, 9, 10, 5, 7, 6]);
    }

    #[test]
    fn semi_transversal_plain_modes() {
        let psi = Permutation::parse_cycles("(1,2)(3,4)", 4).unwrap();
        let plan = choose_semi_transversal(&psi, None).unwrap();
        assert_eq!(plan.fixed, Vec::<usize>::new());
        assert_eq!(plan.transversals, vec![vec![1, 3], vec![2, 4]]);

        let psi1 = Permutation::parse_cycles("(3,4)(6,7)(9,10)", 10).unwrap();
        let plan = choose_semi_transversal(&psi1, None).unwrap();
        assert_eq!(plan.transversals[0], vec![3, 6, 9]);
        assert_eq!(plan.transversals[1], vec![4, 7, 10]);
        assert_eq!(plan.fixed, vec![1, 2, 5, 8]);
    }

    #[test]
    fn divisor_and_blocks_round1() {
        let a = hub10_adjacency();
        let (psi, plan) = round1_plan();
        let basic = decompose_basic(&a, &psi, &plan).unwrap();
        let want_divisor = ComplexMatrix::from_real_rows(&[
            vec![0.0, 3.0, 0.0, 0.0],
            vec![1.0, 2.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ]);
        let want_block = ComplexMatrix::from_real_rows(&[
            vec![-1.0, 1.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ]);
        assert!(basic.divisor.approx_eq(&want_divisor, 1e-10));
        assert!(basic.blocks[0].approx_eq(&want_block, 1e-10));
        assert!(basic.blocks[1].approx_eq(&want_block, 1e-10));
    }

    #[test]
    fn block_identities_k2() {
        // for k = 2, omega = -1: B_0 = M_0 + M_1, B_1 = M_0 - M_1
        let m = ComplexMatrix::from_real_rows(&[
            vec![1.0, 2.0, 5.0, 3.0],
            vec![2.0, 1.0, 3.0, 7.0],
            vec![5.0, 3.0, 1.0, 2.0],
            vec![3.0, 7.0, 2.0, 1.0],
        ]);
        let psi = Permutation::parse_cycles("(1,3)(2,4)", 4).unwrap();
        let plan = choose_semi_transversal(&psi, None).unwrap();
        let blocks = component_blocks(&m, &plan).unwrap();
        let m0 = m.submatrix(&[0, 1], &[0, 1]);
        let m1 = m.submatrix(&[0, 1], &[2, 3]);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(blocks[0].get(i, j), m0.get(i, j) + m1.get(i, j));
                assert_eq!(blocks[1].get(i, j), m0.get(i, j) - m1.get(i, j));
            }
        }
    }

    #[test]
    fn similarity_small_cases() {
        let s = build_similarity(0, 1, 2);
        let want = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert!(s.approx_eq(&want, 0.0));
        let s = build_similarity(1, 3, 3);
        assert_eq!(s.rows(), 10);
        assert_eq!(s.get(0, 0), Complex64::ONE);
        for j in 1..10 {
            assert_eq!(s.get(0, j), Complex64::ZERO);
        }
        let prod = s.matmul(&build_similarity_inverse(1, 3, 3));
        assert!(prod.approx_eq(&ComplexMatrix::identity(10), 1e-12));
    }

    #[test]
    fn induced_automorphism_round1() {
        let phi = hub10_automorphism();
        let (_, plan) = round1_plan();
        let tilde = induced_automorphism(&phi, 3, &plan).unwrap();
        // in the reordered coordinates this is again (3,4)(6,7)(9,10)
        assert_eq!(tilde, Permutation::parse_cycles("(3,4)(6,7)(9,10)", 10).unwrap());
        // phi of prime order: induced map is the identity
        let psi = phi.power(2);
        let plan2 = choose_semi_transversal(&psi, Some(&psi)).unwrap();
        let id = induced_automorphism(&psi, 3, &plan2).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn separable_full_run() {
        let a = hub10_adjacency();
        let phi = hub10_automorphism();
        let seq = decompose_separable(&a, &phi, PrimeOrder::LargestFirst).unwrap();
        assert_eq!(seq.stages.len(), 2);
        assert_eq!(seq.stages[0].k, 3);
        assert_eq!(seq.stages[1].k, 2);
        assert_eq!(
            seq.stages[1].psi,
            Permutation::parse_cycles("(3,4)(6,7)(9,10)", 10).unwrap()
        );
        assert_eq!(seq.stages[1].plan.transversals[0], vec![3, 6, 9]);
        assert_eq!(seq.divisor_labels, vec![1, 2, 3]);
        let want = ComplexMatrix::from_real_rows(&[
            vec![0.0, 3.0, 0.0],
            vec![1.0, 2.0, 2.0],
            vec![0.0, 1.0, 0.0],
        ]);
        assert!(seq.divisor.approx_eq(&want, 1e-10));
        // final blocks: {4}, {5,6}, {7}, {8,9}, {10}
        let labels: Vec<Vec<usize>> = seq.blocks.iter().map(|b| b.labels.clone()).collect();
        assert_eq!(labels, vec![vec![4], vec![5, 6], vec![7], vec![8, 9], vec![10]]);
        let two_block = ComplexMatrix::from_real_rows(&[vec![-1.0, 2.0], vec![1.0, 0.0]]);
        assert!(seq.blocks[1].matrix.approx_eq(&two_block, 1e-10));
        assert!(seq.blocks[3].matrix.approx_eq(&two_block, 1e-10));
        // spectra are preserved
        let direct = eigenvalues(&a).unwrap();
        let union = seq.spectra_union().unwrap();
        assert!(multiset_equal(&direct, &union, 1e-8));
    }

    #[test]
    fn separable_round2_divisor_matches() {
        let a = hub10_adjacency();
        let phi = hub10_automorphism();
        let seq = decompose_separable(&a, &phi, PrimeOrder::LargestFirst).unwrap();
        let want = ComplexMatrix::from_real_rows(&[
            vec![0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![1.0, 2.0, 0.0, 0.0, 2.0, 0.0, 0.0],
            vec![0.0, 0.0, -1.0, 0.0, 0.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 2.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        ]);
        assert!(seq.stages[1].divisor.approx_eq(&want, 1e-10));
    }

    #[test]
    fn basic_input_single_stage() {
        let a = hub10_adjacency();
        let psi = hub10_automorphism().power(2);
        let seq = decompose_separable(&a, &psi, PrimeOrder::default()).unwrap();
        assert_eq!(seq.stages.len(), 1);
        let plan = choose_semi_transversal(&psi, None).unwrap();
        let basic = decompose_basic(&a, &psi, &plan).unwrap();
        assert!(seq.stages[0].divisor.approx_eq(&basic.divisor, 0.0));
    }

    #[test]
    fn equitable_divisor_cases() {
        let a = hub10_adjacency();
        let psi = hub10_automorphism().power(2);
        let orbits = psi.orbits().orbits;
        let d = equitable_divisor(&a, &orbits).unwrap();
        let want = ComplexMatrix::from_real_rows(&[
            vec![0.0, 3.0, 0.0, 0.0],
            vec![1.0, 2.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ]);
        assert!(d.approx_eq(&want, 0.0));

        // all singletons reproduce the matrix
        let singles: Vec<Vec<usize>> = (1..=10).map(|v| vec![v]).collect();
        assert!(equitable_divisor(&a, &singles).unwrap().approx_eq(&a, 0.0));

        // an inequitable partition is reported with the violating vertex
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let err = equitable_divisor(&m, &[vec![1, 2]]);
        assert!(matches!(err, Err(DecompError::NotEquitable { vertex: 2, .. })));
    }

    #[test]
    fn rejects_wrong_inputs() {
        let a = hub10_adjacency();
        let not_auto = Permutation::parse_cycles("(1,2)", 10).unwrap();
        let plan = choose_semi_transversal(&not_auto, None).unwrap();
        assert!(matches!(
            decompose_basic(&a, &not_auto, &plan),
            Err(DecompError::NotAutomorphism(_, _))
        ));
        let id = Permutation::identity(10);
        assert!(matches!(
            decompose_separable(&a, &id, PrimeOrder::default()),
            Err(DecompError::Identity)
        ));
        let non_sep = Permutation::parse_cycles("(1,2,3,4)(5,6)", 6).unwrap();
        let m = ComplexMatrix::zeros(6, 6);
        assert!(matches!(
            decompose_separable(&m, &non_sep, PrimeOrder::default()),
            Err(DecompError::NotSeparable { order: 4 })
        ));
    }

    #[test]
    fn sequential_json_round_trip() {
        let a = hub10_adjacency();
        let phi = hub10_automorphism();
        let seq = decompose_separable(&a, &phi, PrimeOrder::LargestFirst).unwrap();
        let text = serde_json::to_string(&seq).unwrap();
        let back: SequentialDecomposition = serde_json::from_str(&text).unwrap();
        assert_eq!(seq, back);
    }
}
