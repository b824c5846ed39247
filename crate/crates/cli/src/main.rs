//! `eqdecomp`: equitable decomposition of automorphism-compatible graph
//! matrices from the command line.
//!
//! Inputs are graph JSON (`{"n":..,"directed":..,"edges":[[i,j,w_re,w_im],..]}`),
//! matrix JSON (`{"rows":..,"cols":..,"entries":[[re,im],..]}`), or plain
//! edge-list text (`i j [w]` lines, `#` comments, optional leading vertex
//! count). Automorphisms come inline as cycle notation or from a file.
//!
//! Exit codes: 0 success, 1 validation failure, 2 internal invariant
//! violation.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eqdecomp::decomp::{choose_semi_transversal, decompose_separable, SequentialDecomposition};
use eqdecomp::eigen::{eigenpairs, eigenvalues, multiset_equal, residual, vec_norm};
use eqdecomp::eigvec::{
    divisor_spectral_radius, lift_through_stages, reconstruct_sequential, BasisVector,
    LiftSource, LiftedVector,
};
use eqdecomp::fold::{export_dot, fold_family};
use eqdecomp::gershgorin::{region, region_contained, union_area, RegionMode};
use eqdecomp::graph::{automorphism_violation, build_matrix, MatrixKind, WeightedGraph};
use eqdecomp::matrix::ComplexMatrix;
use eqdecomp::perm::{Permutation, PrimeOrder};
use eqdecomp::plant::{plant_basic, plant_separable, PlantOptions, ValueKind};
use eqdecomp::{DecompError, EigenError, EigvecError};
use num_complex::Complex64;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eqdecomp", version, about = "Equitable decomposition of graph matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbits of an automorphism
    Orbits(AutoOnlyArgs),
    /// Orbit shape, order, and separability of an automorphism
    Classify(AutoOnlyArgs),
    /// Check the automorphism against the matrix; exit 1 with the first violating pair if it fails
    Verify(MatrixCmdArgs),
    /// Equitable decomposition over a basic or separable automorphism (auto-detected)
    Decompose(DecomposeArgs),
    /// Spectra of the matrix and of its decomposition, with the preservation verdict
    Spectrum(DecomposeArgs),
    /// Reconstruct an eigenbasis of the matrix from computed block eigenpairs
    Eigvecs(DecomposeArgs),
    /// Spectral radius through the divisor matrix (nonnegative matrices)
    Radius(MatrixCmdArgs),
    /// Gershgorin regions before and after decomposition, containment and areas
    Gershgorin(GershArgs),
    /// Folded-graph family over a basic automorphism
    Fold(FoldArgs),
    /// Emit a seeded planted-symmetry instance (matrix + automorphism)
    Gen(GenArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Graph JSON, matrix JSON, or edge-list text
    input: PathBuf,
    /// Matrix to build from a graph input
    #[arg(long, value_enum, default_value = "weighted")]
    matrix: MatrixKindArg,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AutoArgs {
    /// Automorphism in cycle notation, e.g. "(2,5,8)(3,6,9,4,7,10)"
    #[arg(long)]
    auto: Option<String>,
    /// File holding the automorphism (cycle text or {"n":..,"cycles":[..]})
    #[arg(long, conflicts_with = "auto")]
    auto_file: Option<PathBuf>,
}

#[derive(Args)]
struct AutoOnlyArgs {
    #[command(flatten)]
    auto: AutoArgs,
    /// Vertex count (alternatively taken from the input or automorphism file)
    #[arg(long)]
    n: Option<usize>,
    /// Optional graph/matrix input fixing the vertex count
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixCmdArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    auto: AutoArgs,
    /// Replace the automorphism by its separable power first
    #[arg(long)]
    power: bool,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    auto: AutoArgs,
    /// Prime ordering for sequential rounds
    #[arg(long, value_enum, default_value = "largest")]
    prime_order: PrimeOrderArg,
    /// Replace the automorphism by its separable power first
    #[arg(long)]
    power: bool,
    /// Spectrum comparison tolerance
    #[arg(long, env = "EQDECOMP_TOL", default_value_t = 1.0e-8)]
    tol: f64,
}

#[derive(Args)]
struct GershArgs {
    #[command(flatten)]
    decompose: DecomposeArgs,
    /// Build disks from rows or columns
    #[arg(long, value_enum, default_value = "rows")]
    mode: ModeArg,
    /// Relative accuracy of union-area estimates
    #[arg(long, default_value_t = 1.0e-3)]
    area_tol: f64,
}

#[derive(Args)]
struct FoldArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    auto: AutoArgs,
    /// Replace the automorphism by its separable power first
    #[arg(long)]
    power: bool,
    /// Emit only the m-th family member
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "basic")]
    kind: GenKind,
    /// Fixed vertices (basic kind)
    #[arg(long, default_value_t = 1)]
    fixed: usize,
    /// Nontrivial orbits (basic kind)
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Orbit size (basic kind)
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated distinct primes (separable kind), e.g. "5,2"
    #[arg(long, default_value = "3,2")]
    primes: String,
    #[arg(long, value_enum, default_value = "nonneg-int")]
    values: ValuesArg,
    /// Probability that an orbital carries a nonzero value
    #[arg(long, default_value_t = 0.55)]
    density: f64,
    /// Retouch the instance so its digraph is strongly connected
    #[arg(long, default_value_t = true)]
    irreducible: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKindArg {
    Adjacency,
    Laplacian,
    SignlessLaplacian,
    NormalizedLaplacian,
    Distance,
    Weighted,
}

impl From<MatrixKindArg> for MatrixKind {
    fn from(a: MatrixKindArg) -> Self {
        match a {
            MatrixKindArg::Adjacency => MatrixKind::Adjacency,
            MatrixKindArg::Laplacian => MatrixKind::Laplacian,
            MatrixKindArg::SignlessLaplacian => MatrixKind::SignlessLaplacian,
            MatrixKindArg::NormalizedLaplacian => MatrixKind::NormalizedLaplacian,
            MatrixKindArg::Distance => MatrixKind::Distance,
            MatrixKindArg::Weighted => MatrixKind::WeightedAdjacency,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PrimeOrderArg {
    Largest,
    Ascending,
}

impl From<PrimeOrderArg> for PrimeOrder {
    fn from(a: PrimeOrderArg) -> Self {
        match a {
            PrimeOrderArg::Largest => PrimeOrder::LargestFirst,
            PrimeOrderArg::Ascending => PrimeOrder::Ascending,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rows,
    Columns,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Basic,
    Separable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValuesArg {
    NonnegInt,
    SignedInt,
    Uniform,
    Complex,
}

enum Loaded {
    Graph(WeightedGraph),
    Matrix(ComplexMatrix),
}

fn load_input(path: &PathBuf) -> Result<Loaded> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("{}: bad JSON", path.display()))?;
        if value.get("rows").is_some() {
            let m: ComplexMatrix = serde_json::from_value(value)
                .with_context(|| format!("{}: bad matrix JSON", path.display()))?;
            Ok(Loaded::Matrix(m))
        } else {
            let g: WeightedGraph = serde_json::from_value(value)
                .with_context(|| format!("{}: bad graph JSON", path.display()))?;
            Ok(Loaded::Graph(g))
        }
    } else {
        Ok(Loaded::Graph(WeightedGraph::parse_edge_list(&text)?))
    }
}

impl Loaded {
    fn n(&self) -> usize {
        match self {
            Loaded::Graph(g) => g.n,
            Loaded::Matrix(m) => m.rows(),
        }
    }

    fn matrix(&self, kind: MatrixKindArg) -> Result<ComplexMatrix> {
        match self {
            Loaded::Matrix(m) => Ok(m.clone()),
            Loaded::Graph(g) => Ok(build_matrix(g, kind.into())?),
        }
    }

    fn graph(&self) -> WeightedGraph {
        match self {
            Loaded::Graph(g) => g.clone(),
            // a matrix is the weighted adjacency of a digraph
            Loaded::Matrix(m) => {
                let n = m.rows();
                let mut edges = Vec::new();
                for i in 1..=n {
                    for j in 1..=n {
                        let w = m.get(i - 1, j - 1);
                        if w != Complex64::ZERO {
                            edges.push(eqdecomp::graph::Edge { i, j, w });
                        }
                    }
                }
                WeightedGraph::new(n, true, edges).expect("matrix entries are finite")
            }
        }
    }
}

fn load_auto(args: &AutoArgs, n: usize) -> Result<Permutation> {
    match (&args.auto, &args.auto_file) {
        (Some(cycles), None) => Ok(Permutation::parse_cycles(cycles, n)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            if text.trim_start().starts_with('{') {
                let p: Permutation = serde_json::from_str(&text)
                    .with_context(|| format!("{}: bad permutation JSON", path.display()))?;
                if p.n() != n {
                    bail!("automorphism acts on {} points but the input has {n}", p.n());
                }
                Ok(p)
            } else {
                Ok(Permutation::parse_cycles(text.trim(), n)?)
            }
        }
        _ => bail!("provide exactly one of --auto or --auto-file"),
    }
}

fn apply_power(phi: Permutation, requested: bool) -> Result<(Permutation, Option<u64>)> {
    if !requested {
        return Ok((phi, None));
    }
    let (psi, exponent) = phi.separable_power()?;
    Ok((psi, Some(exponent)))
}

struct Outcome {
    payload: String,
    exit: u8,
}

fn json_outcome(value: &serde_json::Value) -> Outcome {
    Outcome { payload: format!("{value:#}\n"), exit: 0 }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Orbits(args) => {
            let (phi, _) = auto_only(&args)?;
            Ok(json_outcome(&serde_json::json!({
                "n": phi.n(),
                "orbits": phi.orbits().orbits,
            })))
        }
        Command::Classify(args) => {
            let (phi, _) = auto_only(&args)?;
            let class = phi.classify()?;
            Ok(json_outcome(&serde_json::to_value(&class)?))
        }
        Command::Verify(args) => {
            let loaded = load_input(&args.input.input)?;
            let m = loaded.matrix(args.input.matrix)?;
            let (phi, power) = apply_power(load_auto(&args.auto, m.rows())?, args.power)?;
            match automorphism_violation(&m, &phi)? {
                None => Ok(json_outcome(&serde_json::json!({
                    "automorphism": true,
                    "power_exponent": power,
                }))),
                Some((i, j)) => Ok(Outcome {
                    payload: format!(
                        "{:#}\n",
                        serde_json::json!({
                            "automorphism": false,
                            "violation": [i, j],
                            "power_exponent": power,
                        })
                    ),
                    exit: 1,
                }),
            }
        }
        Command::Decompose(args) => {
            let (m, seq, power) = decompose_from(&args)?;
            let mut value = serde_json::to_value(&seq)?;
            value["n"] = serde_json::json!(m.rows());
            value["power_exponent"] = serde_json::json!(power);
            Ok(json_outcome(&value))
        }
        Command::Spectrum(args) => {
            let (m, seq, power) = decompose_from(&args)?;
            let direct = eigenvalues(&m)?;
            let divisor_spec = eigenvalues(&seq.divisor)?;
            let block_specs = seq
                .blocks
                .iter()
                .map(|b| eigenvalues(&b.matrix))
                .collect::<Result<Vec<_>, _>>()?;
            let union = block_specs.iter().fold(divisor_spec.clone(), |acc, s| acc.union(s));
            let preserved = multiset_equal(&direct, &union, args.tol);
            Ok(json_outcome(&serde_json::json!({
                "tol": args.tol,
                "power_exponent": power,
                "matrix_spectrum": direct,
                "divisor_spectrum": divisor_spec,
                "block_spectra": block_specs,
                "preserved": preserved,
            })))
        }
        Command::Eigvecs(args) => {
            let (m, seq, power) = decompose_from(&args)?;
            let divisor_pairs = eigenpairs(&seq.divisor)?;
            let block_pairs = seq
                .blocks
                .iter()
                .map(|b| eigenpairs(&b.matrix))
                .collect::<Result<Vec<_>, _>>()?;
            let complete = !divisor_pairs.defective && block_pairs.iter().all(|b| !b.defective);
            let to_basis = |basis: &eqdecomp::eigen::EigenBasis| -> Vec<BasisVector> {
                basis
                    .pairs
                    .iter()
                    .map(|p| BasisVector::plain(p.vector.clone(), p.value))
                    .collect()
            };
            let vectors: Vec<LiftedVector> = if complete {
                reconstruct_sequential(
                    &seq,
                    &to_basis(&divisor_pairs),
                    &block_pairs.iter().map(to_basis).collect::<Vec<_>>(),
                )?
            } else {
                // partial reconstruction from whatever eigenpairs exist
                let mut out = Vec::new();
                let mut lift = |labels: &[usize], bv: BasisVector, source: LiftSource| {
                    let mut full = vec![Complex64::ZERO; m.rows()];
                    for (pos, &label) in labels.iter().enumerate() {
                        full[label - 1] = bv.vector[pos];
                    }
                    lift_through_stages(&seq, &mut full);
                    out.push(LiftedVector {
                        vector: full,
                        eigenvalue: bv.eigenvalue,
                        generalized_rank: 1,
                        source,
                    });
                };
                for (i, bv) in to_basis(&divisor_pairs).into_iter().enumerate() {
                    lift(&seq.divisor_labels, bv, LiftSource::Divisor { position: i + 1 });
                }
                for (bi, pairs) in block_pairs.iter().enumerate() {
                    for (i, bv) in to_basis(pairs).into_iter().enumerate() {
                        lift(
                            &seq.blocks[bi].labels,
                            bv,
                            LiftSource::Block { m: bi + 1, position: i + 1 },
                        );
                    }
                }
                out
            };
            let max_residual = vectors
                .iter()
                .map(|lv| {
                    residual(&m, lv.eigenvalue, &lv.vector) / vec_norm(&lv.vector).max(1e-300)
                })
                .fold(0.0f64, f64::max);
            let defective_blocks: Vec<usize> = block_pairs
                .iter()
                .enumerate()
                .filter(|(_, b)| b.defective)
                .map(|(i, _)| i + 1)
                .collect();
            Ok(json_outcome(&serde_json::json!({
                "power_exponent": power,
                "complete": complete,
                "divisor_defective": divisor_pairs.defective,
                "defective_blocks": defective_blocks,
                "max_residual": max_residual,
                "vectors": vectors,
            })))
        }
        Command::Radius(args) => {
            let loaded = load_input(&args.input.input)?;
            let m = loaded.matrix(args.input.matrix)?;
            let (phi, power) = apply_power(load_auto(&args.auto, m.rows())?, args.power)?;
            let report = divisor_spectral_radius(&m, &phi)?;
            let mut value = serde_json::to_value(&report)?;
            value["power_exponent"] = serde_json::json!(power);
            Ok(json_outcome(&value))
        }
        Command::Gershgorin(args) => {
            let (m, seq, power) = decompose_from(&args.decompose)?;
            let mode = match args.mode {
                ModeArg::Rows => RegionMode::Rows,
                ModeArg::Columns => RegionMode::Columns,
            };
            let original = region(&m, mode)?;
            let decomposed = region(seq.final_matrix(), mode)?;
            // containment is only guaranteed (and asserted) for row regions
            let contained = match mode {
                RegionMode::Rows => Some(region_contained(&decomposed, &original)),
                RegionMode::Columns => None,
            };
            let area_original = union_area(&original, args.area_tol);
            let area_decomposed = union_area(&decomposed, args.area_tol);
            Ok(json_outcome(&serde_json::json!({
                "power_exponent": power,
                "original": original,
                "decomposed": decomposed,
                "contained": contained,
                "area_original": area_original,
                "area_decomposed": area_decomposed,
                "area_ratio": if area_original > 0.0 { area_decomposed / area_original } else { 1.0 },
            })))
        }
        Command::Fold(args) => {
            let loaded = load_input(&args.input.input)?;
            let g = loaded.graph();
            let (psi, power) = apply_power(load_auto(&args.auto, g.n)?, args.power)?;
            let class = psi.classify()?;
            if class.as_basic().is_none() {
                bail!(
                    "folding needs a basic automorphism (all nontrivial orbits of one size); \
                     got shape {:?} of order {}",
                    class.shape,
                    class.order
                );
            }
            let plan = choose_semi_transversal(&psi, None)?;
            let family = fold_family(&g, &psi, &plan)?;
            let members: Vec<_> = match args.m {
                Some(m) => {
                    let member = family
                        .into_iter()
                        .find(|f| f.m == m)
                        .ok_or_else(|| anyhow!("m={m} out of range 0..={}", plan.k() - 1))?;
                    vec![member]
                }
                None => family,
            };
            match args.format {
                FormatArg::Dot => {
                    let text: String =
                        members.iter().map(export_dot).collect::<Vec<_>>().join("\n");
                    Ok(Outcome { payload: text, exit: 0 })
                }
                FormatArg::Json => Ok(json_outcome(&serde_json::json!({
                    "power_exponent": power,
                    "family": members,
                }))),
            }
        }
        Command::Gen(args) => {
            let values = match args.values {
                ValuesArg::NonnegInt => ValueKind::NonnegativeInteger { max: 3 },
                ValuesArg::SignedInt => ValueKind::SignedInteger { max: 3 },
                ValuesArg::Uniform => ValueKind::NonnegativeUniform,
                ValuesArg::Complex => ValueKind::Complex,
            };
            let opts = PlantOptions {
                values,
                density: args.density,
                ensure_irreducible: args.irreducible
                    && !matches!(args.values, ValuesArg::SignedInt | ValuesArg::Complex),
            };
            let planted = match args.kind {
                GenKind::Basic => {
                    if args.k < 2 || args.r < 1 {
                        bail!("basic instances need --k >= 2 and --r >= 1");
                    }
                    plant_basic(args.seed, args.fixed, args.r, args.k, &opts)
                }
                GenKind::Separable => {
                    let primes: Vec<u64> = args
                        .primes
                        .split(',')
                        .map(|s| s.trim().parse::<u64>().context("bad prime list"))
                        .collect::<Result<_>>()?;
                    if primes.len() < 2 {
                        bail!("--primes needs at least two distinct primes");
                    }
                    plant_separable(args.seed, &primes, &opts)
                }
            };
            Ok(json_outcome(&serde_json::json!({
                "n": planted.auto.n(),
                "auto": planted.auto,
                "matrix": planted.matrix,
            })))
        }
    }
}

fn auto_only(args: &AutoOnlyArgs) -> Result<(Permutation, Option<Loaded>)> {
    let loaded = args.input.as_ref().map(load_input).transpose()?;
    let n = if let Some(n) = args.n {
        n
    } else if let Some(l) = &loaded {
        l.n()
    } else if let Some(path) = &args.auto.auto_file {
        // permutation JSON carries its own size
        let text = fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            let p: Permutation = serde_json::from_str(&text)?;
            p.n()
        } else {
            bail!("give --n or an input file to fix the vertex count");
        }
    } else {
        bail!("give --n or an input file to fix the vertex count");
    };
    Ok((load_auto(&args.auto, n)?, loaded))
}

fn decompose_from(
    args: &DecomposeArgs,
) -> Result<(ComplexMatrix, SequentialDecomposition, Option<u64>)> {
    let loaded = load_input(&args.input.input)?;
    let m = loaded.matrix(args.input.matrix)?;
    let (phi, power) = apply_power(load_auto(&args.auto, m.rows())?, args.power)?;
    let seq = decompose_separable(&m, &phi, args.prime_order.into())?;
    Ok((m, seq, power))
}

fn write_outcome(out: Option<&PathBuf>, outcome: &Outcome) -> Result<()> {
    match out {
        Some(path) => fs::write(path, &outcome.payload)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{}", outcome.payload),
    }
    Ok(())
}

fn out_path(cli: &Cli) -> Option<PathBuf> {
    match &cli.command {
        Command::Orbits(a) | Command::Classify(a) => a.out.clone(),
        Command::Verify(a) | Command::Radius(a) => a.input.out.clone(),
        Command::Decompose(a) | Command::Spectrum(a) | Command::Eigvecs(a) => a.input.out.clone(),
        Command::Gershgorin(a) => a.decompose.input.out.clone(),
        Command::Fold(a) => a.input.out.clone(),
        Command::Gen(a) => a.out.clone(),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(de) = err.downcast_ref::<DecompError>() {
        if de.is_internal() {
            return 2;
        }
    }
    if let Some(EigvecError::Decomp(de)) = err.downcast_ref::<EigvecError>() {
        if de.is_internal() {
            return 2;
        }
    }
    if matches!(err.downcast_ref::<EigenError>(), Some(EigenError::NoConvergence)) {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = out_path(&cli);
    match run(cli) {
        Ok(outcome) => {
            if let Err(e) = write_outcome(out.as_ref(), &outcome) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.exit)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
