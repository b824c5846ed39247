//! Seeded planted-symmetry instances: a permutation with a prescribed cycle
//! type and a matrix made compatible with it by construction (one drawn
//! value per orbital of the induced action on index pairs), so
//! `M[phi(i), phi(j)] = M[i, j]` holds exactly.

use crate::matrix::ComplexMatrix;
use crate::perm::Permutation;
use num_complex::Complex64;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Entry distribution for planted matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueKind {
    /// Integers in 1..=max (0 comes only from the density roll).
    NonnegativeInteger { max: u8 },
    /// Nonzero integers in -max..=max.
    SignedInteger { max: u8 },
    /// Uniform reals in [0.25, 1.25]; bounded away from zero so dense fills
    /// are automatically irreducible, and continuous so planted instances
    /// are diagonalizable almost surely.
    NonnegativeUniform,
    /// Complex entries in the unit box.
    Complex,
}

#[derive(Debug, Clone, Copy)]
pub struct PlantOptions {
    pub values: ValueKind,
    /// Probability that an orbital carries a nonzero value.
    pub density: f64,
    /// Adds a phi-invariant positive cycle when the filled matrix is not
    /// strongly connected (meaningful for nonnegative instances).
    pub ensure_irreducible: bool,
}

impl Default for PlantOptions {
    fn default() -> Self {
        Self {
            values: ValueKind::NonnegativeInteger { max: 3 },
            density: 0.55,
            ensure_irreducible: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub matrix: ComplexMatrix,
    pub auto: Permutation,
}

/// A permutation with `fixed` singletons plus the listed nontrivial orbit
/// sizes, on randomly shuffled labels.
pub fn plant_permutation(rng: &mut ChaCha8Rng, fixed: usize, orbit_sizes: &[usize]) -> Permutation {
    let n = fixed + orbit_sizes.iter().sum::<usize>();
    let mut labels: Vec<usize> = (1..=n).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let mut cycles = Vec::with_capacity(orbit_sizes.len());
    let mut at = fixed;
    for &size in orbit_sizes {
        cycles.push(labels[at..at + size].to_vec());
        at += size;
    }
    Permutation::from_cycles(n, &cycles).expect("orbit labels are disjoint")
}

/// Fill a matrix compatible with `phi`: one value per orbital.
pub fn plant_matrix(rng: &mut ChaCha8Rng, phi: &Permutation, opts: &PlantOptions) -> ComplexMatrix {
    let n = phi.n();
    let mut m = ComplexMatrix::zeros(n, n);
    let mut assigned = vec![false; n * n];
    let draw = |rng: &mut ChaCha8Rng| -> Complex64 {
        match opts.values {
            ValueKind::NonnegativeInteger { max } => {
                Complex64::new(rng.random_range(1..=max.max(1) as i64) as f64, 0.0)
            }
            ValueKind::SignedInteger { max } => {
                let mag = rng.random_range(1..=max.max(1) as i64) as f64;
                Complex64::new(if rng.random::<bool>() { mag } else { -mag }, 0.0)
            }
            ValueKind::NonnegativeUniform => Complex64::new(0.25 + rng.random::<f64>(), 0.0),
            ValueKind::Complex => Complex64::new(
                2.0 * rng.random::<f64>() - 1.0,
                2.0 * rng.random::<f64>() - 1.0,
            ),
        }
    };
    for i in 1..=n {
        for j in 1..=n {
            if assigned[(i - 1) * n + (j - 1)] {
                continue;
            }
            let value = if rng.random::<f64>() < opts.density {
                draw(rng)
            } else {
                Complex64::ZERO
            };
            fill_orbital(&mut m, &mut assigned, phi, i, j, value);
        }
    }
    if opts.ensure_irreducible {
        let strongly_connected = |m: &ComplexMatrix| {
            crate::eigen::is_irreducible_nonnegative(m).map(|(_, irr)| irr).unwrap_or(false)
        };
        if !strongly_connected(&m) {
            // overwrite the orbitals of a Hamiltonian cycle with weight 1;
            // the result contains a full directed cycle and stays compatible
            let mut assigned = vec![false; n * n];
            for i in 1..=n {
                let j = i % n + 1;
                fill_orbital(&mut m, &mut assigned, phi, i, j, Complex64::ONE);
            }
            debug_assert!(strongly_connected(&m));
        }
    }
    m
}

fn fill_orbital(
    m: &mut ComplexMatrix,
    assigned: &mut [bool],
    phi: &Permutation,
    i: usize,
    j: usize,
    value: Complex64,
) {
    let n = phi.n();
    let (mut a, mut b) = (i, j);
    loop {
        m.set(a - 1, b - 1, value);
        assigned[(a - 1) * n + (b - 1)] = true;
        a = phi.apply(a);
        b = phi.apply(b);
        if (a, b) == (i, j) {
            break;
        }
    }
}

/// A planted basic instance: `fixed` singletons plus `r` orbits of size k.
pub fn plant_basic(seed: u64, fixed: usize, r: usize, k: usize, opts: &PlantOptions) -> Planted {
    assert!(k >= 2 && r >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let auto = plant_permutation(&mut rng, fixed, &vec![k; r]);
    let matrix = plant_matrix(&mut rng, &auto, opts);
    Planted { matrix, auto }
}

/// A planted separable non-basic instance whose automorphism order is the
/// product of the given distinct primes. The orbit profile always mixes a
/// full-order orbit with a shorter one, so one basic round cannot finish it.
pub fn plant_separable(seed: u64, primes: &[u64], opts: &PlantOptions) -> Planted {
    assert!(primes.len() >= 2, "need at least two distinct primes");
    let order: u64 = primes.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orbit_sizes = vec![order as usize];
    if rng.random::<f64>() < 0.5 {
        orbit_sizes.push(order as usize);
    }
    orbit_sizes.push(primes[0] as usize);
    if rng.random::<f64>() < 0.5 {
        orbit_sizes.push(primes[1] as usize);
    }
    let fixed = rng.random_range(0..=3);
    let auto = plant_permutation(&mut rng, fixed, &orbit_sizes);
    let matrix = plant_matrix(&mut rng, &auto, opts);
    Planted { matrix, auto }
}
