//! Brute-force oracles: random projection pairs with known canonical data,
//! norm cross-checks against the dense singular value oracle, and truncation
//! norms for the diagonal model family.
//!
//! Randomness comes from ChaCha8 seeded with a caller-supplied 64-bit seed,
//! so every report is reproducible.

use crate::densekernel::{largest_singular_value, orthonormalize_columns, ComplexMatrix, DenseError};
use crate::exprlang::Expr;
use crate::halmos::{self, HalmosDecomposition, HalmosError};
use crate::skew::{example3_model, t_element, Ex3Variant};
use crate::symbolcalc::{build_element, SpectralModel, SubspaceKey, SymbolEntry, SymbolError, WStarElement};
use crate::attain::AttainError;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Relative tolerance the randomized suites hold every residual to.
pub const SUITE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Halmos(#[from] HalmosError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Attain(#[from] AttainError),
}

/// A reproducible projection pair: canonical block data drawn from the seed,
/// rotated by a random unitary.
pub fn random_projection_pair(n: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    assert!(n >= 2, "need dimension at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let m = rng.gen_range(1..=(n / 2).max(1));
    let mut corners = [0usize; 4];
    for _ in 0..n - 2 * m {
        corners[rng.gen_range(0..4)] += 1;
    }
    let h_values = distinct_h_values(&mut rng, m);
    let unitary = random_unitary(&mut rng, n);

    let mut at = 0usize;
    let mut take = |count: usize| -> ComplexMatrix {
        let idx: Vec<usize> = (at..at + count).collect();
        at += count;
        unitary.select_columns(&idx)
    };
    let d = HalmosDecomposition {
        m00: take(corners[0]),
        m01: take(corners[1]),
        m10: take(corners[2]),
        m11: take(corners[3]),
        generic_first: take(m),
        generic_second: take(m),
        h_values,
    };
    halmos::reconstruct(&d)
}

fn distinct_h_values(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let mut h: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
        h.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if h.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            return h;
        }
    }
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    orthonormalize_columns(&ComplexMatrix::new(n, n, entries))
}

fn random_complex(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius))
}

/// Scalars for all four intersection subspaces plus closed-form symbol
/// entries; the decomposition decides which scalars are actually used.
#[derive(Debug, Clone)]
pub struct ElementSpec {
    pub scalars: [Complex64; 4],
    pub symbol: [[Expr; 2]; 2],
}

/// A random spec with degree <= 2 polynomial symbol entries.
pub fn random_element_spec(rng: &mut ChaCha8Rng) -> ElementSpec {
    let scalars = [
        random_complex(rng, 2.0),
        random_complex(rng, 2.0),
        random_complex(rng, 2.0),
        random_complex(rng, 2.0),
    ];
    let mut entry = || -> Expr {
        Expr::constant(random_complex(rng, 2.0))
            .add(Expr::constant(random_complex(rng, 2.0)).mul(Expr::var()))
            .add(Expr::constant(random_complex(rng, 2.0)).mul(Expr::Pow(Box::new(Expr::var()), 2)))
    };
    let symbol = [[entry(), entry()], [entry(), entry()]];
    ElementSpec { scalars, symbol }
}

impl ElementSpec {
    /// The element this spec induces over a decomposition: scalars restricted
    /// to the present subspaces, atoms at the angle values.
    pub fn over(&self, d: &HalmosDecomposition) -> Result<WStarElement, SymbolError> {
        let mut scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
        for key in d.present_corners() {
            let idx = (key.0 * 2 + key.1) as usize;
            scalars.insert(key, self.scalars[idx]);
        }
        let symbol = [
            [
                SymbolEntry::Expr(self.symbol[0][0].clone()),
                SymbolEntry::Expr(self.symbol[0][1].clone()),
            ],
            [
                SymbolEntry::Expr(self.symbol[1][0].clone()),
                SymbolEntry::Expr(self.symbol[1][1].clone()),
            ],
        ];
        build_element(scalars, symbol, SpectralModel::from_atoms(&d.h_values))
    }
}

/// Outcome of one formula-vs-oracle comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrosscheckOutcome {
    pub formula_norm: f64,
    pub oracle_norm: f64,
    pub relative_residual: f64,
}

/// Assemble the spec's element as a concrete matrix through the
/// decomposition of (p, q), then compare the symbol-calculus norm of the
/// re-extracted element against the dense singular value oracle.
pub fn crosscheck_norm(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    spec: &ElementSpec,
    tol: f64,
) -> Result<CrosscheckOutcome, VerifyError> {
    let d = halmos::decompose(p, q, tol)?;
    let elem = spec.over(&d)?;
    let a = halmos::assemble_element(&d, &elem)?;
    let oracle_norm = largest_singular_value(&a);
    let extracted = halmos::extract_symbol(&d, &a, (tol * 100.0).max(1e-8))?;
    let formula_norm = extracted.norm()?;
    let relative_residual = (formula_norm - oracle_norm).abs() / oracle_norm.max(1e-300);
    Ok(CrosscheckOutcome { formula_norm, oracle_norm, relative_residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub quantity: String,
    pub expected: f64,
    pub got: f64,
}

/// Summary of a randomized trial run; `failures` is empty exactly when
/// `max_residual` stayed within the suite tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub dimension: usize,
    pub trials: usize,
    pub max_residual: f64,
    pub failures: Vec<TrialFailure>,
}

/// Run `trials` random norm cross-checks at dimension `n`. Each trial draws
/// a fresh projection pair and element spec, checks the norm formula against
/// the dense oracle, and checks the decompose/reconstruct round trip.
pub fn run_norm_trials(
    n: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<TrialReport, VerifyError> {
    let mut max_residual = 0.0f64;
    let mut failures = Vec::new();
    for trial in 0..trials {
        let trial_seed = seed.wrapping_add(trial as u64);
        let (p, q) = random_projection_pair(n, trial_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed ^ 0xE1E4_55AF_00F0_57A1);
        let spec = random_element_spec(&mut rng);
        let outcome = crosscheck_norm(&p, &q, &spec, tol)?;
        max_residual = max_residual.max(outcome.relative_residual);
        if outcome.relative_residual > SUITE_TOL {
            failures.push(TrialFailure {
                trial,
                quantity: "norm_rel_residual".into(),
                expected: outcome.oracle_norm,
                got: outcome.formula_norm,
            });
        }

        let d = halmos::decompose(&p, &q, tol)?;
        let (p2, q2) = halmos::reconstruct(&d);
        let roundtrip = p2.sub(&p).max_abs().max(q2.sub(&q).max_abs());
        max_residual = max_residual.max(roundtrip);
        if roundtrip > SUITE_TOL {
            failures.push(TrialFailure {
                trial,
                quantity: "roundtrip_residual".into(),
                expected: 0.0,
                got: roundtrip,
            });
        }
    }
    Ok(TrialReport { seed, dimension: n, trials, max_residual, failures })
}

/// Operator choice for the diagonal model family: the skew projection
/// itself, or the combination T T* + T* T - T - T* - I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ex3Operator {
    T,
    A,
}

/// Largest singular values of the 2n x 2n leading truncations of the chosen
/// operator, one per requested atom count. The truncation is block diagonal
/// with one 2x2 block per atom, so its largest singular value is the maximum
/// over the blocks.
pub fn truncation_norms(
    variant: Ex3Variant,
    operator: Ex3Operator,
    dims: &[usize],
) -> Result<Vec<f64>, VerifyError> {
    assert!(!dims.is_empty(), "need at least one truncation size");
    assert!(dims.windows(2).all(|w| w[0] <= w[1]), "truncation sizes must ascend");
    assert!(dims[0] >= 1, "truncation sizes start at 1");
    let n_max = *dims.last().unwrap();
    let (model, a_elem) = example3_model(variant, n_max)?;
    let elem = match operator {
        Ex3Operator::T => t_element(&model, false, false)?,
        Ex3Operator::A => a_elem,
    };
    let block_sigma: Vec<f64> = (1..=n_max)
        .map(|k| -> Result<f64, VerifyError> {
            let x = variant.atom(k);
            let v = elem.symbol_values_at(x)?;
            let block = ComplexMatrix::from_rows(&[vec![v[0][0], v[0][1]], vec![v[1][0], v[1][1]]]);
            Ok(largest_singular_value(&block))
        })
        .collect::<Result<_, _>>()?;
    Ok(dims
        .iter()
        .map(|&n| block_sigma[..n].iter().copied().fold(0.0, f64::max))
        .collect())
}

/// Finite instantiation of an element over explicit spectrum points: the
/// scalars as 1x1 diagonal entries, then one 2x2 symbol block per point.
/// This is the dense side of the kernel and eigenvalue oracles.
pub fn evaluate_as_matrix(
    elem: &WStarElement,
    points: &[f64],
) -> Result<ComplexMatrix, SymbolError> {
    let s = elem.scalars().len();
    let n = s + 2 * points.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, (_, value)) in elem.scalars().iter().enumerate() {
        out[(i, i)] = *value;
    }
    for (k, &x) in points.iter().enumerate() {
        let v = elem.symbol_values_at(x)?;
        let base = s + 2 * k;
        for i in 0..2 {
            for j in 0..2 {
                out[(base + i, base + j)] = v[i][j];
            }
        }
    }
    Ok(out)
}
