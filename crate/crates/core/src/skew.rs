//! Skew (oblique, non-orthogonal) projections.
//!
//! A genuinely skew projection T is determined by the orthogonal projections
//! P onto its range and Q onto its kernel through T = (I-PQ)^{-1} P (I-PQ);
//! on the generic part its symbol is [[1, -sqrt(1/x - 1)], [0, 0]] over the
//! spectrum of the angle operator H = (I - PQP) restricted to Ran P. The
//! norm of T is then attained iff min spectrum(H) is an eigenvalue of H.
//!
//! Also provides the operator families used to exercise the calculus:
//! T + alpha T* + beta I, alternating products T T* T ..., and the diagonal
//! model family with angle atoms accumulating at 1.

use crate::attain::{self, AttainError, AttainmentVerdict};
use crate::densekernel::{
    hermitian_eig, invert, largest_singular_value, orthonormal_range, ComplexMatrix, DenseError,
};
use crate::exprlang::Expr;
use crate::symbolcalc::{
    build_element, EssentialComponent, SpectralModel, SubspaceKey, SymbolEntry, SymbolError,
    WStarElement,
};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Eigenvalues of the compressed angle operator within this distance of 1
/// are classified as range-inside-kernel-complement directions rather than
/// generic ones (the same threshold as the canonical decomposition).
pub const CLASS_EPS: f64 = crate::halmos::CLASS_EPS;
/// Angle atoms closer than this are merged; the spectral model describes the
/// spectrum as a set, so multiplicity is irrelevant for norms.
const ATOM_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SkewError {
    #[error("matrix is not idempotent: residual {residual:.3e} exceeds {allowed:.3e}")]
    NotIdempotent { residual: f64, allowed: f64 },
    #[error("matrix is not genuinely skew: its norm {norm} does not exceed 1")]
    NotSkew { norm: f64 },
    #[error("reconstruction through the range/kernel projections failed: {0}")]
    AfriatViolation(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Attain(#[from] AttainError),
}

/// Everything the symbol calculus needs to know about a skew projection.
#[derive(Debug, Clone)]
pub struct SkewAnalysis {
    /// Orthogonal projection onto Ran T.
    pub p: ComplexMatrix,
    /// Orthogonal projection onto Ker T.
    pub q: ComplexMatrix,
    pub pq_norm: f64,
    pub afriat_residual: f64,
    pub h_model: SpectralModel,
    pub t_symbol: WStarElement,
    /// Presence of the range-inter-kernel-complement part (scalar 1).
    pub present_01: bool,
    /// Presence of the kernel-inter-range-complement part (scalar 0).
    pub present_10: bool,
}

/// The symbol of a skew projection over a given angle model, with the
/// declared intersection parts present.
pub fn t_element(
    model: &SpectralModel,
    present_01: bool,
    present_10: bool,
) -> Result<WStarElement, SymbolError> {
    let mut scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
    if present_01 {
        scalars.insert((0, 1), Complex64::new(1.0, 0.0));
    }
    if present_10 {
        scalars.insert((1, 0), Complex64::new(0.0, 0.0));
    }
    let one = Expr::constant(Complex64::new(1.0, 0.0));
    let coupling = one
        .clone()
        .div(Expr::var())
        .sub(one.clone())
        .sqrt()
        .neg();
    let symbol = [
        [SymbolEntry::Expr(one), SymbolEntry::Expr(coupling)],
        [SymbolEntry::zero(), SymbolEntry::zero()],
    ];
    build_element(scalars, symbol, model.clone())
}

/// Analyze a concrete idempotent matrix: build the range/kernel projections,
/// check the reconstruction identity, extract the angle spectrum, and form
/// the symbol.
pub fn analyze_skew(t: &ComplexMatrix, tol: f64) -> Result<SkewAnalysis, SkewError> {
    assert!(t.is_square(), "skew analysis needs a square matrix");
    let n = t.rows();
    let scale = t.max_abs();
    let idem_residual = t.mul(t).sub(t).max_abs();
    if idem_residual > tol * scale {
        return Err(SkewError::NotIdempotent { residual: idem_residual, allowed: tol * scale });
    }
    let t_norm = largest_singular_value(t);
    if t_norm <= 1.0 + tol {
        return Err(SkewError::NotSkew { norm: t_norm });
    }

    let identity = ComplexMatrix::identity(n);
    let range_basis = orthonormal_range(t, tol);
    let p = range_basis.mul(&range_basis.adjoint()).hermitian_part();
    // Ker T = Ran(I - T) for idempotents
    let kernel_basis = orthonormal_range(&identity.sub(t), tol);
    let q = kernel_basis.mul(&kernel_basis.adjoint()).hermitian_part();

    let pq = p.mul(&q);
    let pq_norm = largest_singular_value(&pq);
    let i_minus_pq = identity.sub(&pq);
    let rebuilt = invert(&i_minus_pq)?.mul(&p).mul(&i_minus_pq);
    let afriat_residual = t.sub(&rebuilt).max_abs();
    if afriat_residual > 10.0 * tol * scale {
        return Err(SkewError::AfriatViolation(format!(
            "residual {afriat_residual:.3e} exceeds {:.3e}",
            10.0 * tol * scale
        )));
    }

    // angle operator on Ran P: H = I - (compression of Q)
    let r = range_basis.cols();
    let compressed = range_basis.adjoint().mul(&q).mul(&range_basis);
    let eig = hermitian_eig(&compressed, CLASS_EPS)?;
    let mut raw_h: Vec<f64> = Vec::with_capacity(r);
    let mut dim_01 = 0usize;
    for &mu in &eig.values {
        let h = 1.0 - mu;
        if h >= 1.0 - CLASS_EPS {
            // direction of Ran T orthogonal to Ker T
            dim_01 += 1;
        } else if h <= CLASS_EPS {
            // would mean a range direction inside the kernel; impossible for
            // an idempotent
            return Err(SkewError::AfriatViolation(format!(
                "angle value {h:.3e} at the closed-range boundary"
            )));
        } else {
            raw_h.push(h);
        }
    }
    raw_h.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let generic_mult = raw_h.len();
    let mut atoms: Vec<f64> = Vec::new();
    for h in raw_h {
        if atoms.last().map_or(true, |&last| h - last > ATOM_MERGE_TOL) {
            atoms.push(h);
        }
    }
    let h_model = SpectralModel::from_atoms(&atoms);

    let present_01 = dim_01 > 0;
    let present_10 = n - r - generic_mult > 0;
    let t_symbol = t_element(&h_model, present_01, present_10)?;
    Ok(SkewAnalysis {
        p,
        q,
        pq_norm,
        afriat_residual,
        h_model,
        t_symbol,
        present_01,
        present_10,
    })
}

/// Attainment verdict for the analyzed skew projection.
pub fn attains_norm(analysis: &SkewAnalysis) -> Result<AttainmentVerdict, AttainError> {
    attain::decide_attainment(&analysis.t_symbol)
}

/// Attainment verdict for a skew projection described only by its angle
/// model (intersection parts absent).
pub fn attains_norm_model(model: &SpectralModel) -> Result<AttainmentVerdict, SkewError> {
    let elem = t_element(model, false, false)?;
    Ok(attain::decide_attainment(&elem)?)
}

/// The family T + alpha T* + beta I over a given angle model, built through
/// the adjoint/product/sum pipeline (intersection parts absent).
pub fn linear_family(model: &SpectralModel, alpha: f64, beta: f64) -> Result<WStarElement, SymbolError> {
    let t = t_element(model, false, false)?;
    let scaled_adjoint = t.adjoint().scale(Complex64::new(alpha, 0.0));
    let scaled_identity = t.identity_like().scale(Complex64::new(beta, 0.0));
    t.add(&scaled_adjoint)?.add(&scaled_identity)
}

/// Closed forms for the linear family, used as independent cross-checks:
/// phi = s^2 + beta^2 + (1 + alpha^2) f(x) and omega = s*beta - alpha f(x)
/// with s = 1 + alpha + beta and f(x) = 1/x - 1.
pub fn linear_family_closed_form(alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let s = 1.0 + alpha + beta;
    let f = 1.0 / x - 1.0;
    let phi = s * s + beta * beta + (1.0 + alpha * alpha) * f;
    let omega = s * beta - alpha * f;
    (phi, omega)
}

/// The alternating product with m factors, T T* T T* T..., built by repeated
/// symbol multiplication (intersection parts absent).
pub fn alternating_power(model: &SpectralModel, m: usize) -> Result<WStarElement, SymbolError> {
    assert!(m >= 1, "the alternating product needs at least one factor");
    let t = t_element(model, false, false)?;
    let t_adj = t.adjoint();
    let mut acc = t.clone();
    for j in 2..=m {
        let factor = if j % 2 == 0 { &t_adj } else { &t };
        acc = acc.multiply(factor)?;
    }
    Ok(acc)
}

/// Variants of the diagonal model family: angle atoms n^2/(n^2+1) or
/// n^2/(n^2+4), accumulating at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ex3Variant {
    OneOverN,
    TwoOverN,
}

impl Ex3Variant {
    pub fn atom(&self, n: usize) -> f64 {
        let n2 = (n * n) as f64;
        match self {
            Ex3Variant::OneOverN => n2 / (n2 + 1.0),
            Ex3Variant::TwoOverN => n2 / (n2 + 4.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Ex3Variant::OneOverN => "one_over_n",
            Ex3Variant::TwoOverN => "two_over_n",
        }
    }
}

/// The diagonal model family: the angle model (first `n_atoms` atoms plus
/// the limit point 1) and the element T T* + T* T - T - T* - I over it,
/// built through the pipeline. Its symbol evaluates to
/// diag(1/x - 2, 1/x - 2).
pub fn example3_model(
    variant: Ex3Variant,
    n_atoms: usize,
) -> Result<(SpectralModel, WStarElement), SymbolError> {
    assert!(n_atoms >= 1, "need at least one atom");
    let atoms: Vec<f64> = (1..=n_atoms).map(|n| variant.atom(n)).collect();
    let model = SpectralModel {
        atoms: atoms
            .iter()
            .map(|&value| crate::symbolcalc::Atom { value, label: None })
            .collect(),
        essential: vec![EssentialComponent::LimitPoint { value: 1.0 }],
    };
    let t = t_element(&model, false, false)?;
    let t_adj = t.adjoint();
    let minus_one = Complex64::new(-1.0, 0.0);
    let element = t
        .multiply(&t_adj)?
        .add(&t_adj.multiply(&t)?)?
        .add(&t.scale(minus_one))?
        .add(&t_adj.scale(minus_one))?
        .add(&t.identity_like().scale(minus_one))?;
    Ok((model, element))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attain::MaximizerPoint;
    use crate::densekernel::check_orthogonal_projection;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn t_2x2() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, -2.0], &[0.0, 0.0]])
    }

    #[test]
    fn analyze_hand_example() {
        let a = analyze_skew(&t_2x2(), 1e-10).unwrap();
        assert!((a.pq_norm - 2.0 / 5.0f64.sqrt()).abs() < 1e-12);
        assert!(a.afriat_residual < 1e-12);
        assert_eq!(a.h_model.atoms.len(), 1);
        assert!((a.h_model.atoms[0].value - 0.2).abs() < 1e-12);
        assert!(!a.present_01 && !a.present_10);
        assert!((a.t_symbol.norm().unwrap() - 5.0f64.sqrt()).abs() < 1e-10);
        assert!(check_orthogonal_projection(&a.p, 1e-10));
        assert!(check_orthogonal_projection(&a.q, 1e-10));
    }

    #[test]
    fn orthogonal_projection_is_rejected() {
        let t = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(analyze_skew(&t, 1e-10), Err(SkewError::NotSkew { .. })));
    }

    #[test]
    fn non_idempotent_is_rejected() {
        let t = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(analyze_skew(&t, 1e-10), Err(SkewError::NotIdempotent { .. })));
    }

    #[test]
    fn block_diagonal_pair_of_angles() {
        let s3 = 3.0f64.sqrt();
        let t = ComplexMatrix::from_real_rows(&[
            &[1.0, -s3, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, -1.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        let a = analyze_skew(&t, 1e-10).unwrap();
        let atoms: Vec<f64> = a.h_model.atoms.iter().map(|x| x.value).collect();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0] - 0.25).abs() < 1e-12);
        assert!((atoms[1] - 0.5).abs() < 1e-12);
        assert!((a.t_symbol.norm().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn finite_skew_attains_at_minimal_atom() {
        let a = analyze_skew(&t_2x2(), 1e-10).unwrap();
        let verdict = attains_norm(&a).unwrap();
        assert!(verdict.attained);
        let sigma = verdict.sigma.unwrap();
        assert_eq!(sigma.points.len(), 1);
        assert!(matches!(sigma.points[0], MaximizerPoint::Atom { x } if (x - 0.2).abs() < 1e-12));
    }

    #[test]
    fn ac_interval_only_model_never_attains() {
        let model = SpectralModel {
            atoms: vec![],
            essential: vec![EssentialComponent::Interval {
                lo: 0.3,
                hi: 0.9,
                measure_class: crate::symbolcalc::MeasureClass::AbsolutelyContinuous,
            }],
        };
        let verdict = attains_norm_model(&model).unwrap();
        assert!(!verdict.attained);
    }

    #[test]
    fn min_spectrum_atom_rule_on_mixed_models() {
        // atom below the interval: attained
        let model = SpectralModel {
            atoms: vec![crate::symbolcalc::Atom { value: 0.2, label: None }],
            essential: vec![EssentialComponent::Interval {
                lo: 0.3,
                hi: 0.9,
                measure_class: crate::symbolcalc::MeasureClass::AbsolutelyContinuous,
            }],
        };
        let verdict = attains_norm_model(&model).unwrap();
        assert!(verdict.attained);
        assert_eq!(model.min_point(), Some(0.2));
        // interval below the atom: not attained
        let model = SpectralModel {
            atoms: vec![crate::symbolcalc::Atom { value: 0.95, label: None }],
            essential: vec![EssentialComponent::Interval {
                lo: 0.3,
                hi: 0.9,
                measure_class: crate::symbolcalc::MeasureClass::AbsolutelyContinuous,
            }],
        };
        let verdict = attains_norm_model(&model).unwrap();
        assert!(!verdict.attained);
    }

    #[test]
    fn buckholtz_member_on_single_atom() {
        let model = SpectralModel::from_atoms(&[0.2]);
        let elem = linear_family(&model, 1.0, -1.0).unwrap();
        assert!((elem.norm().unwrap() - 5.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn linear_family_at_zero_is_t() {
        let model = SpectralModel::from_atoms(&[0.2, 0.6]);
        let fam = linear_family(&model, 0.0, 0.0).unwrap();
        let t = t_element(&model, false, false).unwrap();
        for x in [0.2, 0.6] {
            let a = fam.symbol_at(x).unwrap();
            let b = t.symbol_at(x).unwrap();
            assert!((a.phi - b.phi).abs() < 1e-12);
            assert!((a.psi - b.psi).abs() < 1e-12);
        }
        let va = crate::attain::decide_attainment(&fam).unwrap();
        let vb = crate::attain::decide_attainment(&t).unwrap();
        assert_eq!(va.attained, vb.attained);
        assert!((va.norm - vb.norm).abs() < 1e-12);
    }

    #[test]
    fn linear_family_matches_closed_forms() {
        let model = SpectralModel::from_atoms(&[0.2]);
        for &(alpha, beta) in &[(0.0, -1.0), (1.0, -1.0), (2.0, 0.5), (-0.5, 2.0), (0.0, 0.0)] {
            let elem = linear_family(&model, alpha, beta).unwrap();
            for k in 0..40 {
                let x = 0.05 + 0.9 * k as f64 / 39.0;
                let s = elem.symbol_at(x).unwrap();
                let (phi, omega) = linear_family_closed_form(alpha, beta, x);
                assert!(
                    (s.phi - phi).abs() <= 1e-12 * (1.0 + phi.abs()),
                    "phi mismatch at x={x}, ({alpha},{beta})"
                );
                assert!(
                    (s.omega_complex() - c(omega, 0.0)).norm() <= 1e-12 * (1.0 + omega.abs()),
                    "omega mismatch at x={x}, ({alpha},{beta})"
                );
            }
        }
        // spot value from the closed form: alpha=0, beta=-1 at x=0.2
        let (phi, _) = linear_family_closed_form(0.0, -1.0, 0.2);
        assert_eq!(phi, 5.0);
    }

    #[test]
    fn alternating_power_values_on_single_atom() {
        let model = SpectralModel::from_atoms(&[0.2]);
        let m1 = alternating_power(&model, 1).unwrap();
        assert!((m1.norm().unwrap() - 5.0f64.sqrt()).abs() < 1e-10);
        let m2 = alternating_power(&model, 2).unwrap();
        assert!((m2.norm().unwrap() - 5.0).abs() < 1e-9);
        let m4 = alternating_power(&model, 4).unwrap();
        assert!((m4.norm().unwrap() - 25.0).abs() < 1e-8);
    }

    #[test]
    fn even_alternating_power_is_diagonal() {
        let model = SpectralModel::from_atoms(&[0.2, 0.5]);
        for k in 1..=3usize {
            let elem = alternating_power(&model, 2 * k).unwrap();
            for x in [0.2, 0.5, 0.8] {
                let v = elem.symbol_values_at(x).unwrap();
                let expect = x.powi(-(k as i32));
                assert!((v[0][0] - c(expect, 0.0)).norm() <= 1e-10 * (1.0 + expect));
                for (i, j) in [(0, 1), (1, 0), (1, 1)] {
                    assert!(v[i][j].norm() <= 1e-10 * (1.0 + expect));
                }
            }
        }
    }

    #[test]
    fn reconstruction_identity_holds_at_dimension_32() {
        use crate::densekernel::orthonormalize_columns;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(320);
        for trial in 0..5 {
            let n = 32;
            let r = rng.gen_range(4..28usize);
            let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> ComplexMatrix {
                let entries = (0..n * n)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                orthonormalize_columns(&ComplexMatrix::new(n, n, entries))
            };
            let u1 = gauss(&mut rng);
            let u2 = gauss(&mut rng);
            let mut d = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                d[(i, i)] = c(rng.gen_range(0.5..1.5), 0.0);
            }
            let s = u1.mul(&d).mul(&u2);
            let mut p0 = ComplexMatrix::zeros(n, n);
            for i in 0..r {
                p0[(i, i)] = c(1.0, 0.0);
            }
            let t = s.mul(&p0).mul(&invert(&s).unwrap());
            let a = analyze_skew(&t, 1e-10).unwrap();
            assert!(
                a.afriat_residual <= 1e-9 * t.max_abs(),
                "trial {trial}: residual {:.3e}",
                a.afriat_residual
            );
            assert!(a.pq_norm < 1.0);
        }
    }

    #[test]
    fn skew_psi_decreasing_unique_minimal_maximizer() {
        // psi = 2/x for the skew symbol: the smallest spectrum point is the
        // unique maximizer on every model shape
        let models = [
            SpectralModel::from_atoms(&[0.3, 0.5, 0.9]),
            SpectralModel {
                atoms: vec![crate::symbolcalc::Atom { value: 0.4, label: None }],
                essential: vec![EssentialComponent::LimitPoint { value: 1.0 }],
            },
            SpectralModel {
                atoms: vec![],
                essential: vec![EssentialComponent::Interval {
                    lo: 0.25,
                    hi: 0.75,
                    measure_class: crate::symbolcalc::MeasureClass::AbsolutelyContinuous,
                }],
            },
        ];
        for model in &models {
            let elem = t_element(model, false, false).unwrap();
            let lam = crate::attain::lambda_max_default(&elem).unwrap();
            let min_point = model.min_point().unwrap();
            assert_eq!(lam.points.len(), 1, "model {model:?}");
            assert!((lam.points[0].x() - min_point).abs() <= 1e-9);
            assert!((lam.value - 1.0 / min_point).abs() <= 1e-9 * (1.0 + lam.value));
        }
    }

    #[test]
    fn linear_family_psi_monotone_and_above_scalar_squares() {
        let grid = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let model = SpectralModel::from_atoms(&[0.2, 0.6]);
        for &alpha in &grid {
            for &beta in &grid {
                let elem = linear_family(&model, alpha, beta).unwrap();
                // psi nonincreasing in x
                let mut prev = f64::INFINITY;
                for k in 0..60 {
                    let x = 0.02 + 0.96 * k as f64 / 59.0;
                    let psi = elem.symbol_at(x).unwrap().psi;
                    assert!(
                        psi <= prev * (1.0 + 1e-12) + 1e-12,
                        "psi increased at x={x} for ({alpha},{beta})"
                    );
                    prev = psi;
                }
                // lambda_max beats both squared scalars when min spectrum < 1
                let lam = crate::attain::lambda_max_default(&elem).unwrap();
                let s = 1.0 + alpha + beta;
                assert!(
                    lam.value > (s * s).max(beta * beta),
                    "lambda {} at ({alpha},{beta})",
                    lam.value
                );
            }
        }
    }

    #[test]
    fn example3_atoms_match_printed_values() {
        let (model, _) = example3_model(Ex3Variant::OneOverN, 3).unwrap();
        let atoms: Vec<f64> = model.atoms.iter().map(|a| a.value).collect();
        assert_eq!(atoms, vec![0.5, 0.8, 0.9]);
        let (model, _) = example3_model(Ex3Variant::TwoOverN, 3).unwrap();
        let atoms: Vec<f64> = model.atoms.iter().map(|a| a.value).collect();
        assert!((atoms[0] - 0.2).abs() < 1e-15);
        assert!((atoms[1] - 0.5).abs() < 1e-15);
        assert!((atoms[2] - 9.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn example3_element_is_diagonal_shift() {
        for variant in [Ex3Variant::OneOverN, Ex3Variant::TwoOverN] {
            let (_, elem) = example3_model(variant, 4).unwrap();
            for x in [0.3, 0.5, 0.9, 1.0] {
                let v = elem.symbol_values_at(x).unwrap();
                let expect = 1.0 / x - 2.0;
                assert!((v[0][0] - c(expect, 0.0)).norm() < 1e-10);
                assert!((v[1][1] - c(expect, 0.0)).norm() < 1e-10);
                assert!(v[0][1].norm() < 1e-10);
                assert!(v[1][0].norm() < 1e-10);
                // psi = 2 (2 - 1/x)^2
                let s = elem.symbol_at(x).unwrap();
                let psi_expect = 2.0 * (2.0 - 1.0 / x) * (2.0 - 1.0 / x);
                assert!((s.psi - psi_expect).abs() < 1e-9 * (1.0 + psi_expect));
            }
        }
    }
}
