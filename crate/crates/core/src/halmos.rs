//! Canonical decomposition of a pair of orthogonal projections.
//!
//! The space splits into four intersection subspaces plus two identified
//! copies of a generic part on which the pair acts through an angle operator
//! H with spectrum inside (0,1). `decompose` computes orthonormal bases for
//! all six pieces from concrete matrices, `reconstruct` rebuilds the pair,
//! and `extract_symbol` reads the scalar-plus-2x2-symbol form of any matrix
//! lying in the algebra generated by the pair.

use crate::densekernel::{
    check_orthogonal_projection, hermitian_eig, orthonormal_range, ComplexMatrix, DenseError,
};
use crate::symbolcalc::{
    build_element, SpectralModel, SubspaceKey, SymbolEntry, SymbolError, WStarElement,
};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Classification threshold: eigenvalues of the compressed projection within
/// this distance of {0,1} are assigned to intersection subspaces instead of
/// the generic part, where the pairing normalization sqrt(h(1-h)) degrades.
pub const CLASS_EPS: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum HalmosError {
    #[error("input is not an orthogonal projection within tolerance")]
    NotProjection,
    #[error("pairing of the two generic copies failed: {0}")]
    PairingFailure(String),
    #[error("matrix is not in the algebra: residual {residual:.3e} exceeds {allowed:.3e}")]
    NotInAlgebra { residual: f64, allowed: f64 },
    #[error("angle spectrum is degenerate: values {0} and {1} collide within tolerance")]
    DegenerateSpectrum(f64, f64),
    #[error("element does not match the decomposition: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Orthonormal bases for the six summands. The two generic families have
/// equal size m; column k of `generic_second` is the partner of column k of
/// `generic_first` under the angle `h_values[k]`.
#[derive(Debug, Clone)]
pub struct HalmosDecomposition {
    pub m00: ComplexMatrix,
    pub m01: ComplexMatrix,
    pub m10: ComplexMatrix,
    pub m11: ComplexMatrix,
    pub generic_first: ComplexMatrix,
    pub generic_second: ComplexMatrix,
    pub h_values: Vec<f64>,
}

impl HalmosDecomposition {
    pub fn dim(&self) -> usize {
        self.m00.rows()
    }

    pub fn generic_dim(&self) -> usize {
        self.h_values.len()
    }

    pub fn corner_dims(&self) -> [usize; 4] {
        [self.m00.cols(), self.m01.cols(), self.m10.cols(), self.m11.cols()]
    }

    fn corner(&self, key: SubspaceKey) -> &ComplexMatrix {
        match key {
            (0, 0) => &self.m00,
            (0, 1) => &self.m01,
            (1, 0) => &self.m10,
            (1, 1) => &self.m11,
            _ => unreachable!("subspace keys are binary pairs"),
        }
    }

    /// Present intersection subspaces.
    pub fn present_corners(&self) -> Vec<SubspaceKey> {
        [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
            .into_iter()
            .filter(|&k| self.corner(k).cols() > 0)
            .collect()
    }
}

pub fn decompose(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    tol: f64,
) -> Result<HalmosDecomposition, HalmosError> {
    decompose_with(p, q, tol, CLASS_EPS)
}

/// Decomposition with an explicit classification threshold for eigenvalues
/// near {0,1}.
pub fn decompose_with(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    tol: f64,
    class_eps: f64,
) -> Result<HalmosDecomposition, HalmosError> {
    if !p.is_square() || !q.is_square() || p.rows() != q.rows() {
        return Err(HalmosError::NotProjection);
    }
    if !check_orthogonal_projection(p, tol) || !check_orthogonal_projection(q, tol) {
        return Err(HalmosError::NotProjection);
    }
    let n = p.rows();
    let identity = ComplexMatrix::identity(n);
    let p_complement = identity.sub(p);

    let mut m00_cols: Vec<ComplexMatrix> = Vec::new();
    let mut m01_cols: Vec<ComplexMatrix> = Vec::new();
    let mut generic: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = Vec::new();

    // Ran P splits by the eigenvalues mu of Q compressed to it: mu ~ 1 is
    // the intersection with Ran Q, mu ~ 0 the intersection with Ker Q, and
    // interior mu pairs with the second copy at angle h = 1 - mu.
    let basis_p = orthonormal_range(p, tol);
    if basis_p.cols() > 0 {
        let compressed = basis_p.adjoint().mul(q).mul(&basis_p);
        let eig = hermitian_eig(&compressed, class_eps.max(1e-12))?;
        for k in 0..eig.values.len() {
            let mu = eig.values[k];
            let vec = basis_p.mul_vec(&eig.vectors.column(k));
            if mu >= 1.0 - class_eps {
                m00_cols.push(column_matrix(&vec));
            } else if mu <= class_eps {
                m01_cols.push(column_matrix(&vec));
            } else {
                let h = 1.0 - mu;
                let qe = q.mul_vec(&vec);
                let mut partner: Vec<Complex64> = p_complement.mul_vec(&qe);
                let denom = (h * (1.0 - h)).sqrt();
                let norm: f64 = partner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let deviation = (norm / denom - 1.0).abs();
                if deviation > 10.0 * tol {
                    return Err(HalmosError::PairingFailure(format!(
                        "partner norm deviates from 1 by {deviation:.3e} at h={h}"
                    )));
                }
                for z in partner.iter_mut() {
                    *z /= Complex64::new(denom, 0.0);
                }
                generic.push((h, vec, partner));
            }
        }
    }

    // Ker P splits by the eigenvalues of Q compressed to it; the interior
    // part is already covered by the partners above.
    let mut m10_cols: Vec<ComplexMatrix> = Vec::new();
    let mut m11_cols: Vec<ComplexMatrix> = Vec::new();
    let basis_k = orthonormal_range(&p_complement, tol);
    if basis_k.cols() > 0 {
        let compressed = basis_k.adjoint().mul(q).mul(&basis_k);
        let eig = hermitian_eig(&compressed, class_eps.max(1e-12))?;
        for k in 0..eig.values.len() {
            let nu = eig.values[k];
            let vec = basis_k.mul_vec(&eig.vectors.column(k));
            if nu >= 1.0 - class_eps {
                m10_cols.push(column_matrix(&vec));
            } else if nu <= class_eps {
                m11_cols.push(column_matrix(&vec));
            }
        }
    }

    generic.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let h_values: Vec<f64> = generic.iter().map(|g| g.0).collect();
    let first_cols: Vec<ComplexMatrix> = generic.iter().map(|g| column_matrix(&g.1)).collect();
    let second_cols: Vec<ComplexMatrix> = generic.iter().map(|g| column_matrix(&g.2)).collect();

    let d = HalmosDecomposition {
        m00: concat_or_empty(n, &m00_cols),
        m01: concat_or_empty(n, &m01_cols),
        m10: concat_or_empty(n, &m10_cols),
        m11: concat_or_empty(n, &m11_cols),
        generic_first: concat_or_empty(n, &first_cols),
        generic_second: concat_or_empty(n, &second_cols),
        h_values,
    };
    let total: usize = d.corner_dims().iter().sum::<usize>() + 2 * d.generic_dim();
    if total != n {
        return Err(HalmosError::PairingFailure(format!(
            "dimension bookkeeping failed: {total} of {n} accounted for"
        )));
    }
    Ok(d)
}

fn column_matrix(v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::new(v.len(), 1, v.to_vec())
}

fn concat_or_empty(n: usize, cols: &[ComplexMatrix]) -> ComplexMatrix {
    if cols.is_empty() {
        ComplexMatrix::zeros(n, 0)
    } else {
        let refs: Vec<&ComplexMatrix> = cols.iter().collect();
        ComplexMatrix::hcat(&refs)
    }
}

/// Rebuild the pair of projections from a decomposition, in the original
/// coordinates.
pub fn reconstruct(d: &HalmosDecomposition) -> (ComplexMatrix, ComplexMatrix) {
    let n = d.dim();
    let m = d.generic_dim();
    let basis = ComplexMatrix::hcat(&[
        &d.m00,
        &d.m01,
        &d.m10,
        &d.m11,
        &d.generic_first,
        &d.generic_second,
    ]);
    let [k00, k01, k10, k11] = d.corner_dims();

    let mut p0 = ComplexMatrix::zeros(n, n);
    let mut q0 = ComplexMatrix::zeros(n, n);
    let one = Complex64::new(1.0, 0.0);
    // corner blocks: P = (1,1,0,0), Q = (1,0,1,0)
    for i in 0..k00 {
        p0[(i, i)] = one;
        q0[(i, i)] = one;
    }
    for i in k00..k00 + k01 {
        p0[(i, i)] = one;
    }
    for i in k00 + k01..k00 + k01 + k10 {
        q0[(i, i)] = one;
    }
    let base = k00 + k01 + k10 + k11;
    for k in 0..m {
        let f = base + k; // first copy
        let s = base + m + k; // second copy
        let h = d.h_values[k];
        let cross = (h * (1.0 - h)).sqrt();
        p0[(f, f)] = one;
        q0[(f, f)] = Complex64::new(1.0 - h, 0.0);
        q0[(f, s)] = Complex64::new(cross, 0.0);
        q0[(s, f)] = Complex64::new(cross, 0.0);
        q0[(s, s)] = Complex64::new(h, 0.0);
    }
    let adj = basis.adjoint();
    let p = basis.mul(&p0).mul(&adj).hermitian_part();
    let q = basis.mul(&q0).mul(&adj).hermitian_part();
    (p, q)
}

/// Read the scalars and the 2x2 symbol tables of a matrix through a
/// decomposition, verifying that the matrix actually lies in the algebra.
/// Requires a simple angle spectrum.
pub fn extract_symbol(
    d: &HalmosDecomposition,
    a: &ComplexMatrix,
    tol: f64,
) -> Result<WStarElement, HalmosError> {
    assert!(a.is_square() && a.rows() == d.dim(), "operator must act on the decomposed space");
    for k in 1..d.h_values.len() {
        let gap = d.h_values[k] - d.h_values[k - 1];
        if gap.abs() <= tol {
            return Err(HalmosError::DegenerateSpectrum(d.h_values[k - 1], d.h_values[k]));
        }
    }

    let mut scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
    for key in d.present_corners() {
        let basis = d.corner(key);
        let col = basis.column(0);
        let image = a.mul_vec(&col);
        let value: Complex64 = col.iter().zip(&image).map(|(b, y)| b.conj() * y).sum();
        scalars.insert(key, value);
    }

    let m = d.generic_dim();
    let mut tables: [Vec<Complex64>; 4] = [
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
        Vec::with_capacity(m),
    ];
    for k in 0..m {
        let e = d.generic_first.column(k);
        let f = d.generic_second.column(k);
        let ae = a.mul_vec(&e);
        let af = a.mul_vec(&f);
        let dot = |left: &[Complex64], right: &[Complex64]| -> Complex64 {
            left.iter().zip(right).map(|(l, r)| l.conj() * r).sum()
        };
        tables[0].push(dot(&e, &ae));
        tables[1].push(dot(&e, &af));
        tables[2].push(dot(&f, &ae));
        tables[3].push(dot(&f, &af));
    }

    // residual check: the element must reproduce the matrix
    let assembled = assemble_raw(d, &scalars, &tables);
    let residual = a.sub(&assembled).max_abs();
    let allowed = tol * a.max_abs();
    if residual > allowed {
        return Err(HalmosError::NotInAlgebra { residual, allowed });
    }

    let model = SpectralModel::from_atoms(&d.h_values);
    let [t00, t01, t10, t11] = tables;
    let symbol = [
        [SymbolEntry::Table(t00), SymbolEntry::Table(t01)],
        [SymbolEntry::Table(t10), SymbolEntry::Table(t11)],
    ];
    Ok(build_element(scalars, symbol, model)?)
}

/// Instantiate an element as a concrete matrix through a decomposition. The
/// element's atoms must match the decomposition's angle values.
pub fn assemble_element(
    d: &HalmosDecomposition,
    elem: &WStarElement,
) -> Result<ComplexMatrix, HalmosError> {
    let atoms = elem.model().atoms.clone();
    if atoms.len() != d.h_values.len() {
        return Err(HalmosError::ModelMismatch(format!(
            "element has {} atoms, decomposition has {} angle values",
            atoms.len(),
            d.h_values.len()
        )));
    }
    for (a, h) in atoms.iter().zip(&d.h_values) {
        if (a.value - h).abs() > 1e-9 {
            return Err(HalmosError::ModelMismatch(format!(
                "atom {} does not match angle value {h}",
                a.value
            )));
        }
    }
    if elem.model().has_essential() {
        return Err(HalmosError::ModelMismatch(
            "element with essential spectrum cannot be instantiated on a finite decomposition"
                .into(),
        ));
    }
    let mut scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
    for key in d.present_corners() {
        let value = elem.scalars().get(&key).copied().ok_or_else(|| {
            HalmosError::ModelMismatch(format!(
                "element lacks a scalar for present subspace ({},{})",
                key.0, key.1
            ))
        })?;
        scalars.insert(key, value);
    }
    let mut tables: [Vec<Complex64>; 4] = Default::default();
    for &h in &d.h_values {
        let v = elem.symbol_values_at(h)?;
        tables[0].push(v[0][0]);
        tables[1].push(v[0][1]);
        tables[2].push(v[1][0]);
        tables[3].push(v[1][1]);
    }
    Ok(assemble_raw(d, &scalars, &tables))
}

fn assemble_raw(
    d: &HalmosDecomposition,
    scalars: &BTreeMap<SubspaceKey, Complex64>,
    tables: &[Vec<Complex64>; 4],
) -> ComplexMatrix {
    let n = d.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for (&key, &value) in scalars {
        let basis = d.corner(key);
        for c in 0..basis.cols() {
            let col = basis.column(c);
            rank_one_update(&mut out, &col, &col, value);
        }
    }
    for k in 0..d.generic_dim() {
        let e = d.generic_first.column(k);
        let f = d.generic_second.column(k);
        rank_one_update(&mut out, &e, &e, tables[0][k]);
        rank_one_update(&mut out, &e, &f, tables[1][k]);
        rank_one_update(&mut out, &f, &e, tables[2][k]);
        rank_one_update(&mut out, &f, &f, tables[3][k]);
    }
    out
}

/// out += value * left * right^*
fn rank_one_update(out: &mut ComplexMatrix, left: &[Complex64], right: &[Complex64], value: Complex64) {
    for i in 0..left.len() {
        let li = value * left[i];
        if li == Complex64::new(0.0, 0.0) {
            continue;
        }
        for j in 0..right.len() {
            out[(i, j)] += li * right[j].conj();
        }
    }
}
