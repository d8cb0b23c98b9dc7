//! Elements of the algebra generated by two projections, represented by four
//! scalars on the intersection subspaces plus a 2x2 matrix of functions of
//! the angle operator ("the symbol"), over a declared spectral model.
//!
//! The derived quantities at a point x are
//!   phi(x)   = sum of |entry|^2            (squared Frobenius norm),
//!   omega(x) = determinant of the 2x2 symbol,
//!   psi(x)   = phi + sqrt(phi^2 - 4|omega|^2),
//! and the operator norm is max(max |a_ij|, sqrt(max psi/2)). The radicand is
//! nonnegative for every genuine element (AM-GM on the two singular values),
//! so a materially negative radicand indicates inconsistent input.

use crate::exprlang::{self, EvalError, Expr};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Sample count per essential interval when validating symbol evaluability.
pub const VALIDATION_GRID: usize = 1024;
/// Tolerance for matching a query point against a tabulated atom.
pub const ATOM_LOOKUP_TOL: f64 = 1e-12;
/// Relative clamp for tiny negative psi radicands caused by roundoff.
pub const RADICAND_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("elements live over different models or scalar supports: {0}")]
    ModelMismatch(String),
    #[error("psi radicand {radicand:.3e} at x={x} is negative beyond roundoff")]
    RadicandNegative { x: f64, radicand: f64 },
    #[error("x={x} is not an atom of a tabulated symbol")]
    NotAnAtom { x: f64 },
    #[error("symbol evaluation failed at x={x}: {source}")]
    Eval { x: f64, source: EvalError },
}

/// Measure class declared for an essential spectral interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureClass {
    AbsolutelyContinuous,
    Unspecified,
}

/// Spectrum point carrying nonzero point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Essential (non-atomic) spectral component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EssentialComponent {
    /// Closed interval of essential spectrum with a declared measure class.
    Interval { lo: f64, hi: f64, measure_class: MeasureClass },
    /// Isolated accumulation point; carries zero point mass.
    LimitPoint { value: f64 },
}

/// Finite description of the spectrum of the angle operator: atoms with
/// nonzero mass, plus essential components. Empty means the generic part of
/// the space is absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralModel {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub essential: Vec<EssentialComponent>,
}

impl SpectralModel {
    pub fn from_atoms(values: &[f64]) -> Self {
        SpectralModel {
            atoms: values.iter().map(|&value| Atom { value, label: None }).collect(),
            essential: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.essential.is_empty()
    }

    pub fn has_essential(&self) -> bool {
        !self.essential.is_empty()
    }

    /// Leftmost spectrum point, if any.
    pub fn min_point(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut push = |v: f64| {
            best = Some(match best {
                Some(b) => b.min(v),
                None => v,
            });
        };
        for a in &self.atoms {
            push(a.value);
        }
        for comp in &self.essential {
            match comp {
                EssentialComponent::Interval { lo, .. } => push(*lo),
                EssentialComponent::LimitPoint { value } => push(*value),
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), SymbolError> {
        for (k, a) in self.atoms.iter().enumerate() {
            if !(a.value > 0.0 && a.value < 1.0) || !a.value.is_finite() {
                return Err(SymbolError::Validation {
                    field: format!("atoms[{k}]"),
                    message: format!("atom must lie strictly inside (0,1), got {}", a.value),
                });
            }
            for other in &self.atoms[..k] {
                if other.value == a.value {
                    return Err(SymbolError::Validation {
                        field: format!("atoms[{k}]"),
                        message: format!("duplicate atom value {}", a.value),
                    });
                }
            }
        }
        for (k, comp) in self.essential.iter().enumerate() {
            match comp {
                EssentialComponent::Interval { lo, hi, .. } => {
                    if !(lo.is_finite() && hi.is_finite() && *lo <= *hi && *lo >= 0.0 && *hi <= 1.0) {
                        return Err(SymbolError::Validation {
                            field: format!("essential[{k}]"),
                            message: format!("interval [{lo},{hi}] must satisfy 0 <= lo <= hi <= 1"),
                        });
                    }
                }
                EssentialComponent::LimitPoint { value } => {
                    if !(value.is_finite() && *value >= 0.0 && *value <= 1.0) {
                        return Err(SymbolError::Validation {
                            field: format!("essential[{k}]"),
                            message: format!("limit point {value} must lie in [0,1]"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Structural equality of the supports, ignoring atom labels.
    pub fn same_support(&self, other: &SpectralModel) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| a.value == b.value)
            && self.essential == other.essential
    }
}

/// One entry of the 2x2 symbol: a closed-form expression in x, or a table of
/// values keyed by the model's atoms (used for symbols read off concrete
/// matrices). Tables are undefined on essential components.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolEntry {
    Expr(Expr),
    Table(Vec<Complex64>),
}

impl SymbolEntry {
    pub fn zero() -> Self {
        SymbolEntry::Expr(Expr::constant(Complex64::new(0.0, 0.0)))
    }

    pub fn one() -> Self {
        SymbolEntry::Expr(Expr::constant(Complex64::new(1.0, 0.0)))
    }
}

/// Index of an intersection subspace; `(0,1)` is "inside the first range,
/// orthogonal to the second" and so on.
pub type SubspaceKey = (u8, u8);

/// phi, omega and psi of a symbol at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymbolSample {
    pub x: f64,
    pub phi: f64,
    pub omega: (f64, f64),
    pub psi: f64,
}

impl SymbolSample {
    pub fn omega_complex(&self) -> Complex64 {
        Complex64::new(self.omega.0, self.omega.1)
    }
}

/// An element of the two-projection algebra: scalars on the present
/// intersection subspaces plus a 2x2 symbol over a spectral model.
#[derive(Debug, Clone, PartialEq)]
pub struct WStarElement {
    scalars: BTreeMap<SubspaceKey, Complex64>,
    symbol: [[SymbolEntry; 2]; 2],
    model: SpectralModel,
}

/// Validating constructor. Checks the model invariants, the scalar keys, and
/// that every expression entry evaluates finitely on all atoms, limit points,
/// and a sampling grid on each essential interval.
pub fn build_element(
    scalars: BTreeMap<SubspaceKey, Complex64>,
    symbol: [[SymbolEntry; 2]; 2],
    model: SpectralModel,
) -> Result<WStarElement, SymbolError> {
    model.validate()?;
    for key in scalars.keys() {
        if key.0 > 1 || key.1 > 1 {
            return Err(SymbolError::Validation {
                field: "scalars".into(),
                message: format!("subspace key ({},{}) outside {{0,1}}x{{0,1}}", key.0, key.1),
            });
        }
    }
    if scalars.is_empty() && model.is_empty() {
        return Err(SymbolError::Validation {
            field: "model".into(),
            message: "element has neither scalars nor a spectral model".into(),
        });
    }
    let elem = WStarElement { scalars, symbol, model };
    if !elem.model.is_empty() {
        elem.check_evaluability()?;
    }
    Ok(elem)
}

impl WStarElement {
    pub fn scalars(&self) -> &BTreeMap<SubspaceKey, Complex64> {
        &self.scalars
    }

    pub fn symbol(&self) -> &[[SymbolEntry; 2]; 2] {
        &self.symbol
    }

    pub fn model(&self) -> &SpectralModel {
        &self.model
    }

    pub fn max_scalar_modulus(&self) -> Option<f64> {
        self.scalars
            .values()
            .map(|z| z.norm())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    fn check_evaluability(&self) -> Result<(), SymbolError> {
        let mut probes: Vec<f64> = self.model.atoms.iter().map(|a| a.value).collect();
        for comp in &self.model.essential {
            match comp {
                EssentialComponent::Interval { lo, hi, .. } => {
                    let n = VALIDATION_GRID.max(2);
                    for k in 0..n {
                        let t = k as f64 / (n - 1) as f64;
                        probes.push(lo + t * (hi - lo));
                    }
                }
                EssentialComponent::LimitPoint { value } => probes.push(*value),
            }
        }
        let has_tables = self
            .symbol
            .iter()
            .flatten()
            .any(|e| matches!(e, SymbolEntry::Table(_)));
        if has_tables && self.model.has_essential() {
            return Err(SymbolError::Validation {
                field: "symbol".into(),
                message: "tabulated symbols cannot live over essential spectrum".into(),
            });
        }
        for (i, row) in self.symbol.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                match entry {
                    SymbolEntry::Table(t) => {
                        if t.len() != self.model.atoms.len() {
                            return Err(SymbolError::Validation {
                                field: format!("symbol[{i}][{j}]"),
                                message: format!(
                                    "table has {} entries for {} atoms",
                                    t.len(),
                                    self.model.atoms.len()
                                ),
                            });
                        }
                    }
                    SymbolEntry::Expr(e) => {
                        for &x in &probes {
                            exprlang::evaluate(e, x)
                                .map_err(|source| SymbolError::Eval { x, source })?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn entry_at(&self, i: usize, j: usize, x: f64) -> Result<Complex64, SymbolError> {
        match &self.symbol[i][j] {
            SymbolEntry::Expr(e) => {
                exprlang::evaluate(e, x).map_err(|source| SymbolError::Eval { x, source })
            }
            SymbolEntry::Table(t) => {
                let idx = self
                    .model
                    .atoms
                    .iter()
                    .position(|a| (a.value - x).abs() <= ATOM_LOOKUP_TOL)
                    .ok_or(SymbolError::NotAnAtom { x })?;
                Ok(t[idx])
            }
        }
    }

    /// Evaluate the 2x2 symbol at x.
    pub fn symbol_values_at(&self, x: f64) -> Result<[[Complex64; 2]; 2], SymbolError> {
        Ok([
            [self.entry_at(0, 0, x)?, self.entry_at(0, 1, x)?],
            [self.entry_at(1, 0, x)?, self.entry_at(1, 1, x)?],
        ])
    }

    /// phi, omega, psi at x. A radicand below the roundoff clamp is an error;
    /// smaller negative values are clamped to zero.
    pub fn symbol_at(&self, x: f64) -> Result<SymbolSample, SymbolError> {
        let v = self.symbol_values_at(x)?;
        let phi: f64 = v.iter().flatten().map(|z| z.norm_sqr()).sum();
        let omega = v[0][0] * v[1][1] - v[0][1] * v[1][0];
        let radicand = phi * phi - 4.0 * omega.norm_sqr();
        if radicand < -RADICAND_CLAMP * (1.0 + phi * phi) {
            return Err(SymbolError::RadicandNegative { x, radicand });
        }
        let psi = phi + radicand.max(0.0).sqrt();
        Ok(SymbolSample { x, phi, omega: (omega.re, omega.im), psi })
    }

    /// Conjugate transpose: scalars conjugated in place, symbol transposed
    /// with conj wrapped around every entry.
    pub fn adjoint(&self) -> WStarElement {
        let scalars = self
            .scalars
            .iter()
            .map(|(&k, &v)| (k, v.conj()))
            .collect();
        let conj_entry = |i: usize, j: usize| -> SymbolEntry {
            match &self.symbol[j][i] {
                SymbolEntry::Expr(e) => SymbolEntry::Expr(Expr::Conj(Box::new(e.clone()))),
                SymbolEntry::Table(t) => SymbolEntry::Table(t.iter().map(|z| z.conj()).collect()),
            }
        };
        WStarElement {
            scalars,
            symbol: [
                [conj_entry(0, 0), conj_entry(0, 1)],
                [conj_entry(1, 0), conj_entry(1, 1)],
            ],
            model: self.model.clone(),
        }
    }

    fn require_compatible(&self, other: &WStarElement) -> Result<(), SymbolError> {
        if !self.model.same_support(&other.model) {
            return Err(SymbolError::ModelMismatch("spectral models differ".into()));
        }
        if self.scalars.keys().ne(other.scalars.keys()) {
            return Err(SymbolError::ModelMismatch(
                "present intersection subspaces differ".into(),
            ));
        }
        Ok(())
    }

    /// Operator product: scalars multiply pointwise, symbols compose as 2x2
    /// matrices. Expression entries stay symbolic; any tabulated operand
    /// collapses the result to tables on the atoms.
    pub fn multiply(&self, other: &WStarElement) -> Result<WStarElement, SymbolError> {
        self.require_compatible(other)?;
        let scalars = self
            .scalars
            .iter()
            .map(|(&k, &v)| (k, v * other.scalars[&k]))
            .collect();
        let mut rows: Vec<[SymbolEntry; 2]> = Vec::with_capacity(2);
        for i in 0..2 {
            let mut row: Vec<SymbolEntry> = Vec::with_capacity(2);
            for j in 0..2 {
                row.push(self.product_entry(other, i, j)?);
            }
            rows.push([row.remove(0), row.remove(0)]);
        }
        let symbol = [rows.remove(0), rows.remove(0)];
        Ok(WStarElement { scalars, symbol, model: self.model.clone() })
    }

    fn product_entry(
        &self,
        other: &WStarElement,
        i: usize,
        j: usize,
    ) -> Result<SymbolEntry, SymbolError> {
        let exprs = |a: &SymbolEntry, b: &SymbolEntry| -> Option<(Expr, Expr)> {
            match (a, b) {
                (SymbolEntry::Expr(x), SymbolEntry::Expr(y)) => Some((x.clone(), y.clone())),
                _ => None,
            }
        };
        let lhs0 = &self.symbol[i][0];
        let lhs1 = &self.symbol[i][1];
        let rhs0 = &other.symbol[0][j];
        let rhs1 = &other.symbol[1][j];
        if let (Some((a0, b0)), Some((a1, b1))) = (exprs(lhs0, rhs0), exprs(lhs1, rhs1)) {
            return Ok(SymbolEntry::Expr(a0.mul(b0).add(a1.mul(b1))));
        }
        // at least one table: evaluate pointwise on the atoms
        let mut values = Vec::with_capacity(self.model.atoms.len());
        for atom in &self.model.atoms {
            let x = atom.value;
            let v = self.entry_at(i, 0, x)? * other.entry_at(0, j, x)?
                + self.entry_at(i, 1, x)? * other.entry_at(1, j, x)?;
            values.push(v);
        }
        Ok(SymbolEntry::Table(values))
    }

    /// Operator sum.
    pub fn add(&self, other: &WStarElement) -> Result<WStarElement, SymbolError> {
        self.require_compatible(other)?;
        let scalars = self
            .scalars
            .iter()
            .map(|(&k, &v)| (k, v + other.scalars[&k]))
            .collect();
        let mut entries: Vec<SymbolEntry> = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let entry = match (&self.symbol[i][j], &other.symbol[i][j]) {
                    (SymbolEntry::Expr(a), SymbolEntry::Expr(b)) => {
                        SymbolEntry::Expr(a.clone().add(b.clone()))
                    }
                    _ => {
                        let mut values = Vec::with_capacity(self.model.atoms.len());
                        for atom in &self.model.atoms {
                            values.push(
                                self.entry_at(i, j, atom.value)?
                                    + other.entry_at(i, j, atom.value)?,
                            );
                        }
                        SymbolEntry::Table(values)
                    }
                };
                entries.push(entry);
            }
        }
        let mut it = entries.into_iter();
        let symbol = [
            [it.next().unwrap(), it.next().unwrap()],
            [it.next().unwrap(), it.next().unwrap()],
        ];
        Ok(WStarElement { scalars, symbol, model: self.model.clone() })
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> WStarElement {
        let scalars = self.scalars.iter().map(|(&k, &v)| (k, v * c)).collect();
        let scale_entry = |e: &SymbolEntry| -> SymbolEntry {
            match e {
                SymbolEntry::Expr(x) => SymbolEntry::Expr(Expr::constant(c).mul(x.clone())),
                SymbolEntry::Table(t) => SymbolEntry::Table(t.iter().map(|z| z * c).collect()),
            }
        };
        WStarElement {
            scalars,
            symbol: [
                [scale_entry(&self.symbol[0][0]), scale_entry(&self.symbol[0][1])],
                [scale_entry(&self.symbol[1][0]), scale_entry(&self.symbol[1][1])],
            ],
            model: self.model.clone(),
        }
    }

    /// Identity element with the same model and scalar support.
    pub fn identity_like(&self) -> WStarElement {
        let scalars = self
            .scalars
            .keys()
            .map(|&k| (k, Complex64::new(1.0, 0.0)))
            .collect();
        WStarElement {
            scalars,
            symbol: [
                [SymbolEntry::one(), SymbolEntry::zero()],
                [SymbolEntry::zero(), SymbolEntry::one()],
            ],
            model: self.model.clone(),
        }
    }

    /// Operator norm per the closed formula: the scalar moduli compete with
    /// sqrt of the maximum of psi/2 over the spectral model.
    pub fn norm(&self) -> Result<f64, crate::attain::AttainError> {
        let scalar_max = self.max_scalar_modulus();
        if self.model.is_empty() {
            return Ok(scalar_max.unwrap_or(0.0));
        }
        let lam = crate::attain::lambda_max_default(self)?;
        let spectral = lam.value.max(0.0).sqrt();
        Ok(scalar_max.map_or(spectral, |s| s.max(spectral)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expr(s: &str) -> SymbolEntry {
        SymbolEntry::Expr(parse(s).unwrap())
    }

    pub(crate) fn skew_symbol() -> [[SymbolEntry; 2]; 2] {
        [
            [expr("1"), expr("-sqrt(1/x - 1)")],
            [expr("0"), expr("0")],
        ]
    }

    fn identity_symbol() -> [[SymbolEntry; 2]; 2] {
        [[expr("1"), expr("0")], [expr("0"), expr("1")]]
    }

    fn atom_model(values: &[f64]) -> SpectralModel {
        SpectralModel::from_atoms(values)
    }

    #[test]
    fn build_accepts_skew_symbol() {
        let scalars: BTreeMap<SubspaceKey, Complex64> =
            [((0, 1), c(1.0, 0.0)), ((1, 0), c(0.0, 0.0))].into();
        let elem = build_element(scalars, skew_symbol(), atom_model(&[0.2])).unwrap();
        assert_eq!(elem.scalars().len(), 2);
    }

    #[test]
    fn build_accepts_identity_on_one_atom() {
        let elem = build_element(BTreeMap::new(), identity_symbol(), atom_model(&[0.5])).unwrap();
        let s = elem.symbol_at(0.5).unwrap();
        assert_eq!(s.phi, 2.0);
        assert_eq!(s.omega_complex(), c(1.0, 0.0));
        assert_eq!(s.psi, 2.0);
    }

    #[test]
    fn build_rejects_atom_outside_open_interval() {
        let err = build_element(
            BTreeMap::new(),
            [[expr("1/x"), expr("0")], [expr("0"), expr("0")]],
            atom_model(&[0.0]),
        )
        .unwrap_err();
        assert!(matches!(err, SymbolError::Validation { .. }), "{err}");
    }

    #[test]
    fn build_rejects_division_blowup_on_atom() {
        // expression fine as syntax, non-evaluable at the atom 1.0 ... atom 1.0
        // itself is already invalid, so use an interval touching 0 instead
        let model = SpectralModel {
            atoms: vec![],
            essential: vec![EssentialComponent::Interval {
                lo: 0.0,
                hi: 0.5,
                measure_class: MeasureClass::AbsolutelyContinuous,
            }],
        };
        let err = build_element(
            BTreeMap::new(),
            [[expr("1/x"), expr("0")], [expr("0"), expr("0")]],
            model,
        )
        .unwrap_err();
        assert!(matches!(err, SymbolError::Eval { .. }), "{err}");
    }

    #[test]
    fn skew_sample_values() {
        let elem = build_element(BTreeMap::new(), skew_symbol(), atom_model(&[0.2])).unwrap();
        let s = elem.symbol_at(0.2).unwrap();
        assert!((s.phi - 5.0).abs() < 1e-14);
        assert!(s.omega_complex().norm() < 1e-14);
        assert!((s.psi - 10.0).abs() < 1e-13);
    }

    #[test]
    fn golden_symbol_sample() {
        let sym = [[expr("1"), expr("1")], [expr("0"), expr("1")]];
        let elem = build_element(BTreeMap::new(), sym, atom_model(&[0.5])).unwrap();
        let s = elem.symbol_at(0.5).unwrap();
        assert_eq!(s.phi, 3.0);
        assert_eq!(s.omega_complex(), c(1.0, 0.0));
        assert!((s.psi - (3.0 + 5.0f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn adjoint_is_involutive_on_samples() {
        let scalars: BTreeMap<SubspaceKey, Complex64> = [((0, 1), c(1.0, -2.0))].into();
        let sym = [[expr("x"), expr("sqrt(1/x-1)")], [expr("i*x"), expr("2")]];
        let elem = build_element(scalars, sym, atom_model(&[0.3, 0.7])).unwrap();
        let back = elem.adjoint().adjoint();
        for x in [0.3, 0.7] {
            let a = elem.symbol_values_at(x).unwrap();
            let b = back.symbol_values_at(x).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() <= 1e-14);
                }
            }
        }
        assert_eq!(back.scalars()[&(0, 1)], c(1.0, -2.0));
    }

    #[test]
    fn adjoint_transposes_and_conjugates() {
        let elem = build_element(BTreeMap::new(), skew_symbol(), atom_model(&[0.2])).unwrap();
        let adj = elem.adjoint();
        let v = adj.symbol_values_at(0.2).unwrap();
        assert_eq!(v[0][0], c(1.0, 0.0));
        assert_eq!(v[0][1], c(0.0, 0.0));
        assert!((v[1][0] - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn product_with_adjoint_traces_to_phi() {
        // tr Phi_{T*T} = phi_T and det Phi_{T*T} = |omega_T|^2
        let t = build_element(BTreeMap::new(), skew_symbol(), atom_model(&[0.2, 0.6])).unwrap();
        let tt = t.adjoint().multiply(&t).unwrap();
        for x in [0.2, 0.6] {
            let v = tt.symbol_values_at(x).unwrap();
            let trace = v[0][0] + v[1][1];
            let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            assert!((trace - c(1.0 / x, 0.0)).norm() < 1e-12);
            assert!(det.norm() < 1e-12);
        }
    }

    #[test]
    fn multiply_by_identity_is_identity_on_samples() {
        let t = build_element(BTreeMap::new(), skew_symbol(), atom_model(&[0.2, 0.6])).unwrap();
        let prod = t.identity_like().multiply(&t).unwrap();
        for x in [0.2, 0.6] {
            let a = t.symbol_values_at(x).unwrap();
            let b = prod.symbol_values_at(x).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn alternating_product_collapses_to_diagonal() {
        // T T* evaluates to [[1/x, 0], [0, 0]]
        let t = build_element(BTreeMap::new(), skew_symbol(), atom_model(&[0.2])).unwrap();
        let m = t.multiply(&t.adjoint()).unwrap();
        let v = m.symbol_values_at(0.2).unwrap();
        assert!((v[0][0] - c(5.0, 0.0)).norm() < 1e-12);
        for (i, j) in [(0, 1), (1, 0), (1, 1)] {
            assert!(v[i][j].norm() < 1e-12);
        }
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let a = build_element(BTreeMap::new(), identity_symbol(), atom_model(&[0.5])).unwrap();
        let b = build_element(BTreeMap::new(), identity_symbol(), atom_model(&[0.4])).unwrap();
        assert!(matches!(a.multiply(&b), Err(SymbolError::ModelMismatch(_))));
    }

    #[test]
    fn norm_with_scalars_only() {
        let scalars: BTreeMap<SubspaceKey, Complex64> = [((0, 1), c(3.0, 0.0))].into();
        let elem = build_element(scalars, identity_symbol(), SpectralModel::default()).unwrap();
        assert_eq!(elem.norm().unwrap(), 3.0);
    }

    #[test]
    fn norm_of_skew_symbol_on_single_atom() {
        let scalars: BTreeMap<SubspaceKey, Complex64> = [((0, 1), c(1.0, 0.0))].into();
        let elem = build_element(scalars, skew_symbol(), atom_model(&[0.2])).unwrap();
        assert!((elem.norm().unwrap() - 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn norm_of_golden_symbol_matches_singular_value_oracle() {
        let sym = [[expr("1"), expr("1")], [expr("0"), expr("1")]];
        let elem = build_element(BTreeMap::new(), sym, atom_model(&[0.37])).unwrap();
        let formula = elem.norm().unwrap();
        let oracle = crate::densekernel::largest_singular_value(
            &crate::densekernel::ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
        );
        assert!((formula - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn norm_invariants_over_random_elements() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(907);
        let poly = |rng: &mut rand_chacha::ChaCha8Rng| -> SymbolEntry {
            let coeff = |rng: &mut rand_chacha::ChaCha8Rng| {
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            };
            SymbolEntry::Expr(
                Expr::constant(coeff(rng))
                    .add(Expr::constant(coeff(rng)).mul(Expr::var()))
                    .add(Expr::constant(coeff(rng)).mul(Expr::Pow(Box::new(Expr::var()), 2))),
            )
        };
        for trial in 0..40 {
            let n_atoms = rng.gen_range(1..=4usize);
            let mut atoms: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.05..0.95)).collect();
            atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            atoms.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
            if trial % 2 == 0 {
                scalars.insert(
                    (0, 1),
                    c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                );
            }
            let symbol = [[poly(&mut rng), poly(&mut rng)], [poly(&mut rng), poly(&mut rng)]];
            let a = build_element(scalars, symbol, atom_model(&atoms)).unwrap();

            let n1 = a.norm().unwrap();
            let n2 = a.adjoint().norm().unwrap();
            assert!((n1 - n2).abs() <= 1e-10 * (1.0 + n1), "trial {trial}");

            // C*-identity through the symbol product
            let aa = a.adjoint().multiply(&a).unwrap();
            let n3 = aa.norm().unwrap();
            assert!(
                (n3 - n1 * n1).abs() <= 1e-9 * (1.0 + n1 * n1),
                "trial {trial}: |A*A| = {n3} vs |A|^2 = {}",
                n1 * n1
            );

            // trace and determinant of the squared symbol recover phi and |omega|^2
            for &x in &atoms {
                let s = a.symbol_at(x).unwrap();
                let v = aa.symbol_values_at(x).unwrap();
                let trace = v[0][0] + v[1][1];
                let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
                assert!((trace - c(s.phi, 0.0)).norm() <= 1e-10 * (1.0 + s.phi));
                let w2 = s.omega_complex().norm_sqr();
                assert!((det - c(w2, 0.0)).norm() <= 1e-10 * (1.0 + w2));
            }

            // the norm is exactly the wired maximum
            let lam = crate::attain::lambda_max_default(&a).unwrap();
            let expect = a
                .max_scalar_modulus()
                .map_or(lam.value.max(0.0).sqrt(), |s| s.max(lam.value.max(0.0).sqrt()));
            assert_eq!(n1, expect, "trial {trial}");
        }
    }

    #[test]
    fn table_symbols_reject_essential_spectrum() {
        let model = SpectralModel {
            atoms: vec![Atom { value: 0.3, label: None }],
            essential: vec![EssentialComponent::LimitPoint { value: 1.0 }],
        };
        let sym = [
            [SymbolEntry::Table(vec![c(1.0, 0.0)]), SymbolEntry::zero()],
            [SymbolEntry::zero(), SymbolEntry::zero()],
        ];
        let err = build_element(BTreeMap::new(), sym, model).unwrap_err();
        assert!(matches!(err, SymbolError::Validation { .. }));
    }

    #[test]
    fn tables_and_exprs_mix_in_products() {
        let model = atom_model(&[0.25, 0.75]);
        let table = SymbolEntry::Table(vec![c(2.0, 0.0), c(0.0, 1.0)]);
        let a = build_element(
            BTreeMap::new(),
            [[table, SymbolEntry::zero()], [SymbolEntry::zero(), SymbolEntry::one()]],
            model.clone(),
        )
        .unwrap();
        let b = build_element(BTreeMap::new(), identity_symbol(), model).unwrap();
        let prod = a.multiply(&b).unwrap();
        assert_eq!(prod.entry_at(0, 0, 0.25).unwrap(), c(2.0, 0.0));
        assert_eq!(prod.entry_at(0, 0, 0.75).unwrap(), c(0.0, 1.0));
    }
}
