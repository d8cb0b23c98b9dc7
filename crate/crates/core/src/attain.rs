//! Locating the top of the spectrum and deciding norm attainment.
//!
//! The right endpoint of the spectrum of A*A is the maximum over the model of
//! psi(x)/2. The norm is attained iff either the scalar part already reaches
//! it, or the maximizer set carries nonzero spectral mass: an atom, or a
//! plateau of positive length inside an absolutely continuous interval.
//! Maxima sitting only at limit points or at isolated interior points of
//! intervals are null. Intervals declared with an unspecified measure class
//! make plateau verdicts indeterminate rather than guessed.

use crate::symbolcalc::{EssentialComponent, MeasureClass, SymbolError, WStarElement};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Default number of initial samples per essential interval.
pub const DEFAULT_GRID: usize = 4096;
/// Default number of refinement rounds around running maxima.
pub const DEFAULT_REFINE: usize = 40;
/// Relative tolerance for membership in the maximizer set.
pub const PLATEAU_TOL: f64 = 1e-9;
/// Threshold scale for detecting zeros of omega and of eigenvalue quadratics.
pub const ZERO_SET_TOL: f64 = 1e-11;
/// Minimum number of marked initial-grid samples for a run to count as a
/// positive-length plateau rather than an isolated point.
const PLATEAU_MIN_GRID_POINTS: usize = 3;
/// Cap on simultaneously refined local maxima per interval; more than this
/// means the interval is plateau-like and refinement adds nothing.
const MAX_REFINED_PEAKS: usize = 32;

#[derive(Debug, Error)]
pub enum AttainError {
    #[error("the spectral model is empty; there is nothing to maximize over")]
    EmptyModel,
    #[error("verdict hinges on spectral mass inside an interval with unspecified measure class ({context})")]
    IndeterminateMeasure { context: String },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Point kinds appearing in a maximizer set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaximizerPoint {
    Atom { x: f64 },
    EssentialInterior { x: f64 },
    LimitPoint { x: f64 },
    IntervalPlateau { lo: f64, hi: f64, measure_class: MeasureClass },
}

impl MaximizerPoint {
    pub fn x(&self) -> f64 {
        match self {
            MaximizerPoint::Atom { x }
            | MaximizerPoint::EssentialInterior { x }
            | MaximizerPoint::LimitPoint { x } => *x,
            MaximizerPoint::IntervalPlateau { lo, hi, .. } => 0.5 * (lo + hi),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MaximizerPoint::Atom { .. } => "atom",
            MaximizerPoint::EssentialInterior { .. } => "essential_interior",
            MaximizerPoint::LimitPoint { .. } => "limit_point",
            MaximizerPoint::IntervalPlateau { .. } => "interval_plateau",
        }
    }
}

/// lambda_max together with every model point within plateau tolerance of it.
#[derive(Debug, Clone, Serialize)]
pub struct MaximizerSet {
    pub value: f64,
    pub points: Vec<MaximizerPoint>,
}

/// Which clause of the attainment dichotomy fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    ScalarDominates,
    SigmaHasMass,
    SigmaNull,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttainmentVerdict {
    pub norm: f64,
    pub lambda_max: Option<f64>,
    pub sigma: Option<MaximizerSet>,
    pub attained: bool,
    pub clause: Clause,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: f64,
    value: f64,
    initial: bool,
}

fn psi_half(elem: &WStarElement, x: f64) -> Result<f64, AttainError> {
    Ok(elem.symbol_at(x)?.psi / 2.0)
}

/// Maximize psi/2 over the model: every atom, every limit point, and an
/// adaptively refined grid on each interval.
pub fn lambda_max(
    elem: &WStarElement,
    grid: usize,
    refine: usize,
) -> Result<MaximizerSet, AttainError> {
    let model = elem.model();
    if model.is_empty() {
        return Err(AttainError::EmptyModel);
    }
    let grid = grid.max(2);

    let mut atom_samples = Vec::with_capacity(model.atoms.len());
    for atom in &model.atoms {
        atom_samples.push((atom.value, psi_half(elem, atom.value)?));
    }
    let mut limit_samples = Vec::new();
    let mut interval_samples: Vec<(usize, Vec<Sample>)> = Vec::new();
    for (idx, comp) in model.essential.iter().enumerate() {
        match comp {
            EssentialComponent::LimitPoint { value } => {
                limit_samples.push((idx, *value, psi_half(elem, *value)?));
            }
            EssentialComponent::Interval { lo, hi, .. } => {
                let mut samples = Vec::with_capacity(grid);
                if hi > lo {
                    for k in 0..grid {
                        let x = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
                        samples.push(Sample { x, value: psi_half(elem, x)?, initial: true });
                    }
                } else {
                    samples.push(Sample { x: *lo, value: psi_half(elem, *lo)?, initial: true });
                }
                interval_samples.push((idx, samples));
            }
        }
    }

    let global_max = |atoms: &[(f64, f64)],
                      limits: &[(usize, f64, f64)],
                      intervals: &[(usize, Vec<Sample>)]|
     -> f64 {
        let mut best = f64::NEG_INFINITY;
        for &(_, v) in atoms {
            best = best.max(v);
        }
        for &(_, _, v) in limits {
            best = best.max(v);
        }
        for (_, samples) in intervals {
            for s in samples {
                best = best.max(s.value);
            }
        }
        best
    };

    for _round in 0..refine {
        let best = global_max(&atom_samples, &limit_samples, &interval_samples);
        let tol = PLATEAU_TOL * (1.0 + best.abs());
        let mut inserted_any = false;
        for (_, samples) in interval_samples.iter_mut() {
            if samples.len() < 2 {
                continue;
            }
            let mut peaks = Vec::new();
            for k in 0..samples.len() {
                let v = samples[k].value;
                if best - v > tol {
                    continue;
                }
                let left_ok = k == 0 || samples[k - 1].value <= v;
                let right_ok = k + 1 == samples.len() || samples[k + 1].value <= v;
                if left_ok && right_ok {
                    peaks.push(k);
                }
            }
            if peaks.is_empty() || peaks.len() > MAX_REFINED_PEAKS {
                continue;
            }
            // trisect the cells adjacent to each peak
            let mut new_points = Vec::new();
            for &k in &peaks {
                let x = samples[k].x;
                if k > 0 {
                    let gap = x - samples[k - 1].x;
                    if gap > 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                        new_points.push(x - gap / 3.0);
                    }
                }
                if k + 1 < samples.len() {
                    let gap = samples[k + 1].x - x;
                    if gap > 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                        new_points.push(x + gap / 3.0);
                    }
                }
            }
            for x in new_points {
                let value = psi_half(elem, x)?;
                let pos = samples.partition_point(|s| s.x < x);
                if pos < samples.len() && samples[pos].x == x {
                    continue;
                }
                samples.insert(pos, Sample { x, value, initial: false });
                inserted_any = true;
            }
        }
        if !inserted_any {
            break;
        }
    }

    let value = global_max(&atom_samples, &limit_samples, &interval_samples);
    let tol = PLATEAU_TOL * (1.0 + value.abs());

    let mut points = Vec::new();
    for &(x, v) in &atom_samples {
        if value - v <= tol {
            points.push(MaximizerPoint::Atom { x });
        }
    }
    for (idx, samples) in &interval_samples {
        let class = match &model.essential[*idx] {
            EssentialComponent::Interval { measure_class, .. } => *measure_class,
            EssentialComponent::LimitPoint { .. } => unreachable!(),
        };
        // maximal runs of consecutive marked samples
        let mut k = 0;
        while k < samples.len() {
            if value - samples[k].value > tol {
                k += 1;
                continue;
            }
            let start = k;
            while k < samples.len() && value - samples[k].value <= tol {
                k += 1;
            }
            let run = &samples[start..k];
            let initial_marked = run.iter().filter(|s| s.initial).count();
            let span = run.last().unwrap().x - run[0].x;
            if initial_marked >= PLATEAU_MIN_GRID_POINTS && span > 0.0 {
                points.push(MaximizerPoint::IntervalPlateau {
                    lo: run[0].x,
                    hi: run.last().unwrap().x,
                    measure_class: class,
                });
            } else {
                let top = run
                    .iter()
                    .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
                    .unwrap();
                points.push(MaximizerPoint::EssentialInterior { x: top.x });
            }
        }
    }
    for &(_, x, v) in &limit_samples {
        if value - v <= tol {
            points.push(MaximizerPoint::LimitPoint { x });
        }
    }

    debug_assert!(!points.is_empty(), "maximizer set cannot be empty");
    Ok(MaximizerSet { value, points })
}

/// [`lambda_max`] with the default grid and refinement budget.
pub fn lambda_max_default(elem: &WStarElement) -> Result<MaximizerSet, AttainError> {
    lambda_max(elem, DEFAULT_GRID, DEFAULT_REFINE)
}

/// Decide attainment. The scalar clause uses a non-strict comparison, so an
/// exact tie goes to the scalar part.
pub fn decide_attainment(elem: &WStarElement) -> Result<AttainmentVerdict, AttainError> {
    decide_attainment_with(elem, DEFAULT_GRID, DEFAULT_REFINE)
}

pub fn decide_attainment_with(
    elem: &WStarElement,
    grid: usize,
    refine: usize,
) -> Result<AttainmentVerdict, AttainError> {
    let scalar_max = elem.max_scalar_modulus();
    if elem.model().is_empty() {
        // scalars act as multiples of the identity on their subspaces, so
        // the norm is attained there
        return Ok(AttainmentVerdict {
            norm: scalar_max.unwrap_or(0.0),
            lambda_max: None,
            sigma: None,
            attained: true,
            clause: Clause::ScalarDominates,
        });
    }
    let sigma = lambda_max(elem, grid, refine)?;
    let sqrt_lambda = sigma.value.max(0.0).sqrt();
    if let Some(s) = scalar_max {
        if s >= sqrt_lambda {
            return Ok(AttainmentVerdict {
                norm: s,
                lambda_max: Some(sigma.value),
                sigma: Some(sigma),
                attained: true,
                clause: Clause::ScalarDominates,
            });
        }
    }
    let has_atom = sigma
        .points
        .iter()
        .any(|p| matches!(p, MaximizerPoint::Atom { .. }));
    let has_ac_plateau = sigma.points.iter().any(|p| {
        matches!(
            p,
            MaximizerPoint::IntervalPlateau { measure_class: MeasureClass::AbsolutelyContinuous, .. }
        )
    });
    let unspecified_plateau = sigma.points.iter().find_map(|p| match p {
        MaximizerPoint::IntervalPlateau {
            lo,
            hi,
            measure_class: MeasureClass::Unspecified,
        } => Some((*lo, *hi)),
        _ => None,
    });
    let attained = if has_atom || has_ac_plateau {
        true
    } else if let Some((lo, hi)) = unspecified_plateau {
        return Err(AttainError::IndeterminateMeasure {
            context: format!("maximizing plateau [{lo}, {hi}]"),
        });
    } else {
        false
    };
    Ok(AttainmentVerdict {
        norm: sqrt_lambda,
        lambda_max: Some(sigma.value),
        sigma: Some(sigma),
        attained,
        clause: if attained { Clause::SigmaHasMass } else { Clause::SigmaNull },
    })
}

/// Zero-set mass decision shared by the kernel and eigenvalue criteria:
/// `f` is a pointwise magnitude paired with its local roundoff scale, and the
/// set {x : f(x) = 0} is tested for nonzero spectral mass.
fn zero_set_has_mass(
    elem: &WStarElement,
    f: &mut dyn FnMut(f64) -> Result<(f64, f64), AttainError>,
    grid: usize,
) -> Result<bool, AttainError> {
    let model = elem.model();
    if model.is_empty() {
        return Ok(false);
    }
    for atom in &model.atoms {
        let (mag, scale) = f(atom.value)?;
        if mag <= ZERO_SET_TOL * scale {
            return Ok(true);
        }
    }
    let grid = grid.max(2);
    let mut indeterminate: Option<String> = None;
    for comp in &model.essential {
        let (lo, hi, class) = match comp {
            EssentialComponent::Interval { lo, hi, measure_class } => (*lo, *hi, *measure_class),
            EssentialComponent::LimitPoint { .. } => continue, // zero mass
        };
        if hi <= lo {
            continue; // degenerate interval, zero length
        }
        let mut run = 0usize;
        let mut run_start = lo;
        let mut prev_x = lo;
        for k in 0..grid {
            let x = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
            let (mag, scale) = f(x)?;
            if mag <= ZERO_SET_TOL * scale {
                if run == 0 {
                    run_start = x;
                }
                run += 1;
                prev_x = x;
            } else {
                if run >= PLATEAU_MIN_GRID_POINTS {
                    match class {
                        MeasureClass::AbsolutelyContinuous => return Ok(true),
                        MeasureClass::Unspecified => {
                            indeterminate =
                                Some(format!("zero run [{run_start}, {prev_x}]"));
                        }
                    }
                }
                run = 0;
            }
        }
        if run >= PLATEAU_MIN_GRID_POINTS {
            match class {
                MeasureClass::AbsolutelyContinuous => return Ok(true),
                MeasureClass::Unspecified => {
                    indeterminate = Some(format!("zero run [{run_start}, {prev_x}]"));
                }
            }
        }
    }
    if let Some(context) = indeterminate {
        return Err(AttainError::IndeterminateMeasure { context });
    }
    Ok(false)
}

/// Kernel criterion for the symbol part: the kernel of Phi_A(H) is
/// nontrivial iff {x : omega(x) = 0} has nonzero spectral mass. Scalars are
/// ignored.
pub fn kernel_nontrivial(elem: &WStarElement) -> Result<bool, AttainError> {
    zero_set_has_mass(
        elem,
        &mut |x| {
            let v = elem.symbol_values_at(x)?;
            let omega = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            let scale = 1.0 + v[0][0].norm() * v[1][1].norm() + v[0][1].norm() * v[1][0].norm();
            Ok((omega.norm(), scale))
        },
        DEFAULT_GRID,
    )
}

/// Eigenvalue test result. `via_symbol` reports the quadratic criterion on
/// the symbol; `via_scalar` flags a match against one of the scalars, which
/// sits outside that criterion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvalueCheck {
    pub eigenvalue: bool,
    pub via_symbol: bool,
    pub via_scalar: bool,
}

/// Whether lambda is an eigenvalue: the root set of
/// `lambda^2 - tr(Phi)lambda + det(Phi)` must carry spectral mass, or lambda
/// must coincide with one of the scalars.
pub fn is_eigenvalue(elem: &WStarElement, lambda: Complex64) -> Result<EigenvalueCheck, AttainError> {
    let via_scalar = elem
        .scalars()
        .values()
        .any(|a| (a - lambda).norm() <= ZERO_SET_TOL * (1.0 + lambda.norm()));
    let via_symbol = if elem.model().is_empty() {
        false
    } else {
        let symbol_mass = zero_set_has_mass(
            elem,
            &mut |x| {
                let v = elem.symbol_values_at(x)?;
                let trace = v[0][0] + v[1][1];
                let det = v[0][0] * v[1][1] - v[0][1] * v[1][0];
                let q = lambda * lambda - trace * lambda + det;
                let scale = 1.0 + lambda.norm_sqr() + trace.norm() * lambda.norm() + det.norm();
                Ok((q.norm(), scale))
            },
            DEFAULT_GRID,
        );
        match symbol_mass {
            Ok(b) => b,
            // a scalar hit settles the question even if the symbol part alone
            // is indeterminate
            Err(AttainError::IndeterminateMeasure { .. }) if via_scalar => false,
            Err(e) => return Err(e),
        }
    };
    Ok(EigenvalueCheck { eigenvalue: via_scalar || via_symbol, via_symbol, via_scalar })
}
