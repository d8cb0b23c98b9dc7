//! Command-line front end: problem files in, reports out.
//!
//! Problem files are UTF-8 JSON with a `kind` discriminator; complex numbers
//! are `[re, im]` pairs, matrices are row-major arrays of such pairs, symbol
//! entries are expression strings, and spectral models list atoms, intervals
//! with a measure class, and limit points. See `docs/file-formats.md` for
//! the full schema and `problems/` for worked files.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 numerical
//! failure, 3 a verdict that hinges on an unspecified measure class.

use crate::attain::{AttainError, AttainmentVerdict, Clause, MaximizerPoint};
use crate::densekernel::{largest_singular_value, ComplexMatrix, DenseError};
use crate::exprlang;
use crate::halmos::{self, HalmosError};
use crate::skew::{self, Ex3Variant, SkewError};
use crate::symbolcalc::{
    build_element, Atom, EssentialComponent, MeasureClass, SpectralModel, SubspaceKey,
    SymbolEntry, SymbolError, WStarElement,
};
use crate::verify::{self, Ex3Operator, VerifyError};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    BadFile { path: PathBuf, message: String },
    #[error("{count} trial(s) exceeded the suite tolerance (max residual {max_residual:.3e})")]
    TrialsFailed { count: usize, max_residual: f64 },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Halmos(#[from] HalmosError),
    #[error(transparent)]
    Skew(#[from] SkewError),
    #[error(transparent)]
    Attain(#[from] AttainError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl CliError {
    /// Map to the published exit codes.
    pub fn exit_code(&self) -> i32 {
        fn attain_code(e: &AttainError) -> i32 {
            match e {
                AttainError::IndeterminateMeasure { .. } => EXIT_INDETERMINATE,
                AttainError::EmptyModel => EXIT_INVALID,
                AttainError::Symbol(s) => symbol_code(s),
            }
        }
        fn symbol_code(e: &SymbolError) -> i32 {
            match e {
                SymbolError::RadicandNegative { .. } => EXIT_NUMERICAL,
                _ => EXIT_INVALID,
            }
        }
        fn dense_code(e: &DenseError) -> i32 {
            match e {
                DenseError::NotHermitian { .. } => EXIT_INVALID,
                DenseError::NoConvergence(_) | DenseError::Singular => EXIT_NUMERICAL,
            }
        }
        fn halmos_code(e: &HalmosError) -> i32 {
            match e {
                HalmosError::NotProjection
                | HalmosError::NotInAlgebra { .. }
                | HalmosError::ModelMismatch(_) => EXIT_INVALID,
                HalmosError::PairingFailure(_) | HalmosError::DegenerateSpectrum(_, _) => {
                    EXIT_NUMERICAL
                }
                HalmosError::Dense(d) => dense_code(d),
                HalmosError::Symbol(s) => symbol_code(s),
            }
        }
        fn skew_code(e: &SkewError) -> i32 {
            match e {
                SkewError::NotIdempotent { .. } | SkewError::NotSkew { .. } => EXIT_INVALID,
                SkewError::AfriatViolation(_) => EXIT_NUMERICAL,
                SkewError::Dense(d) => dense_code(d),
                SkewError::Symbol(s) => symbol_code(s),
                SkewError::Attain(a) => attain_code(a),
            }
        }
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::BadFile { .. } => EXIT_INVALID,
            CliError::TrialsFailed { .. } => EXIT_NUMERICAL,
            CliError::Symbol(e) => symbol_code(e),
            CliError::Dense(e) => dense_code(e),
            CliError::Halmos(e) => halmos_code(e),
            CliError::Skew(e) => skew_code(e),
            CliError::Attain(e) => attain_code(e),
            CliError::Verify(e) => match e {
                VerifyError::Dense(d) => dense_code(d),
                VerifyError::Halmos(h) => halmos_code(h),
                VerifyError::Symbol(s) => symbol_code(s),
                VerifyError::Attain(a) => attain_code(a),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// wire format

type WireComplex = [f64; 2];
type WireMatrix = Vec<Vec<WireComplex>>;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WireProblem {
    ProjectionPair { p: WireMatrix, q: WireMatrix },
    Skew { t: WireMatrix },
    Element {
        #[serde(default)]
        scalars: BTreeMap<String, WireComplex>,
        symbol: [[String; 2]; 2],
        model: WireModel,
    },
    ModelFamily {
        family: String,
        variant: Ex3Variant,
        #[serde(default = "default_n_atoms")]
        n_atoms: usize,
        #[serde(default = "default_operator")]
        operator: Ex3Operator,
    },
}

fn default_n_atoms() -> usize {
    64
}

fn default_operator() -> Ex3Operator {
    Ex3Operator::A
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireModel {
    #[serde(default)]
    atoms: Vec<WireAtom>,
    #[serde(default)]
    essential: Vec<WireEssential>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireAtom {
    value: f64,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum WireEssential {
    Interval { lo: f64, hi: f64, measure_class: MeasureClass },
    LimitPoint { value: f64 },
}

/// A parsed, validated problem file.
#[derive(Debug)]
pub enum ProblemFile {
    ProjectionPair { p: ComplexMatrix, q: ComplexMatrix },
    Skew { t: ComplexMatrix },
    Element { element: WStarElement },
    ModelFamily { variant: Ex3Variant, n_atoms: usize, operator: Ex3Operator },
}

fn matrix_from_wire(field: &str, wire: &WireMatrix) -> Result<ComplexMatrix, String> {
    let rows = wire.len();
    if rows == 0 {
        return Err(format!("{field}: matrix has no rows"));
    }
    let cols = wire[0].len();
    if cols == 0 {
        return Err(format!("{field}: matrix has no columns"));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for (i, row) in wire.iter().enumerate() {
        if row.len() != cols {
            return Err(format!("{field}: row {i} has {} entries, expected {cols}", row.len()));
        }
        for &[re, im] in row {
            entries.push(Complex64::new(re, im));
        }
    }
    Ok(ComplexMatrix::new(rows, cols, entries))
}

fn scalar_key(name: &str) -> Option<SubspaceKey> {
    match name {
        "a00" => Some((0, 0)),
        "a01" => Some((0, 1)),
        "a10" => Some((1, 0)),
        "a11" => Some((1, 1)),
        _ => None,
    }
}

/// Load and validate a problem file, parsing expression strings eagerly.
pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let wire: WireProblem = serde_json::from_str(&text).map_err(|e| CliError::BadFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let bad = |message: String| CliError::BadFile { path: path.to_path_buf(), message };
    match wire {
        WireProblem::ProjectionPair { p, q } => {
            let p = matrix_from_wire("p", &p).map_err(&bad)?;
            let q = matrix_from_wire("q", &q).map_err(&bad)?;
            if !p.is_square() || !q.is_square() || p.rows() != q.rows() {
                return Err(bad("p and q must be square matrices of equal size".into()));
            }
            Ok(ProblemFile::ProjectionPair { p, q })
        }
        WireProblem::Skew { t } => {
            let t = matrix_from_wire("t", &t).map_err(&bad)?;
            if !t.is_square() {
                return Err(bad("t must be square".into()));
            }
            Ok(ProblemFile::Skew { t })
        }
        WireProblem::Element { scalars, symbol, model } => {
            let mut parsed_scalars: BTreeMap<SubspaceKey, Complex64> = BTreeMap::new();
            for (name, [re, im]) in &scalars {
                let key = scalar_key(name).ok_or_else(|| {
                    bad(format!("scalars: unknown key '{name}' (use a00, a01, a10, a11)"))
                })?;
                parsed_scalars.insert(key, Complex64::new(*re, *im));
            }
            let mut entries: Vec<SymbolEntry> = Vec::with_capacity(4);
            for (i, row) in symbol.iter().enumerate() {
                for (j, text) in row.iter().enumerate() {
                    let expr = exprlang::parse(text).map_err(|e| {
                        bad(format!("symbol[{i}][{j}]: {e}"))
                    })?;
                    entries.push(SymbolEntry::Expr(expr));
                }
            }
            let mut it = entries.into_iter();
            let symbol = [
                [it.next().unwrap(), it.next().unwrap()],
                [it.next().unwrap(), it.next().unwrap()],
            ];
            let model = SpectralModel {
                atoms: model
                    .atoms
                    .into_iter()
                    .map(|a| Atom { value: a.value, label: a.label })
                    .collect(),
                essential: model
                    .essential
                    .into_iter()
                    .map(|e| match e {
                        WireEssential::Interval { lo, hi, measure_class } => {
                            EssentialComponent::Interval { lo, hi, measure_class }
                        }
                        WireEssential::LimitPoint { value } => {
                            EssentialComponent::LimitPoint { value }
                        }
                    })
                    .collect(),
            };
            let element = build_element(parsed_scalars, symbol, model)
                .map_err(|e| bad(e.to_string()))?;
            Ok(ProblemFile::Element { element })
        }
        WireProblem::ModelFamily { family, variant, n_atoms, operator } => {
            if family != "ex3" {
                return Err(bad(format!("unknown model family '{family}' (only 'ex3')")));
            }
            if n_atoms == 0 {
                return Err(bad("n_atoms must be at least 1".into()));
            }
            Ok(ProblemFile::ModelFamily { variant, n_atoms, operator })
        }
    }
}

// ---------------------------------------------------------------------------
// command line

#[derive(Debug, Parser)]
#[command(
    name = "projnorm",
    about = "Norms and norm attainment for operators built from two orthogonal projections",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
struct NumericOpts {
    /// Tolerance for projection/idempotency checks and rank decisions.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Initial samples per essential spectral interval.
    #[arg(long, default_value_t = crate::attain::DEFAULT_GRID)]
    grid: usize,
    /// Refinement rounds around running maxima.
    #[arg(long, default_value_t = crate::attain::DEFAULT_REFINE)]
    refine: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical decomposition of a projection pair file.
    Decompose {
        file: PathBuf,
        #[command(flatten)]
        num: NumericOpts,
        /// Classification threshold for angle eigenvalues near 0 or 1.
        #[arg(long, default_value_t = halmos::CLASS_EPS)]
        class_eps: f64,
        #[arg(long)]
        json: bool,
    },
    /// Norm and attainment verdict for an element or model-family file.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        num: NumericOpts,
        #[arg(long)]
        json: bool,
    },
    /// Analyze a skew projection matrix, optionally with a derived family.
    Skew {
        /// Skew problem file; may be omitted for --family ex3:...
        file: Option<PathBuf>,
        /// lin:alpha,beta | alt:m | ex3:variant,n
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        num: NumericOpts,
        #[arg(long)]
        json: bool,
    },
    /// Randomized norm-formula and round-trip verification.
    Verify {
        /// Run randomized trials (the only mode).
        #[arg(long)]
        random: bool,
        /// Ambient dimension.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Number of trials.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// RNG seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        num: NumericOpts,
        #[arg(long)]
        json: bool,
    },
    /// Truncation norms of a model-family file.
    Truncate {
        file: PathBuf,
        /// Comma-separated ascending atom counts, e.g. 4,16,64.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Serialize)]
struct SigmaPointReport {
    kind: &'static str,
    x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure_class: Option<MeasureClass>,
}

#[derive(Debug, Serialize)]
struct VerdictReport {
    norm: f64,
    lambda_max: Option<f64>,
    attained: bool,
    clause: Clause,
    sigma: Vec<SigmaPointReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scalar_max: Option<f64>,
}

impl VerdictReport {
    fn new(verdict: &AttainmentVerdict, scalar_max: Option<f64>) -> Self {
        let sigma = verdict
            .sigma
            .as_ref()
            .map(|s| {
                s.points
                    .iter()
                    .map(|p| match p {
                        MaximizerPoint::IntervalPlateau { lo, hi, measure_class } => {
                            SigmaPointReport {
                                kind: p.kind_name(),
                                x: p.x(),
                                lo: Some(*lo),
                                hi: Some(*hi),
                                measure_class: Some(*measure_class),
                            }
                        }
                        _ => SigmaPointReport {
                            kind: p.kind_name(),
                            x: p.x(),
                            lo: None,
                            hi: None,
                            measure_class: None,
                        },
                    })
                    .collect()
            })
            .unwrap_or_default();
        VerdictReport {
            norm: verdict.norm,
            lambda_max: verdict.lambda_max,
            attained: verdict.attained,
            clause: verdict.clause,
            sigma,
            scalar_max,
        }
    }

    fn render_text(&self, out: &mut String) {
        let _ = writeln!(out, "norm: {}", self.norm);
        match self.lambda_max {
            Some(l) => {
                let _ = writeln!(out, "lambda_max: {l}");
            }
            None => {
                let _ = writeln!(out, "lambda_max: (no generic part)");
            }
        }
        let _ = writeln!(out, "attained: {}", self.attained);
        let clause = match self.clause {
            Clause::ScalarDominates => "scalar_dominates",
            Clause::SigmaHasMass => "sigma_has_mass",
            Clause::SigmaNull => "sigma_null",
        };
        let _ = writeln!(out, "clause: {clause}");
        if !self.sigma.is_empty() {
            let pieces: Vec<String> = self
                .sigma
                .iter()
                .map(|p| match (p.lo, p.hi) {
                    (Some(lo), Some(hi)) => format!("{} [{lo}, {hi}]", p.kind),
                    _ => format!("{} {}", p.kind, p.x),
                })
                .collect();
            let _ = writeln!(out, "Sigma: {}", pieces.join(", "));
        }
    }
}

#[derive(Debug, Serialize)]
struct DecomposeReport {
    dimension: usize,
    corner_dims: BTreeMap<String, usize>,
    generic_dim: usize,
    h_values: Vec<f64>,
    reconstruction_residual: f64,
}

#[derive(Debug, Serialize)]
struct SkewReport {
    dimension: usize,
    t_norm: f64,
    pq_norm: f64,
    afriat_residual: f64,
    h_atoms: Vec<f64>,
    present_01: bool,
    present_10: bool,
    verdict: VerdictReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<FamilyReport>,
}

#[derive(Debug, Serialize)]
struct FamilyReport {
    description: String,
    verdict: VerdictReport,
}

#[derive(Debug, Serialize)]
struct TruncateReport {
    variant: Ex3Variant,
    operator: Ex3Operator,
    dims: Vec<usize>,
    values: Vec<f64>,
}

// ---------------------------------------------------------------------------
// drivers

/// Parsed family request on the skew subcommand.
enum FamilySpec {
    Linear { alpha: f64, beta: f64 },
    Alternating { m: usize },
    Example3 { variant: Ex3Variant, n_atoms: usize },
}

fn parse_family(text: &str) -> Result<FamilySpec, CliError> {
    let usage = || {
        CliError::Usage(format!(
            "bad --family '{text}': expected lin:alpha,beta | alt:m | ex3:variant,n"
        ))
    };
    let (head, rest) = text.split_once(':').ok_or_else(usage)?;
    match head {
        "lin" => {
            let (a, b) = rest.split_once(',').ok_or_else(usage)?;
            Ok(FamilySpec::Linear {
                alpha: a.trim().parse().map_err(|_| usage())?,
                beta: b.trim().parse().map_err(|_| usage())?,
            })
        }
        "alt" => Ok(FamilySpec::Alternating { m: rest.trim().parse().map_err(|_| usage())? }),
        "ex3" => {
            let (variant, n) = rest.split_once(',').ok_or_else(usage)?;
            let variant = match variant.trim() {
                "one_over_n" => Ex3Variant::OneOverN,
                "two_over_n" => Ex3Variant::TwoOverN,
                _ => return Err(usage()),
            };
            Ok(FamilySpec::Example3 { variant, n_atoms: n.trim().parse().map_err(|_| usage())? })
        }
        _ => Err(usage()),
    }
}

fn emit<T: Serialize>(report: &T, render: impl Fn(&mut String), json: bool, out: &mut String) {
    if json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(report).expect("serializable"));
    } else {
        render(out);
    }
}

fn run_decompose(
    file: &Path,
    num: NumericOpts,
    class_eps: f64,
    json: bool,
    out: &mut String,
) -> Result<(), CliError> {
    let ProblemFile::ProjectionPair { p, q } = load(file)? else {
        return Err(CliError::Usage("decompose expects a projection_pair file".into()));
    };
    let d = halmos::decompose_with(&p, &q, num.tol, class_eps)?;
    let (p2, q2) = halmos::reconstruct(&d);
    let residual = p2.sub(&p).max_abs().max(q2.sub(&q).max_abs());
    let [k00, k01, k10, k11] = d.corner_dims();
    let report = DecomposeReport {
        dimension: d.dim(),
        corner_dims: [
            ("m00".to_string(), k00),
            ("m01".to_string(), k01),
            ("m10".to_string(), k10),
            ("m11".to_string(), k11),
        ]
        .into(),
        generic_dim: d.generic_dim(),
        h_values: d.h_values.clone(),
        reconstruction_residual: residual,
    };
    emit(
        &report,
        |out| {
            let _ = writeln!(out, "dimension: {}", report.dimension);
            let _ = writeln!(
                out,
                "intersection dims: m00={k00} m01={k01} m10={k10} m11={k11}"
            );
            let _ = writeln!(out, "generic dim: {}", report.generic_dim);
            let hs: Vec<String> = report.h_values.iter().map(|h| h.to_string()).collect();
            let _ = writeln!(out, "h values: [{}]", hs.join(", "));
            let _ = writeln!(out, "reconstruction residual: {:.3e}", report.reconstruction_residual);
        },
        json,
        out,
    );
    Ok(())
}

fn element_from_file(file: &Path) -> Result<WStarElement, CliError> {
    match load(file)? {
        ProblemFile::Element { element } => Ok(element),
        ProblemFile::ModelFamily { variant, n_atoms, operator } => {
            let (model, a_elem) = skew::example3_model(variant, n_atoms)?;
            Ok(match operator {
                Ex3Operator::A => a_elem,
                Ex3Operator::T => skew::t_element(&model, false, false)?,
            })
        }
        _ => Err(CliError::Usage("analyze expects an element or model_family file".into())),
    }
}

fn run_analyze(file: &Path, num: NumericOpts, json: bool, out: &mut String) -> Result<(), CliError> {
    let element = element_from_file(file)?;
    let verdict = crate::attain::decide_attainment_with(&element, num.grid, num.refine)?;
    let report = VerdictReport::new(&verdict, element.max_scalar_modulus());
    emit(&report, |out| report.render_text(out), json, out);
    Ok(())
}

fn run_skew(
    file: Option<&Path>,
    family: Option<&str>,
    num: NumericOpts,
    json: bool,
    out: &mut String,
) -> Result<(), CliError> {
    let family = family.map(parse_family).transpose()?;
    if let Some(FamilySpec::Example3 { variant, n_atoms }) = family {
        if file.is_some() {
            return Err(CliError::Usage(
                "--family ex3 describes its own operator; omit the input file".into(),
            ));
        }
        // infinite-dimensional model: no concrete matrix quantities to report
        let (model, a_elem) = skew::example3_model(variant, n_atoms)?;
        let t_elem = skew::t_element(&model, false, false)?;
        let t_verdict = crate::attain::decide_attainment_with(&t_elem, num.grid, num.refine)?;
        let a_verdict = crate::attain::decide_attainment_with(&a_elem, num.grid, num.refine)?;
        let t_report = VerdictReport::new(&t_verdict, None);
        let a_report = VerdictReport::new(&a_verdict, None);
        if json {
            let report = serde_json::json!({
                "model": variant.name(),
                "n_atoms": n_atoms,
                "t": t_report,
                "a": a_report,
            });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
        } else {
            let _ = writeln!(out, "model: {} with {} atoms + limit point 1", variant.name(), n_atoms);
            let _ = writeln!(out, "-- skew projection T --");
            t_report.render_text(out);
            let _ = writeln!(out, "-- A = TT*+T*T-T-T*-I --");
            a_report.render_text(out);
        }
        return Ok(());
    }

    let Some(file) = file else {
        return Err(CliError::Usage("skew needs an input file unless --family ex3 is used".into()));
    };
    let ProblemFile::Skew { t } = load(file)? else {
        return Err(CliError::Usage("skew expects a skew problem file".into()));
    };
    let analysis = skew::analyze_skew(&t, num.tol)?;
    let verdict = crate::attain::decide_attainment_with(&analysis.t_symbol, num.grid, num.refine)?;
    let family_report = match family {
        None => None,
        Some(FamilySpec::Linear { alpha, beta }) => {
            let elem = skew::linear_family(&analysis.h_model, alpha, beta)?;
            let v = crate::attain::decide_attainment_with(&elem, num.grid, num.refine)?;
            Some(FamilyReport {
                description: format!("T + {alpha} T* + {beta} I"),
                verdict: VerdictReport::new(&v, elem.max_scalar_modulus()),
            })
        }
        Some(FamilySpec::Alternating { m }) => {
            if m == 0 {
                return Err(CliError::Usage("alt:m needs m >= 1".into()));
            }
            let elem = skew::alternating_power(&analysis.h_model, m)?;
            let v = crate::attain::decide_attainment_with(&elem, num.grid, num.refine)?;
            Some(FamilyReport {
                description: format!("alternating product with {m} factors"),
                verdict: VerdictReport::new(&v, elem.max_scalar_modulus()),
            })
        }
        Some(FamilySpec::Example3 { .. }) => unreachable!("handled above"),
    };
    let report = SkewReport {
        dimension: t.rows(),
        t_norm: largest_singular_value(&t),
        pq_norm: analysis.pq_norm,
        afriat_residual: analysis.afriat_residual,
        h_atoms: analysis.h_model.atoms.iter().map(|a| a.value).collect(),
        present_01: analysis.present_01,
        present_10: analysis.present_10,
        verdict: VerdictReport::new(&verdict, analysis.t_symbol.max_scalar_modulus()),
        family: family_report,
    };
    emit(
        &report,
        |out| {
            let _ = writeln!(out, "dimension: {}", report.dimension);
            let _ = writeln!(out, "norm of T: {}", report.t_norm);
            let _ = writeln!(out, "norm of PQ: {}", report.pq_norm);
            let _ = writeln!(out, "reconstruction residual: {:.3e}", report.afriat_residual);
            let hs: Vec<String> = report.h_atoms.iter().map(|h| h.to_string()).collect();
            let _ = writeln!(out, "angle atoms: [{}]", hs.join(", "));
            report.verdict.render_text(out);
            if let Some(f) = &report.family {
                let _ = writeln!(out, "-- family {} --", f.description);
                f.verdict.render_text(out);
            }
        },
        json,
        out,
    );
    Ok(())
}

fn run_verify(
    random: bool,
    n: usize,
    trials: usize,
    seed: u64,
    num: NumericOpts,
    json: bool,
    out: &mut String,
) -> Result<(), CliError> {
    if !random {
        return Err(CliError::Usage("verify currently requires --random".into()));
    }
    if n < 2 {
        return Err(CliError::Usage("verify needs --n at least 2".into()));
    }
    let report = verify::run_norm_trials(n, trials, seed, num.tol)?;
    emit(
        &report,
        |out| {
            let _ = writeln!(out, "dimension: {}", report.dimension);
            let _ = writeln!(out, "trials: {}", report.trials);
            let _ = writeln!(out, "seed: {}", report.seed);
            let _ = writeln!(out, "max residual: {:.3e}", report.max_residual);
            let _ = writeln!(out, "failures: {}", report.failures.len());
            for f in &report.failures {
                let _ = writeln!(
                    out,
                    "  trial {}: {} expected {} got {}",
                    f.trial, f.quantity, f.expected, f.got
                );
            }
        },
        json,
        out,
    );
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::TrialsFailed {
            count: report.failures.len(),
            max_residual: report.max_residual,
        })
    }
}

fn run_truncate(file: &Path, dims: &[usize], json: bool, out: &mut String) -> Result<(), CliError> {
    let ProblemFile::ModelFamily { variant, operator, .. } = load(file)? else {
        return Err(CliError::Usage("truncate expects a model_family file".into()));
    };
    if dims.is_empty() || dims[0] == 0 || dims.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage("--dims must be ascending positive atom counts".into()));
    }
    let values = verify::truncation_norms(variant, operator, dims)?;
    let report = TruncateReport { variant, operator, dims: dims.to_vec(), values };
    emit(
        &report,
        |out| {
            for (n, v) in report.dims.iter().zip(&report.values) {
                let _ = writeln!(out, "n={n}: {v}");
            }
        },
        json,
        out,
    );
    Ok(())
}

/// Run the CLI on explicit arguments, writing the report to `out`. Returns
/// the process exit code.
pub fn run<I, S>(argv: I, out: &mut String, err: &mut String) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            // help/version requests are successes, anything else is misuse
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            let _ = write!(if code == EXIT_OK { out } else { err }, "{e}");
            return code;
        }
    };
    let result = match &args.command {
        Command::Decompose { file, num, class_eps, json } => {
            run_decompose(file, *num, *class_eps, *json, out)
        }
        Command::Analyze { file, num, json } => run_analyze(file, *num, *json, out),
        Command::Skew { file, family, num, json } => {
            run_skew(file.as_deref(), family.as_deref(), *num, *json, out)
        }
        Command::Verify { random, n, trials, seed, num, json } => {
            run_verify(*random, *n, *trials, *seed, *num, *json, out)
        }
        Command::Truncate { file, dims, json } => run_truncate(file, dims, *json, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
