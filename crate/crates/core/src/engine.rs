//! Chernoff families `t ↦ V(t)`, ordered products over non-uniform
//! partitions, the reference semigroup `e^{tA}`, and the diagnostics used to
//! study convergence of `Π V(a_i t) x` towards `e^{tA} x`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{herm_eig, mat_exp, op_norm, ComplexMatrix, C64};
use crate::output::{csv_table, format_float, json_float};
use crate::partitions::{make_uniform, metrics, Partition, PartitionScheme, RNG_ALGORITHM};

/// Tolerance on the largest eigenvalue of the Hermitian part of a generator.
pub const DISSIPATIVE_TOL: f64 = 1e-10;

type EvalFn = dyn Fn(f64) -> Result<ComplexMatrix> + Send + Sync;

/// A map from nonnegative times to `dim × dim` operators, with `V(0) = I`.
#[derive(Clone)]
pub struct ChernoffFamily {
    dim: usize,
    label: String,
    declared_contraction: bool,
    declared_commuting: bool,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for ChernoffFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChernoffFamily")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("declared_contraction", &self.declared_contraction)
            .field("declared_commuting", &self.declared_commuting)
            .finish()
    }
}

impl ChernoffFamily {
    /// Wraps an evaluation map. The declarations are promises checked by
    /// [`check_family`], not enforced here.
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        declared_contraction: bool,
        declared_commuting: bool,
        eval: impl Fn(f64) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            declared_contraction,
            declared_commuting,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn declared_contraction(&self) -> bool {
        self.declared_contraction
    }

    pub fn declared_commuting(&self) -> bool {
        self.declared_commuting
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn evaluate(&self, t: f64) -> Result<ComplexMatrix> {
        if !(t.is_finite() && t >= 0.0) {
            return invalid(format!("families are defined for t >= 0, got {t}"));
        }
        let v = (self.eval)(t)?;
        if v.rows() != self.dim || v.cols() != self.dim {
            return Err(Error::Numerical(format!(
                "family {} returned a {}x{} matrix, expected {}x{}",
                self.label,
                v.rows(),
                v.cols(),
                self.dim,
                self.dim
            )));
        }
        Ok(v)
    }
}

/// A generator `A` and its semigroup `T(t) = e^{tA}`.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    a: ComplexMatrix,
}

impl GeneratorSpec {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return invalid("a generator must be square");
        }
        Ok(Self { a })
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn semigroup(&self, t: f64) -> Result<ComplexMatrix> {
        mat_exp(&self.a, t)
    }
}

/// Largest eigenvalue of the Hermitian part of `a`.
pub fn numerical_abscissa(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return invalid("numerical abscissa needs a square matrix");
    }
    let eig = herm_eig(&a.hermitian_part())?;
    Ok(*eig.eigenvalues.last().expect("nonempty spectrum"))
}

/// Whether `a` generates a contraction semigroup in the Euclidean norm.
pub fn is_dissipative(a: &ComplexMatrix) -> Result<bool> {
    Ok(numerical_abscissa(a)? <= DISSIPATIVE_TOL)
}

fn require_dissipative(a: &ComplexMatrix, name: &str) -> Result<()> {
    let w = numerical_abscissa(a)?;
    if w > DISSIPATIVE_TOL {
        return invalid(format!(
            "{name} is not dissipative: Hermitian part has eigenvalue {w:e} > {DISSIPATIVE_TOL:e}"
        ));
    }
    Ok(())
}

/// Lie–Trotter family `V(t) = e^{tA₁} e^{tA₂}` for two dissipative generators.
pub fn make_trotter_family(a1: &ComplexMatrix, a2: &ComplexMatrix) -> Result<ChernoffFamily> {
    if !a1.is_square() || !a2.is_square() || a1.rows() != a2.rows() {
        return invalid("Trotter factors must be square and of equal size");
    }
    require_dissipative(a1, "A1")?;
    require_dissipative(a2, "A2")?;
    let commuting = op_norm(&a1.commutator(a2)?) <= 1e-12;
    let (a1, a2) = (a1.clone(), a2.clone());
    Ok(ChernoffFamily::new(
        a1.rows(),
        "trotter",
        true,
        commuting,
        move |t| Ok(&mat_exp(&a1, t)? * &mat_exp(&a2, t)?),
    ))
}

/// Resolvent family `V(t) = (I − tA)^{-1}`: commuting contractions that do
/// not form a semigroup.
pub fn make_implicit_euler_family(a: &ComplexMatrix) -> Result<ChernoffFamily> {
    if !a.is_square() {
        return invalid("generator must be square");
    }
    require_dissipative(a, "A")?;
    let a = a.clone();
    let dim = a.rows();
    Ok(ChernoffFamily::new(
        dim,
        "implicit-euler",
        true,
        true,
        move |t| {
            let m = &ComplexMatrix::identity(dim) - &a.scale(t);
            m.inverse().map_err(|_| {
                Error::Numerical(format!("I - tA is singular at t = {t} for a dissipative A"))
            })
        },
    ))
}

/// The exact semigroup `V(t) = e^{tA}` viewed as a Chernoff family.
pub fn make_semigroup_family(gen: &GeneratorSpec) -> Result<ChernoffFamily> {
    let contraction = is_dissipative(gen.generator())?;
    let gen = gen.clone();
    Ok(ChernoffFamily::new(
        gen.dim(),
        "exact-semigroup",
        contraction,
        true,
        move |t| gen.semigroup(t),
    ))
}

/// First-order family `V(h) = I + hA`.
pub fn make_affine_family(a: &ComplexMatrix) -> Result<ChernoffFamily> {
    if !a.is_square() {
        return invalid("generator must be square");
    }
    let a = a.clone();
    let dim = a.rows();
    Ok(ChernoffFamily::new(dim, "affine", false, true, move |t| {
        Ok(&ComplexMatrix::identity(dim) + &a.scale(t))
    }))
}

/// Measured values of a family's declared properties on sample times.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyCheck {
    pub identity_defect: f64,
    pub max_norm: f64,
    pub max_commutator: f64,
}

/// Checks `V(0) = I`, and the contraction / commutativity declarations on
/// the given sample times.
pub fn check_family(fam: &ChernoffFamily, samples: &[f64]) -> Result<FamilyCheck> {
    let id = ComplexMatrix::identity(fam.dim());
    let identity_defect = op_norm(&(&fam.evaluate(0.0)? - &id));
    if identity_defect > 1e-12 {
        return Err(Error::Numerical(format!(
            "{}: V(0) differs from I by {identity_defect:e}",
            fam.label()
        )));
    }
    let values = samples
        .iter()
        .map(|&t| fam.evaluate(t))
        .collect::<Result<Vec<_>>>()?;
    let max_norm = values.iter().map(op_norm).fold(0.0, f64::max);
    if fam.declared_contraction() && max_norm > 1.0 + 1e-10 {
        return Err(Error::Numerical(format!(
            "{}: declared contraction has norm {max_norm}",
            fam.label()
        )));
    }
    let mut max_commutator = 0.0f64;
    for (i, vi) in values.iter().enumerate() {
        for vj in &values[i + 1..] {
            max_commutator = max_commutator.max(op_norm(&vi.commutator(vj)?));
        }
    }
    if fam.declared_commuting() && max_commutator > 1e-10 {
        return Err(Error::Numerical(format!(
            "{}: declared commuting family has commutator norm {max_commutator:e}",
            fam.label()
        )));
    }
    Ok(FamilyCheck {
        identity_defect,
        max_norm,
        max_commutator,
    })
}

/// Evaluates a family, reusing results for repeated step lengths.
struct Memo<'a> {
    fam: &'a ChernoffFamily,
    cache: HashMap<u64, ComplexMatrix>,
}

impl<'a> Memo<'a> {
    fn new(fam: &'a ChernoffFamily) -> Self {
        Self {
            fam,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, t: f64) -> Result<&ComplexMatrix> {
        let key = t.to_bits();
        if !self.cache.contains_key(&key) {
            let v = self.fam.evaluate(t)?;
            self.cache.insert(key, v);
        }
        Ok(&self.cache[&key])
    }
}

fn check_input(fam: &ChernoffFamily, t: f64, x: &ComplexMatrix) -> Result<()> {
    if x.rows() != fam.dim() {
        return invalid(format!(
            "vector has {} rows but family {} acts on dimension {}",
            x.rows(),
            fam.label(),
            fam.dim()
        ));
    }
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("t must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// `V(a_1 t) V(a_2 t) ⋯ V(a_n t) x`.
///
/// The factor with the highest index acts on `x` first. For non-commuting
/// families the order matters and is fixed this way.
pub fn apply_product(
    fam: &ChernoffFamily,
    p: &Partition,
    t: f64,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_input(fam, t, x)?;
    let mut memo = Memo::new(fam);
    let mut y = x.clone();
    for &a in p.weights().iter().rev() {
        y = memo.get(a * t)? * &y;
    }
    Ok(y)
}

/// `V(t/n)^n x`.
pub fn uniform_product(
    fam: &ChernoffFamily,
    n: usize,
    t: f64,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    apply_product(fam, &make_uniform(n)?, t, x)
}

/// `A_s = (V(s) − I) / s`.
pub fn discrete_generator(fam: &ChernoffFamily, s: f64) -> Result<ComplexMatrix> {
    if !(s.is_finite() && s > 0.0) {
        return invalid(format!("s must be positive, got {s}"));
    }
    Ok((&fam.evaluate(s)? - &ComplexMatrix::identity(fam.dim())).scale(1.0 / s))
}

/// The three quantities of the telescoping estimate comparing uniform and
/// non-uniform products. For commuting contractions `lhs ≤ mid ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma4Chain {
    /// `‖V(t/n)^n x − Π V(a_i t) x‖`
    pub lhs: f64,
    /// `Σ_i ‖(V(t/n) − V(a_i t)) x‖`
    pub mid: f64,
    /// `t‖A_{t/n}x‖ Σ|1/n − a_i| + t Σ a_i (‖A_{t/n}x − Ax‖ + ‖A_{a_i t}x − Ax‖)`
    pub rhs: f64,
}

impl Lemma4Chain {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.mid + slack && self.mid <= self.rhs + slack
    }
}

pub fn lemma4_chain(
    fam: &ChernoffFamily,
    gen: &GeneratorSpec,
    p: &Partition,
    t: f64,
    x: &ComplexMatrix,
) -> Result<Lemma4Chain> {
    if !(fam.declared_commuting() && fam.declared_contraction()) {
        return invalid(format!(
            "family {} must be declared commuting and contractive for the chain to hold",
            fam.label()
        ));
    }
    if gen.dim() != fam.dim() {
        return invalid("generator and family dimensions differ");
    }
    check_input(fam, t, x)?;
    if t == 0.0 {
        return Ok(Lemma4Chain {
            lhs: 0.0,
            mid: 0.0,
            rhs: 0.0,
        });
    }
    let n = p.n();
    let nf = n as f64;
    let step = t / nf;
    let mut memo = Memo::new(fam);

    let mut uniform = x.clone();
    let v_step = memo.get(step)?.clone();
    for _ in 0..n {
        uniform = &v_step * &uniform;
    }
    let mut mixed = x.clone();
    for &a in p.weights().iter().rev() {
        mixed = memo.get(a * t)? * &mixed;
    }
    let lhs = (&uniform - &mixed).frobenius_norm();

    let v_step_x = &v_step * x;
    let ax = gen.generator() * x;
    let a_step_x = (&v_step_x - x).scale(1.0 / step);
    let a_step_err = (&a_step_x - &ax).frobenius_norm();

    let mut mid = 0.0;
    let mut deviation = 0.0;
    let mut consistency = 0.0;
    for &a in p.weights() {
        let va_x = memo.get(a * t)? * x;
        mid += (&v_step_x - &va_x).frobenius_norm();
        deviation += (1.0 / nf - a).abs();
        let a_a_x = (&va_x - x).scale(1.0 / (a * t));
        consistency += a * (a_step_err + (&a_a_x - &ax).frobenius_norm());
    }
    let rhs = t * a_step_x.frobenius_norm() * deviation + t * consistency;
    Ok(Lemma4Chain { lhs, mid, rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    pub l1_deviation: f64,
    pub max_weight: f64,
}

/// Errors of non-uniform products against the reference semigroup over a
/// sweep of `n`.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub t: f64,
    pub family: String,
    pub scheme: PartitionScheme,
    pub rows: Vec<ConvergenceRow>,
    /// Negative least-squares slope of `ln error` against `ln n` over the
    /// final half of the rows; NaN when undefined.
    pub fitted_order: f64,
}

pub const CONVERGENCE_HEADER: [&str; 4] = ["n", "error", "l1_deviation", "max_weight"];

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn to_csv(&self) -> String {
        csv_table(
            &CONVERGENCE_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    format_float(r.error),
                    format_float(r.l1_deviation),
                    format_float(r.max_weight),
                ]
            }),
        )
    }

    pub fn sidecar(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "t": self.t,
            "fitted_order": json_float(self.fitted_order),
            "family": self.family,
            "scheme": self.scheme.label(),
        });
        if self.scheme.is_random() {
            v["rng"] = RNG_ALGORITHM.into();
        }
        v
    }
}

/// Negative slope of the least-squares line through `(ln n, ln error)` over
/// the final half of the points (at least two).
pub fn fitted_order(ns: &[usize], errors: &[f64]) -> f64 {
    let len = ns.len().min(errors.len());
    if len < 2 {
        return f64::NAN;
    }
    let start = (len / 2).min(len - 2);
    let pts: Vec<(f64, f64)> = ns[start..len]
        .iter()
        .zip(&errors[start..len])
        .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    -sxy / sxx
}

fn validate_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return invalid("ns must not be empty");
    }
    if ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("ns must be positive and strictly ascending");
    }
    Ok(())
}

/// Euclidean-norm sweep; see [`convergence_sweep_with_norm`].
pub fn convergence_sweep(
    fam: &ChernoffFamily,
    gen: &GeneratorSpec,
    scheme: &PartitionScheme,
    t: f64,
    ns: &[usize],
    x: &ComplexMatrix,
) -> Result<ConvergenceReport> {
    convergence_sweep_with_norm(fam, gen, scheme, t, ns, x, &|d| Ok(d.frobenius_norm()))
}

/// For each `n`, measures `‖Π V(a_{n,i} t) x − e^{tA} x‖` in the given norm.
/// Rows are computed in parallel and collected in order of `n`.
pub fn convergence_sweep_with_norm(
    fam: &ChernoffFamily,
    gen: &GeneratorSpec,
    scheme: &PartitionScheme,
    t: f64,
    ns: &[usize],
    x: &ComplexMatrix,
    norm: &(dyn Fn(&ComplexMatrix) -> Result<f64> + Sync),
) -> Result<ConvergenceReport> {
    validate_ns(ns)?;
    if gen.dim() != fam.dim() {
        return invalid("generator and family dimensions differ");
    }
    check_input(fam, t, x)?;
    let reference = &gen.semigroup(t)? * x;
    let rows = ns
        .par_iter()
        .map(|&n| {
            let p = scheme.generate(n)?;
            let m = metrics(&p);
            let y = apply_product(fam, &p, t, x)?;
            Ok(ConvergenceRow {
                n,
                error: norm(&(&y - &reference))?,
                l1_deviation: m.l1_deviation,
                max_weight: m.max_weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let order = fitted_order(ns, &rows.iter().map(|r| r.error).collect::<Vec<_>>());
    Ok(ConvergenceReport {
        t,
        family: fam.label().to_string(),
        scheme: scheme.clone(),
        rows,
        fitted_order: order,
    })
}

/// `‖((V(h) − I)/h) e^{aA} x − A e^{aA} x‖`.
pub fn smolyanov_residual(
    fam: &ChernoffFamily,
    gen: &GeneratorSpec,
    a: f64,
    h: f64,
    x: &ComplexMatrix,
) -> Result<f64> {
    if !(a > 0.0 && h > 0.0) {
        return invalid("a and h must be positive");
    }
    check_input(fam, 0.0, x)?;
    let y = &gen.semigroup(a)? * x;
    let lhs = &discrete_generator(fam, h)? * &y;
    let rhs = gen.generator() * &y;
    Ok((&lhs - &rhs).frobenius_norm())
}

/// `‖V(t)V(t') − V(t')V(t)‖`.
pub fn commutativity_defect(fam: &ChernoffFamily, t: f64, t2: f64) -> Result<f64> {
    let a = fam.evaluate(t)?;
    let b = fam.evaluate(t2)?;
    Ok(op_norm(&a.commutator(&b)?))
}

/// A random generator with `λ_max((A + A*)/2) ≤ −margin`: a skew-Hermitian
/// part plus a negative semidefinite Hermitian part, shifted by `−margin`.
pub fn random_dissipative_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    margin: f64,
) -> ComplexMatrix {
    let mut draw =
        |_: usize, _: usize| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let k = ComplexMatrix::from_fn(dim, dim, &mut draw);
    let c = ComplexMatrix::from_fn(dim, dim, &mut draw);
    let skew = (&k - &k.adjoint()).scale(0.5);
    let damping = &c * &c.adjoint();
    &(&skew - &damping.scale(0.5)) - &ComplexMatrix::identity(dim).scale(margin)
}

/// A random unit vector in `C^dim`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    loop {
        let v = ComplexMatrix::from_fn(dim, 1, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let norm = v.frobenius_norm();
        if norm > 1e-3 {
            return v.scale(1.0 / norm);
        }
    }
}

/// One randomized instance of [`lemma4_chain`] for the implicit-Euler family.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma4Trial {
    pub trial: usize,
    pub dim: usize,
    pub scheme: PartitionScheme,
    pub n: usize,
    pub t: f64,
    pub chain: Lemma4Chain,
}

pub const LEMMA4_HEADER: [&str; 9] = [
    "trial", "dim", "scheme", "n", "t", "lhs", "mid", "rhs", "holds",
];

/// Slack used when deciding whether a chain holds.
pub const LEMMA4_SLACK: f64 = 1e-9;

/// Draws `count` random dissipative generators up to `max_dim`, partitions
/// from every scheme, `t ∈ [0, 1]` and unit `x`, and evaluates the chain for
/// the implicit-Euler family. Deterministic in `seed`.
pub fn lemma4_trials(count: usize, max_dim: usize, seed: u64) -> Result<Vec<Lemma4Trial>> {
    if max_dim == 0 {
        return invalid("max_dim must be positive");
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut setups = Vec::with_capacity(count);
    for trial in 0..count {
        let dim = rng.random_range(1..=max_dim);
        let a = random_dissipative_matrix(&mut rng, dim, 0.05);
        let x = random_unit_vector(&mut rng, dim);
        let mut n = rng.random_range(1..=200usize);
        let scheme = match trial % 4 {
            0 => PartitionScheme::Uniform,
            1 => {
                n += n % 2;
                PartitionScheme::Alternating
            }
            2 => PartitionScheme::PowerLaw {
                theta: rng.random_range(0.0..3.0),
            },
            _ => PartitionScheme::Dirichlet {
                seed: rng.random(),
                concentration: rng.random_range(1.0..1000.0),
            },
        };
        let t = rng.random_range(0.0..=1.0);
        setups.push((trial, dim, a, x, scheme, n, t));
    }
    setups
        .into_par_iter()
        .map(|(trial, dim, a, x, scheme, n, t)| {
            let fam = make_implicit_euler_family(&a)?;
            let gen = GeneratorSpec::new(a)?;
            let p = scheme.generate(n)?;
            let chain = lemma4_chain(&fam, &gen, &p, t, &x)?;
            Ok(Lemma4Trial {
                trial,
                dim,
                scheme,
                n,
                t,
                chain,
            })
        })
        .collect()
}

pub fn lemma4_csv(trials: &[Lemma4Trial]) -> String {
    csv_table(
        &LEMMA4_HEADER,
        trials.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.dim.to_string(),
                r.scheme.label().replace(',', ";"),
                r.n.to_string(),
                format_float(r.t),
                format_float(r.chain.lhs),
                format_float(r.chain.mid),
                format_float(r.chain.rhs),
                r.chain.holds(LEMMA4_SLACK).to_string(),
            ]
        }),
    )
}
