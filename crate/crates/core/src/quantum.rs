//! Gaussian continuous-measurement channel of a Hermitian observable `L`.
//!
//! The channel
//!
//! ```text
//! V(t)(X) = √(γ/π) ∫ dy  e^{-γ/2 (y − √t L)²} X e^{-γ/2 (y − √t L)²}
//! ```
//!
//! integrates exactly in the eigenbasis of `L`: entry `(j, k)` of `X` is
//! damped by `exp(−γ t (λ_j − λ_k)² / 4)`. That closed form is the production
//! path. A Gauss–Legendre discretization of the integral is kept as an
//! independent oracle and, renormalized to be trace preserving, as an inexact
//! Chernoff family whose products converge only in the limit.

use rayon::prelude::*;

use crate::engine::{apply_product, ChernoffFamily, GeneratorSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    devectorize, herm_eig, mat_exp, sandwich_superoperator, trace_norm, vectorize, ComplexMatrix,
    HermEig, C64, HERMITIAN_TOL,
};
use crate::output::{csv_table, format_float};
use crate::partitions::{metrics, PartitionScheme};
use crate::quadrature::gauss_legendre_on;

pub const MAX_HILBERT_DIM: usize = 16;

/// Gaussian half-widths (in units of `1/√γ`) covered by the default cutoff.
pub const CUTOFF_WIDTHS: f64 = 6.0;

/// Tolerances for density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() || rho.rows() > MAX_HILBERT_DIM {
            return invalid("density matrix must be square with dimension <= 16");
        }
        if !rho.is_hermitian(STATE_TOL) {
            return invalid("density matrix is not Hermitian");
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return invalid(format!("density matrix has trace {tr}"));
        }
        let min = herm_eig(&rho.hermitian_part())?.eigenvalues[0];
        if min < -STATE_TOL {
            return invalid(format!("density matrix has eigenvalue {min}"));
        }
        Ok(Self(rho))
    }

    /// `|ψ⟩⟨ψ|` for a nonzero vector, normalized.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = ComplexMatrix::column(psi);
        let norm = v.frobenius_norm();
        if norm == 0.0 {
            return invalid("zero state vector");
        }
        let v = v.scale(1.0 / norm);
        Self::new(&v * &v.adjoint())
    }

    /// The uniform superposition `|+⟩⟨+|` in dimension `d`.
    pub fn uniform_superposition(d: usize) -> Result<Self> {
        Self::pure(&vec![C64::new(1.0, 0.0); d])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
}

/// Gaussian measurement channel of observable `L` with strength `γ`.
#[derive(Clone, Debug)]
pub struct MeasurementChannel {
    l: ComplexMatrix,
    gamma: f64,
    eig: HermEig,
}

impl MeasurementChannel {
    pub fn new(l: ComplexMatrix, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return invalid(format!("gamma must be positive, got {gamma}"));
        }
        if !l.is_square() || l.rows() > MAX_HILBERT_DIM {
            return invalid("observable must be square with dimension <= 16");
        }
        let eig = herm_eig(&l)?;
        Ok(Self { l, gamma, eig })
    }

    pub fn observable(&self) -> &ComplexMatrix {
        &self.l
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn eigen(&self) -> &HermEig {
        &self.eig
    }

    fn spectral_radius(&self) -> f64 {
        self.eig
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max)
    }

    /// `√t ‖L‖ + 6/√γ`: the integrand is below `e^{-36}` of its peak outside.
    pub fn default_cutoff(&self, t: f64) -> f64 {
        t.max(0.0).sqrt() * self.spectral_radius() + CUTOFF_WIDTHS / self.gamma.sqrt()
    }

    fn check_arg(&self, t: f64, x: &ComplexMatrix) -> Result<()> {
        if !(t.is_finite() && t >= 0.0) {
            return invalid(format!("t must be nonnegative, got {t}"));
        }
        if !x.is_square() || x.rows() != self.dim() {
            return invalid(format!(
                "operand is {}x{}, channel acts on dimension {}",
                x.rows(),
                x.cols(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// Damping factors `exp(−γ t (λ_j − λ_k)² / 4)` in the eigenbasis.
    pub fn damping_factors(&self, t: f64) -> ComplexMatrix {
        let l = &self.eig.eigenvalues;
        let g = self.gamma;
        ComplexMatrix::from_fn(l.len(), l.len(), |j, k| {
            let gap = l[j] - l[k];
            C64::new((-g * t * gap * gap / 4.0).exp(), 0.0)
        })
    }

    /// Factors of the Gauss–Legendre channel with Kraus operators renormalized
    /// so that `Σ K_m† K_m = I`.
    fn quadrature_factors(&self, t: f64, nodes: usize) -> Result<ComplexMatrix> {
        let c = self.default_cutoff(t);
        let (y, w) = gauss_legendre_on(nodes, -c, c)?;
        let l = &self.eig.eigenvalues;
        let g = self.gamma;
        let st = t.sqrt();
        let pref = (g / std::f64::consts::PI).sqrt();
        // amp[m][j] = sqrt(w_m √(γ/π)) e^{-γ/2 (y_m − √t λ_j)²}
        let amp: Vec<Vec<f64>> = y
            .iter()
            .zip(&w)
            .map(|(&ym, &wm)| {
                let s = (wm * pref).sqrt();
                l.iter()
                    .map(|&lj| s * (-0.5 * g * (ym - st * lj).powi(2)).exp())
                    .collect()
            })
            .collect();
        let d = l.len();
        let mass: Vec<f64> = (0..d)
            .map(|j| amp.iter().map(|a| a[j] * a[j]).sum())
            .collect();
        if mass.iter().any(|&m| m <= 0.0) {
            return Err(Error::Numerical("quadrature lost all Gaussian mass".into()));
        }
        Ok(ComplexMatrix::from_fn(d, d, |j, k| {
            let s: f64 = amp.iter().map(|a| a[j] * a[k]).sum();
            C64::new(s / (mass[j] * mass[k]).sqrt(), 0.0)
        }))
    }

    /// Superoperator of the Schur multiplier `X ↦ U (F ∘ U†XU) U†`.
    fn schur_superoperator(&self, factors: &ComplexMatrix) -> Result<ComplexMatrix> {
        let u = &self.eig.eigenvectors;
        let to_eig = sandwich_superoperator(&u.adjoint(), u);
        let from_eig = sandwich_superoperator(u, &u.adjoint());
        let v = vectorize(factors)?;
        let diag: Vec<C64> = (0..v.rows()).map(|i| v.get(i, 0)).collect();
        Ok(&(&from_eig * &ComplexMatrix::diag(&diag)) * &to_eig)
    }

    fn apply_factors(&self, factors: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
        let u = &self.eig.eigenvectors;
        let mut inner = &(&u.adjoint() * x) * u;
        for j in 0..inner.rows() {
            for k in 0..inner.cols() {
                inner.set(j, k, inner.get(j, k) * factors.get(j, k));
            }
        }
        &(u * &inner) * &u.adjoint()
    }
}

/// `V(t)(X)` evaluated analytically.
pub fn channel_apply_closed(
    ch: &MeasurementChannel,
    t: f64,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    ch.check_arg(t, x)?;
    Ok(ch.apply_factors(&ch.damping_factors(t), x))
}

/// `V(t)(X)` by Gauss–Legendre quadrature of the defining integral over
/// `y ∈ [−cutoff, cutoff]`, with the Gaussian operators built by matrix
/// exponentials rather than the eigenbasis. No renormalization.
pub fn channel_apply_quadrature(
    ch: &MeasurementChannel,
    t: f64,
    x: &ComplexMatrix,
    nodes: usize,
    cutoff: f64,
) -> Result<ComplexMatrix> {
    ch.check_arg(t, x)?;
    if nodes < 3 {
        return invalid("at least 3 quadrature nodes are required");
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return invalid("cutoff must be positive");
    }
    let (y, w) = gauss_legendre_on(nodes, -cutoff, cutoff)?;
    let d = ch.dim();
    let g = ch.gamma;
    let pref = (g / std::f64::consts::PI).sqrt();
    let sl = ch.l.scale(t.sqrt());
    let mut acc = ComplexMatrix::zeros(d, d);
    for (&ym, &wm) in y.iter().zip(&w) {
        let shifted = &ComplexMatrix::identity(d).scale(ym) - &sl;
        let k = mat_exp(&(&shifted * &shifted), -0.5 * g)?.scale((wm * pref).sqrt());
        acc = &acc + &(&(&k * x) * &k);
    }
    Ok(acc)
}

/// Superoperator of `X ↦ −γ/4 (L²X + XL² − 2LXL)` under column stacking.
pub fn lindblad_generator(ch: &MeasurementChannel) -> ComplexMatrix {
    let id = ComplexMatrix::identity(ch.dim());
    let l = &ch.l;
    let l2 = l * l;
    let sum = &(&sandwich_superoperator(&l2, &id) + &sandwich_superoperator(&id, &l2))
        - &sandwich_superoperator(l, l).scale(2.0);
    sum.scale(-ch.gamma / 4.0)
}

pub fn lindblad_spec(ch: &MeasurementChannel) -> Result<GeneratorSpec> {
    GeneratorSpec::new(lindblad_generator(ch))
}

/// Closed-form channel as a Chernoff family on vectorized `d × d` matrices.
pub fn measurement_family(ch: &MeasurementChannel) -> ChernoffFamily {
    let ch = ch.clone();
    ChernoffFamily::new(
        ch.dim() * ch.dim(),
        "measurement-closed",
        true,
        true,
        move |t| ch.schur_superoperator(&ch.damping_factors(t)),
    )
}

/// Trace-preserving Gauss–Legendre discretization of the channel with the
/// default cutoff. It is a commuting family of quantum channels with
/// `V(0) = I`, but not a semigroup.
pub fn quadrature_family(ch: &MeasurementChannel, nodes: usize) -> Result<ChernoffFamily> {
    if nodes < 3 {
        return invalid("at least 3 quadrature nodes are required");
    }
    let ch = ch.clone();
    Ok(ChernoffFamily::new(
        ch.dim() * ch.dim(),
        format!("measurement-quadrature(nodes={nodes})"),
        true,
        true,
        move |t| ch.schur_superoperator(&ch.quadrature_factors(t, nodes)?),
    ))
}

/// Which realization of the channel a sweep uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelVariant {
    Closed,
    Quadrature { nodes: usize },
}

pub fn family_for(ch: &MeasurementChannel, variant: ChannelVariant) -> Result<ChernoffFamily> {
    match variant {
        ChannelVariant::Closed => Ok(measurement_family(ch)),
        ChannelVariant::Quadrature { nodes } => quadrature_family(ch, nodes),
    }
}

/// Trace-norm distance between two vectorized matrices.
pub fn trace_distance_vec(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    trace_norm(&devectorize(&a.try_sub(b)?)?)
}

/// Minimum eigenvalue of the Choi matrix `Σ_{jk} E_jk ⊗ V(t)(E_jk)`.
pub fn choi_psd_check(ch: &MeasurementChannel, t: f64) -> Result<f64> {
    let d = ch.dim();
    let mut choi = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            let mut e = ComplexMatrix::zeros(d, d);
            e.set(j, k, C64::new(1.0, 0.0));
            let img = channel_apply_closed(ch, t, &e)?;
            for a in 0..d {
                for b in 0..d {
                    choi.set(j * d + a, k * d + b, img.get(a, b));
                }
            }
        }
    }
    if !choi.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Numerical("Choi matrix is not Hermitian".into()));
    }
    Ok(herm_eig(&choi)?.eigenvalues[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumRow {
    pub n: usize,
    /// Trace-norm distance to `e^{tA}(ρ)`.
    pub error: f64,
    pub l1_deviation: f64,
    pub max_weight: f64,
    /// `|tr Π V(a_i t)(ρ) − tr ρ|`.
    pub trace_error: f64,
}

#[derive(Clone, Debug)]
pub struct QuantumReport {
    pub t: f64,
    pub family: String,
    pub scheme: PartitionScheme,
    pub rows: Vec<QuantumRow>,
    pub fitted_order: f64,
}

impl QuantumReport {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["n", "error", "l1_deviation", "max_weight", "trace_error"],
            self.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    format_float(r.error),
                    format_float(r.l1_deviation),
                    format_float(r.max_weight),
                    format_float(r.trace_error),
                ]
            }),
        )
    }

    pub fn sidecar(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "t": self.t,
            "fitted_order": crate::output::json_float(self.fitted_order),
            "family": self.family,
            "scheme": self.scheme.label(),
        });
        if self.scheme.is_random() {
            v["rng"] = crate::partitions::RNG_ALGORITHM.into();
        }
        v
    }
}

/// Products of the channel over partitions of `[0, t]` applied to `ρ`,
/// compared in trace norm with the Lindblad semigroup.
pub fn quantum_sweep(
    ch: &MeasurementChannel,
    variant: ChannelVariant,
    scheme: &PartitionScheme,
    t: f64,
    ns: &[usize],
    rho: &DensityMatrix,
) -> Result<QuantumReport> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("ns must be nonempty, positive and strictly ascending");
    }
    if rho.dim() != ch.dim() {
        return invalid("state and channel dimensions differ");
    }
    let fam = family_for(ch, variant)?;
    let gen = lindblad_spec(ch)?;
    let x = vectorize(rho.matrix())?;
    let reference = &gen.semigroup(t)? * &x;
    let rows = ns
        .par_iter()
        .map(|&n| {
            let p = scheme.generate(n)?;
            let m = metrics(&p);
            let y = apply_product(&fam, &p, t, &x)?;
            let tr = devectorize(&y)?.trace();
            Ok(QuantumRow {
                n,
                error: trace_distance_vec(&y, &reference)?,
                l1_deviation: m.l1_deviation,
                max_weight: m.max_weight,
                trace_error: (tr - C64::new(1.0, 0.0)).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(QuantumReport {
        t,
        family: fam.label().to_string(),
        scheme: scheme.clone(),
        fitted_order: crate::engine::fitted_order(ns, &errors),
        rows,
    })
}

/// Pauli `σ_z`.
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::diag_real(&[1.0, -1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{commutativity_defect, discrete_generator};
    use crate::linalg::op_norm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_x() -> ComplexMatrix {
        ComplexMatrix::new(
            2,
            2,
            vec![c(0.3, 0.0), c(0.2, -0.1), c(-0.4, 0.5), c(0.7, 0.0)],
        )
        .unwrap()
    }

    fn sz() -> MeasurementChannel {
        MeasurementChannel::new(sigma_z(), 1.0).unwrap()
    }

    #[test]
    fn closed_form_at_zero_and_for_identity() {
        let x = sample_x();
        assert!((&channel_apply_closed(&sz(), 0.0, &x).unwrap() - &x).max_abs() < 1e-15);
        let id = MeasurementChannel::new(ComplexMatrix::identity(2), 2.5).unwrap();
        assert!((&channel_apply_closed(&id, 3.0, &x).unwrap() - &x).max_abs() < 1e-15);
    }

    #[test]
    fn closed_form_sigma_z() {
        let x = sample_x();
        let y = channel_apply_closed(&sz(), 1.0, &x).unwrap();
        let e = (-1f64).exp();
        assert!((y.get(0, 0) - x.get(0, 0)).norm() < 1e-15);
        assert!((y.get(1, 1) - x.get(1, 1)).norm() < 1e-15);
        assert!((y.get(0, 1) - x.get(0, 1) * e).norm() < 1e-15);
        assert!((y.get(1, 0) - x.get(1, 0) * e).norm() < 1e-15);
        assert!((e - 0.367_879).abs() < 1e-6);
    }

    #[test]
    fn quadrature_oracle_matches_closed_form() {
        let ch = sz();
        let x = sample_x();
        let t: f64 = 1.0;
        let cutoff = t.sqrt() * 1.0 + 8.0;
        let q = channel_apply_quadrature(&ch, t, &x, 201, cutoff).unwrap();
        let cl = channel_apply_closed(&ch, t, &x).unwrap();
        assert!((&q - &cl).max_abs() < 1e-8, "{}", (&q - &cl).max_abs());

        let q0 = channel_apply_quadrature(&ch, 0.0, &x, 201, 8.0).unwrap();
        assert!((&q0 - &x).max_abs() < 1e-8);

        assert!(channel_apply_quadrature(&ch, t, &x, 2, cutoff).is_err());
        assert!(channel_apply_quadrature(&ch, t, &x, 21, 0.0).is_err());
    }

    #[test]
    fn quadrature_oracle_preserves_trace() {
        let l = ComplexMatrix::new(
            3,
            3,
            vec![
                c(1.0, 0.0),
                c(0.5, 0.2),
                c(0.0, 0.0),
                c(0.5, -0.2),
                c(-0.3, 0.0),
                c(0.1, 0.0),
                c(0.0, 0.0),
                c(0.1, 0.0),
                c(0.8, 0.0),
            ],
        )
        .unwrap();
        let ch = MeasurementChannel::new(l, 2.0).unwrap();
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 1.0), c(0.5, -0.5)]).unwrap();
        let t: f64 = 0.7;
        let cutoff = t.sqrt() * op_norm(ch.observable()) + 8.0 / 2f64.sqrt();
        let y = channel_apply_quadrature(&ch, t, rho.matrix(), 201, cutoff).unwrap();
        assert!((y.trace() - c(1.0, 0.0)).norm() < 1e-8);
        let cl = channel_apply_closed(&ch, t, rho.matrix()).unwrap();
        assert!((&y - &cl).max_abs() < 1e-8);
    }

    #[test]
    fn generator_entries() {
        let id = MeasurementChannel::new(ComplexMatrix::identity(3), 1.0).unwrap();
        assert_eq!(lindblad_generator(&id).max_abs(), 0.0);

        let g = lindblad_generator(&sz());
        // vec index j + 2k for entry (j, k)
        let want = [0.0, -1.0, -1.0, 0.0];
        for (i, w) in want.iter().enumerate() {
            for j in 0..4 {
                let expect = if i == j { *w } else { 0.0 };
                assert!((g.get(i, j).re - expect).abs() < 1e-15 && g.get(i, j).im == 0.0);
            }
        }
    }

    #[test]
    fn generator_is_derivative_of_channel() {
        let ch = sz();
        let x = sample_x();
        let gx = devectorize(&(&lindblad_generator(&ch) * &vectorize(&x).unwrap())).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&h| {
                let fd = (&channel_apply_closed(&ch, h, &x).unwrap() - &x).scale(1.0 / h);
                (&fd - &gx).max_abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 5.0), "{errs:?}");
        assert!(errs[2] < 1e-4);

        let fam = measurement_family(&ch);
        let a = lindblad_generator(&ch);
        assert!(op_norm(&(&discrete_generator(&fam, 1e-6).unwrap() - &a)) < 1e-5);
    }

    #[test]
    fn family_commutes_and_composes() {
        let l = ComplexMatrix::new(
            2,
            2,
            vec![c(0.5, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(-1.0, 0.0)],
        )
        .unwrap();
        let ch = MeasurementChannel::new(l, 1.3).unwrap();
        let fam = measurement_family(&ch);
        assert!(commutativity_defect(&fam, 0.2, 0.9).unwrap() < 1e-10);
        let prod = &fam.evaluate(0.4).unwrap() * &fam.evaluate(0.5).unwrap();
        assert!((&prod - &fam.evaluate(0.9).unwrap()).max_abs() < 1e-10);
        let exact = lindblad_spec(&ch).unwrap().semigroup(0.9).unwrap();
        assert!((&exact - &fam.evaluate(0.9).unwrap()).max_abs() < 1e-10);

        let q = quadrature_family(&ch, 21).unwrap();
        assert!((&q.evaluate(0.0).unwrap() - &ComplexMatrix::identity(4)).max_abs() < 1e-14);
        assert!(commutativity_defect(&q, 0.2, 0.9).unwrap() < 1e-10);
    }

    #[test]
    fn choi_is_psd() {
        let ch = sz();
        let m0 = choi_psd_check(&ch, 0.0).unwrap();
        assert!(m0.abs() < 1e-12);
        assert!(choi_psd_check(&ch, 1.0).unwrap() >= -1e-10);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.25, 0.75])).is_ok());
        assert!(DensityMatrix::uniform_superposition(4).is_ok());
    }

    #[test]
    fn channel_validation() {
        assert!(MeasurementChannel::new(sigma_z(), 0.0).is_err());
        let nonherm = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(MeasurementChannel::new(nonherm, 1.0).is_err());
        assert!(MeasurementChannel::new(ComplexMatrix::identity(17), 1.0).is_err());
        assert!(channel_apply_closed(&sz(), 1.0, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn quadrature_sweep_converges() {
        let ch = sz();
        let rho = DensityMatrix::uniform_superposition(2).unwrap();
        let r = quantum_sweep(
            &ch,
            ChannelVariant::Quadrature { nodes: 21 },
            &PartitionScheme::Uniform,
            1.0,
            &[4, 16, 64, 256],
            &rho,
        )
        .unwrap();
        let errs: Vec<f64> = r.rows.iter().map(|r| r.error).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] <= 1e-3);
        assert!(r.rows.iter().all(|r| r.trace_error < 1e-8));
    }
}
