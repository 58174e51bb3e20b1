//! Weighted central limit theorem on a uniform density grid.
//!
//! For a law `ξ` with density `p` the operators
//! `V_ξ(t) f(x) = ∫ f(x − √t y) p(y) dy` commute and are sup-norm
//! contractions; their products over a partition equal
//! `E f(x − √t ζ_n)` with `ζ_n = Σ √a_i ξ_i`. This module builds the law of
//! `ζ_n` by convolving scaled densities, realizes `V_ξ` and the heat
//! semigroup on sampled functions, and measures Kolmogorov–Smirnov distances.
//!
//! Grids store cell averages: the value at node `x_k` is the mass of
//! `[x_k − dx/2, x_k + dx/2]` divided by `dx`. All resampling goes through the
//! piecewise-linear CDF of the source grid, so mass is conserved exactly up to
//! what falls off the ends.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::output::{csv_table, format_float};
use crate::partitions::{metrics, Partition, PartitionScheme};

pub const DEFAULT_X0: f64 = -12.0;
pub const DEFAULT_DX: f64 = 0.005;
pub const MAX_DX: f64 = 0.01;
/// Named laws must be sampled on a grid covering `[-COVER, COVER]`.
pub const COVER: f64 = 8.0;
pub const MASS_TOL: f64 = 1e-8;
/// Mass lost per convolution above which a warning is raised.
pub const LEAKAGE_WARN: f64 = 1e-6;

/// A uniform grid `x_k = x0 + k·dx`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub dx: f64,
    pub count: usize,
}

impl GridSpec {
    /// `[-12, 12]` at spacing `dx`.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && half_width > 0.0) {
            return invalid("grid spacing and width must be positive");
        }
        let half = (half_width / dx).round() as usize;
        Ok(Self {
            x0: -(half as f64) * dx,
            dx,
            count: 2 * half + 1,
        })
    }

    pub fn default_grid() -> Self {
        Self::symmetric(-DEFAULT_X0, DEFAULT_DX).expect("valid default grid")
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.count - 1)
    }

    fn same_as(&self, other: &Self) -> bool {
        self.count == other.count
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.x0 - other.x0).abs() <= 1e-9 * self.dx
    }

    /// Index of the node at `x = 0`, if the grid has one.
    fn zero_index(&self) -> Option<usize> {
        let k = -self.x0 / self.dx;
        let r = k.round();
        ((k - r).abs() < 1e-6 && r >= 0.0 && (r as usize) < self.count).then_some(r as usize)
    }
}

/// Laws with mean 0 and variance 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLaw {
    /// Uniform on `[−√3, √3]`.
    #[serde(alias = "uniform")]
    UniformPmSqrt3,
    /// Symmetric triangular on `[−√6, √6]`.
    Triangular,
    Gaussian,
    /// `Beta(2, 2)` stretched to `[−√5, √5]`.
    BetaSymmetric,
}

impl NamedLaw {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" | "uniform_pm_sqrt3" => Ok(Self::UniformPmSqrt3),
            "triangular" => Ok(Self::Triangular),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "beta" | "beta_symmetric" => Ok(Self::BetaSymmetric),
            other => invalid(format!("unknown law {other:?}")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::UniformPmSqrt3 => "uniform_pm_sqrt3",
            Self::Triangular => "triangular",
            Self::Gaussian => "gaussian",
            Self::BetaSymmetric => "beta_symmetric",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::UniformPmSqrt3 => {
                let a = 3f64.sqrt();
                ((x + a) / (2.0 * a)).clamp(0.0, 1.0)
            }
            Self::Triangular => {
                let a = 6f64.sqrt();
                if x <= -a {
                    0.0
                } else if x < 0.0 {
                    (x + a).powi(2) / (2.0 * a * a)
                } else if x < a {
                    1.0 - (a - x).powi(2) / (2.0 * a * a)
                } else {
                    1.0
                }
            }
            Self::Gaussian => 0.5 * erfc(-x / std::f64::consts::SQRT_2),
            Self::BetaSymmetric => {
                let a = 5f64.sqrt();
                let u = ((x + a) / (2.0 * a)).clamp(0.0, 1.0);
                u * u * (3.0 - 2.0 * u)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::UniformPmSqrt3 => {
                let a = 3f64.sqrt();
                if x.abs() <= a {
                    1.0 / (2.0 * a)
                } else {
                    0.0
                }
            }
            Self::Triangular => {
                let a = 6f64.sqrt();
                ((a - x.abs()) / (a * a)).max(0.0)
            }
            Self::Gaussian => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Self::BetaSymmetric => {
                let a = 5f64.sqrt();
                let u = (x + a) / (2.0 * a);
                if (0.0..=1.0).contains(&u) {
                    6.0 * u * (1.0 - u) / (2.0 * a)
                } else {
                    0.0
                }
            }
        }
    }
}

/// A sampled probability density on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    /// Validates nonnegativity and unit mass.
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && x0.is_finite()) {
            return invalid("grid origin and spacing must be finite, spacing positive");
        }
        if values.is_empty() {
            return invalid("empty density");
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("density values must be finite and nonnegative");
        }
        let g = Self { x0, dx, values };
        let mass = g.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return invalid(format!("density has mass {mass}"));
        }
        Ok(g)
    }

    fn from_masses(grid: GridSpec, masses: Vec<f64>) -> Result<(Self, f64)> {
        let total: f64 = masses.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Numerical("density lost all of its mass".into()));
        }
        let values = masses.iter().map(|m| m / total / grid.dx).collect();
        Ok((Self::new(grid.x0, grid.dx, values)?, 1.0 - total))
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x0: self.x0,
            dx: self.dx,
            count: self.values.len(),
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn masses(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.dx).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.dx * self.x(k))
            .sum::<f64>()
            / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.dx * (self.x(k) - m).powi(2))
            .sum::<f64>()
            / self.mass()
    }

    /// CDF at the right edge of every cell.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|v| {
                acc += v * self.dx;
                acc
            })
            .collect()
    }

    /// Two-column `x,p` CSV.
    pub fn to_csv(&self) -> String {
        csv_table(
            &["x", "p"],
            self.values
                .iter()
                .enumerate()
                .map(|(k, v)| vec![format_float(self.x(k)), format_float(*v)]),
        )
    }

    fn support(&self) -> (usize, usize) {
        support_of(&self.values)
    }
}

/// Index range `[lo, hi)` holding every value above `1e-300` of the peak.
fn support_of(v: &[f64]) -> (usize, usize) {
    let peak = v.iter().copied().fold(0.0, f64::max);
    let floor = peak * 1e-300;
    let lo = v.iter().position(|&x| x > floor).unwrap_or(0);
    let hi = v.iter().rposition(|&x| x > floor).map_or(0, |i| i + 1);
    (lo, hi.max(lo))
}

/// Piecewise-linear CDF of a grid (exact CDF of its piecewise-constant
/// density).
struct GridCdf {
    lo_edge: f64,
    dx: f64,
    prefix: Vec<f64>,
}

impl GridCdf {
    fn new(p: &DensityGrid) -> Self {
        let mut prefix = Vec::with_capacity(p.values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &p.values {
            acc += v * p.dx;
            prefix.push(acc);
        }
        Self {
            lo_edge: p.x0 - 0.5 * p.dx,
            dx: p.dx,
            prefix,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = (x - self.lo_edge) / self.dx;
        let cells = self.prefix.len() - 1;
        if u <= 0.0 {
            return 0.0;
        }
        if u >= cells as f64 {
            return self.prefix[cells];
        }
        let k = u.floor() as usize;
        let frac = u - k as f64;
        self.prefix[k] + frac * (self.prefix[k + 1] - self.prefix[k])
    }

    fn half_extent(&self) -> f64 {
        let hi = self.lo_edge + self.dx * (self.prefix.len() - 1) as f64;
        self.lo_edge.abs().max(hi.abs())
    }
}

fn check_grid_resolution(grid: &GridSpec) -> Result<()> {
    if !(grid.dx > 0.0 && grid.dx <= MAX_DX) {
        return invalid(format!("dx must lie in (0, {MAX_DX}], got {}", grid.dx));
    }
    if grid.count < 2 || grid.x0 > -COVER || grid.x_end() < COVER {
        return invalid(format!(
            "grid [{}, {}] must cover [-{COVER}, {COVER}]",
            grid.x0,
            grid.x_end()
        ));
    }
    Ok(())
}

/// Cell-averaged density of a named law.
pub fn density_of(law: NamedLaw, x0: f64, dx: f64, count: usize) -> Result<DensityGrid> {
    let grid = GridSpec { x0, dx, count };
    check_grid_resolution(&grid)?;
    let masses = (0..count)
        .map(|k| {
            let x = grid.x(k);
            law.cdf(x + 0.5 * dx) - law.cdf(x - 0.5 * dx)
        })
        .collect();
    Ok(DensityGrid::from_masses(grid, masses)?.0)
}

pub fn density_on(law: NamedLaw, grid: GridSpec) -> Result<DensityGrid> {
    density_of(law, grid.x0, grid.dx, grid.count)
}

/// Masses that `c·ξ` puts on the cells of `grid`.
fn scaled_masses(cdf: &GridCdf, c: f64, grid: &GridSpec) -> Vec<f64> {
    let h = 0.5 * grid.dx;
    (0..grid.count)
        .map(|k| {
            let x = grid.x(k);
            cdf.eval((x + h) / c) - cdf.eval((x - h) / c)
        })
        .collect()
}

/// Density of `c·ξ`, resampled onto the grid of `p`.
pub fn scale_density(p: &DensityGrid, c: f64) -> Result<DensityGrid> {
    if !(c.is_finite() && c > 0.0) {
        return invalid(format!("scale must be positive, got {c}"));
    }
    if c == 1.0 {
        return Ok(p.clone());
    }
    let grid = p.grid();
    let masses = scaled_masses(&GridCdf::new(p), c, &grid);
    Ok(DensityGrid::from_masses(grid, masses)?.0)
}

/// Convolution on the grid of `p`, renormalized; also returns the mass that
/// fell off the grid before renormalization.
pub fn convolve_with_leakage(p: &DensityGrid, q: &DensityGrid) -> Result<(DensityGrid, f64)> {
    if (p.dx - q.dx).abs() > 1e-12 * p.dx {
        return invalid(format!("spacings differ: {} vs {}", p.dx, q.dx));
    }
    let gq = q.grid();
    let Some(zero) = gq.zero_index() else {
        return invalid("the second density's grid must have a node at 0");
    };
    let gp = p.grid();
    let pm = p.masses();
    let qm = q.masses();
    let (plo, phi) = p.support();
    let (qlo, qhi) = q.support();
    let mut out = vec![0.0; gp.count];
    for (i, &w) in qm.iter().enumerate().take(qhi).skip(qlo) {
        if w == 0.0 {
            continue;
        }
        let shift = i as isize - zero as isize;
        let jlo = (plo as isize).max(-shift);
        let jhi = (phi as isize).min(gp.count as isize - shift);
        for j in jlo..jhi {
            out[(j + shift) as usize] += pm[j as usize] * w;
        }
    }
    DensityGrid::from_masses(gp, out)
}

pub fn convolve(p: &DensityGrid, q: &DensityGrid) -> Result<DensityGrid> {
    Ok(convolve_with_leakage(p, q)?.0)
}

/// The density of `√t ζ_n`, plus the largest per-step leakage observed.
#[derive(Clone, Debug)]
pub struct ZetaDensity {
    pub density: DensityGrid,
    pub max_leakage: f64,
}

impl ZetaDensity {
    pub fn leakage_warning(&self) -> bool {
        self.max_leakage > LEAKAGE_WARN
    }
}

/// Law of `√t Σ √a_i ξ_i` on `grid`; `laws` holds one law for all `i` or one
/// per index.
pub fn zeta_density_on(
    laws: &[NamedLaw],
    p: &Partition,
    t: f64,
    grid: GridSpec,
) -> Result<ZetaDensity> {
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("t must be nonnegative, got {t}"));
    }
    if laws.len() != 1 && laws.len() != p.n() {
        return invalid("give one law, or one law per partition weight");
    }
    check_grid_resolution(&grid)?;
    let zero = grid
        .zero_index()
        .ok_or_else(|| Error::InvalidArgument("grid must have a node at 0".into()))?;
    if t == 0.0 {
        let mut masses = vec![0.0; grid.count];
        masses[zero] = 1.0;
        return Ok(ZetaDensity {
            density: DensityGrid::from_masses(grid, masses)?.0,
            max_leakage: 0.0,
        });
    }
    let mut bases: Vec<(NamedLaw, DensityGrid)> = Vec::new();
    let mut acc: Option<DensityGrid> = None;
    let mut max_leakage = 0.0f64;
    for (i, &a) in p.weights().iter().enumerate() {
        let law = laws[if laws.len() == 1 { 0 } else { i }];
        let base = match bases.iter().find(|(l, _)| *l == law) {
            Some((_, d)) => d,
            None => {
                bases.push((law, density_on(law, grid)?));
                &bases.last().expect("just pushed").1
            }
        };
        let c = (t * a).sqrt();
        let (component, leak) = if c == 1.0 {
            (base.clone(), 0.0)
        } else {
            let masses = scaled_masses(&GridCdf::new(base), c, &grid);
            DensityGrid::from_masses(grid, masses)?
        };
        max_leakage = max_leakage.max(leak);
        acc = Some(match acc {
            None => component,
            Some(prev) => {
                let (next, leak) = convolve_with_leakage(&prev, &component)?;
                max_leakage = max_leakage.max(leak);
                next
            }
        });
    }
    Ok(ZetaDensity {
        density: acc.expect("partitions are nonempty"),
        max_leakage,
    })
}

/// [`zeta_density_on`] over the default grid.
pub fn zeta_density(laws: &[NamedLaw], p: &Partition, t: f64) -> Result<DensityGrid> {
    Ok(zeta_density_on(laws, p, t, GridSpec::default_grid())?.density)
}

/// Largest difference between the cumulative distributions of two densities
/// on the same grid.
pub fn ks_distance(p: &DensityGrid, q: &DensityGrid) -> Result<f64> {
    if !p.grid().same_as(&q.grid()) {
        return invalid("KS distance needs identical grids");
    }
    Ok(p.cumulative()
        .iter()
        .zip(q.cumulative())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// A real function sampled on a uniform grid; extended by its end values
/// beyond the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn sample(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self {
            x0: grid.x0,
            dx: grid.dx,
            values: (0..grid.count).map(|k| f(grid.x(k))).collect(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x0: self.x0,
            dx: self.dx,
            count: self.values.len(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if !self.grid().same_as(&other.grid()) {
            return invalid("functions live on different grids");
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Kernel masses of `√t ξ` on the nodes `j·dx`, `|j| ≤ J`.
fn smoothing_kernel(law: &DensityGrid, t: f64, dx: f64) -> (isize, Vec<f64>) {
    let cdf = GridCdf::new(law);
    let c = t.sqrt();
    let reach = (c * cdf.half_extent() / dx).ceil() as isize + 1;
    let h = 0.5 * dx;
    let masses: Vec<f64> = (-reach..=reach)
        .map(|j| {
            let z = j as f64 * dx;
            cdf.eval((z + h) / c) - cdf.eval((z - h) / c)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    (reach, masses.into_iter().map(|m| m / total).collect())
}

/// `V_ξ(t) f(x) = ∫ f(x − √t y) p(y) dy` on the grid of `f`.
pub fn vxi_apply(f: &GridFunction, law: &DensityGrid, t: f64) -> Result<GridFunction> {
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("t must be nonnegative, got {t}"));
    }
    if f.values.is_empty() {
        return invalid("empty function");
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let (reach, kernel) = smoothing_kernel(law, t, f.dx);
    let (klo, khi) = support_of(&kernel);
    let n = f.values.len() as isize;
    let values = (0..n)
        .map(|k| {
            (klo..khi)
                .map(|idx| {
                    let j = idx as isize - reach;
                    let src = (k - j).clamp(0, n - 1) as usize;
                    kernel[idx] * f.values[src]
                })
                .sum()
        })
        .collect();
    Ok(GridFunction {
        x0: f.x0,
        dx: f.dx,
        values,
    })
}

/// Heat semigroup `T(t) f = E f(x − √t N)`, `N ~ N(0, 1)`, on the grid of `f`.
pub fn heat_reference(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t.is_finite() && t > 0.0) {
        return invalid(format!("t must be positive, got {t}"));
    }
    let dx = f.dx.min(MAX_DX);
    let gaussian = density_on(NamedLaw::Gaussian, GridSpec::symmetric(-DEFAULT_X0, dx)?)?;
    vxi_apply(f, &gaussian, t)
}

/// `Π V_ξ(a_i t) f`, applied with the highest index first.
pub fn product_apply(
    f: &GridFunction,
    law: &DensityGrid,
    p: &Partition,
    t: f64,
) -> Result<GridFunction> {
    let mut g = f.clone();
    for &a in p.weights().iter().rev() {
        g = vxi_apply(&g, law, a * t)?;
    }
    Ok(g)
}

/// Smooth, rapidly decaying test function used for sup-norm comparisons.
pub fn test_function(x: f64) -> f64 {
    (-x * x).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltRow {
    pub n: usize,
    pub ks_distance: f64,
    pub sup_error: f64,
    pub l1_deviation: f64,
    pub max_weight: f64,
}

#[derive(Clone, Debug)]
pub struct CltReport {
    pub law: NamedLaw,
    pub scheme: PartitionScheme,
    pub t: f64,
    pub rows: Vec<CltRow>,
    pub max_leakage: f64,
    /// Density of `ζ_n` at the largest `n`.
    pub final_density: DensityGrid,
}

impl CltReport {
    pub fn leakage_warning(&self) -> bool {
        self.max_leakage > LEAKAGE_WARN
    }

    pub fn to_csv(&self) -> String {
        csv_table(
            &[
                "n",
                "ks_distance",
                "sup_error",
                "l1_deviation",
                "max_weight",
            ],
            self.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    format_float(r.ks_distance),
                    format_float(r.sup_error),
                    format_float(r.l1_deviation),
                    format_float(r.max_weight),
                ]
            }),
        )
    }
}

/// For each `n`: KS distance of `ζ_n` to `N(0, 1)`, and the sup-norm distance
/// between `Π V_ξ(a_i t) f` and the heat semigroup for [`test_function`].
pub fn clt_sweep(
    law: NamedLaw,
    scheme: &PartitionScheme,
    t: f64,
    ns: &[usize],
    grid: GridSpec,
) -> Result<CltReport> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("ns must be nonempty, positive and strictly ascending");
    }
    if !(t.is_finite() && t > 0.0) {
        return invalid("t must be positive");
    }
    let normal = density_on(NamedLaw::Gaussian, grid)?;
    let base = density_on(law, grid)?;
    let f = GridFunction::sample(grid, test_function);
    let reference = heat_reference(&f, t)?;
    let results = ns
        .par_iter()
        .map(|&n| {
            let p = scheme.generate(n)?;
            let m = metrics(&p);
            let zeta = zeta_density_on(&[law], &p, 1.0, grid)?;
            let ks = ks_distance(&zeta.density, &normal)?;
            let sup = product_apply(&f, &base, &p, t)?.sup_distance(&reference)?;
            Ok((
                CltRow {
                    n,
                    ks_distance: ks,
                    sup_error: sup,
                    l1_deviation: m.l1_deviation,
                    max_weight: m.max_weight,
                },
                zeta,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_leakage = results
        .iter()
        .map(|(_, z)| z.max_leakage)
        .fold(0.0, f64::max);
    let final_density = results.last().expect("ns nonempty").1.density.clone();
    Ok(CltReport {
        law,
        scheme: scheme.clone(),
        t,
        rows: results.into_iter().map(|(r, _)| r).collect(),
        max_leakage,
        final_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{make_power_law, make_uniform};

    const LAWS: [NamedLaw; 4] = [
        NamedLaw::UniformPmSqrt3,
        NamedLaw::Triangular,
        NamedLaw::Gaussian,
        NamedLaw::BetaSymmetric,
    ];

    fn grid() -> GridSpec {
        GridSpec::default_grid()
    }

    #[test]
    fn default_grid_shape() {
        let g = grid();
        assert_eq!(g.count, 4801);
        assert_eq!(g.x0, -12.0);
        assert_eq!(g.zero_index(), Some(2400));
    }

    #[test]
    fn law_densities_have_unit_moments() {
        for law in LAWS {
            let d = density_on(law, grid()).unwrap();
            assert!((d.mass() - 1.0).abs() < 1e-12, "{law:?}");
            assert!(d.mean().abs() < 1e-6, "{law:?} mean {}", d.mean());
            assert!(
                (d.variance() - 1.0).abs() < 1e-4,
                "{law:?} var {}",
                d.variance()
            );
        }
    }

    #[test]
    fn law_cdfs_match_pdfs() {
        // Midpoint-rule integral of the pdf against the closed-form CDF.
        for law in LAWS {
            let h = 1e-4;
            let mut acc = 0.0;
            let mut x = -9.0;
            while x < 1.0 - 1e-12 {
                acc += law.pdf(x + 0.5 * h) * h;
                x += h;
            }
            assert!(
                (acc - law.cdf(1.0)).abs() < 1e-4,
                "{law:?}: {acc} vs {}",
                law.cdf(1.0)
            );
        }
    }

    #[test]
    fn uniform_and_gaussian_values() {
        let u = density_on(NamedLaw::UniformPmSqrt3, grid()).unwrap();
        let h = 1.0 / (2.0 * 3f64.sqrt());
        assert!((u.values()[2400] - h).abs() < 1e-12);
        assert!((u.values()[2400 + 300] - h).abs() < 1e-12);
        assert_eq!(u.values()[2400 + 400], 0.0);
        assert!((h - 0.288_675).abs() < 1e-6);
        let g = density_on(NamedLaw::Gaussian, grid()).unwrap();
        assert!((g.values()[2400] - 0.398_942).abs() < 1e-5);
    }

    #[test]
    fn density_grid_preconditions() {
        assert!(density_of(NamedLaw::Gaussian, -4.0, 0.005, 1601).is_err());
        assert!(density_of(NamedLaw::Gaussian, -12.0, 0.02, 1201).is_err());
        assert!(DensityGrid::new(0.0, 1.0, vec![0.5, 0.4]).is_err());
        assert!(DensityGrid::new(0.0, 1.0, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn scaling() {
        let u = density_on(NamedLaw::UniformPmSqrt3, grid()).unwrap();
        assert_eq!(scale_density(&u, 1.0).unwrap(), u);
        let half = scale_density(&u, 0.5).unwrap();
        let h = 1.0 / 3f64.sqrt();
        assert!((half.values()[2400] - h).abs() < 1e-12);
        assert!((half.values()[2400 + 170] - h).abs() < 1e-12);
        assert_eq!(half.values()[2400 + 180], 0.0);
        for law in LAWS {
            let s = scale_density(&density_on(law, grid()).unwrap(), 0.3).unwrap();
            assert!(
                (s.variance() - 0.09).abs() < 1e-4,
                "{law:?} {}",
                s.variance()
            );
        }
        assert!(scale_density(&u, 0.0).is_err());
        assert!(scale_density(&u, -1.0).is_err());
    }

    #[test]
    fn convolution_with_spike_is_identity() {
        let p = density_on(NamedLaw::Triangular, grid()).unwrap();
        let spike = scale_density(&density_on(NamedLaw::Gaussian, grid()).unwrap(), 1e-3).unwrap();
        let r = convolve(&p, &spike).unwrap();
        let sup = r
            .values()
            .iter()
            .zip(p.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-2, "{sup}");
    }

    #[test]
    fn box_convolved_with_box_is_triangle() {
        // Uniform on [-1/2, 1/2] is the uniform law scaled by 1/(2√3).
        let u = density_on(NamedLaw::UniformPmSqrt3, grid()).unwrap();
        let b = scale_density(&u, 1.0 / (2.0 * 3f64.sqrt())).unwrap();
        let tri = convolve(&b, &b).unwrap();
        assert!((tri.values()[2400] - 1.0).abs() < 1e-2);
        for k in (0..tri.values().len()).step_by(37) {
            let x = tri.x(k);
            let want = (1.0 - x.abs()).max(0.0);
            assert!((tri.values()[k] - want).abs() < 1e-2, "x={x}");
        }
    }

    #[test]
    fn convolution_adds_moments() {
        let p = scale_density(&density_on(NamedLaw::BetaSymmetric, grid()).unwrap(), 0.8).unwrap();
        let q = scale_density(&density_on(NamedLaw::Triangular, grid()).unwrap(), 1.3).unwrap();
        let r = convolve(&p, &q).unwrap();
        assert!((r.mean() - p.mean() - q.mean()).abs() < 1e-3);
        assert!((r.variance() - p.variance() - q.variance()).abs() < 1e-3);
    }

    #[test]
    fn convolution_requires_equal_spacing() {
        let p = density_on(NamedLaw::Gaussian, grid()).unwrap();
        let q = density_on(NamedLaw::Gaussian, GridSpec::symmetric(12.0, 0.01).unwrap()).unwrap();
        assert!(matches!(convolve(&p, &q), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn zeta_with_one_weight_is_base() {
        let p = make_uniform(1).unwrap();
        for law in LAWS {
            let z = zeta_density(&[law], &p, 1.0).unwrap();
            assert_eq!(z, density_on(law, grid()).unwrap());
        }
    }

    #[test]
    fn zeta_variance_is_t() {
        let p = make_power_law(40, 1.5).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let z = zeta_density(&[NamedLaw::Triangular], &p, t).unwrap();
            assert!((z.mass() - 1.0).abs() < 1e-8);
            assert!(z.mean().abs() < 1e-6);
            assert!((z.variance() - t).abs() < 1e-3, "t={t}: {}", z.variance());
        }
        assert!(zeta_density(&[NamedLaw::Gaussian, NamedLaw::Gaussian], &p, 1.0).is_err());
    }

    #[test]
    fn ks_regressions() {
        let u = density_on(NamedLaw::UniformPmSqrt3, grid()).unwrap();
        let g = density_on(NamedLaw::Gaussian, grid()).unwrap();
        assert_eq!(ks_distance(&u, &u).unwrap(), 0.0);
        // sup |F_U − Φ| is attained where φ(x) = 1/(2√3), x ≈ ±0.8044.
        let d = ks_distance(&u, &g).unwrap();
        assert!((d - 0.057_206_721).abs() < 1e-5, "{d}");
        let coarse =
            density_on(NamedLaw::Gaussian, GridSpec::symmetric(12.0, 0.01).unwrap()).unwrap();
        assert!(ks_distance(&u, &coarse).is_err());
    }

    #[test]
    fn vxi_basics() {
        let law = density_on(NamedLaw::UniformPmSqrt3, grid()).unwrap();
        let f = GridFunction::sample(grid(), |x| (3.0 * x).sin() * (-x * x / 8.0).exp());
        assert_eq!(vxi_apply(&f, &law, 0.0).unwrap(), f);
        let c = GridFunction::sample(grid(), |_| 2.5);
        let vc = vxi_apply(&c, &law, 0.7).unwrap();
        assert!(vc.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let vf = vxi_apply(&f, &law, 0.7).unwrap();
        assert!(vf.sup_norm() <= f.sup_norm() + 1e-10);
    }

    #[test]
    fn vxi_commute() {
        let law = density_on(NamedLaw::Triangular, grid()).unwrap();
        let f = GridFunction::sample(grid(), |x| (-(x - 0.3).powi(2)).exp());
        let ab = vxi_apply(&vxi_apply(&f, &law, 0.2).unwrap(), &law, 0.5).unwrap();
        let ba = vxi_apply(&vxi_apply(&f, &law, 0.5).unwrap(), &law, 0.2).unwrap();
        assert!(ab.sup_distance(&ba).unwrap() < 1e-8);
    }

    #[test]
    fn heat_reference_properties() {
        let f = GridFunction::sample(grid(), test_function);
        let gauss = density_on(NamedLaw::Gaussian, grid()).unwrap();
        let t = 0.6;
        let a = heat_reference(&f, t).unwrap();
        let b = vxi_apply(&f, &gauss, t).unwrap();
        assert!(a.sup_distance(&b).unwrap() < 1e-8);

        // exact: e^{-x²/(1+2t)} / √(1+2t)
        let exact = GridFunction::sample(grid(), |x| {
            (-x * x / (1.0 + 2.0 * t)).exp() / (1.0 + 2.0 * t).sqrt()
        });
        assert!(a.sup_distance(&exact).unwrap() < 1e-5);

        let errs: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&s| heat_reference(&f, s).unwrap().sup_distance(&f).unwrap())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(heat_reference(&f, 0.0).is_err());
    }

    #[test]
    fn heat_adds_variance_to_densities() {
        let tri = density_on(NamedLaw::Triangular, grid()).unwrap();
        let f = GridFunction {
            x0: tri.x0(),
            dx: tri.dx(),
            values: tri.values().to_vec(),
        };
        let t = 0.5;
        let g = heat_reference(&f, t).unwrap();
        let d = DensityGrid::new(g.x0, g.dx, g.values.clone()).unwrap();
        assert!((d.variance() - (1.0 + t)).abs() < 1e-3);
    }

    #[test]
    fn product_matches_zeta_correlation() {
        // Π V(a_i t) f = E f(x − √t ζ_n): compare the operator product with a
        // single smoothing by the law of ζ_n.
        let law = NamedLaw::BetaSymmetric;
        let base = density_on(law, grid()).unwrap();
        let p = make_power_law(6, 1.0).unwrap();
        let f = GridFunction::sample(grid(), test_function);
        let t = 0.8;
        let prod = product_apply(&f, &base, &p, t).unwrap();
        let zeta = zeta_density(&[law], &p, 1.0).unwrap();
        let once = vxi_apply(&f, &zeta, t).unwrap();
        assert!(prod.sup_distance(&once).unwrap() < 1e-4);
    }
}
