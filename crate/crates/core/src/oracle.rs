//! Position-space reference solvers in one dimension: complex-scaled finite
//! differences for resonances, Dirichlet finite differences for bound
//! states, and a brute-force resolvent entry for small matrices.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{solve, symmetric_tridiagonal_eigenvalues, tridiagonal_solve, CMatrix};
use crate::potentials::{mollified_value_at, MollifierSpec, PotentialSpec, QuadratureOptions};
use crate::spectra::eigen_all;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Half-width of the computational interval `[-box, box]`.
    pub half_width: f64,
    /// Interior points of each refinement level.
    pub points: Vec<usize>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub values: Vec<Complex64>,
    /// Change of each value under the last refinement step.
    pub tolerances: Vec<f64>,
    pub method: String,
    pub resolution: Resolution,
    /// Largest entry of `tolerances` (0 when there are no values).
    pub declared_tolerance: f64,
}

impl OracleResult {
    fn new(values: Vec<Complex64>, tolerances: Vec<f64>, method: &str, resolution: Resolution) -> Self {
        let declared_tolerance = tolerances.iter().copied().fold(0.0, f64::max);
        Self { values, tolerances, method: method.to_string(), resolution, declared_tolerance }
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Value closest to `z`, with its tolerance.
    pub fn nearest(&self, z: Complex64) -> Option<(Complex64, f64)> {
        self.values
            .iter()
            .zip(&self.tolerances)
            .min_by(|a, b| (a.0 - z).norm().total_cmp(&(b.0 - z).norm()))
            .map(|(v, t)| (*v, *t))
    }
}

fn refinement_points(m: usize, levels: usize) -> Vec<usize> {
    (0..=levels).map(|k| (1usize << k) * (m + 1) - 1).collect()
}

fn richardson(values: &[Complex64]) -> (Complex64, f64) {
    match values.len() {
        0 => (Complex64::new(f64::NAN, 0.0), f64::INFINITY),
        1 => (values[0], f64::INFINITY),
        2 => {
            let r = (values[1] * 4.0 - values[0]) / 3.0;
            (r, (r - values[1]).norm())
        }
        n => {
            let r1 = (values[n - 2] * 4.0 - values[n - 3]) / 3.0;
            let r2 = (values[n - 1] * 4.0 - values[n - 2]) / 3.0;
            (r2, (r2 - r1).norm())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexScalingOptions {
    /// Rotation angle of the coarse dense scan that seeds the refinement.
    pub scan_alpha: f64,
    pub scan_half_width: f64,
    pub scan_points: usize,
    /// Angular distance (radians) kept from the rotated continuum of the
    /// scan; a fifth of it is kept at the requested angle.
    pub sector_margin: f64,
    pub max_energy: f64,
    /// Number of grid halvings after the base grid.
    pub refinements: usize,
    /// The box is enlarged by this factor at fixed grid step and the change
    /// is added to the declared tolerance; `1.0` skips the check.
    pub box_factor: f64,
}

impl Default for ComplexScalingOptions {
    fn default() -> Self {
        Self {
            scan_alpha: 0.45,
            scan_half_width: 12.0,
            scan_points: 799,
            sector_margin: 0.05,
            max_energy: 60.0,
            refinements: 2,
            box_factor: 2.0,
        }
    }
}

struct ScaledStencil {
    diag: Vec<Complex64>,
    off: Complex64,
}

impl ScaledStencil {
    fn new(pot: &PotentialSpec, alpha: f64, half_width: f64, m: usize) -> Result<Self> {
        let dx = 2.0 * half_width / (m + 1) as f64;
        let e = Complex64::from_polar(1.0, -2.0 * alpha);
        let rot = Complex64::from_polar(1.0, alpha);
        let diag = (0..m)
            .map(|i| {
                let x = -half_width + (i + 1) as f64 * dx;
                Ok(e * (2.0 / (dx * dx)) + pot.v_x_complex(rot * x)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { diag, off: -e / (dx * dx) })
    }

    fn dense(&self) -> CMatrix {
        let m = self.diag.len();
        let mut a = Array2::zeros((m, m));
        for i in 0..m {
            a[[i, i]] = self.diag[i];
            if i + 1 < m {
                a[[i, i + 1]] = self.off;
                a[[i + 1, i]] = self.off;
            }
        }
        a
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = x.len();
        (0..m)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off * x[i - 1];
                }
                if i + 1 < m {
                    y += self.off * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Rayleigh-quotient iteration with the unconjugated (complex-symmetric)
    /// quotient, started at `sigma`.
    fn refine(&self, sigma: Complex64) -> Result<Complex64> {
        let m = self.diag.len();
        let mut x: Vec<Complex64> = (0..m)
            .map(|i| {
                let t = PI * (i + 1) as f64 / (m + 1) as f64;
                Complex64::new(t.sin() + 0.1 * (3.0 * t).sin(), 0.05 * (2.0 * t).sin())
            })
            .collect();
        let off = vec![self.off; m.saturating_sub(1)];
        let mut sigma = sigma;
        for _ in 0..60 {
            let shifted: Vec<Complex64> = self.diag.iter().map(|d| d - sigma).collect();
            let y = match tridiagonal_solve(&off, &shifted, &off, &x) {
                Ok(y) => y,
                Err(_) => return Ok(sigma),
            };
            let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x = y.iter().map(|z| z / norm).collect();
            let ax = self.apply(&x);
            let num: Complex64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let den: Complex64 = x.iter().map(|a| a * a).sum();
            let next = num / den;
            let step = (next - sigma).norm();
            sigma = next;
            if step <= 1e-14 * sigma.norm().max(1.0) {
                break;
            }
        }
        Ok(sigma)
    }
}

fn in_uncovered_sector(z: Complex64, alpha: f64, margin: f64) -> bool {
    let arg = z.arg();
    arg > -2.0 * alpha + margin || arg < -PI + margin
}

/// Eigenvalues of `−e^{−2iα} u″ + V(e^{iα} x) u` on `[−box, box]` with
/// Dirichlet ends that are not covered by the rotated continuum, refined by
/// grid halving and Richardson extrapolation. The reported values come from
/// the enlarged box when `box_factor > 1`, and the resolution records it.
pub fn resonances_1d_complex_scaling(
    pot: &PotentialSpec,
    alpha: f64,
    half_width: f64,
    m: usize,
    opts: &ComplexScalingOptions,
) -> Result<OracleResult> {
    if !(alpha > 0.0 && alpha < PI / 4.0) {
        return Err(Error::InvalidArgument(format!("rotation angle {alpha} must lie in (0, π/4)")));
    }
    if pot.dim != 1 {
        return Err(Error::InvalidArgument("the complex-scaling oracle is one-dimensional".into()));
    }
    if !(half_width > 0.0) || m < 3 {
        return Err(Error::InvalidArgument("box and grid must be non-trivial".into()));
    }
    let scan_alpha = opts.scan_alpha.clamp(alpha, PI / 4.0 - 1e-3);
    let scan = ScaledStencil::new(pot, scan_alpha, opts.scan_half_width, opts.scan_points)?;
    let seeds: Vec<Complex64> = eigen_all(&scan.dense())?
        .into_iter()
        .filter(|z| z.norm() < opts.max_energy)
        .filter(|z| in_uncovered_sector(*z, scan_alpha, opts.sector_margin))
        .filter(|z| in_uncovered_sector(*z, alpha, 0.2 * opts.sector_margin))
        .collect();

    if !(opts.box_factor >= 1.0) {
        return Err(Error::InvalidArgument("box_factor must be at least 1".into()));
    }
    let ladder = |width: f64, m: usize| -> Result<(Vec<usize>, Vec<ScaledStencil>)> {
        let points = refinement_points(m, opts.refinements);
        let stencils =
            points.iter().map(|&p| ScaledStencil::new(pot, alpha, width, p)).collect::<Result<Vec<_>>>()?;
        Ok((points, stencils))
    };
    let (points, stencils) = ladder(half_width, m)?;
    let wide_m = (opts.box_factor * (m + 1) as f64).round() as usize - 1;
    let wide_width = half_width * (wide_m + 1) as f64 / (m + 1) as f64;
    let wide = if opts.box_factor > 1.0 { Some(ladder(wide_width, wide_m)?) } else { None };

    let extrapolate = |stencils: &[ScaledStencil], seed: Complex64| -> Result<(Vec<Complex64>, Complex64, f64)> {
        let mut levels = Vec::with_capacity(stencils.len());
        let mut sigma = seed;
        for s in stencils {
            sigma = s.refine(sigma)?;
            levels.push(sigma);
        }
        let (value, tol) = richardson(&levels);
        Ok((levels, value, tol))
    };

    let mut found: Vec<(Complex64, f64)> = Vec::new();
    for seed in seeds {
        let (levels, mut value, mut tol) = extrapolate(&stencils, seed)?;
        if (levels[0] - seed).norm() > 0.1 * seed.norm().max(1.0)
            || !in_uncovered_sector(value, alpha, 0.2 * opts.sector_margin)
        {
            continue;
        }
        if let Some((_, wide_stencils)) = &wide {
            let (_, wide_value, wide_tol) = extrapolate(wide_stencils, value)?;
            tol = wide_tol + (wide_value - value).norm();
            value = wide_value;
        }
        if found.iter().any(|(z, _)| (z - value).norm() < 1e-8 * value.norm().max(1.0)) {
            continue;
        }
        found.push((value, tol));
    }
    let (half_width, points) = match wide {
        Some((wide_points, _)) => (wide_width, wide_points),
        None => (half_width, points),
    };
    found.sort_by(|a, b| a.0.re.total_cmp(&b.0.re));
    let (values, tolerances) = found.into_iter().unzip();
    Ok(OracleResult::new(
        values,
        tolerances,
        "complex-scaling-fd",
        Resolution { half_width, points, alpha: Some(alpha) },
    ))
}

/// How the potential is sampled on the finite-difference grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampling {
    /// `V(x_i)`; requires a pointwise form.
    Point,
    /// Average of `V` over the grid cell; usable for integrable singularities.
    CellAverage,
    /// `(φ_ε ∗ V)(x_i)` at a fixed scale `ε`.
    Mollified { mollifier: MollifierSpec, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateOptions {
    /// Eigenvalues at or above this energy are not reported.
    pub energy_max: f64,
    pub refinements: usize,
    /// `None` picks point samples when available and cell averages otherwise.
    pub sampling: Option<Sampling>,
}

impl Default for BoundStateOptions {
    fn default() -> Self {
        Self { energy_max: 0.0, refinements: 2, sampling: None }
    }
}

fn sample_potential(pot: &PotentialSpec, sampling: &Sampling, half_width: f64, m: usize) -> Result<Vec<f64>> {
    let dx = 2.0 * half_width / (m + 1) as f64;
    let quad = QuadratureOptions::default();
    (0..m)
        .map(|i| {
            let x = -half_width + (i + 1) as f64 * dx;
            match sampling {
                Sampling::Point => pot.v_x(&[x]).ok_or_else(|| Error::MissingPositionForm(pot.label.clone())),
                Sampling::CellAverage => pot.cell_average(x - 0.5 * dx, x + 0.5 * dx),
                Sampling::Mollified { mollifier, scale } => mollified_value_at(pot, mollifier, *scale, x, &quad),
            }
        })
        .collect()
}

/// Dirichlet finite-difference eigenvalues of `−u″ + Vu` on `[−box, box]`
/// below `energy_max`, Richardson-extrapolated over grid halvings.
pub fn bound_states_1d(
    pot: &PotentialSpec,
    half_width: f64,
    m: usize,
    opts: &BoundStateOptions,
) -> Result<OracleResult> {
    if pot.dim != 1 {
        return Err(Error::InvalidArgument("the bound-state oracle is one-dimensional".into()));
    }
    if !(half_width > 0.0) || m < 3 {
        return Err(Error::InvalidArgument("box and grid must be non-trivial".into()));
    }
    let sampling = opts.sampling.clone().unwrap_or(if pot.has_position_form() {
        Sampling::Point
    } else {
        Sampling::CellAverage
    });
    let points = refinement_points(m, opts.refinements);
    let mut levels: Vec<Vec<f64>> = Vec::new();
    for &p in &points {
        let dx = 2.0 * half_width / (p + 1) as f64;
        let v = sample_potential(pot, &sampling, half_width, p)?;
        let d: Vec<f64> = v.iter().map(|v| 2.0 / (dx * dx) + v).collect();
        let e = vec![-1.0 / (dx * dx); p - 1];
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).min(0.0) - 1.0;
        levels.push(symmetric_tridiagonal_eigenvalues(&d, &e, lo, opts.energy_max)?);
    }
    // drop eigenvalues that sit below the threshold on some levels only
    let count = levels.iter().map(Vec::len).min().unwrap_or(0);
    let mut values = Vec::with_capacity(count);
    let mut tolerances = Vec::with_capacity(count);
    for k in 0..count {
        let seq: Vec<Complex64> = levels.iter().map(|l| Complex64::new(l[k], 0.0)).collect();
        let (v, t) = richardson(&seq);
        values.push(v);
        tolerances.push(t);
    }
    let method = match sampling {
        Sampling::Point => "dirichlet-fd",
        Sampling::CellAverage => "dirichlet-fd-cell-average",
        Sampling::Mollified { .. } => "dirichlet-fd-mollified",
    };
    Ok(OracleResult::new(values, tolerances, method, Resolution { half_width, points, alpha: None }))
}

/// `⟨u₁, (z − A)^{-1} u₂⟩` by a direct solve.
pub fn brute_resolvent_entry(a: &CMatrix, z: Complex64, u1: &[Complex64], u2: &[Complex64]) -> Result<Complex64> {
    let n = a.nrows();
    if n > 64 {
        return Err(Error::InvalidArgument(format!("brute resolvent limited to dimension 64, got {n}")));
    }
    if u1.len() != n || u2.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: u1.len().min(u2.len()) });
    }
    let mut shifted = -a.clone();
    for i in 0..n {
        shifted[[i, i]] += z;
    }
    let x = solve(&shifted, &ndarray::Array1::from_vec(u2.to_vec()))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::LinearAlgebra("z lies in the spectrum".into()));
    }
    Ok(u1.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum())
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    method: String,
    params: serde_json::Value,
    declared_tolerance: f64,
    result: OracleResult,
}

/// Content-addressed on-disk store of oracle results.
#[derive(Clone, Debug)]
pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    pub fn key(method: &str, params: &serde_json::Value) -> String {
        let material = serde_json::json!({ "method": method, "params": params }).to_string();
        Sha256::digest(material.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, method: &str, params: &serde_json::Value) -> Result<Option<OracleResult>> {
        let path = self.path(&Self::key(method, params));
        if !path.exists() {
            return Ok(None);
        }
        let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(Some(entry.result))
    }

    pub fn get_or_compute(
        &self,
        method: &str,
        params: &serde_json::Value,
        compute: impl FnOnce() -> Result<OracleResult>,
    ) -> Result<OracleResult> {
        if let Some(r) = self.get(method, params)? {
            return Ok(r);
        }
        let result = compute()?;
        let entry = CacheEntry {
            method: method.to_string(),
            params: params.clone(),
            declared_tolerance: result.declared_tolerance,
            result: result.clone(),
        };
        fs::write(self.path(&Self::key(method, params)), serde_json::to_string_pretty(&entry)?)?;
        Ok(result)
    }
}
