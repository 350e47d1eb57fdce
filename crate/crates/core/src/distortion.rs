//! Momentum-space distortion: vector fields `v`, the map `Φ_θ(ξ) = ξ + θ v(ξ)`,
//! its Jacobian, admissibility of `θ`, the resonance region, and the distorted
//! kinetic symbols of the continuum and lattice operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, Point, MAX_DIM};
use crate::potentials::ClassParams;
use crate::special::{plateau, plateau_derivative};

const SAFETY: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    /// `v ≡ 0`.
    Zero,
    /// `v(ξ) = ξ χ(|ξ| / E₀^{1/2})` with `χ` the smooth plateau of
    /// [`plateau`]: equal to `ξ` on `|ξ| ≤ E₀^{1/2}`, zero beyond `2E₀^{1/2}`.
    CutoffDilation,
    /// `v(ξ)_j = sin(scale · ξ_j)`; on the lattice `scale/h` must be an integer.
    Sine { scale: f64 },
}

/// Bounds on the vector field, stored with a 10% safety margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldData {
    pub sup_norm: f64,
    pub lipschitz: f64,
    pub support_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub field: FieldKind,
    pub theta: Complex64,
    pub e0: f64,
    pub dim: usize,
    pub data: FieldData,
}

fn cutoff_profile_bounds() -> (f64, f64) {
    let samples = 20_001;
    let (mut sup, mut lip) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let t = 2.0 * i as f64 / (samples - 1) as f64;
        let chi = plateau(t);
        sup = sup.max(t * chi);
        lip = lip.max(chi.abs()).max((chi + t * plateau_derivative(t)).abs());
    }
    (sup, lip)
}

impl DistortionSpec {
    pub fn none(dim: usize) -> Self {
        Self {
            field: FieldKind::Zero,
            theta: Complex64::new(0.0, 0.0),
            e0: 0.0,
            dim,
            data: FieldData { sup_norm: 0.0, lipschitz: 0.0, support_radius: 0.0 },
        }
    }

    pub fn cutoff_dilation(theta: Complex64, e0: f64, dim: usize) -> Result<Self> {
        if !(e0 > 0.0 && e0.is_finite()) {
            return Err(Error::InvalidArgument(format!("energy window E0 = {e0} must be positive")));
        }
        let (sup, lip) = cutoff_profile_bounds();
        let root = e0.sqrt();
        Self::validated(Self {
            field: FieldKind::CutoffDilation,
            theta,
            e0,
            dim,
            data: FieldData {
                sup_norm: SAFETY * sup * root,
                lipschitz: SAFETY * lip,
                support_radius: 2.0 * root,
            },
        })
    }

    pub fn sine(theta: Complex64, scale: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("sine scale {scale} must be positive")));
        }
        Self::validated(Self {
            field: FieldKind::Sine { scale },
            theta,
            e0: 0.0,
            dim,
            data: FieldData {
                sup_norm: (dim as f64).sqrt(),
                lipschitz: scale,
                support_radius: f64::INFINITY,
            },
        })
    }

    fn validated(spec: Self) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&spec.dim) {
            return Err(Error::InvalidArgument(format!("dimension {} not in 1..=3", spec.dim)));
        }
        if !(spec.theta.re.is_finite() && spec.theta.im.is_finite()) {
            return Err(Error::Inadmissible("θ must be finite".into()));
        }
        if spec.theta.norm() * spec.data.lipschitz >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "|θ|·Lip(v) = {:.4} must be below 1",
                spec.theta.norm() * spec.data.lipschitz
            )));
        }
        Ok(spec)
    }

    pub fn with_theta(&self, theta: Complex64) -> Result<Self> {
        Self::validated(Self { theta, ..*self })
    }

    /// Continuum admissibility: `Lip(v)(c₀|Re θ| + |Im θ|) < c₀` and
    /// `‖v‖_∞ |Im θ| < δ₀`.
    pub fn check_continuum(&self, class: &ClassParams) -> Result<()> {
        admissible(self.theta, self.data.lipschitz, self.data.sup_norm, class)
    }

    /// Lattice admissibility with the bounds of the periodized field `v_h`.
    pub fn check_lattice(&self, h: f64, class: &ClassParams) -> Result<()> {
        let data = self.lattice_field_data(h)?;
        admissible(self.theta, data.lipschitz, data.sup_norm, class)
    }

    pub fn is_continuum_admissible(&self, class: &ClassParams) -> bool {
        self.check_continuum(class).is_ok()
    }

    /// Continuum field `v(ξ)`.
    pub fn field_at(&self, xi: &[f64]) -> Point {
        let mut out = [0.0; MAX_DIM];
        match self.field {
            FieldKind::Zero => {}
            FieldKind::CutoffDilation => {
                let r = norm(xi, self.dim);
                let chi = plateau(r / self.e0.sqrt());
                for a in 0..self.dim {
                    out[a] = xi[a] * chi;
                }
            }
            FieldKind::Sine { scale } => {
                for a in 0..self.dim {
                    out[a] = (scale * xi[a]).sin();
                }
            }
        }
        out
    }

    /// Eigenvalues of the symmetric Jacobian matrix `Dv(ξ)`.
    fn field_derivative_eigenvalues(&self, xi: &[f64]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        match self.field {
            FieldKind::Zero => {}
            FieldKind::CutoffDilation => {
                let root = self.e0.sqrt();
                let t = norm(xi, self.dim) / root;
                let chi = plateau(t);
                for item in out.iter_mut().take(self.dim) {
                    *item = chi;
                }
                out[0] = chi + t * plateau_derivative(t);
            }
            FieldKind::Sine { scale } => {
                for a in 0..self.dim {
                    out[a] = scale * (scale * xi[a]).cos();
                }
            }
        }
        out
    }

    fn field_derivative_matrix(&self, xi: &[f64]) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        match self.field {
            FieldKind::Zero => {}
            FieldKind::CutoffDilation => {
                let root = self.e0.sqrt();
                let r = norm(xi, self.dim);
                let t = r / root;
                let chi = plateau(t);
                let radial = if r > 0.0 { plateau_derivative(t) / (r * root) } else { 0.0 };
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        m[a][b] = radial * xi[a] * xi[b];
                    }
                    m[a][a] += chi;
                }
            }
            FieldKind::Sine { scale } => {
                for a in 0..self.dim {
                    m[a][a] = scale * (scale * xi[a]).cos();
                }
            }
        }
        m
    }

    /// `Φ_θ(ξ) = ξ + θ v(ξ)`.
    pub fn phi(&self, xi: &[f64]) -> [Complex64; MAX_DIM] {
        let v = self.field_at(xi);
        let mut out = [Complex64::new(0.0, 0.0); MAX_DIM];
        for a in 0..self.dim {
            out[a] = xi[a] + self.theta * v[a];
        }
        out
    }

    /// `J_θ(ξ) = det(I + θ Dv(ξ))`.
    pub fn jacobian(&self, xi: &[f64]) -> Complex64 {
        let eig = self.field_derivative_eigenvalues(xi);
        (0..self.dim).map(|a| 1.0 + self.theta * eig[a]).product()
    }

    /// `J_θ(ξ)^{1/2}` continued from 1 at `θ = 0`: the product of principal
    /// square roots of the factors `1 + θ λ_j`, each of which keeps a positive
    /// real part while `|θ| Lip(v) < 1`.
    pub fn sqrt_jacobian(&self, xi: &[f64]) -> Result<Complex64> {
        sqrt_of_factors(self.theta, &self.field_derivative_eigenvalues(xi)[..self.dim])
    }

    /// `Σ_j Φ_j(ξ)²`.
    pub fn kinetic_symbol_continuum(&self, xi: &[f64]) -> Complex64 {
        self.phi(xi)[..self.dim].iter().map(|p| p * p).sum()
    }

    fn period_images(&self, h: f64) -> i64 {
        let period = 2.0 * PI / h;
        match self.field {
            FieldKind::CutoffDilation => (self.data.support_radius / period + 0.5).ceil() as i64,
            _ => 0,
        }
    }

    fn check_sine_period(&self, h: f64) -> Result<()> {
        if let FieldKind::Sine { scale } = self.field {
            let ratio = scale / h;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::Incommensurate(format!(
                    "sine field scale {scale} is not a multiple of h = {h}"
                )));
            }
        }
        Ok(())
    }

    fn for_each_image<F: FnMut(&[f64])>(&self, h: f64, xi: &[f64], mut f: F) {
        let m = self.period_images(h);
        let period = 2.0 * PI / h;
        if m == 0 {
            f(xi);
            return;
        }
        let width = (2 * m + 1) as usize;
        let count = width.pow(self.dim as u32);
        let mut shifted = [0.0; MAX_DIM];
        for idx in 0..count {
            let mut rem = idx;
            let mut outside = false;
            for a in 0..self.dim {
                let shift = (rem % width) as i64 - m;
                rem /= width;
                shifted[a] = xi[a] + period * shift as f64;
                if shifted[a].abs() >= self.data.support_radius {
                    outside = true;
                }
            }
            if !outside {
                f(&shifted[..self.dim]);
            }
        }
    }

    /// Periodized field `v_h(ξ) = Σ_m v(ξ + 2πm/h)`.
    pub fn lattice_field_at(&self, h: f64, xi: &[f64]) -> Point {
        if let FieldKind::Sine { .. } = self.field {
            return self.field_at(xi);
        }
        let mut out = [0.0; MAX_DIM];
        self.for_each_image(h, xi, |x| {
            let v = self.field_at(x);
            for a in 0..self.dim {
                out[a] += v[a];
            }
        });
        out
    }

    fn lattice_derivative_eigenvalues(&self, h: f64, xi: &[f64]) -> [f64; MAX_DIM] {
        if let FieldKind::Sine { .. } = self.field {
            return self.field_derivative_eigenvalues(xi);
        }
        let mut images = 0;
        let mut last = [0.0; MAX_DIM];
        let mut sum = [[0.0; MAX_DIM]; MAX_DIM];
        self.for_each_image(h, xi, |x| {
            images += 1;
            last[..self.dim].copy_from_slice(x);
            let m = self.field_derivative_matrix(x);
            for a in 0..self.dim {
                for b in 0..self.dim {
                    sum[a][b] += m[a][b];
                }
            }
        });
        match images {
            0 => [0.0; MAX_DIM],
            1 => self.field_derivative_eigenvalues(&last[..self.dim]),
            _ => symmetric_eigenvalues(sum, self.dim),
        }
    }

    pub fn phi_lattice(&self, h: f64, xi: &[f64]) -> [Complex64; MAX_DIM] {
        let v = self.lattice_field_at(h, xi);
        let mut out = [Complex64::new(0.0, 0.0); MAX_DIM];
        for a in 0..self.dim {
            out[a] = xi[a] + self.theta * v[a];
        }
        out
    }

    pub fn jacobian_lattice(&self, h: f64, xi: &[f64]) -> Complex64 {
        let eig = self.lattice_derivative_eigenvalues(h, xi);
        (0..self.dim).map(|a| 1.0 + self.theta * eig[a]).product()
    }

    pub fn sqrt_jacobian_lattice(&self, h: f64, xi: &[f64]) -> Result<Complex64> {
        sqrt_of_factors(self.theta, &self.lattice_derivative_eigenvalues(h, xi)[..self.dim])
    }

    /// `2h^{-2} Σ_j (1 − cos(h Φ_{h,θ,j}(ξ)))`.
    pub fn kinetic_symbol_lattice(&self, h: f64, xi: &[f64]) -> Complex64 {
        let phi = self.phi_lattice(h, xi);
        phi[..self.dim]
            .iter()
            .map(|p| (1.0 - (p * h).cos()) * (2.0 / (h * h)))
            .sum()
    }

    /// True when `v_h` vanishes identically near `ξ`, so that `Φ_{h,θ}(ξ) = ξ`
    /// and `J_{h,θ}(ξ) = 1`.
    pub fn lattice_field_vanishes(&self, h: f64, xi: &[f64]) -> bool {
        if self.theta == Complex64::new(0.0, 0.0) {
            return true;
        }
        match self.field {
            FieldKind::Zero => true,
            FieldKind::Sine { .. } => false,
            FieldKind::CutoffDilation => {
                let mut any = false;
                self.for_each_image(h, xi, |x| {
                    if norm(x, self.dim) < self.data.support_radius {
                        any = true;
                    }
                });
                !any
            }
        }
    }

    pub fn continuum_field_vanishes(&self, xi: &[f64]) -> bool {
        if self.theta == Complex64::new(0.0, 0.0) {
            return true;
        }
        match self.field {
            FieldKind::Zero => true,
            FieldKind::Sine { .. } => false,
            FieldKind::CutoffDilation => norm(xi, self.dim) >= self.data.support_radius,
        }
    }

    /// Bounds of the periodized field, sampled over the fundamental cell.
    pub fn lattice_field_data(&self, h: f64) -> Result<FieldData> {
        self.check_sine_period(h)?;
        match self.field {
            FieldKind::Zero | FieldKind::Sine { .. } => Ok(self.data),
            FieldKind::CutoffDilation => {
                let period = 2.0 * PI / h;
                if self.data.support_radius < 0.5 * period {
                    return Ok(self.data);
                }
                let per_axis: usize = match self.dim {
                    1 => 20_001,
                    2 => 401,
                    _ => 61,
                };
                let total = per_axis.pow(self.dim as u32);
                let (mut sup, mut lip) = (0.0f64, 0.0f64);
                let mut xi = [0.0; MAX_DIM];
                for idx in 0..total {
                    let mut rem = idx;
                    for item in xi.iter_mut().take(self.dim) {
                        let j = rem % per_axis;
                        rem /= per_axis;
                        *item = -0.5 * period + period * j as f64 / (per_axis - 1) as f64;
                    }
                    let v = self.lattice_field_at(h, &xi[..self.dim]);
                    sup = sup.max(norm(&v, self.dim));
                    let eig = self.lattice_derivative_eigenvalues(h, &xi[..self.dim]);
                    for e in &eig[..self.dim] {
                        lip = lip.max(e.abs());
                    }
                }
                Ok(FieldData {
                    sup_norm: SAFETY * sup,
                    lipschitz: SAFETY * lip,
                    support_radius: self.data.support_radius,
                })
            }
        }
    }

    /// Image of the distorted kinetic symbol over a grid, with a
    /// distance-to-curve evaluator.
    pub fn essential_curve(&self, grid: MomentumGrid<'_>) -> EssentialCurve {
        let (points, closed) = match grid {
            MomentumGrid::Lattice(g) => (
                g.momenta()
                    .iter()
                    .map(|xi| self.kinetic_symbol_lattice(g.h(), &xi[..self.dim]))
                    .collect::<Vec<_>>(),
                true,
            ),
            MomentumGrid::Galerkin(g) => (
                g.points()
                    .iter()
                    .map(|xi| self.kinetic_symbol_continuum(&xi[..self.dim]))
                    .collect(),
                false,
            ),
        };
        let per_axis = match grid {
            MomentumGrid::Lattice(g) => g.sites_per_axis(),
            MomentumGrid::Galerkin(g) => g.points_per_axis(),
        };
        EssentialCurve::from_grid(points, per_axis, self.dim, closed)
    }
}

fn admissible(theta: Complex64, lip: f64, sup: f64, class: &ClassParams) -> Result<()> {
    let cone = lip * (class.c0 * theta.re.abs() + theta.im.abs());
    if cone >= class.c0 {
        return Err(Error::Inadmissible(format!(
            "Lip(v)(c0|Re θ| + |Im θ|) = {cone:.4} is not below c0 = {}",
            class.c0
        )));
    }
    let strip = sup * theta.im.abs();
    if theta.im != 0.0 && strip >= class.delta0 {
        return Err(Error::Inadmissible(format!(
            "‖v‖∞|Im θ| = {strip:.4} is not below δ0 = {}",
            class.delta0
        )));
    }
    Ok(())
}

fn sqrt_of_factors(theta: Complex64, eigenvalues: &[f64]) -> Result<Complex64> {
    let mut out = Complex64::new(1.0, 0.0);
    for &lambda in eigenvalues {
        let factor = 1.0 + theta * lambda;
        if factor.re <= 0.0 {
            return Err(Error::BranchCut(format!("factor 1 + θλ = {factor} has Re ≤ 0")));
        }
        out *= factor.sqrt();
    }
    Ok(out)
}

fn norm(x: &[f64], dim: usize) -> f64 {
    x[..dim].iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Eigenvalues of a real symmetric matrix of size `dim ≤ 3` by cyclic Jacobi.
fn symmetric_eigenvalues(mut m: [[f64; MAX_DIM]; MAX_DIM], dim: usize) -> [f64; MAX_DIM] {
    for _ in 0..50 {
        let mut off = 0.0;
        for p in 0..dim {
            for q in p + 1..dim {
                off += m[p][q] * m[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..dim {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut out = [0.0; MAX_DIM];
    for a in 0..dim {
        out[a] = m[a][a];
    }
    out
}

/// `Ω(δ₀, c₀) = {Im z > −2δ₀|Re z|^{1/2}, −2 arctan c₀ < arg z < π/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRegion {
    pub delta0: f64,
    pub c0: f64,
}

impl ResonanceRegion {
    pub fn new(delta0: f64, c0: f64) -> Self {
        Self { delta0, c0 }
    }

    pub fn from_class(class: &ClassParams) -> Self {
        Self { delta0: class.delta0, c0: class.c0 }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.margin(z) > 0.0
    }

    /// Signed distance-like margin to the boundary, in radians for the angular
    /// constraints and relative to `|z|` for the parabolic one.
    pub fn margin(&self, z: Complex64) -> f64 {
        if z.norm() == 0.0 {
            return -1.0;
        }
        let arg = z.arg();
        let mut m = (arg + 2.0 * self.c0.atan()).min(0.5 * PI - arg);
        if self.delta0.is_finite() {
            let parabola = (z.im + 2.0 * self.delta0 * z.re.abs().sqrt()) / z.norm();
            m = m.min(parabola);
        }
        m
    }
}

/// Sampled image of a kinetic symbol. In one dimension the samples form a
/// polyline in grid order; in higher dimensions they are a point cloud.
#[derive(Clone, Debug)]
pub struct EssentialCurve {
    pub points: Vec<Complex64>,
    pub closed: bool,
    polyline: bool,
    gaps: Vec<f64>,
}

impl EssentialCurve {
    fn from_grid(points: Vec<Complex64>, per_axis: usize, dim: usize, closed: bool) -> Self {
        let n = points.len();
        let mut gaps = vec![0.0f64; n];
        for (i, gap) in gaps.iter_mut().enumerate() {
            let mut stride = 1;
            let mut rem = i;
            for _ in 0..dim {
                let coord = rem % per_axis;
                rem /= per_axis;
                let neighbours = [
                    if coord + 1 < per_axis { Some(i + stride) } else if closed { Some(i + stride - stride * per_axis) } else { None },
                    if coord > 0 { Some(i - stride) } else if closed { Some(i + stride * (per_axis - 1)) } else { None },
                ];
                for j in neighbours.into_iter().flatten() {
                    *gap = gap.max((points[i] - points[j]).norm());
                }
                stride *= per_axis;
            }
        }
        Self { points, closed, polyline: dim == 1, gaps }
    }

    /// Distance from `z` to the curve and the local sampling gap there.
    pub fn distance(&self, z: Complex64) -> (f64, f64) {
        let n = self.points.len();
        if n == 0 {
            return (f64::INFINITY, 0.0);
        }
        let mut best = (f64::INFINITY, 0.0);
        if self.polyline && n > 1 {
            let segments = if self.closed { n } else { n - 1 };
            for i in 0..segments {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                let d = segment_distance(z, a, b);
                if d < best.0 {
                    best = (d, (b - a).norm().max(self.gaps[i]));
                }
            }
        } else {
            for (p, g) in self.points.iter().zip(&self.gaps) {
                let d = (z - p).norm();
                if d < best.0 {
                    best = (d, *g);
                }
            }
        }
        best
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GalerkinGrid, LatticeGrid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_at_zero_theta() {
        let d = DistortionSpec::cutoff_dilation(c(0.0, 0.0), 16.0, 2).unwrap();
        let p = d.phi(&[1.3, -2.0]);
        assert_eq!(p[0], c(1.3, 0.0));
        assert_eq!(p[1], c(-2.0, 0.0));
        assert_eq!(d.jacobian(&[1.3, -2.0]), c(1.0, 0.0));
    }

    #[test]
    fn cutoff_field_is_dilation_inside_window() {
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.2), 4.0, 1).unwrap();
        assert!((d.phi(&[1.0])[0] - c(1.0, -0.2)).norm() < 1e-15);
        let sym = d.kinetic_symbol_continuum(&[1.0]);
        assert!((sym - c(0.96, -0.4)).norm() < 1e-14);
        let far = d.kinetic_symbol_continuum(&[5.0]);
        assert_eq!(far, c(25.0, 0.0));
    }

    #[test]
    fn sine_field_examples() {
        let d = DistortionSpec::sine(c(0.0, 0.1), 1.0, 1).unwrap();
        assert!((d.phi_lattice(1.0, &[PI / 2.0])[0] - c(PI / 2.0, 0.1)).norm() < 1e-15);
        assert!((d.jacobian(&[0.0]) - c(1.0, 0.1)).norm() < 1e-15);
        assert_eq!(d.kinetic_symbol_lattice(1.0, &[0.0]), c(0.0, 0.0));
        let d2 = DistortionSpec::sine(c(0.0, 0.1), 1.0, 2).unwrap();
        assert!((d2.jacobian(&[0.0, 0.0]) - c(1.0, 0.1).powi(2)).norm() < 1e-15);
    }

    #[test]
    fn lattice_symbol_examples() {
        let d = DistortionSpec::none(1);
        assert!((d.kinetic_symbol_lattice(0.5, &[2.0 * PI]) - c(16.0, 0.0)).norm() < 1e-12);
        for &xi in &[0.1, 0.5, 1.0, 2.0] {
            for &h in &[0.1, 0.05] {
                let diff = (d.kinetic_symbol_lattice(h, &[xi]).re - xi * xi).abs();
                assert!(diff <= h * h * xi.powi(4) / 12.0 + 1e-13);
            }
        }
    }

    #[test]
    fn field_bounds_match_known_profile() {
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.25), 16.0, 1).unwrap();
        assert!((d.data.lipschitz / SAFETY - 2.75).abs() < 0.02);
        assert!((d.data.sup_norm / SAFETY - 4.70).abs() < 0.02);
    }

    #[test]
    fn radial_jacobian_matches_determinant_of_numeric_derivative() {
        let theta = c(0.05, -0.2);
        let d = DistortionSpec::cutoff_dilation(theta, 4.0, 3).unwrap();
        let xi = [1.2, -1.9, 0.7];
        let eps = 1e-6;
        let mut m = [[c(0.0, 0.0); 3]; 3];
        for b in 0..3 {
            let mut plus = xi;
            let mut minus = xi;
            plus[b] += eps;
            minus[b] -= eps;
            let (pp, pm) = (d.phi(&plus), d.phi(&minus));
            for a in 0..3 {
                m[a][b] = (pp[a] - pm[a]) / (2.0 * eps);
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        assert!((det - d.jacobian(&xi)).norm() < 1e-8);
        let s = d.sqrt_jacobian(&xi).unwrap();
        assert!((s * s - d.jacobian(&xi)).norm() < 1e-14);
    }

    #[test]
    fn lattice_field_agrees_with_continuum_inside_zone() {
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.2), 4.0, 1).unwrap();
        for &xi in &[0.0, 1.0, 3.5, -3.9] {
            assert_eq!(d.lattice_field_at(0.1, &[xi])[0], d.field_at(&[xi])[0]);
        }
    }

    #[test]
    fn overlapping_images_are_summed() {
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.25), 16.0, 1).unwrap();
        let h = 0.4;
        let period = 2.0 * PI / h;
        let xi = 0.5 * period - 0.01;
        let want = d.field_at(&[xi])[0] + d.field_at(&[xi - period])[0];
        assert!((d.lattice_field_at(h, &[xi])[0] - want).abs() < 1e-15);
        let data = d.lattice_field_data(h).unwrap();
        assert!(data.lipschitz < 1.2 * d.data.lipschitz);
    }

    #[test]
    fn admissibility_rejects_wide_strips() {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: 1.0, delta0: 1.0, p: 1.0, sigma: 2.0 };
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.1), 4.0, 1).unwrap();
        assert!(d.check_continuum(&class).is_ok());
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.3), 16.0, 1).unwrap();
        assert!(matches!(d.check_continuum(&class), Err(Error::Inadmissible(_))));
        assert!(DistortionSpec::cutoff_dilation(c(0.0, -0.5), 4.0, 1).is_err());
    }

    #[test]
    fn region_membership() {
        let r = ResonanceRegion::new(1.0, 1.0);
        assert!(r.contains(c(4.0, -1.0)));
        assert!(!r.contains(c(4.0, -5.0)));
        assert!(!r.contains(c(-1.0, 0.1)));
        let r = ResonanceRegion::new(f64::INFINITY, 1.0);
        assert!(r.contains(c(1.0, -10.0)));
    }

    #[test]
    fn essential_curve_examples() {
        let g = LatticeGrid::new(0.5, 32, 1).unwrap();
        let d = DistortionSpec::none(1);
        let curve = d.essential_curve(MomentumGrid::Lattice(&g));
        for p in &curve.points {
            assert!(p.im.abs() < 1e-15 && p.re >= -1e-15 && p.re <= 16.0 + 1e-12);
        }
        assert!(curve.distance(curve.points[5]).0 < 1e-15);
        let gg = GalerkinGrid::new(8.0, 0.25, 1).unwrap();
        let d = DistortionSpec::cutoff_dilation(c(0.0, -0.2), 16.0, 1).unwrap();
        let curve = d.essential_curve(MomentumGrid::Galerkin(&gg));
        assert!(curve.points.iter().any(|p| p.im < -1.0));
        assert!(curve.points.iter().all(|p| p.im <= 1e-15));
    }
}
