//! Lattice, torus-momentum and Galerkin grids, and the discrete Fourier
//! transform between position and momentum samples.
//!
//! All grids store samples as flat arrays in row-major multi-index order:
//! the last axis varies fastest. On a [`LatticeGrid`] the per-axis index
//! `k` runs over `[-N/2, N/2)` and flat position `k + N/2`; on a
//! [`GalerkinGrid`] it runs over `[-K, K]` and flat position `k + K`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;
pub const DEFAULT_SITE_BUDGET: usize = 1 << 22;

/// A point in up to three dimensions; components past `dim` are zero.
pub type Point = [f64; MAX_DIM];

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")))
    }
}

/// `hZ^d` truncated to `N^d` sites with periodic identification, together
/// with its dual momentum grid `{2πk/(Nh)} ⊂ [-π/h, π/h)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    h: f64,
    n: usize,
    dim: usize,
}

impl LatticeGrid {
    pub fn new(h: f64, n: usize, dim: usize) -> Result<Self> {
        Self::with_budget(h, n, dim, DEFAULT_SITE_BUDGET)
    }

    pub fn with_budget(h: f64, n: usize, dim: usize, budget: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and at least 8")));
        }
        let total = n.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if total > budget {
            return Err(Error::InvalidGrid(format!(
                "{total} sites exceed the budget of {budget}"
            )));
        }
        Ok(Self { h, n, dim })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Sites per axis.
    pub fn sites_per_axis(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical box length `N h`.
    pub fn box_length(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Momentum spacing `2π/(Nh)`.
    pub fn momentum_step(&self) -> f64 {
        2.0 * PI / self.box_length()
    }

    /// Momentum period `2π/h` of the torus `h^{-1}T`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.h
    }

    /// Quadrature weight `(2π/(Nh))^d` of one torus sample.
    pub fn torus_weight(&self) -> f64 {
        self.momentum_step().powi(self.dim as i32)
    }

    pub fn multi_index(&self, flat: usize) -> [i64; MAX_DIM] {
        let mut out = [0i64; MAX_DIM];
        let mut rem = flat;
        let half = (self.n / 2) as i64;
        for axis in (0..self.dim).rev() {
            out[axis] = (rem % self.n) as i64 - half;
            rem /= self.n;
        }
        out
    }

    /// Flat index of a multi-index; components are reduced modulo `N`.
    pub fn flat_index(&self, multi: &[i64]) -> usize {
        let n = self.n as i64;
        let half = n / 2;
        multi[..self.dim]
            .iter()
            .fold(0usize, |acc, &k| acc * self.n + (k + half).rem_euclid(n) as usize)
    }

    pub fn position(&self, flat: usize) -> Point {
        let mi = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.h * mi[a] as f64;
        }
        p
    }

    pub fn momentum(&self, flat: usize) -> Point {
        let mi = self.multi_index(flat);
        let step = self.momentum_step();
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = step * mi[a] as f64;
        }
        p
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    pub fn momenta(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.momentum(i)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::SizeMismatch { expected: self.len(), got })
        }
    }

    /// `F_h u(ξ_k) = (2π)^{-d/2} h^d Σ_n u(hn) e^{-i h n·ξ_k}` on the torus grid.
    pub fn forward_transform(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(u.len())?;
        let mut data = u.to_vec();
        self.centered_dft(&mut data, FftDirection::Forward);
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.h.powi(self.dim as i32);
        data.iter_mut().for_each(|z| *z *= scale);
        Ok(data)
    }

    /// Exact inverse of [`Self::forward_transform`]:
    /// `u(hn) = (2π)^{-d/2} Δξ^d Σ_k f(ξ_k) e^{i h n·ξ_k}`.
    pub fn inverse_transform(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let mut data = f.to_vec();
        self.centered_dft(&mut data, FftDirection::Inverse);
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.torus_weight();
        data.iter_mut().for_each(|z| *z *= scale);
        Ok(data)
    }

    /// Unscaled DFT over centered indices `n, k ∈ [-N/2, N/2)` along every
    /// axis. With offsets `n' = n + N/2`, the centered kernel factors as the
    /// standard one times `(-1)^{n'+k'+N/2}`.
    fn centered_dft(&self, data: &mut [Complex64], direction: FftDirection) {
        let n = self.n;
        let fft = FftPlanner::new().plan_fft(n, direction);
        let sign_shift = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = data.len() / (n * stride);
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (j, slot) in line.iter_mut().enumerate() {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        *slot = data[base + j * stride] * sign;
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        let sign = if j % 2 == 0 { sign_shift } else { -sign_shift };
                        data[base + j * stride] = value * sign;
                    }
                }
            }
        }
    }

    /// Weighted `ℓ²(hZ^d)` norm `(h^d Σ|u|²)^{1/2}`.
    pub fn position_norm(&self, u: &[Complex64]) -> f64 {
        (self.h.powi(self.dim as i32) * u.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Weighted `L²(h^{-1}T^d)` norm `(Δξ^d Σ|f|²)^{1/2}`.
    pub fn momentum_norm(&self, f: &[Complex64]) -> f64 {
        (self.torus_weight() * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Periodic distance between two torus momenta, minimised over `2π/h` shifts.
    pub fn torus_distance(&self, xi: &[f64], eta: &[f64]) -> f64 {
        let period = self.period();
        xi.iter()
            .zip(eta)
            .take(self.dim)
            .map(|(a, b)| {
                let d = a - b;
                let wrapped = d - period * (d / period).round();
                wrapped * wrapped
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Finite momentum box `{k Δξ : |k Δξ|_∞ ≤ Ξ}` standing in for `L²(R^d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalerkinGrid {
    cutoff: f64,
    step: f64,
    dim: usize,
    half_count: usize,
}

impl GalerkinGrid {
    pub fn new(cutoff: f64, step: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(cutoff > 0.0 && step > 0.0 && cutoff.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "cutoff {cutoff} and step {step} must be positive"
            )));
        }
        let ratio = cutoff / step;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "cutoff/step = {ratio} is not a positive integer"
            )));
        }
        let half_count = k as usize;
        let total = (2 * half_count + 1).checked_pow(dim as u32).unwrap_or(usize::MAX);
        if total > DEFAULT_SITE_BUDGET {
            return Err(Error::InvalidGrid(format!("{total} points exceed the budget")));
        }
        Ok(Self { cutoff, step, dim, half_count })
    }

    /// The grid commensurate with `lattice` that covers `[-2π/h, 2π/h]^d`,
    /// i.e. the support of the embedded functions.
    pub fn covering(lattice: &LatticeGrid) -> Result<Self> {
        let step = lattice.momentum_step();
        Self::new(step * lattice.sites_per_axis() as f64, step, lattice.dim())
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K = Ξ/Δξ`; each axis holds `2K + 1` points.
    pub fn half_count(&self) -> usize {
        self.half_count
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `Δξ^d`.
    pub fn weight(&self) -> f64 {
        self.step.powi(self.dim as i32)
    }

    pub fn multi_index(&self, flat: usize) -> [i64; MAX_DIM] {
        let m = self.points_per_axis();
        let mut out = [0i64; MAX_DIM];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = (rem % m) as i64 - self.half_count as i64;
            rem /= m;
        }
        out
    }

    pub fn flat_index(&self, multi: &[i64]) -> Option<usize> {
        let m = self.points_per_axis();
        let k = self.half_count as i64;
        let mut acc = 0usize;
        for &c in &multi[..self.dim] {
            if c < -k || c > k {
                return None;
            }
            acc = acc * m + (c + k) as usize;
        }
        Some(acc)
    }

    pub fn point(&self, flat: usize) -> Point {
        let mi = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.step * mi[a] as f64;
        }
        p
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn norm(&self, f: &[Complex64]) -> f64 {
        (self.weight() * f.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }
}

/// Either kind of momentum grid, for operations that accept both.
#[derive(Clone, Copy, Debug)]
pub enum MomentumGrid<'a> {
    Lattice(&'a LatticeGrid),
    Galerkin(&'a GalerkinGrid),
}

impl MomentumGrid<'_> {
    pub fn dim(&self) -> usize {
        match self {
            MomentumGrid::Lattice(g) => g.dim(),
            MomentumGrid::Galerkin(g) => g.dim(),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        match self {
            MomentumGrid::Lattice(g) => g.momenta(),
            MomentumGrid::Galerkin(g) => g.points(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeGrid::new(1.0, 7, 1).is_err());
        assert!(LatticeGrid::new(1.0, 6, 1).is_err());
        assert!(LatticeGrid::new(0.0, 8, 1).is_err());
        assert!(LatticeGrid::new(1.0, 8, 4).is_err());
        assert!(LatticeGrid::with_budget(1.0, 64, 3, 1000).is_err());
        assert!(GalerkinGrid::new(1.0, 0.3, 1).is_err());
        assert!(GalerkinGrid::new(1.0, 0.25, 1).is_ok());
    }

    #[test]
    fn point_mass_transforms_to_constant() {
        let g = LatticeGrid::new(1.0, 8, 1).unwrap();
        let mut u = vec![Complex64::new(0.0, 0.0); 8];
        u[g.flat_index(&[0])] = Complex64::new(1.0, 0.0);
        let f = g.forward_transform(&u).unwrap();
        let expected = (2.0 * PI).powf(-0.5);
        for z in f {
            assert!((z - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_transforms_to_point_mass() {
        for dim in 1..=2 {
            let h = 0.5;
            let g = LatticeGrid::new(h, 8, dim).unwrap();
            let u = vec![Complex64::new(1.0, 0.0); g.len()];
            let f = g.forward_transform(&u).unwrap();
            let origin = g.flat_index(&[0, 0, 0]);
            let peak = (2.0 * PI).powf(-(dim as f64) / 2.0) * (h * 8.0).powi(dim as i32);
            for (i, z) in f.iter().enumerate() {
                let want = if i == origin { peak } else { 0.0 };
                assert!((z - want).norm() < 1e-12, "dim {dim} index {i}: {z}");
            }
        }
    }

    #[test]
    fn transform_is_unitary_and_invertible() {
        for (dim, n, h) in [(1, 64, 0.3), (2, 16, 1.0), (3, 8, 0.25)] {
            let g = LatticeGrid::new(h, n, dim).unwrap();
            let u = random_samples(g.len(), 7 + dim as u64);
            let f = g.forward_transform(&u).unwrap();
            assert!((g.momentum_norm(&f) - g.position_norm(&u)).abs() < 1e-12);
            let back = g.inverse_transform(&f).unwrap();
            for (a, b) in u.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_matches_direct_sum() {
        let g = LatticeGrid::new(0.7, 10, 1).unwrap();
        let u = random_samples(10, 3);
        let f = g.forward_transform(&u).unwrap();
        for k in 0..10 {
            let xi = g.momentum(k)[0];
            let direct: Complex64 = (0..10)
                .map(|n| u[n] * Complex64::from_polar(1.0, -g.position(n)[0] * xi))
                .sum::<Complex64>()
                * (0.7 / (2.0 * PI).sqrt());
            assert!((direct - f[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_point_mass_at_zero_is_constant() {
        let g = LatticeGrid::new(0.5, 16, 1).unwrap();
        let mut f = vec![Complex64::new(0.0, 0.0); 16];
        f[g.flat_index(&[0])] = Complex64::new(1.0, 0.0);
        let u = g.inverse_transform(&f).unwrap();
        for z in &u {
            assert!((z - u[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_is_linear() {
        let g = LatticeGrid::new(0.5, 16, 2).unwrap();
        let f1 = random_samples(g.len(), 1);
        let f2 = random_samples(g.len(), 2);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let combo: Vec<_> = f1.iter().zip(&f2).map(|(x, y)| a * x + b * y).collect();
        let lhs = g.inverse_transform(&combo).unwrap();
        let (u1, u2) = (g.inverse_transform(&f1).unwrap(), g.inverse_transform(&f2).unwrap());
        for i in 0..g.len() {
            assert!((lhs[i] - (a * u1[i] + b * u2[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = LatticeGrid::new(1.0, 8, 1).unwrap();
        assert!(matches!(
            g.forward_transform(&[Complex64::new(0.0, 0.0); 7]),
            Err(Error::SizeMismatch { expected: 8, got: 7 })
        ));
        assert!(g.inverse_transform(&[]).is_err());
    }

    #[test]
    fn torus_distance_wraps() {
        let g = LatticeGrid::new(1.0, 8, 1).unwrap();
        assert!((g.torus_distance(&[3.0], &[-3.0]) - (2.0 * PI - 6.0)).abs() < 1e-12);
        assert_eq!(g.torus_distance(&[1.3], &[1.3]), 0.0);
        let g = LatticeGrid::new(0.5, 8, 1).unwrap();
        assert!((g.torus_distance(&[0.0], &[2.0 * PI]) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn momentum_grid_is_closed_under_negation() {
        let g = LatticeGrid::new(0.4, 16, 2).unwrap();
        for i in 0..g.len() {
            let mi = g.multi_index(i);
            let neg = g.flat_index(&[-mi[0], -mi[1], 0]);
            let (p, q) = (g.momentum(i), g.momentum(neg));
            assert!(g.torus_distance(&[p[0], p[1]], &[-q[0], -q[1]]) < 1e-12);
        }
    }

    #[test]
    fn index_maps_round_trip() {
        let g = LatticeGrid::new(1.0, 8, 3).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        let gg = GalerkinGrid::new(2.0, 0.5, 2).unwrap();
        for i in 0..gg.len() {
            assert_eq!(gg.flat_index(&gg.multi_index(i)), Some(i));
        }
        assert_eq!(gg.flat_index(&[5, 0]), None);
    }
}
