//! Dense matrices of the distorted lattice operator `H_{h,θ}` on the torus
//! and of the distorted continuum operator `H_θ` on a Galerkin grid, plus the
//! embedding `I_h` from the torus into the continuum momentum space.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::grid::{GalerkinGrid, LatticeGrid, MAX_DIM};
use crate::potentials::{torus_fourier_of_restriction, MollifierSpec, PoissonOptions, PotentialSpec};
use crate::special::smooth_step_base;

#[derive(Clone, Debug, PartialEq)]
pub enum GridKind {
    Lattice(LatticeGrid),
    Galerkin(GalerkinGrid),
}

/// What an operator matrix was built from, and how accurately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub potential: PotentialSpec,
    pub mollifier: Option<MollifierSpec>,
    pub distortion: DistortionSpec,
    pub poisson: PoissonOptions,
    /// Most Poisson shells used by any entry (0 for continuum matrices).
    pub max_shells: usize,
    /// Largest neglected Poisson tail over all entries.
    pub max_tail: f64,
    /// Quadrature weight multiplying the kernel.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: Array2<Complex64>,
    pub grid: GridKind,
    pub provenance: Provenance,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn theta(&self) -> Complex64 {
        self.provenance.distortion.theta
    }

    /// Same operator assembled at another distortion strength.
    pub fn reassemble(&self, theta: Complex64) -> Result<Self> {
        let p = &self.provenance;
        let dist = p.distortion.with_theta(theta)?;
        let opts = AssemblyOptions { poisson: p.poisson, ..AssemblyOptions::default() };
        match &self.grid {
            GridKind::Lattice(g) => assemble_lattice(&p.potential, p.mollifier.as_ref(), &dist, g, &opts),
            GridKind::Galerkin(g) => assemble_continuum(&p.potential, &dist, g, &opts),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// `max |A − A*|` relative to `max |A|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub poisson: PoissonOptions,
    /// Refuse inadmissible `θ` instead of assembling anyway.
    pub check_admissibility: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { poisson: PoissonOptions::default(), check_admissibility: true }
    }
}

struct SiteData {
    phi: [Complex64; MAX_DIM],
    sqrt_j: Complex64,
    vanishes: bool,
    multi: [i64; MAX_DIM],
}

fn lattice_sites(dist: &DistortionSpec, grid: &LatticeGrid) -> Result<Vec<SiteData>> {
    let d = grid.dim();
    let h = grid.h();
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let xi = grid.momentum(k);
            Ok(SiteData {
                phi: dist.phi_lattice(h, &xi[..d]),
                sqrt_j: dist.sqrt_jacobian_lattice(h, &xi[..d])?,
                vanishes: dist.lattice_field_vanishes(h, &xi[..d]),
                multi: grid.multi_index(k),
            })
        })
        .collect()
}

fn check_dims(pot: &PotentialSpec, dist: &DistortionSpec, dim: usize) -> Result<()> {
    if pot.dim != dim || dist.dim != dim {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: grid {dim}, potential {}, distortion {}",
            pot.dim, dist.dim
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct Stats {
    shells: usize,
    tail: f64,
}

impl Stats {
    fn merge(self, o: Self) -> Self {
        Self { shells: self.shells.max(o.shells), tail: self.tail.max(o.tail) }
    }
}

/// Potential part of `H_{h,θ}` alone:
/// `w (2π)^{-d/2} J^{1/2}(ξ_k) (F_h V_h)(Φ(ξ_k) − Φ(ξ_l)) J^{1/2}(ξ_l)`.
pub fn assemble_lattice_potential(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    grid: &LatticeGrid,
    opts: &AssemblyOptions,
) -> Result<OperatorMatrix> {
    let d = grid.dim();
    check_dims(pot, dist, d)?;
    if opts.check_admissibility && dist.theta != Complex64::new(0.0, 0.0) {
        dist.check_lattice(grid.h(), &pot.class)?;
    }
    let h = grid.h();
    let n = grid.len();
    let sites = lattice_sites(dist, grid)?;
    let weight = grid.momentum_step().powi(d as i32);
    let scale = weight * (2.0 * PI).powf(-(d as f64) / 2.0);

    let poisson = |zeta: &[Complex64]| torus_fourier_of_restriction(pot, moll, h, zeta, &opts.poisson);

    // Pairs with both ends outside supp v only depend on the index difference.
    let any_vanishing = sites.iter().any(|s| s.vanishes);
    let difference_table: Vec<(Complex64, Stats)> = if any_vanishing {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let xi = grid.momentum(k);
                let z: Vec<Complex64> = xi[..d].iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let p = poisson(&z)?;
                Ok((p.value, Stats { shells: p.shells, tail: p.tail_bound }))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let rows: Vec<(Vec<Complex64>, Stats)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let sk = &sites[k];
            let mut row = Vec::with_capacity(n);
            let mut stats = Stats::default();
            let mut diff = [0i64; MAX_DIM];
            let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
            for sl in &sites {
                let value = if sk.vanishes && sl.vanishes {
                    for a in 0..d {
                        diff[a] = sk.multi[a] - sl.multi[a];
                    }
                    let (v, s) = difference_table[grid.flat_index(&diff[..d])];
                    stats = stats.merge(s);
                    v
                } else {
                    for a in 0..d {
                        z[a] = sk.phi[a] - sl.phi[a];
                    }
                    let p = poisson(&z[..d])?;
                    stats = stats.merge(Stats { shells: p.shells, tail: p.tail_bound });
                    p.value
                };
                row.push(value * sk.sqrt_j * sl.sqrt_j * scale);
            }
            Ok((row, stats))
        })
        .collect::<Result<_>>()?;

    let mut entries = Array2::zeros((n, n));
    let mut stats = Stats::default();
    for (k, (row, s)) in rows.into_iter().enumerate() {
        stats = stats.merge(s);
        for (l, v) in row.into_iter().enumerate() {
            entries[[k, l]] = v;
        }
    }
    Ok(OperatorMatrix {
        entries,
        grid: GridKind::Lattice(*grid),
        provenance: Provenance {
            potential: pot.clone(),
            mollifier: moll.cloned(),
            distortion: *dist,
            poisson: opts.poisson,
            max_shells: stats.shells,
            max_tail: stats.tail,
            weight,
        },
    })
}

/// `H_{h,θ} = diag(T_{h,θ}(ξ_k)) + K` on the momentum torus.
pub fn assemble_lattice(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    grid: &LatticeGrid,
    opts: &AssemblyOptions,
) -> Result<OperatorMatrix> {
    let mut op = assemble_lattice_potential(pot, moll, dist, grid, opts)?;
    let d = grid.dim();
    for k in 0..grid.len() {
        let xi = grid.momentum(k);
        op.entries[[k, k]] += dist.kinetic_symbol_lattice(grid.h(), &xi[..d]);
    }
    Ok(op)
}

/// Diagonal of the distorted lattice kinetic symbol.
pub fn lattice_kinetic_diagonal(dist: &DistortionSpec, grid: &LatticeGrid) -> Vec<Complex64> {
    let d = grid.dim();
    (0..grid.len())
        .map(|k| dist.kinetic_symbol_lattice(grid.h(), &grid.momentum(k)[..d]))
        .collect()
}

/// Diagonal of the distorted continuum kinetic symbol `Φ_θ(ξ)²`.
pub fn continuum_kinetic_diagonal(dist: &DistortionSpec, grid: &GalerkinGrid) -> Vec<Complex64> {
    let d = grid.dim();
    grid.points()
        .iter()
        .map(|xi| dist.kinetic_symbol_continuum(&xi[..d]))
        .collect()
}

/// Potential part of `H_θ` on a Galerkin grid:
/// `Δξ^d (2π)^{-d/2} J^{1/2}(ξ_i) V̂(Φ(ξ_i) − Φ(ξ_j)) J^{1/2}(ξ_j)`.
pub fn assemble_continuum_potential(
    pot: &PotentialSpec,
    dist: &DistortionSpec,
    grid: &GalerkinGrid,
    opts: &AssemblyOptions,
) -> Result<OperatorMatrix> {
    let d = grid.dim();
    check_dims(pot, dist, d)?;
    if opts.check_admissibility && dist.theta != Complex64::new(0.0, 0.0) {
        dist.check_continuum(&pot.class)?;
        if dist.data.support_radius.is_finite() && grid.cutoff() < dist.data.support_radius {
            return Err(Error::CutoffTooSmall { cutoff: grid.cutoff(), required: dist.data.support_radius });
        }
    }
    let n = grid.len();
    let sites: Vec<SiteData> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = grid.point(i);
            Ok(SiteData {
                phi: dist.phi(&xi[..d]),
                sqrt_j: dist.sqrt_jacobian(&xi[..d])?,
                vanishes: dist.continuum_field_vanishes(&xi[..d]),
                multi: grid.multi_index(i),
            })
        })
        .collect::<Result<_>>()?;
    let weight = grid.weight();
    let scale = weight * (2.0 * PI).powf(-(d as f64) / 2.0);
    let step = grid.step();

    // V̂ at index differences in [-2K, 2K]^d for pairs where Φ is the identity.
    let k = grid.half_count() as i64;
    let width = (4 * k + 1) as usize;
    let any_vanishing = sites.iter().any(|s| s.vanishes);
    let difference_table: Vec<Complex64> = if any_vanishing {
        (0..width.pow(d as u32))
            .into_par_iter()
            .map(|idx| {
                let mut rem = idx;
                let mut xi = [0.0; MAX_DIM];
                for item in xi.iter_mut().take(d) {
                    *item = ((rem % width) as i64 - 2 * k) as f64 * step;
                    rem /= width;
                }
                pot.v_hat_real(&xi[..d])
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let table_index = |a: &[i64; MAX_DIM], b: &[i64; MAX_DIM]| {
        let mut idx = 0usize;
        for axis in (0..d).rev() {
            idx = idx * width + (a[axis] - b[axis] + 2 * k) as usize;
        }
        idx
    };

    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let si = &sites[i];
            let mut row = Vec::with_capacity(n);
            let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
            for sj in &sites {
                let value = if si.vanishes && sj.vanishes {
                    difference_table[table_index(&si.multi, &sj.multi)]
                } else {
                    for a in 0..d {
                        z[a] = si.phi[a] - sj.phi[a];
                    }
                    pot.v_hat(&z[..d])?
                };
                row.push(value * si.sqrt_j * sj.sqrt_j * scale);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut entries = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            entries[[i, j]] = v;
        }
    }
    Ok(OperatorMatrix {
        entries,
        grid: GridKind::Galerkin(*grid),
        provenance: Provenance {
            potential: pot.clone(),
            mollifier: None,
            distortion: *dist,
            poisson: opts.poisson,
            max_shells: 0,
            max_tail: 0.0,
            weight,
        },
    })
}

/// `H_θ` projected onto a Galerkin grid.
pub fn assemble_continuum(
    pot: &PotentialSpec,
    dist: &DistortionSpec,
    grid: &GalerkinGrid,
    opts: &AssemblyOptions,
) -> Result<OperatorMatrix> {
    let mut op = assemble_continuum_potential(pot, dist, grid, opts)?;
    for (i, t) in continuum_kinetic_diagonal(dist, grid).into_iter().enumerate() {
        op.entries[[i, i]] += t;
    }
    Ok(op)
}

// ---------------------------------------------------------------------------
// Embedding

/// Filter `φ̂` defining `I_h`: a smooth bump `B(s) = f(1 − (s/R)²)` normalised
/// so that `(2π)^d Σ_m |φ̂(ξ + 2πm)|² = 1`, equal to `(2π)^{-d/2}` on
/// `|ξ|_∞ ≤ 2π − R` and supported in `|ξ|_∞ < R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFilter {
    pub radius: f64,
}

impl Default for EmbeddingFilter {
    fn default() -> Self {
        Self { radius: 1.45 * PI }
    }
}

impl EmbeddingFilter {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > PI && radius < 2.0 * PI) {
            return Err(Error::InvalidArgument(format!("filter radius {radius} must lie in (π, 2π)")));
        }
        Ok(Self { radius })
    }

    fn bump(&self, s: f64) -> f64 {
        smooth_step_base(1.0 - (s / self.radius).powi(2))
    }

    pub fn phi_hat_1d(&self, s: f64) -> f64 {
        let b = self.bump(s);
        if b == 0.0 {
            return 0.0;
        }
        let r = s - 2.0 * PI * (s / (2.0 * PI)).round();
        let norm: f64 = (-2..=2).map(|m| self.bump(r + 2.0 * PI * m as f64).powi(2)).sum();
        b / (norm.sqrt() * (2.0 * PI).sqrt())
    }

    pub fn phi_hat(&self, s: &[f64]) -> f64 {
        s.iter().map(|&x| self.phi_hat_1d(x)).product()
    }

    fn check(&self, lattice: &LatticeGrid, galerkin: &GalerkinGrid) -> Result<()> {
        if lattice.dim() != galerkin.dim() {
            return Err(Error::InvalidArgument("embedding grids differ in dimension".into()));
        }
        let ratio = galerkin.step() / lattice.momentum_step();
        if (ratio - 1.0).abs() > 1e-10 {
            return Err(Error::Incommensurate(format!(
                "Galerkin step {} differs from torus step {}",
                galerkin.step(),
                lattice.momentum_step()
            )));
        }
        if galerkin.cutoff() * lattice.h() < self.radius * (1.0 - 1e-12) {
            return Err(Error::CutoffTooSmall {
                cutoff: galerkin.cutoff(),
                required: self.radius / lattice.h(),
            });
        }
        Ok(())
    }

    fn torus_index(lattice: &LatticeGrid, galerkin: &GalerkinGrid, i: usize) -> usize {
        let m = galerkin.multi_index(i);
        lattice.flat_index(&m[..galerkin.dim()])
    }

    fn coefficient(&self, lattice: &LatticeGrid, galerkin: &GalerkinGrid, i: usize) -> f64 {
        let d = galerkin.dim();
        let g = galerkin.point(i);
        let s: Vec<f64> = g[..d].iter().map(|x| x * lattice.h()).collect();
        (2.0 * PI).powf(d as f64 / 2.0) * self.phi_hat(&s)
    }

    /// `(I_h f)(g) = (2π)^{d/2} φ̂(h g) f(g mod 2π/h)` on the Galerkin points.
    pub fn embed(&self, lattice: &LatticeGrid, galerkin: &GalerkinGrid, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(lattice, galerkin)?;
        if f.len() != lattice.len() {
            return Err(Error::SizeMismatch { expected: lattice.len(), got: f.len() });
        }
        Ok((0..galerkin.len())
            .map(|i| f[Self::torus_index(lattice, galerkin, i)] * self.coefficient(lattice, galerkin, i))
            .collect())
    }

    /// `I_h*`: folds the Galerkin samples back onto the torus.
    pub fn embed_adjoint(&self, lattice: &LatticeGrid, galerkin: &GalerkinGrid, g: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(lattice, galerkin)?;
        if g.len() != galerkin.len() {
            return Err(Error::SizeMismatch { expected: galerkin.len(), got: g.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); lattice.len()];
        for (i, v) in g.iter().enumerate() {
            out[Self::torus_index(lattice, galerkin, i)] += v * self.coefficient(lattice, galerkin, i);
        }
        Ok(out)
    }

    /// Matrix of `I_h`, Galerkin rows by torus columns.
    pub fn matrix(&self, lattice: &LatticeGrid, galerkin: &GalerkinGrid) -> Result<Array2<Complex64>> {
        self.check(lattice, galerkin)?;
        let mut m = Array2::zeros((galerkin.len(), lattice.len()));
        for i in 0..galerkin.len() {
            m[[i, Self::torus_index(lattice, galerkin, i)]] = Complex64::new(self.coefficient(lattice, galerkin, i), 0.0);
        }
        Ok(m)
    }
}
