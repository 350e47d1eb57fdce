//! Continuum-limit harness: sweeps over lattice spacings, tracking of
//! resonances and eigenvalues across rungs, rate fits, and the norm
//! measurements behind the convergence of the distorted lattice operators.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_continuum, assemble_continuum_potential, assemble_lattice, assemble_lattice_potential,
    continuum_kinetic_diagonal, lattice_kinetic_diagonal, AssemblyOptions, EmbeddingFilter,
};
use crate::distortion::{DistortionSpec, ResonanceRegion};
use crate::error::{Error, Result};
use crate::grid::{GalerkinGrid, LatticeGrid};
use crate::linalg::{hermitian_eigenvalues, spectral_norm, CMatrix};
use crate::potentials::{MollifierSpec, PotentialSpec};
use crate::spectra::{eigen_all, identify_from_spectrum, identify_resonances, IdentifyOptions, ResonanceSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub h: f64,
    pub n: usize,
}

/// Rungs at the given spacings with `N = L/h` sites per axis (rounded up to
/// even), ordered coarse to fine.
pub fn fixed_box_ladder(hs: &[f64], box_length: f64) -> Result<Vec<Rung>> {
    let ladder: Vec<Rung> = hs
        .iter()
        .map(|&h| {
            let n = (box_length / h).round() as usize;
            Rung { h, n: n + n % 2 }
        })
        .collect();
    normalize_ladder(&ladder, 1)
}

/// Sorts a ladder coarse to fine; spacings must be positive and distinct.
pub fn normalize_ladder(ladder: &[Rung], min_len: usize) -> Result<Vec<Rung>> {
    if ladder.len() < min_len {
        return Err(Error::InvalidLadder(format!("need at least {min_len} rungs, got {}", ladder.len())));
    }
    if ladder.iter().any(|r| !(r.h > 0.0 && r.h.is_finite()) || r.n == 0) {
        return Err(Error::InvalidLadder("spacings and sizes must be positive".into()));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_by(|a, b| b.h.total_cmp(&a.h));
    if sorted.windows(2).any(|w| w[1].h == w[0].h) {
        return Err(Error::InvalidLadder("repeated spacing".into()));
    }
    Ok(sorted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub z: Complex64,
    pub tolerance: f64,
    pub provenance: String,
}

/// Two references for the same quantity must agree within their combined
/// tolerances.
pub fn check_reference_consistency(a: &Reference, b: &Reference) -> Result<()> {
    let gap = (a.z - b.z).norm();
    if gap > a.tolerance + b.tolerance {
        return Err(Error::ReferenceInconsistency(format!(
            "{} ({}) and {} ({}) differ by {gap:.3e}, combined tolerance {:.3e}",
            a.provenance,
            a.z,
            b.provenance,
            b.z,
            a.tolerance + b.tolerance
        )));
    }
    Ok(())
}

/// Resonance of the continuum operator on a Galerkin grid near `guess`,
/// with the change under halving the grid step as its tolerance.
pub fn continuum_reference(
    pot: &PotentialSpec,
    dist: &DistortionSpec,
    cutoff: f64,
    step: f64,
    guess: Complex64,
    opts: &AssemblyOptions,
) -> Result<Reference> {
    let nearest = |s: f64| -> Result<Complex64> {
        let grid = GalerkinGrid::new(cutoff, s, pot.dim)?;
        let op = assemble_continuum(pot, dist, &grid, opts)?;
        eigen_all(&op.entries)?
            .into_iter()
            .min_by(|a, b| (a - guess).norm().total_cmp(&(b - guess).norm()))
            .ok_or_else(|| Error::Eigensolver("empty spectrum".into()))
    };
    let coarse = nearest(step)?;
    let fine = nearest(0.5 * step)?;
    Ok(Reference {
        z: fine,
        tolerance: (fine - coarse).norm(),
        provenance: format!("continuum-galerkin(cutoff={cutoff}, step={})", 0.5 * step),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub points: usize,
}

/// Least-squares slope of `log err` against `log h` over the entries with
/// `err > 10·floor`; `None` with fewer than three usable points.
pub fn fit_rate(hs: &[f64], errs: &[f64], floor: f64) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter(|(_, &e)| e.is_finite() && e > 10.0 * floor && e > 0.0)
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Some(RateFit { slope, intercept, max_residual, points: pts.len() })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub h: f64,
    pub n: usize,
    pub z: Complex64,
    pub err: Option<f64>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub points: Vec<TrackPoint>,
    pub reference: Option<Reference>,
    pub rate: Option<RateFit>,
    /// Two candidates were within the matching radius at some rung.
    pub ambiguous: bool,
    /// Every rung contributed a point.
    pub complete: bool,
    /// Errors strictly decrease along the ladder.
    pub monotone: bool,
    /// Total multiplicity inside the tracking disk at each rung.
    pub disk_multiplicity: Vec<usize>,
    pub disk_radius: f64,
    /// First rung from which the disk multiplicity stays constant.
    pub threshold_rung: Option<usize>,
    /// Eigenvalue shift of the tracked point under a change of `θ` on the
    /// finest rung.
    pub theta_deviation: Option<f64>,
}

impl Track {
    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.err).collect()
    }

    /// Richardson estimate of the `h → 0` limit from the last two points at
    /// the fitted rate, with the size of the correction as its tolerance.
    pub fn extrapolated_limit(&self) -> Option<(Complex64, f64)> {
        let rate = self.rate?;
        let [.., coarse, fine] = self.points.as_slice() else {
            return None;
        };
        let q = (coarse.h / fine.h).powf(rate.slope) - 1.0;
        if q <= 0.0 {
            return None;
        }
        let correction = (fine.z - coarse.z) / q;
        Some((fine.z + correction, correction.norm()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RungSummary {
    pub rung: Rung,
    pub items: usize,
    pub max_poisson_shells: usize,
    pub max_poisson_tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ladder: Vec<Rung>,
    pub rungs: Vec<RungSummary>,
    pub tracks: Vec<Track>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub identify: IdentifyOptions,
    pub assembly: AssemblyOptions,
    /// Matching radius as a fraction of the local spacing.
    pub gamma_factor: f64,
    /// Radius of the multiplicity disk around each reference; defaults to
    /// the smallest matching radius along the ladder.
    pub disk_radius: Option<f64>,
    /// Re-solve the finest rung at this `θ` and report the shift.
    pub stability_probe: Option<Complex64>,
    /// Eigensolver residual floor for rate fits.
    pub residual_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            identify: IdentifyOptions::default(),
            assembly: AssemblyOptions::default(),
            gamma_factor: 0.1,
            disk_radius: None,
            stability_probe: None,
            residual_floor: 1e-12,
        }
    }
}

/// Distance from `z` to the nearest other point, or `max(1, |z|)` if alone.
fn local_spacing(points: &[Complex64], z: Complex64) -> f64 {
    let d = points
        .iter()
        .map(|w| (w - z).norm())
        .filter(|&d| d > 1e-12 * z.norm().max(1.0))
        .fold(f64::INFINITY, f64::min);
    if d.is_finite() {
        d
    } else {
        z.norm().max(1.0)
    }
}

enum Match {
    Found(usize),
    Ambiguous,
    None,
}

fn nearest_index(points: &[Complex64], anchor: Complex64) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - anchor).norm().total_cmp(&(b.1 - anchor).norm()))
        .map(|(i, _)| i)
}

fn match_point(points: &[Complex64], anchor: Complex64, gamma: f64) -> Match {
    let Some(best) = nearest_index(points, anchor) else {
        return Match::None;
    };
    match points.iter().filter(|w| (*w - anchor).norm() <= gamma).count() {
        0 => Match::None,
        1 => Match::Found(best),
        _ => Match::Ambiguous,
    }
}

struct RungData {
    points: Vec<Complex64>,
    multiplicities: Vec<usize>,
}

fn build_tracks(
    ladder: &[Rung],
    data: &[RungData],
    references: &[Reference],
    opts: &SweepOptions,
) -> Vec<Track> {
    let seeds: Vec<(Complex64, Option<Reference>)> = if references.is_empty() {
        data.first()
            .map(|d| d.points.iter().map(|&z| (z, None)).collect())
            .unwrap_or_default()
    } else {
        references.iter().map(|r| (r.z, Some(r.clone()))).collect()
    };
    let mut tracks = Vec::with_capacity(seeds.len());
    for (id, (seed, reference)) in seeds.into_iter().enumerate() {
        let mut anchor = seed;
        let mut points = Vec::new();
        let mut ambiguous = false;
        let mut complete = true;
        let mut min_gamma = f64::INFINITY;
        // radius set by the anchor's neighbourhood on the rung it came from
        let mut gamma = None;
        for (rung, d) in ladder.iter().zip(data) {
            let g = gamma.unwrap_or_else(|| {
                nearest_index(&d.points, anchor)
                    .map(|i| opts.gamma_factor * local_spacing(&d.points, d.points[i]))
                    .unwrap_or(0.0)
            });
            if g > 0.0 {
                min_gamma = min_gamma.min(g);
            }
            match match_point(&d.points, anchor, g) {
                Match::Found(i) => {
                    let z = d.points[i];
                    points.push(TrackPoint {
                        h: rung.h,
                        n: rung.n,
                        z,
                        err: reference.as_ref().map(|r| (z - r.z).norm()),
                        multiplicity: d.multiplicities[i],
                    });
                    anchor = z;
                    gamma = Some(opts.gamma_factor * local_spacing(&d.points, z));
                }
                Match::Ambiguous => {
                    ambiguous = true;
                    complete = false;
                }
                Match::None => complete = false,
            }
        }
        let center = reference.as_ref().map(|r| r.z).unwrap_or(anchor);
        let disk_radius = opts.disk_radius.unwrap_or(if min_gamma.is_finite() { min_gamma } else { 0.0 });
        let disk_multiplicity: Vec<usize> = data
            .iter()
            .map(|d| {
                d.points
                    .iter()
                    .zip(&d.multiplicities)
                    .filter(|(z, _)| (*z - center).norm() < disk_radius)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        let threshold_rung = disk_multiplicity.last().map(|&last| {
            let mut i = disk_multiplicity.len() - 1;
            while i > 0 && disk_multiplicity[i - 1] == last {
                i -= 1;
            }
            i
        });
        let errs: Vec<f64> = points.iter().filter_map(|p| p.err).collect();
        let hs: Vec<f64> = points.iter().filter(|p| p.err.is_some()).map(|p| p.h).collect();
        tracks.push(Track {
            id,
            rate: fit_rate(&hs, &errs, opts.residual_floor),
            monotone: !errs.is_empty() && strictly_decreasing(&errs),
            points,
            reference,
            ambiguous,
            complete,
            disk_multiplicity,
            disk_radius,
            threshold_rung,
            theta_deviation: None,
        });
    }
    tracks
}

/// Resonances of the distorted lattice operator along a ladder of spacings,
/// tracked from the given references (or from the coarsest rung).
pub fn sweep_resonances(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    ladder: &[Rung],
    region: &ResonanceRegion,
    references: &[Reference],
    opts: &SweepOptions,
) -> Result<ConvergenceReport> {
    let ladder = &normalize_ladder(ladder, 2)?;
    let results: Vec<(ResonanceSet, Vec<Complex64>, RungSummary)> = ladder
        .par_iter()
        .map(|rung| {
            let grid = LatticeGrid::new(rung.h, rung.n, pot.dim)?;
            let op = assemble_lattice(pot, moll, dist, &grid, &opts.assembly)?;
            let spectrum = eigen_all(&op.entries)?;
            let set = identify_from_spectrum(&op, spectrum.clone(), region, &opts.identify)?;
            let summary = RungSummary {
                rung: *rung,
                items: set.items.len(),
                max_poisson_shells: op.provenance.max_shells,
                max_poisson_tail: op.provenance.max_tail,
            };
            Ok((set, spectrum, summary))
        })
        .collect::<Result<_>>()?;
    let data: Vec<RungData> = results
        .iter()
        .map(|(set, _, _)| RungData {
            points: set.items.iter().map(|r| r.z).collect(),
            multiplicities: set.items.iter().map(|r| r.multiplicity).collect(),
        })
        .collect();
    let mut tracks = build_tracks(ladder, &data, references, opts);

    if let (Some(probe), Some(finest)) = (opts.stability_probe, ladder.last()) {
        let grid = LatticeGrid::new(finest.h, finest.n, pot.dim)?;
        let other = assemble_lattice(pot, moll, &dist.with_theta(probe)?, &grid, &opts.assembly)?;
        let spectrum = eigen_all(&other.entries)?;
        for t in &mut tracks {
            if let Some(p) = t.points.last().filter(|p| p.h == finest.h) {
                t.theta_deviation =
                    Some(spectrum.iter().map(|w| (w - p.z).norm()).fold(f64::INFINITY, f64::min));
            }
        }
    }
    Ok(ConvergenceReport { ladder: ladder.to_vec(), rungs: results.into_iter().map(|r| r.2).collect(), tracks })
}

/// Resonances at `(h, N)` with each item's shift under `N → 2N` recorded.
pub fn with_n_doubling(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    rung: Rung,
    region: &ResonanceRegion,
    opts: &SweepOptions,
) -> Result<ResonanceSet> {
    let solve = |n: usize| -> Result<ResonanceSet> {
        let grid = LatticeGrid::new(rung.h, n, pot.dim)?;
        identify_resonances(&assemble_lattice(pot, moll, dist, &grid, &opts.assembly)?, region, &opts.identify)
    };
    let mut base = solve(rung.n)?;
    let doubled = solve(2 * rung.n)?;
    for item in &mut base.items {
        item.n_doubling_deviation = doubled.nearest(item.z).map(|o| (o.z - item.z).norm());
    }
    Ok(base)
}

/// Discrete eigenvalues below zero of the undistorted lattice operator
/// along the ladder, tracked from the references.
pub fn sweep_eigenvalues(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    ladder: &[Rung],
    references: &[Reference],
    opts: &SweepOptions,
) -> Result<ConvergenceReport> {
    let ladder = &normalize_ladder(ladder, 2)?;
    let none = DistortionSpec::none(pot.dim);
    let results: Vec<(Vec<Complex64>, RungSummary)> = ladder
        .par_iter()
        .map(|rung| {
            let grid = LatticeGrid::new(rung.h, rung.n, pot.dim)?;
            let op = assemble_lattice(pot, moll, &none, &grid, &opts.assembly)?;
            let below: Vec<Complex64> = hermitian_eigenvalues(&op.entries)?
                .into_iter()
                .filter(|&e| e < 0.0)
                .map(|e| Complex64::new(e, 0.0))
                .collect();
            let summary = RungSummary {
                rung: *rung,
                items: below.len(),
                max_poisson_shells: op.provenance.max_shells,
                max_poisson_tail: op.provenance.max_tail,
            };
            Ok((below, summary))
        })
        .collect::<Result<_>>()?;
    let data: Vec<RungData> = results
        .iter()
        .map(|(pts, _)| RungData { points: pts.clone(), multiplicities: vec![1; pts.len()] })
        .collect();
    let tracks = build_tracks(ladder, &data, references, opts);
    Ok(ConvergenceReport { ladder: ladder.to_vec(), rungs: results.into_iter().map(|r| r.1).collect(), tracks })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRung {
    pub h: f64,
    pub n: usize,
    pub norm: f64,
    /// Companion quantity, where one is defined.
    pub companion: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub rungs: Vec<NormRung>,
    pub fit: Option<RateFit>,
    pub companion_fit: Option<RateFit>,
    /// Rate predicted from the potential's decay, where applicable.
    pub predicted: Option<f64>,
    pub decreasing: bool,
}

impl NormReport {
    fn from_rungs(rungs: Vec<NormRung>, predicted: Option<f64>) -> Self {
        let hs: Vec<f64> = rungs.iter().map(|r| r.h).collect();
        let norms: Vec<f64> = rungs.iter().map(|r| r.norm).collect();
        let companions: Option<Vec<f64>> = rungs.iter().map(|r| r.companion).collect();
        Self {
            fit: fit_rate(&hs, &norms, 0.0),
            companion_fit: companions.and_then(|c| fit_rate(&hs, &c, 0.0)),
            decreasing: strictly_decreasing(&norms),
            predicted,
            rungs,
        }
    }
}

fn embedding_parts(
    filter: &EmbeddingFilter,
    lattice: &LatticeGrid,
    galerkin: &GalerkinGrid,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let m = filter.matrix(lattice, galerkin)?;
    let mut index = Vec::with_capacity(galerkin.len());
    let mut coeff = Vec::with_capacity(galerkin.len());
    for row in m.rows() {
        let (j, c) = row
            .iter()
            .enumerate()
            .find(|(_, c)| c.norm() != 0.0)
            .map(|(j, c)| (j, c.re))
            .unwrap_or((0, 0.0));
        index.push(j);
        coeff.push(c);
    }
    Ok((index, coeff))
}

/// `‖I_h (T_{h,θ} − z₀)^{-1} I_h* − (T_θ − z₀)^{-1}‖` per rung, with the
/// companion `‖(1 − I_h I_h*)(T_θ − z₀)^{-1}‖`.
pub fn measure_kinetic_rate(dist: &DistortionSpec, ladder: &[Rung], z0: Complex64) -> Result<NormReport> {
    let ladder = &normalize_ladder(ladder, 3)?;
    let filter = EmbeddingFilter::default();
    let rungs = ladder
        .iter()
        .map(|rung| {
            let lattice = LatticeGrid::new(rung.h, rung.n, dist.dim)?;
            let galerkin = GalerkinGrid::covering(&lattice)?;
            let (index, coeff) = embedding_parts(&filter, &lattice, &galerkin)?;
            let lattice_res: Vec<Complex64> =
                lattice_kinetic_diagonal(dist, &lattice).into_iter().map(|t| 1.0 / (t - z0)).collect();
            let cont_res: Vec<Complex64> =
                continuum_kinetic_diagonal(dist, &galerkin).into_iter().map(|t| 1.0 / (t - z0)).collect();
            let g = galerkin.len();
            let mut diff = CMatrix::zeros((g, g));
            let mut companion = CMatrix::zeros((g, g));
            for a in 0..g {
                for b in 0..g {
                    if index[a] == index[b] {
                        let p = coeff[a] * coeff[b];
                        diff[[a, b]] = lattice_res[index[a]] * p;
                        companion[[a, b]] = -cont_res[b] * p;
                    }
                }
                diff[[a, a]] -= cont_res[a];
                companion[[a, a]] += cont_res[a];
            }
            Ok(NormRung {
                h: rung.h,
                n: rung.n,
                norm: spectral_norm(&diff)?,
                companion: Some(spectral_norm(&companion)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormReport::from_rungs(rungs, Some(2.0)))
}

/// Rate predicted for the potential commutator from the decay exponent
/// `σ` and integrability exponent `p` of `V̂`.
pub fn predicted_commutator_rate(pot: &PotentialSpec) -> Option<f64> {
    let (sigma, p, d) = (pot.class.sigma, pot.class.p, pot.dim as f64);
    if sigma.is_infinite() {
        return Some(1.0);
    }
    let a = p * sigma - d;
    (a > 0.0).then(|| a / (a + p))
}

/// `‖I_h V_{h,θ} − V_θ I_h‖` per rung, optionally preceded by the
/// undistorted `(T − i)^{-1}`.
pub fn measure_potential_commutator(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    ladder: &[Rung],
    with_resolvent: bool,
    opts: &AssemblyOptions,
) -> Result<NormReport> {
    let ladder = &normalize_ladder(ladder, 3)?;
    let filter = EmbeddingFilter::default();
    let rungs = ladder
        .iter()
        .map(|rung| {
            let lattice = LatticeGrid::new(rung.h, rung.n, pot.dim)?;
            let galerkin = GalerkinGrid::covering(&lattice)?;
            let vh = assemble_lattice_potential(pot, moll, dist, &lattice, opts)?.entries;
            let vc = assemble_continuum_potential(pot, dist, &galerkin, opts)?.entries;
            let embed = filter.matrix(&lattice, &galerkin)?;
            let mut c = embed.dot(&vh) - vc.dot(&embed);
            if with_resolvent {
                let free = continuum_kinetic_diagonal(&DistortionSpec::none(pot.dim), &galerkin);
                for (mut row, t) in c.rows_mut().into_iter().zip(free) {
                    let r = 1.0 / (t - Complex64::i());
                    row.mapv_inplace(|x| x * r);
                }
            }
            Ok(NormRung { h: rung.h, n: rung.n, norm: spectral_norm(&c)?, companion: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormReport::from_rungs(rungs, predicted_commutator_rate(pot)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundTable {
    pub hs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `values[i][j]` at `hs[i]`, `ts[j]`.
    pub values: Vec<Vec<f64>>,
    pub max_over_h: Vec<f64>,
    pub decreasing_in_t: bool,
}

/// `‖V_{h,θ} (T_h(Φ_{h,θ}) − it)^{-1}‖` over a table of spacings and `t`.
pub fn uniform_bound_check(
    pot: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    dist: &DistortionSpec,
    ladder: &[Rung],
    ts: &[f64],
    opts: &AssemblyOptions,
) -> Result<UniformBoundTable> {
    let ladder = &normalize_ladder(ladder, 1)?;
    let values = ladder
        .iter()
        .map(|rung| {
            let grid = LatticeGrid::new(rung.h, rung.n, pot.dim)?;
            let k = assemble_lattice_potential(pot, moll, dist, &grid, opts)?.entries;
            let t_h = lattice_kinetic_diagonal(dist, &grid);
            ts.iter()
                .map(|&t| {
                    let mut m = k.clone();
                    for (mut col, tk) in m.columns_mut().into_iter().zip(&t_h) {
                        let r = 1.0 / (tk - Complex64::new(0.0, t));
                        col.mapv_inplace(|x| x * r);
                    }
                    spectral_norm(&m)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let max_over_h: Vec<f64> =
        (0..ts.len()).map(|j| values.iter().map(|row| row[j]).fold(0.0, f64::max)).collect();
    Ok(UniformBoundTable {
        hs: ladder.iter().map(|r| r.h).collect(),
        ts: ts.to_vec(),
        decreasing_in_t: strictly_decreasing(&max_over_h),
        max_over_h,
        values,
    })
}
