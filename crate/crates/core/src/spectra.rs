//! Eigenvalues of distorted operators, resonance identification, Riesz
//! projection multiplicities and operator-norm differences.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{GridKind, OperatorMatrix};
use crate::distortion::{EssentialCurve, ResonanceRegion};
use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::linalg::{eigenpairs, eigenvalues, spectral_norm, CMatrix, Hessenberg};

/// All eigenvalues of a dense complex matrix.
pub fn eigen_all(a: &CMatrix) -> Result<Vec<Complex64>> {
    eigenvalues(a)
}

/// Eigenvalues with right eigenvectors, each pair checked against
/// `‖Av − λv‖ < tol · max(1, ‖A‖_max) ‖v‖`.
pub fn eigen_all_with_vectors(a: &CMatrix, tol: f64) -> Result<(Vec<Complex64>, CMatrix)> {
    let (w, v) = eigenpairs(a)?;
    let scale = a.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    for (k, lambda) in w.iter().enumerate() {
        let col = v.column(k);
        let r = a.dot(&col) - col.mapv(|c| c * lambda);
        let nr = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nr > tol * scale * nv {
            return Err(Error::Eigensolver(format!(
                "residual {:.3e} for eigenvalue {lambda} exceeds {:.1e}",
                nr / nv,
                tol * scale
            )));
        }
    }
    Ok((w, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszOptions {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Required `|tr P − round(Re tr P)|`.
    pub integrality_tol: f64,
    /// Smallest admissible distance from the circle to an eigenvalue,
    /// relative to `max(1, radius)`.
    pub clearance: f64,
}

impl Default for RieszOptions {
    fn default() -> Self {
        Self { initial_nodes: 64, max_nodes: 4096, integrality_tol: 1e-6, clearance: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszResult {
    pub multiplicity: usize,
    pub trace: Complex64,
    pub nodes: usize,
}

/// Reusable Riesz-projection machinery for one matrix: the Hessenberg form
/// and the eigenvalues used to keep contours off the spectrum.
pub struct RieszSolver {
    hessenberg: Hessenberg,
    spectrum: Vec<Complex64>,
}

impl RieszSolver {
    pub fn new(a: &CMatrix) -> Result<Self> {
        Ok(Self { hessenberg: Hessenberg::new(a)?, spectrum: eigenvalues(a)? })
    }

    pub fn with_spectrum(a: &CMatrix, spectrum: Vec<Complex64>) -> Result<Self> {
        Ok(Self { hessenberg: Hessenberg::new(a)?, spectrum })
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Number of eigenvalues (by the eigensolver) strictly inside the circle.
    pub fn eigen_count(&self, center: Complex64, radius: f64) -> usize {
        self.spectrum.iter().filter(|z| (*z - center).norm() < radius).count()
    }

    /// `tr P` for the circle `|ζ − center| = radius` by the trapezoid rule,
    /// doubling the node count until the trace is integral.
    pub fn multiplicity(&self, center: Complex64, radius: f64, opts: &RieszOptions) -> Result<RieszResult> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("contour radius {radius} must be positive")));
        }
        let clearance = self
            .spectrum
            .iter()
            .map(|z| ((z - center).norm() - radius).abs())
            .fold(f64::INFINITY, f64::min);
        if clearance <= opts.clearance * radius.max(1.0) {
            return Err(Error::ContourThroughSpectrum { distance: clearance });
        }
        let node = |q: usize, count: usize| -> Result<Complex64> {
            let e = Complex64::from_polar(1.0, 2.0 * PI * q as f64 / count as f64);
            let zeta = center + e * radius;
            Ok(self.hessenberg.resolvent_trace(zeta)? * e * radius)
        };
        let mut count = opts.initial_nodes.max(4);
        let mut sum: Complex64 = (0..count)
            .into_par_iter()
            .map(|q| node(q, count))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        loop {
            let trace = sum / count as f64;
            let rounded = trace.re.round();
            if (trace - rounded).norm() < opts.integrality_tol && rounded >= 0.0 {
                return Ok(RieszResult { multiplicity: rounded as usize, trace, nodes: count });
            }
            if 2 * count > opts.max_nodes {
                return Err(Error::NonIntegralTrace { nodes: count, trace });
            }
            // the doubled rule reuses every existing node
            let fine = 2 * count;
            let extra: Complex64 = (0..count)
                .into_par_iter()
                .map(|q| node(2 * q + 1, fine))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            sum += extra;
            count = fine;
        }
    }
}

pub fn riesz_multiplicity(a: &CMatrix, center: Complex64, radius: f64, opts: &RieszOptions) -> Result<RieszResult> {
    RieszSolver::new(a)?.multiplicity(center, radius, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOptions {
    /// `ε_ess` as a multiple of the local sampling gap of the essential curve.
    pub ess_factor: f64,
    /// Probe distortion for the θ-stability filter.
    pub stability_probe: Option<Complex64>,
    pub tol_theta: f64,
    /// Cluster radius relative to `max(1, |z|)`.
    pub cluster_rel: f64,
    /// Points within this region margin (radians) or within twice `ε_ess` of
    /// the curve are flagged as boundary cases.
    pub boundary_margin: f64,
    pub count_multiplicity: bool,
    pub riesz: RieszOptions,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            ess_factor: 2.0,
            stability_probe: None,
            tol_theta: 1e-4,
            cluster_rel: 1e-8,
            boundary_margin: 0.02,
            count_multiplicity: true,
            riesz: RieszOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub z: Complex64,
    pub multiplicity: usize,
    pub curve_distance: f64,
    pub theta_deviation: Option<f64>,
    pub n_doubling_deviation: Option<f64>,
    /// False when the Riesz trace could not be made integral and the
    /// multiplicity is the eigensolver count.
    pub riesz_verified: bool,
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetContext {
    /// Lattice spacing, `None` for continuum assemblies.
    pub h: Option<f64>,
    pub theta: Complex64,
    pub potential: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub items: Vec<Resonance>,
    pub region: ResonanceRegion,
    pub context: SetContext,
}

impl ResonanceSet {
    pub fn total_multiplicity_in(&self, center: Complex64, radius: f64) -> usize {
        self.items
            .iter()
            .filter(|r| (r.z - center).norm() < radius)
            .map(|r| r.multiplicity)
            .sum()
    }

    pub fn nearest(&self, z: Complex64) -> Option<&Resonance> {
        self.items.iter().min_by(|a, b| (a.z - z).norm().total_cmp(&(b.z - z).norm()))
    }
}

pub fn essential_curve_of(op: &OperatorMatrix) -> EssentialCurve {
    let dist = &op.provenance.distortion;
    match &op.grid {
        GridKind::Lattice(g) => dist.essential_curve(MomentumGrid::Lattice(g)),
        GridKind::Galerkin(g) => dist.essential_curve(MomentumGrid::Galerkin(g)),
    }
}

/// Eigenvalues of `op` that are resonances: inside the region, clear of the
/// essential curve, optionally stable under a change of `θ`, clustered and
/// counted with algebraic multiplicity.
pub fn identify_resonances(
    op: &OperatorMatrix,
    region: &ResonanceRegion,
    opts: &IdentifyOptions,
) -> Result<ResonanceSet> {
    let spectrum = eigen_all(&op.entries)?;
    identify_from_spectrum(op, spectrum, region, opts)
}

/// As [`identify_resonances`], reusing an already computed spectrum.
pub fn identify_from_spectrum(
    op: &OperatorMatrix,
    spectrum: Vec<Complex64>,
    region: &ResonanceRegion,
    opts: &IdentifyOptions,
) -> Result<ResonanceSet> {
    let curve = essential_curve_of(op);
    let h = match &op.grid {
        GridKind::Lattice(g) => Some(g.h()),
        GridKind::Galerkin(_) => None,
    };
    let context = SetContext { h, theta: op.theta(), potential: op.provenance.potential.label.clone() };

    let mut candidates: Vec<(Complex64, f64, f64)> = spectrum
        .iter()
        .filter(|z| region.contains(**z))
        .filter_map(|&z| {
            let (d, gap) = curve.distance(z);
            (d > opts.ess_factor * gap).then_some((z, d, gap))
        })
        .collect();

    let mut deviations = vec![None; candidates.len()];
    if let Some(probe) = opts.stability_probe {
        if !candidates.is_empty() {
            let other = eigen_all(&op.reassemble(probe)?.entries)?;
            let mut kept = Vec::new();
            let mut kept_dev = Vec::new();
            for c in candidates {
                let dev = other.iter().map(|w| (w - c.0).norm()).fold(f64::INFINITY, f64::min);
                if dev < opts.tol_theta {
                    kept.push(c);
                    kept_dev.push(Some(dev));
                }
            }
            candidates = kept;
            deviations = kept_dev;
        }
    }

    // greedy clustering in order of decreasing distance to the curve
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1).then(a.cmp(&b)));
    let mut used = vec![false; candidates.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        let tol = opts.cluster_rel * candidates[i].0.norm().max(1.0);
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&j| !used[j] && (candidates[j].0 - candidates[i].0).norm() <= tol)
            .collect();
        for &j in &members {
            used[j] = true;
        }
        clusters.push(members);
    }

    let solver = if opts.count_multiplicity && !clusters.is_empty() {
        Some(RieszSolver::with_spectrum(&op.entries, spectrum.clone())?)
    } else {
        None
    };

    let mut items = Vec::with_capacity(clusters.len());
    for members in clusters {
        let n = members.len() as f64;
        let z: Complex64 = members.iter().map(|&j| candidates[j].0).sum::<Complex64>() / n;
        let spread = members.iter().map(|&j| (candidates[j].0 - z).norm()).fold(0.0, f64::max);
        let (curve_distance, gap) = members
            .iter()
            .map(|&j| (candidates[j].1, candidates[j].2))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        let theta_deviation = members.iter().filter_map(|&j| deviations[j]).fold(None, |m: Option<f64>, d| {
            Some(m.map_or(d, |m| m.max(d)))
        });
        let mut multiplicity = members.len();
        let mut riesz_verified = false;
        if let Some(solver) = &solver {
            let nearest_other = spectrum
                .iter()
                .map(|w| (w - z).norm())
                .filter(|&d| d > spread * 1.5 + f64::EPSILON * z.norm().max(1.0) * 16.0)
                .fold(f64::INFINITY, f64::min);
            let radius = (0.5 * nearest_other).min(0.5 * curve_distance).max(4.0 * spread);
            if radius.is_finite() && radius > 0.0 {
                if let Ok(r) = solver.multiplicity(z, radius, &opts.riesz) {
                    if r.multiplicity >= 1 {
                        multiplicity = r.multiplicity;
                        riesz_verified = true;
                    }
                }
            }
        }
        let boundary = region.margin(z) < opts.boundary_margin || curve_distance < 2.0 * opts.ess_factor * gap;
        items.push(Resonance {
            z,
            multiplicity,
            curve_distance,
            theta_deviation,
            n_doubling_deviation: None,
            riesz_verified,
            boundary,
        });
    }
    items.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(ResonanceSet { items, region: *region, context })
}

/// `‖A − B‖` (largest singular value) for maps between the same spaces.
pub fn opnorm_difference(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::SizeMismatch { expected: a.len(), got: b.len() });
    }
    spectral_norm(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_lattice, AssemblyOptions};
    use crate::distortion::DistortionSpec;
    use crate::grid::LatticeGrid;
    use crate::potentials::PotentialSpec;
    use ndarray::Array2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diagonal(values: &[Complex64]) -> CMatrix {
        let mut m = Array2::zeros((values.len(), values.len()));
        for (i, v) in values.iter().enumerate() {
            m[[i, i]] = *v;
        }
        m
    }

    #[test]
    fn diagonal_spectrum() {
        let vals = [c(1.0, 0.0), c(-2.0, 1.0), c(0.5, -0.5)];
        let mut w = eigen_all(&diagonal(&vals)).unwrap();
        w.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((w[0] - vals[1]).norm() < 1e-14);
        assert!((w[1] - vals[2]).norm() < 1e-14);
        assert!((w[2] - vals[0]).norm() < 1e-14);
    }

    #[test]
    fn jordan_block() {
        let lambda = c(2.0, -1.0);
        let mut m = diagonal(&[lambda, lambda]);
        m[[0, 1]] = c(1.0, 0.0);
        for w in eigen_all(&m).unwrap() {
            assert!((w - lambda).norm() < 1e-7);
        }
        let r = riesz_multiplicity(&m, lambda, 0.5, &RieszOptions::default()).unwrap();
        assert_eq!(r.multiplicity, 2);
    }

    #[test]
    fn riesz_simple_and_empty_contours() {
        let m = diagonal(&[c(0.0, 0.0), c(1.0, 0.0), c(3.0, 1.0)]);
        let opts = RieszOptions::default();
        assert_eq!(riesz_multiplicity(&m, c(1.0, 0.0), 0.3, &opts).unwrap().multiplicity, 1);
        let r = riesz_multiplicity(&m, c(5.0, 5.0), 1.0, &opts).unwrap();
        assert_eq!(r.multiplicity, 0);
        assert!(r.trace.norm() < 1e-8);
        assert!(matches!(
            riesz_multiplicity(&m, c(0.0, 0.0), 1.0, &opts),
            Err(Error::ContourThroughSpectrum { .. })
        ));
    }

    #[test]
    fn hermitian_input_has_real_spectrum() {
        let n = 12;
        let m = Array2::from_shape_fn((n, n), |(i, j)| {
            let a = c((i + j) as f64 * 0.1, (i as f64 - j as f64) * 0.3);
            if i == j { c(a.re, 0.0) } else { a }
        });
        for w in eigen_all(&m).unwrap() {
            assert!(w.im.abs() < 1e-10);
        }
        eigen_all_with_vectors(&m, 1e-8).unwrap();
    }

    #[test]
    fn opnorm_examples() {
        let a = diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(opnorm_difference(&a, &a).unwrap() <= 1e-12);
        let b = diagonal(&[c(0.0, 0.0), c(2.0, -3.0)]);
        assert!((opnorm_difference(&a, &b).unwrap() - 3.0).abs() < 1e-6);
        assert!(opnorm_difference(&a, &Array2::zeros((3, 3))).is_err());
    }

    #[test]
    fn free_operator_has_no_resonances() {
        let grid = LatticeGrid::new(0.25, 64, 1).unwrap();
        let dist = DistortionSpec::cutoff_dilation(c(0.0, -0.25), 16.0, 1).unwrap();
        let op = assemble_lattice(&PotentialSpec::zero(1), None, &dist, &grid, &AssemblyOptions::default()).unwrap();
        let set = identify_resonances(&op, &ResonanceRegion::new(f64::INFINITY, 1.0), &IdentifyOptions::default()).unwrap();
        assert!(set.items.is_empty(), "{:?}", set.items);
    }
}
