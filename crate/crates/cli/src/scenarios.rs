use latres::assembly::EmbeddingFilter;
use latres::limits::{
    check_reference_consistency, continuum_reference, measure_kinetic_rate, measure_potential_commutator,
    sweep_eigenvalues, sweep_resonances, uniform_bound_check, Reference, Track,
};
use latres::linalg::CMatrix;
use latres::potentials::{direct_lattice_fourier, torus_fourier_of_restriction};
use latres::spectra::RieszSolver;
use latres::{
    assemble_continuum, assemble_lattice, bound_states_1d, identify_resonances, resonances_1d_complex_scaling,
    BoundStateOptions, Complex64, ComplexScalingOptions, DistortionSpec, GalerkinGrid, LatticeGrid, MollifierKind,
    MollifierSpec, OracleResult, PotentialSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{OracleKind, ReferenceSource, RunConfig};
use crate::report::{fit_metrics, PointOut, Report, Suite, TrackOut};
use crate::CliError;

pub fn execute(cfg: &RunConfig) -> Result<Report, CliError> {
    use crate::config::Scenario::*;
    let mut report = Report::new(cfg);
    match cfg.scenario {
        ComputeResonances => compute_resonances(cfg, &mut report)?,
        SweepResonances => sweep_res(cfg, &mut report)?,
        SweepEigenvalues => sweep_eig(cfg, &mut report)?,
        Rates => rates(cfg, &mut report)?,
        Validate => validate(cfg, &mut report)?,
        Oracle => oracle(cfg, &mut report)?,
    }
    Ok(report)
}

fn compute_resonances(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let moll = cfg.mollifier()?;
    let dist = cfg.distortion()?;
    let region = cfg.region(&pot);
    let opts = cfg.identify_options();
    let mut id = 0;
    for rung in cfg.ladder()? {
        let grid = LatticeGrid::new(rung.h, rung.n, pot.dim)?;
        let op = assemble_lattice(&pot, moll.as_ref(), &dist, &grid, &cfg.assembly_options())?;
        let set = identify_resonances(&op, &region, &opts)?;
        let verified = set.items.iter().all(|r| r.riesz_verified || !opts.count_multiplicity);
        report.suites.push(
            Suite::new("identify", verified)
                .metric("h", rung.h)
                .metric("N", rung.n)
                .metric("items", set.items.len())
                .metric("total_multiplicity", set.items.iter().map(|r| r.multiplicity).sum::<usize>())
                .metric("boundary_items", set.items.iter().filter(|r| r.boundary).count()),
        );
        report.provenance.poisson_tail_bounds.push(crate::report::TailBound {
            h: rung.h,
            n: rung.n,
            max_shells: op.provenance.max_shells,
            max_tail: op.provenance.max_tail,
        });
        for r in &set.items {
            let point = PointOut { h: rung.h, n: rung.n, re: r.z.re, im: r.z.im, err: None, multiplicity: r.multiplicity };
            report.tracks.push(TrackOut::single(id, point));
            id += 1;
        }
    }
    Ok(())
}

fn run_oracle(cfg: &RunConfig, pot: &PotentialSpec, kind: OracleKind) -> Result<OracleResult, CliError> {
    let o = &cfg.oracle;
    Ok(match kind {
        OracleKind::ComplexScaling => {
            let opts = ComplexScalingOptions {
                refinements: o.refinements,
                box_factor: o.box_factor,
                max_energy: o.max_energy,
                ..ComplexScalingOptions::default()
            };
            resonances_1d_complex_scaling(pot, o.alpha, o.half_width, o.points, &opts)?
        }
        OracleKind::BoundStates => {
            let opts = BoundStateOptions { energy_max: o.energy_max, refinements: o.refinements, sampling: None };
            bound_states_1d(pot, o.half_width, o.points, &opts)?
        }
    })
}

fn references(cfg: &RunConfig, pot: &PotentialSpec, kind: OracleKind, report: &mut Report) -> Result<Vec<Reference>, CliError> {
    let mut refs: Vec<Reference> = cfg
        .references
        .iter()
        .map(|r| Reference { z: Complex64::new(r.re, r.im), tolerance: r.tolerance, provenance: r.provenance.clone() })
        .collect();
    if cfg.reference_source != ReferenceSource::Config {
        let result = run_oracle(cfg, pot, kind)?;
        let region = cfg.region(pot);
        for (z, tol) in result.values.iter().zip(&result.tolerances) {
            if kind == OracleKind::ComplexScaling && !region.contains(*z) {
                continue;
            }
            let oracle_ref = Reference { z: *z, tolerance: *tol, provenance: result.method.clone() };
            if cfg.reference_source == ReferenceSource::OracleGalerkin {
                let dist = cfg.distortion()?;
                let t = &cfg.tolerances;
                let gal = continuum_reference(pot, &dist, t.galerkin_cutoff, t.galerkin_step, *z, &cfg.assembly_options())?;
                check_reference_consistency(&oracle_ref, &gal)?;
            }
            refs.push(oracle_ref);
        }
    }
    report.provenance.references = refs.iter().map(|r| format!("{} ± {:e} ({})", r.z, r.tolerance, r.provenance)).collect();
    Ok(refs)
}

fn convergence_suite(name: &str, tracks: &[Track]) -> Suite {
    let referenced: Vec<&Track> = tracks.iter().filter(|t| t.reference.is_some()).collect();
    let ok = !referenced.is_empty() && referenced.iter().all(|t| t.complete && t.monotone && !t.ambiguous);
    let per_track: Vec<serde_json::Value> = referenced
        .iter()
        .map(|t| {
            serde_json::json!({
                "id": t.id,
                "final_error": t.errors().last(),
                "rate": fit_metrics(t.rate),
                "complete": t.complete,
                "monotone": t.monotone,
                "ambiguous": t.ambiguous,
                "threshold_rung": t.threshold_rung,
                "theta_deviation": t.theta_deviation,
            })
        })
        .collect();
    Suite::new(name, ok).metric("tracks", per_track)
}

fn sweep_res(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let refs = references(cfg, &pot, OracleKind::ComplexScaling, report)?;
    let conv = sweep_resonances(
        &pot,
        cfg.mollifier()?.as_ref(),
        &cfg.distortion()?,
        &cfg.ladder()?,
        &cfg.region(&pot),
        &refs,
        &cfg.sweep_options(),
    )?;
    report.suites.push(convergence_suite("resonance-convergence", &conv.tracks));
    report.add_convergence(&conv);
    Ok(())
}

fn sweep_eig(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let refs = references(cfg, &pot, OracleKind::BoundStates, report)?;
    let conv = sweep_eigenvalues(&pot, cfg.mollifier()?.as_ref(), &cfg.ladder()?, &refs, &cfg.sweep_options())?;
    report.suites.push(convergence_suite("eigenvalue-convergence", &conv.tracks));
    report.add_convergence(&conv);
    Ok(())
}

fn rates(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let moll = cfg.mollifier()?;
    let dist = cfg.distortion()?;
    let ladder = cfg.ladder()?;
    let band = cfg.tolerances.rate_band;
    let opts = cfg.assembly_options();

    let kinetic = measure_kinetic_rate(&dist, &ladder, cfg.z0())?;
    let within = |f: Option<latres::RateFit>| f.is_some_and(|f| (f.slope - 2.0).abs() <= band);
    report.suites.push(
        Suite::new("kinetic-rate", within(kinetic.fit) && within(kinetic.companion_fit))
            .metric("fit", fit_metrics(kinetic.fit))
            .metric("companion_fit", fit_metrics(kinetic.companion_fit))
            .metric("norms", kinetic.rungs.iter().map(|r| r.norm).collect::<Vec<_>>())
            .metric("predicted", 2.0),
    );

    let comm = measure_potential_commutator(
        &pot,
        moll.as_ref(),
        &dist,
        &ladder,
        cfg.tolerances.commutator_with_resolvent,
        &opts,
    )?;
    let ok = comm.decreasing
        && match (comm.fit, comm.predicted) {
            (Some(f), Some(p)) => f.slope >= p - band,
            (Some(_), None) => true,
            _ => false,
        };
    report.suites.push(
        Suite::new("potential-commutator", ok)
            .metric("fit", fit_metrics(comm.fit))
            .metric("predicted", comm.predicted)
            .metric("norms", comm.rungs.iter().map(|r| r.norm).collect::<Vec<_>>())
            .metric("decreasing", comm.decreasing),
    );

    let table = uniform_bound_check(&pot, moll.as_ref(), &dist, &ladder, &cfg.tolerances.bound_ts, &opts)?;
    report.suites.push(
        Suite::new("uniform-bound", table.decreasing_in_t)
            .metric("t", &table.ts)
            .metric("max_over_h", &table.max_over_h)
            .metric("values", &table.values),
    );
    Ok(())
}

fn oracle(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let result = run_oracle(cfg, &pot, cfg.oracle.kind)?;
    let finest = *result.resolution.points.last().unwrap_or(&0);
    let step = 2.0 * result.resolution.half_width / (finest + 1) as f64;
    for (id, (z, tol)) in result.values.iter().zip(&result.tolerances).enumerate() {
        let point = PointOut { h: step, n: finest, re: z.re, im: z.im, err: Some(*tol), multiplicity: 1 };
        report.tracks.push(TrackOut::single(id, point));
    }
    report.provenance.references.push(result.method.clone());
    report.suites.push(
        Suite::new("oracle", result.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            .metric("method", &result.method)
            .metric("values", result.values.len())
            .metric("declared_tolerance", result.declared_tolerance)
            .metric("resolution", &result.resolution),
    );
    Ok(())
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Invariant suites on the built-in catalog.
fn validate(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = cfg.tolerances.validate_trials.max(1);
    let opts = cfg.assembly_options();
    let c = Complex64::new;

    // embedding isometry and left inverse
    let filter = EmbeddingFilter::default();
    let (mut iso, mut back) = (0.0f64, 0.0f64);
    for h in [1.0, 0.5, 0.25] {
        let lattice = LatticeGrid::new(h, 64, 1)?;
        let galerkin = GalerkinGrid::covering(&lattice)?;
        for _ in 0..trials {
            let u: Vec<Complex64> =
                (0..lattice.len()).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let g = filter.embed(&lattice, &galerkin, &u)?;
            iso = iso.max((galerkin.norm(&g) - lattice.momentum_norm(&u)).abs());
            let r = filter.embed_adjoint(&lattice, &galerkin, &g)?;
            let d: Vec<Complex64> = r.iter().zip(&u).map(|(a, b)| a - b).collect();
            back = back.max(lattice.momentum_norm(&d));
        }
    }
    report.suites.push(
        Suite::new("embedding-isometry", iso < 1e-10 && back < 1e-10)
            .metric("max_norm_defect", iso)
            .metric("max_left_inverse_defect", back),
    );

    // Poisson identity
    let mut worst = 0.0f64;
    for pot in [PotentialSpec::gaussian(1.0, 1), PotentialSpec::exponential(1.0)] {
        for h in [1.0, 0.5] {
            let grid = LatticeGrid::new(h, 32, 1)?;
            for k in 0..grid.len() {
                let xi = grid.momentum(k)[0];
                let p = torus_fourier_of_restriction(&pot, None, h, &[c(xi, 0.0)], &opts.poisson)?.value;
                let d = direct_lattice_fourier(&pot, h, &[xi], (60.0 / h) as i64)?;
                worst = worst.max((p - d).norm());
            }
        }
    }
    report.suites.push(Suite::new("poisson-identity", worst < 1e-8).metric("max_deviation", worst));

    // adjoint symmetry and Hermitian θ = 0
    let gaussian_moll = MollifierSpec::new(MollifierKind::Gaussian, 1)?;
    let catalog = [
        (PotentialSpec::gaussian(8.0, 1), None),
        (PotentialSpec::exponential(-2.0), None),
        (PotentialSpec::singular_quarter(-1.0), Some(&gaussian_moll)),
    ];
    let lattice = LatticeGrid::new(0.25, 64, 1)?;
    let galerkin = GalerkinGrid::new(16.0, 0.25, 1)?;
    let (mut adj, mut herm) = (0.0f64, 0.0f64);
    let (mut pairs, mut skipped) = (0usize, 0usize);
    for (pot, moll) in &catalog {
        let moll = *moll;
        for theta in [c(0.0, -0.2), c(0.1, -0.15)] {
            let dist = DistortionSpec::cutoff_dilation(theta, 4.0, 1)?;
            if dist.check_lattice(lattice.h(), &pot.class).is_err() {
                skipped += 1;
                continue;
            }
            pairs += 1;
            let conj = dist.with_theta(theta.conj())?;
            let a = assemble_lattice(pot, moll, &dist, &lattice, &opts)?;
            let b = assemble_lattice(pot, moll, &conj, &lattice, &opts)?;
            adj = adj.max(max_abs_diff(&adjoint(&a.entries), &b.entries));
            if pot.has_momentum_form() && dist.is_continuum_admissible(&pot.class) {
                let a = assemble_continuum(pot, &dist, &galerkin, &opts)?;
                let b = assemble_continuum(pot, &conj, &galerkin, &opts)?;
                adj = adj.max(max_abs_diff(&adjoint(&a.entries), &b.entries));
            }
        }
        let op = assemble_lattice(pot, moll, &DistortionSpec::none(1), &lattice, &opts)?;
        herm = herm.max(op.hermitian_defect());
    }
    report.suites.push(
        Suite::new("adjoint-symmetry", adj < 1e-10 && pairs > 0)
            .metric("max_deviation", adj)
            .metric("cases", pairs)
            .metric("inadmissible_skipped", skipped),
    );
    report.suites.push(Suite::new("hermitian-at-zero", herm < 1e-10).metric("max_defect", herm));

    // Riesz counts on random matrices and contours
    let mut mismatches = 0usize;
    let mut worst_im = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(10..=60);
        let a = CMatrix::from_shape_fn((n, n), |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let solver = RieszSolver::new(&a)?;
        let spread = (n as f64).sqrt();
        let (center, radius) = loop {
            let center = c(rng.random_range(-spread..spread), rng.random_range(-spread..spread));
            let radius = rng.random_range(0.2..1.5) * spread;
            if solver.spectrum().iter().all(|z| ((z - center).norm() - radius).abs() > 0.02 * radius) {
                break (center, radius);
            }
        };
        let r = solver.multiplicity(center, radius, &cfg.identify_options().riesz)?;
        worst_im = worst_im.max(r.trace.im.abs());
        if r.multiplicity != solver.eigen_count(center, radius) {
            mismatches += 1;
        }
    }
    report.suites.push(
        Suite::new("riesz-count", mismatches == 0 && worst_im < 1e-6)
            .metric("trials", trials)
            .metric("mismatches", mismatches)
            .metric("max_imag_trace", worst_im),
    );
    Ok(())
}
