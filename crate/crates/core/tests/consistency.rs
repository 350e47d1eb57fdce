use latres::limits::{check_reference_consistency, continuum_reference, with_n_doubling};
use latres::{
    resonances_1d_complex_scaling, AssemblyOptions, Complex64, ComplexScalingOptions, DistortionSpec, Error,
    PotentialSpec, Reference, ResonanceRegion, Rung, SweepOptions,
};

fn barrier() -> PotentialSpec {
    PotentialSpec::gaussian(8.0, 1)
}

fn lowest(values: &[Complex64]) -> Complex64 {
    values.iter().copied().filter(|z| z.im < 0.0).min_by(|a, b| a.re.total_cmp(&b.re)).expect("a resonance")
}

#[test]
fn oracle_is_independent_of_angle_and_box() {
    let opts = ComplexScalingOptions::default();
    let runs: Vec<_> = [(0.2, 30.0, 4999), (0.3, 30.0, 4999), (0.25, 24.0, 3999)]
        .into_iter()
        .map(|(alpha, half, m)| resonances_1d_complex_scaling(&barrier(), alpha, half, m, &opts).unwrap())
        .collect();
    let z0 = lowest(&runs[0].values);
    let (_, t0) = runs[0].nearest(z0).unwrap();
    for r in &runs[1..] {
        let (z, t) = r.nearest(z0).unwrap();
        assert!((z - z0).norm() <= t + t0, "{z} vs {z0}: gap {:e}, tolerance {:e}", (z - z0).norm(), t + t0);
    }
}

#[test]
fn oracle_and_galerkin_agree_on_the_barrier() {
    let oracle = resonances_1d_complex_scaling(&barrier(), 0.25, 30.0, 4999, &ComplexScalingOptions::default()).unwrap();
    let (z, tol) = oracle.nearest(lowest(&oracle.values)).unwrap();
    let a = Reference { z, tolerance: tol, provenance: oracle.method.clone() };
    let dist = DistortionSpec::cutoff_dilation(Complex64::new(0.0, -0.25), 16.0, 1).unwrap();
    let b = continuum_reference(&barrier(), &dist, 16.0, 0.05, z, &AssemblyOptions::default()).unwrap();
    check_reference_consistency(&a, &b).unwrap();

    let shifted = Reference { z: a.z + 10.0 * (a.tolerance + b.tolerance), ..a };
    assert!(matches!(check_reference_consistency(&shifted, &b), Err(Error::ReferenceInconsistency(_))));
}

#[test]
fn resonances_are_stable_under_box_doubling() {
    let pot = barrier();
    let dist = DistortionSpec::cutoff_dilation(Complex64::new(0.0, -0.25), 16.0, 1).unwrap();
    let region = ResonanceRegion::from_class(&pot.class);
    let opts = SweepOptions::default();
    let set = with_n_doubling(&pot, None, &dist, Rung { h: 0.2, n: 512 }, &region, &opts).unwrap();
    let z = lowest(&set.items.iter().map(|r| r.z).collect::<Vec<_>>());
    let item = set.items.iter().find(|r| r.z == z).unwrap();
    let tol_n = 10.0 * opts.identify.cluster_rel * z.norm().max(1.0);
    let shift = item.n_doubling_deviation.unwrap();
    assert!(shift <= tol_n, "shift {shift:e} exceeds {tol_n:e}");
}
