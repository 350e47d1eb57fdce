use latres::limits::fixed_box_ladder;
use latres::linalg::{hermitian_eigenvalues, CMatrix};
use latres::spectra::eigen_all;
use latres::{
    assemble_lattice, fit_rate, normalize_ladder, sweep_eigenvalues, AssemblyOptions, Complex64, DistortionSpec,
    EmbeddingFilter, GalerkinGrid, LatticeGrid, PotentialSpec, ResonanceRegion, RieszOptions, RieszSolver, Rung,
    SweepOptions,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), n)
}

fn catalog() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::gaussian(-2.0, 1),
        PotentialSpec::gaussian(1.5, 2),
        PotentialSpec::exponential(1.0),
        PotentialSpec::singular_quarter(-1.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transforms_are_inverse_and_unitary(h in 0.05..2.0f64, half in 4usize..40, u in vector(80)) {
        let grid = LatticeGrid::new(h, 2 * half, 1).unwrap();
        let u = &u[..grid.len()];
        let f = grid.forward_transform(u).unwrap();
        let back = grid.inverse_transform(&f).unwrap();
        let scale = grid.position_norm(u).max(1.0);
        prop_assert!((grid.momentum_norm(&f) - grid.position_norm(u)).abs() < 1e-12 * scale);
        for (a, b) in back.iter().zip(u) {
            prop_assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn momentum_grid_is_closed_under_negation(h in 0.05..2.0f64, half in 4usize..8, dim in 1usize..3) {
        let grid = LatticeGrid::new(h, 2 * half, dim).unwrap();
        let period = grid.period();
        for k in 0..grid.len() {
            let xi = grid.momentum(k);
            let neg: Vec<f64> = xi[..dim].iter().map(|x| -x).collect();
            let hit = (0..grid.len()).any(|j| grid.torus_distance(&grid.momentum(j)[..dim], &neg) < 1e-12 * period);
            prop_assert!(hit);
        }
    }

    #[test]
    fn embedding_is_isometric(h in 0.1..1.5f64, u in vector(64)) {
        let lattice = LatticeGrid::new(h, 64, 1).unwrap();
        let galerkin = GalerkinGrid::covering(&lattice).unwrap();
        let filter = EmbeddingFilter::default();
        let g = filter.embed(&lattice, &galerkin, &u).unwrap();
        let norm = lattice.momentum_norm(&u);
        prop_assert!((galerkin.norm(&g) - norm).abs() < 1e-10 * norm.max(1.0));
        let back = filter.embed_adjoint(&lattice, &galerkin, &g).unwrap();
        let diff: Vec<Complex64> = back.iter().zip(&u).map(|(a, b)| a - b).collect();
        prop_assert!(lattice.momentum_norm(&diff) < 1e-10 * norm.max(1.0));
    }

    #[test]
    fn potential_transform_is_hermitian_on_the_real_axis(xi in -20.0..20.0f64, eta in -20.0..20.0f64) {
        for pot in catalog() {
            let p: Vec<f64> = [xi, eta][..pot.dim].to_vec();
            let m: Vec<f64> = p.iter().map(|x| -x).collect();
            let (a, b) = (pot.v_hat_real(&p).unwrap(), pot.v_hat_real(&m).unwrap());
            prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0), "{}: {a} vs {b}", pot.label);
        }
    }

    #[test]
    fn shrinking_theta_keeps_admissibility(re in -0.6..0.6f64, im in -0.6..0.0f64, s in 0.0..1.0f64, e0 in 1.0..20.0f64) {
        for pot in catalog() {
            // constructions violating |θ|·Lip(v) < 1 are rejected outright
            let Ok(d) = DistortionSpec::cutoff_dilation(c(re, im), e0, pot.dim) else { continue };
            if d.is_continuum_admissible(&pot.class) {
                let smaller = d.with_theta(c(re, im) * s).unwrap();
                prop_assert!(smaller.is_continuum_admissible(&pot.class));
            }
        }
    }

    #[test]
    fn distortion_is_analytic_in_theta(
        re in -0.15..0.15f64, im in -0.15..0.15f64, x in -6.0..6.0f64, y in -6.0..6.0f64, dim in 1usize..3,
    ) {
        let s = 1e-5;
        let theta = c(re, im);
        let d = DistortionSpec::cutoff_dilation(theta, 4.0, dim).unwrap();
        let xi = &[x, y][..dim];
        let plus = d.with_theta(theta + s).unwrap();
        let minus = d.with_theta(theta - s).unwrap();
        let v = d.field_at(xi);
        for j in 0..dim {
            let fd = (plus.phi(xi)[j] - minus.phi(xi)[j]) / (2.0 * s);
            prop_assert!((fd - v[j]).norm() <= 1e-6 * v[j].abs().max(1.0));
        }

        // Dv by central differences in ξ
        let step = 1e-6;
        let mut dv = [[0.0f64; 2]; 2];
        for k in 0..dim {
            let mut a = xi.to_vec();
            let mut b = xi.to_vec();
            a[k] += step;
            b[k] -= step;
            let (fa, fb) = (d.field_at(&a), d.field_at(&b));
            for j in 0..dim {
                dv[j][k] = (fa[j] - fb[j]) / (2.0 * step);
            }
        }
        let jac = d.jacobian(xi);
        let analytic = if dim == 1 {
            dv[0][0] / (1.0 + theta * dv[0][0]) * jac
        } else {
            let m = [
                [1.0 + theta * dv[0][0], theta * dv[0][1]],
                [theta * dv[1][0], 1.0 + theta * dv[1][1]],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let trace = (m[1][1] * dv[0][0] - m[0][1] * dv[1][0] - m[1][0] * dv[0][1] + m[0][0] * dv[1][1]) / det;
            trace * jac
        };
        let fd = (plus.jacobian(xi) - minus.jacobian(xi)) / (2.0 * s);
        prop_assert!((fd - analytic).norm() <= 1e-6 * analytic.norm().max(1.0), "{fd} vs {analytic}");
    }

    #[test]
    fn region_membership_matches_its_definition(re in -10.0..10.0f64, im in -10.0..10.0f64, d0 in 0.05..2.0f64, c0 in 0.05..1.0f64) {
        let z = c(re, im);
        let region = ResonanceRegion::new(d0, c0);
        let arg = z.arg();
        let expected = im > -2.0 * d0 * re.abs().sqrt() && arg > -2.0 * c0.atan() && arg < std::f64::consts::FRAC_PI_2;
        let margin = region.margin(z);
        if margin.abs() > 1e-12 {
            prop_assert_eq!(region.contains(z), expected);
        }
    }

    #[test]
    fn rate_fit_recovers_power_laws(scale in 0.01..100.0f64, p in 0.5..4.0f64, h0 in 0.1..1.0f64, rungs in 3usize..7) {
        let hs: Vec<f64> = (0..rungs).map(|k| h0 / 2f64.powi(k as i32)).collect();
        let errs: Vec<f64> = hs.iter().map(|h| scale * h.powf(p)).collect();
        let fit = fit_rate(&hs, &errs, 0.0).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!(fit.max_residual < 1e-9);
        prop_assert_eq!(fit.points, rungs);
    }

    #[test]
    fn ladder_normalization_ignores_input_order(hs in prop::collection::btree_set(1u32..400, 2..7), seed in any::<u64>()) {
        let ladder: Vec<Rung> = hs.iter().map(|&k| Rung { h: k as f64 / 100.0, n: 64 }).collect();
        let mut shuffled = ladder.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = normalize_ladder(&ladder, 2).unwrap();
        let b = normalize_ladder(&shuffled, 2).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.windows(2).all(|w| w[1].h < w[0].h));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn conjugate_theta_gives_the_adjoint(re in -0.1..0.1f64, im in -0.15..0.15f64, strength in -4.0..4.0f64, which in 0usize..2) {
        let pot = if which == 0 { PotentialSpec::gaussian(strength, 1) } else { PotentialSpec::exponential(strength) };
        let d = DistortionSpec::cutoff_dilation(c(re, im), 4.0, 1).unwrap();
        prop_assume!(d.is_continuum_admissible(&pot.class));
        let grid = LatticeGrid::new(0.25, 48, 1).unwrap();
        let opts = AssemblyOptions::default();
        let a = assemble_lattice(&pot, None, &d, &grid, &opts);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        let b = assemble_lattice(&pot, None, &d.with_theta(c(re, -im)).unwrap(), &grid, &opts).unwrap();
        let adj = a.entries.t().mapv(|z| z.conj());
        let worst = adj.iter().zip(b.entries.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-10, "{worst:e}");
    }

    #[test]
    fn undistorted_operator_is_hermitian_with_real_spectrum(strength in -5.0..5.0f64, h in 0.2..0.6f64) {
        let pot = PotentialSpec::gaussian(strength, 1);
        let grid = LatticeGrid::new(h, 40, 1).unwrap();
        let op = assemble_lattice(&pot, None, &DistortionSpec::none(1), &grid, &AssemblyOptions::default()).unwrap();
        prop_assert!(op.hermitian_defect() < 1e-12);
        let spectrum = eigen_all(&op.entries).unwrap();
        let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(spectrum.iter().all(|z| z.im.abs() < 1e-8 * scale));
    }

    #[test]
    fn riesz_trace_counts_enclosed_eigenvalues(entries in vector(400), seed in any::<u64>()) {
        let a: CMatrix = Array2::from_shape_vec((20, 20), entries).unwrap();
        let solver = RieszSolver::new(&a).unwrap();
        let opts = RieszOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        while checked < 20 {
            let center = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let radius = rng.random_range(0.2..3.2);
            let gap = solver.spectrum().iter().map(|z| ((z - center).norm() - radius).abs()).fold(f64::INFINITY, f64::min);
            if gap < 0.02 * radius {
                continue;
            }
            let r = solver.multiplicity(center, radius, &opts).unwrap();
            prop_assert_eq!(r.multiplicity, solver.eigen_count(center, radius));
            checked += 1;
        }
    }
}

#[test]
fn permuted_ladders_give_identical_sweeps() {
    let pot = PotentialSpec::gaussian(-3.0, 1);
    let ladder = fixed_box_ladder(&[0.4, 0.2, 0.1], 12.8).unwrap();
    let permuted = vec![ladder[1], ladder[2], ladder[0]];
    let opts = SweepOptions::default();
    let a = sweep_eigenvalues(&pot, None, &ladder, &[], &opts).unwrap();
    let b = sweep_eigenvalues(&pot, None, &permuted, &[], &opts).unwrap();
    assert_eq!(a, b);
    assert!(!a.tracks.is_empty());
}

#[test]
fn lattice_spectrum_at_zero_theta_is_real_and_sorted_consistently() {
    let pot = PotentialSpec::exponential(-2.0);
    let grid = LatticeGrid::new(0.25, 128, 1).unwrap();
    let op = assemble_lattice(&pot, None, &DistortionSpec::none(1), &grid, &AssemblyOptions::default()).unwrap();
    let herm = hermitian_eigenvalues(&op.entries).unwrap();
    let mut general: Vec<f64> = eigen_all(&op.entries).unwrap().iter().map(|z| z.re).collect();
    general.sort_by(f64::total_cmp);
    let worst = herm.iter().zip(&general).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}
