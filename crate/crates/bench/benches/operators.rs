use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latres::spectra::eigen_all;
use latres::{
    assemble_lattice, identify_resonances, AssemblyOptions, Complex64, DistortionSpec, IdentifyOptions, LatticeGrid,
    PotentialSpec, ResonanceRegion, RieszOptions, RieszSolver,
};
use latres_bench::barrier_operator;

fn assembly(c: &mut Criterion) {
    let pot = PotentialSpec::gaussian(8.0, 1);
    let dist = DistortionSpec::cutoff_dilation(Complex64::new(0.0, -0.25), 16.0, 1).unwrap();
    let opts = AssemblyOptions::default();
    let mut group = c.benchmark_group("assemble_lattice");
    for n in [128usize, 256, 512] {
        let grid = LatticeGrid::new(0.1, n, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| assemble_lattice(&pot, None, &dist, grid, &opts).unwrap())
        });
    }
    group.finish();
}

fn eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen_all");
    group.sample_size(10);
    for n in [128usize, 256] {
        let op = barrier_operator(0.1, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &op, |b, op| b.iter(|| eigen_all(&op.entries).unwrap()));
    }
    group.finish();
}

fn riesz(c: &mut Criterion) {
    let op = barrier_operator(0.1, 256);
    let solver = RieszSolver::new(&op.entries).unwrap();
    let z = solver.spectrum().iter().copied().filter(|z| z.im < -1e-6).min_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
    let opts = RieszOptions::default();
    c.bench_function("riesz_multiplicity/256", |b| b.iter(|| solver.multiplicity(z, 0.05, &opts).unwrap()));

    let region = ResonanceRegion::from_class(&PotentialSpec::gaussian(8.0, 1).class);
    let mut group = c.benchmark_group("identify_resonances");
    group.sample_size(10);
    group.bench_function("256", |b| b.iter(|| identify_resonances(&op, &region, &IdentifyOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, eigensolve, riesz);
criterion_main!(benches);
