//! Fixtures shared by the benchmarks.

use latres::{
    assemble_lattice, AssemblyOptions, Complex64, DistortionSpec, LatticeGrid, OperatorMatrix, PotentialSpec,
};

/// The Gaussian barrier under a cutoff dilation, on a lattice with `n` sites
/// of spacing `h`.
pub fn barrier_operator(h: f64, n: usize) -> OperatorMatrix {
    let pot = PotentialSpec::gaussian(8.0, 1);
    let dist = DistortionSpec::cutoff_dilation(Complex64::new(0.0, -0.25), 16.0, 1).expect("admissible angle");
    let grid = LatticeGrid::new(h, n, 1).expect("valid grid");
    assemble_lattice(&pot, None, &dist, &grid, &AssemblyOptions::default()).expect("assembly")
}
