//! Lattice discretizations of Schrödinger operators under analytic momentum
//! distortions, with resonance identification, continuum-limit sweeps and
//! independent reference solvers.
//!
//! The usual path: build a [`PotentialSpec`] and a [`DistortionSpec`],
//! assemble the operator on a [`LatticeGrid`] with [`assemble_lattice`],
//! then extract resonances with [`identify_resonances`] or run a ladder of
//! spacings through [`sweep_resonances`].

pub mod assembly;
pub mod distortion;
pub mod error;
pub mod grid;
pub mod limits;
pub mod linalg;
pub mod oracle;
pub mod potentials;
pub mod quadrature;
pub mod special;
pub mod spectra;

pub use num_complex::Complex64;

pub use assembly::{
    assemble_continuum, assemble_continuum_potential, assemble_lattice, assemble_lattice_potential,
    AssemblyOptions, EmbeddingFilter, GridKind, OperatorMatrix, Provenance,
};
pub use distortion::{DistortionSpec, EssentialCurve, FieldKind, ResonanceRegion};
pub use error::{Error, Result};
pub use grid::{GalerkinGrid, LatticeGrid, MomentumGrid};
pub use limits::{
    check_reference_consistency, continuum_reference, fit_rate, fixed_box_ladder, measure_kinetic_rate, normalize_ladder,
    measure_potential_commutator, sweep_eigenvalues, sweep_resonances, uniform_bound_check, ConvergenceReport,
    NormReport, RateFit, Reference, Rung, RungSummary, SweepOptions, Track, TrackPoint, UniformBoundTable,
};
pub use linalg::CMatrix;
pub use oracle::{
    bound_states_1d, resonances_1d_complex_scaling, BoundStateOptions, ComplexScalingOptions, OracleCache,
    OracleResult, Sampling,
};
pub use potentials::{ClassParams, MollifierKind, MollifierSpec, PoissonOptions, PotentialKind, PotentialSpec};
pub use spectra::{
    identify_resonances, riesz_multiplicity, IdentifyOptions, Resonance, ResonanceSet, RieszOptions, RieszSolver,
};
