//! Run configuration. Parsing is strict: unknown keys are rejected and every
//! knob has a default, so the resolved configuration can be echoed in full.

use std::path::Path;

use latres::{
    AssemblyOptions, Complex64, DistortionSpec, IdentifyOptions, MollifierSpec, PoissonOptions, PotentialSpec,
    ResonanceRegion, RieszOptions, Rung, SweepOptions,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ComputeResonances,
    SweepResonances,
    SweepEigenvalues,
    Rates,
    Validate,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub label: String,
    pub strength: f64,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default)]
    pub screening: Option<f64>,
}

fn one() -> usize {
    1
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { label: "gaussian".into(), strength: 8.0, dim: 1, screening: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldLabel {
    None,
    CutoffDilation,
    Sine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionConfig {
    pub field: FieldLabel,
    /// `[re, im]`
    pub theta: [f64; 2],
    pub e0: f64,
    /// Length scale of the sine field.
    pub scale: f64,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self { field: FieldLabel::CutoffDilation, theta: [0.0, -0.25], e0: 16.0, scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderConfig {
    pub h: Vec<f64>,
    pub box_length: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self { h: vec![0.4, 0.2, 0.1], box_length: 25.6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub delta0: f64,
    pub c0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub tolerance: f64,
    #[serde(default = "user_provenance")]
    pub provenance: String,
}

fn user_provenance() -> String {
    "config".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    /// Only the references listed in the configuration.
    Config,
    /// The one-dimensional oracle.
    Oracle,
    /// The oracle, cross-checked against the continuum Galerkin operator.
    OracleGalerkin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    ComplexScaling,
    BoundStates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub kind: OracleKind,
    pub alpha: f64,
    pub half_width: f64,
    pub points: usize,
    pub box_factor: f64,
    pub refinements: usize,
    pub energy_max: f64,
    pub max_energy: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kind: OracleKind::ComplexScaling,
            alpha: 0.25,
            half_width: 30.0,
            points: 4999,
            box_factor: 2.0,
            refinements: 2,
            energy_max: 0.0,
            max_energy: 60.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ess_factor: f64,
    pub tol_theta: f64,
    pub cluster_rel: f64,
    pub boundary_margin: f64,
    pub count_multiplicity: bool,
    pub riesz_initial_nodes: usize,
    pub riesz_max_nodes: usize,
    pub riesz_integrality: f64,
    pub riesz_clearance: f64,
    pub poisson_rel_tol: f64,
    pub poisson_max_shells: usize,
    pub gamma_factor: f64,
    pub disk_radius: Option<f64>,
    /// `θ` of the finest-rung stability re-solve, `[re, im]`.
    pub stability_probe: Option<[f64; 2]>,
    pub residual_floor: f64,
    /// Spectral parameter of the kinetic-rate measurement, `[re, im]`.
    pub z0: [f64; 2],
    pub bound_ts: Vec<f64>,
    /// Allowed distance of a fitted slope below its predicted value.
    pub rate_band: f64,
    pub commutator_with_resolvent: bool,
    pub galerkin_cutoff: f64,
    pub galerkin_step: f64,
    /// Random trials per randomized validation suite.
    pub validate_trials: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let identify = IdentifyOptions::default();
        let riesz = RieszOptions::default();
        let poisson = PoissonOptions::default();
        let sweep = SweepOptions::default();
        Self {
            ess_factor: identify.ess_factor,
            tol_theta: identify.tol_theta,
            cluster_rel: identify.cluster_rel,
            boundary_margin: identify.boundary_margin,
            count_multiplicity: identify.count_multiplicity,
            riesz_initial_nodes: riesz.initial_nodes,
            riesz_max_nodes: riesz.max_nodes,
            riesz_integrality: riesz.integrality_tol,
            riesz_clearance: riesz.clearance,
            poisson_rel_tol: poisson.rel_tol,
            poisson_max_shells: poisson.max_shells,
            gamma_factor: sweep.gamma_factor,
            disk_radius: sweep.disk_radius,
            stability_probe: None,
            residual_floor: sweep.residual_floor,
            z0: [-10.0, 0.0],
            bound_ts: vec![10.0, 100.0, 1000.0],
            rate_band: 0.3,
            commutator_with_resolvent: false,
            galerkin_cutoff: 16.0,
            galerkin_step: 0.05,
            validate_trials: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub json: String,
    pub csv: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { json: "report.json".into(), csv: "tracks.csv".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub mollifier: Option<String>,
    #[serde(default)]
    pub distortion: DistortionConfig,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub references: Vec<ReferenceConfig>,
    #[serde(default = "default_source")]
    pub reference_source: ReferenceSource,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_source() -> ReferenceSource {
    ReferenceSource::Config
}

fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn potential(&self) -> Result<PotentialSpec, CliError> {
        let p = &self.potential;
        Ok(PotentialSpec::from_label(&p.label, p.strength, p.dim, p.screening)?)
    }

    pub fn mollifier(&self) -> Result<Option<MollifierSpec>, CliError> {
        self.mollifier.as_deref().map(|m| MollifierSpec::from_label(m, self.potential.dim)).transpose().map_err(Into::into)
    }

    pub fn distortion(&self) -> Result<DistortionSpec, CliError> {
        let d = &self.distortion;
        let dim = self.potential.dim;
        Ok(match d.field {
            FieldLabel::None => DistortionSpec::none(dim),
            FieldLabel::CutoffDilation => DistortionSpec::cutoff_dilation(c(d.theta), d.e0, dim)?,
            FieldLabel::Sine => DistortionSpec::sine(c(d.theta), d.scale, dim)?,
        })
    }

    pub fn ladder(&self) -> Result<Vec<Rung>, CliError> {
        Ok(latres::fixed_box_ladder(&self.ladder.h, self.ladder.box_length)?)
    }

    pub fn region(&self, pot: &PotentialSpec) -> ResonanceRegion {
        match self.region {
            Some(r) => ResonanceRegion::new(r.delta0, r.c0),
            None => ResonanceRegion::from_class(&pot.class),
        }
    }

    pub fn assembly_options(&self) -> AssemblyOptions {
        let t = &self.tolerances;
        AssemblyOptions {
            poisson: PoissonOptions { rel_tol: t.poisson_rel_tol, max_shells: t.poisson_max_shells },
            ..AssemblyOptions::default()
        }
    }

    pub fn identify_options(&self) -> IdentifyOptions {
        let t = &self.tolerances;
        IdentifyOptions {
            ess_factor: t.ess_factor,
            stability_probe: None,
            tol_theta: t.tol_theta,
            cluster_rel: t.cluster_rel,
            boundary_margin: t.boundary_margin,
            count_multiplicity: t.count_multiplicity,
            riesz: RieszOptions {
                initial_nodes: t.riesz_initial_nodes,
                max_nodes: t.riesz_max_nodes,
                integrality_tol: t.riesz_integrality,
                clearance: t.riesz_clearance,
            },
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let t = &self.tolerances;
        SweepOptions {
            identify: self.identify_options(),
            assembly: self.assembly_options(),
            gamma_factor: t.gamma_factor,
            disk_radius: t.disk_radius,
            stability_probe: t.stability_probe.map(c),
            residual_floor: t.residual_floor,
        }
    }

    pub fn z0(&self) -> Complex64 {
        c(self.tolerances.z0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"scenario": "validate"}"#).unwrap();
        assert_eq!(cfg.scenario, Scenario::Validate);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.output.json, "report.json");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"scenario": "validate", "colour": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "validate", "tolerances": {"ess": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "explode"}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::from_json(r#"{"scenario": "rates", "ladder": {"h": [0.2, 0.1, 0.05]}}"#).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}
