//! Potential catalog with closed-form or tabulated Fourier transforms,
//! mollifiers, lattice restriction, and the torus-side Fourier data of a
//! lattice potential by Poisson summation.
//!
//! Fourier convention: `V̂(ξ) = (2π)^{-d/2} ∫ V(x) e^{-ix·ξ} dx`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::grid::{LatticeGrid, Point, MAX_DIM};
use crate::quadrature::{gauss_legendre, integrate, integrate_complex};
use crate::special::{hurwitz_zeta, smooth_step_base};

/// Analytic-continuation metadata of a potential class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    /// Radius beyond which the dilation-analytic part extends into the cone.
    pub r0: f64,
    /// Cone aperture, in `(0, 1]`.
    pub c0: f64,
    /// Decay exponent of the dilation-analytic part.
    pub mu: f64,
    /// Half-width of the strip of analyticity of `V̂` (may be infinite).
    pub delta0: f64,
    /// Integrability exponent: `V̂ ∈ L¹ + L^p`.
    pub p: f64,
    /// Momentum decay exponent, `|V̂(ξ)| ≲ |ξ|^{-σ}` (infinite for rapid decay).
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitTag {
    /// All of `V` sits in the exponentially decaying part `V₂`.
    ExponentiallyDecaying,
    /// `V` has an exterior dilation-analytic part `V₁`.
    DilationAnalytic,
    /// No usable momentum-space description.
    PositionOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    /// `c e^{-|x|²/2}`, any dimension.
    Gaussian { strength: f64 },
    /// `c e^{-|x|}` in one dimension.
    Exponential { strength: f64 },
    /// `c |x|^{-1/4} e^{-x²}` in one dimension.
    SingularQuarter { strength: f64 },
    /// `c e^{-δ|x|}/|x|` in three dimensions.
    Yukawa { strength: f64, screening: f64 },
    /// `c |x|²`; position space only.
    Harmonic { strength: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub label: String,
    pub kind: PotentialKind,
    pub dim: usize,
    pub center: Point,
    pub class: ClassParams,
    pub split: SplitTag,
}

fn exp_prefactor() -> f64 {
    (2.0 / PI).sqrt()
}

impl PotentialSpec {
    fn build(label: String, kind: PotentialKind, dim: usize, class: ClassParams, split: SplitTag) -> Self {
        Self { label, kind, dim, center: [0.0; MAX_DIM], class, split }
    }

    pub fn zero(dim: usize) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: dim as f64, delta0: f64::INFINITY, p: 1.0, sigma: f64::INFINITY };
        Self::build("zero".into(), PotentialKind::Zero, dim, class, SplitTag::ExponentiallyDecaying)
    }

    pub fn gaussian(strength: f64, dim: usize) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: dim as f64, delta0: f64::INFINITY, p: 1.0, sigma: f64::INFINITY };
        Self::build(
            format!("gaussian(c={strength},d={dim})"),
            PotentialKind::Gaussian { strength },
            dim,
            class,
            SplitTag::ExponentiallyDecaying,
        )
    }

    pub fn exponential(strength: f64) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: 1.0, delta0: 1.0, p: 1.0, sigma: 2.0 };
        Self::build(
            format!("exponential(c={strength})"),
            PotentialKind::Exponential { strength },
            1,
            class,
            SplitTag::ExponentiallyDecaying,
        )
    }

    /// The tabulated transform is known on the real axis only, so the strip
    /// of analyticity is declared empty and only real `θ` is admissible.
    pub fn singular_quarter(strength: f64) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: 1.0, delta0: 0.0, p: 2.0, sigma: 0.75 };
        Self::build(
            format!("singular-quarter(c={strength})"),
            PotentialKind::SingularQuarter { strength },
            1,
            class,
            SplitTag::ExponentiallyDecaying,
        )
    }

    pub fn yukawa(strength: f64, screening: f64) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: 3.0, delta0: screening, p: 2.0, sigma: 2.0 };
        Self::build(
            format!("yukawa(c={strength},delta={screening})"),
            PotentialKind::Yukawa { strength, screening },
            3,
            class,
            SplitTag::ExponentiallyDecaying,
        )
    }

    pub fn harmonic(strength: f64) -> Self {
        let class = ClassParams { r0: 0.0, c0: 1.0, mu: 0.0, delta0: 0.0, p: 1.0, sigma: 0.0 };
        Self::build(
            format!("harmonic(c={strength})"),
            PotentialKind::Harmonic { strength },
            1,
            class,
            SplitTag::PositionOnly,
        )
    }

    /// Look up a catalog entry by label.
    pub fn from_label(label: &str, strength: f64, dim: usize, screening: Option<f64>) -> Result<Self> {
        let spec = match label {
            "zero" => Self::zero(dim),
            "gaussian" => Self::gaussian(strength, dim),
            "exponential" => Self::exponential(strength),
            "singular-quarter" => Self::singular_quarter(strength),
            "yukawa" => Self::yukawa(strength, screening.unwrap_or(1.0)),
            "harmonic" => Self::harmonic(strength),
            other => return Err(Error::InvalidArgument(format!("unknown potential `{other}`"))),
        };
        if spec.dim != dim {
            return Err(Error::InvalidArgument(format!(
                "potential `{label}` is only available in dimension {}",
                spec.dim
            )));
        }
        Ok(spec)
    }

    /// `V(x − a)`; the transform picks up `e^{-ia·ξ}`.
    pub fn shifted(mut self, center: &[f64]) -> Self {
        self.center[..self.dim].copy_from_slice(&center[..self.dim]);
        self.label = format!("{}@{:?}", self.label, &self.center[..self.dim]);
        self
    }

    pub fn is_centered(&self) -> bool {
        self.center.iter().all(|&c| c == 0.0)
    }

    pub fn has_position_form(&self) -> bool {
        !matches!(self.kind, PotentialKind::SingularQuarter { .. })
    }

    pub fn has_momentum_form(&self) -> bool {
        !matches!(self.kind, PotentialKind::Harmonic { .. })
    }

    /// Whether `ζ` lies in the declared region of analyticity of `V̂`.
    pub fn check_strip(&self, zeta: &[Complex64]) -> Result<()> {
        let im = zeta[..self.dim].iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        if im == 0.0 {
            return Ok(());
        }
        if im >= self.class.delta0 {
            return Err(Error::OutsideStrip(format!(
                "|Im ζ| = {im:.4} ≥ δ0 = {} for `{}`",
                self.class.delta0, self.label
            )));
        }
        if self.split == SplitTag::DilationAnalytic {
            let re = zeta[..self.dim].iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
            if im >= self.class.c0 * re {
                return Err(Error::OutsideStrip(format!("|Im ζ| = {im:.4} outside the cone")));
            }
        }
        Ok(())
    }

    /// Analytic continuation of `V̂` to `ζ ∈ C^d`.
    pub fn v_hat(&self, zeta: &[Complex64]) -> Result<Complex64> {
        self.check_strip(zeta)?;
        self.v_hat_unchecked(zeta)
    }

    fn v_hat_unchecked(&self, zeta: &[Complex64]) -> Result<Complex64> {
        let d = self.dim;
        let sq: Complex64 = zeta[..d].iter().map(|z| z * z).sum();
        let base = match self.kind {
            PotentialKind::Zero => Complex64::new(0.0, 0.0),
            PotentialKind::Gaussian { strength } => (-sq * 0.5).exp() * strength,
            PotentialKind::Exponential { strength } => strength * exp_prefactor() / (1.0 + sq),
            PotentialKind::Yukawa { strength, screening } => {
                strength * exp_prefactor() / (sq + screening * screening)
            }
            PotentialKind::SingularQuarter { strength } => {
                if zeta[0].im != 0.0 {
                    return Err(Error::OutsideStrip(
                        "tabulated transform is available on the real axis only".into(),
                    ));
                }
                Complex64::new(strength * singular_quarter_transform(zeta[0].re), 0.0)
            }
            PotentialKind::Harmonic { .. } => return Err(Error::MissingMomentumForm(self.label.clone())),
        };
        if self.is_centered() {
            return Ok(base);
        }
        let phase: Complex64 = (0..d).map(|a| zeta[a] * self.center[a]).sum();
        Ok(base * (-Complex64::i() * phase).exp())
    }

    pub fn v_hat_real(&self, xi: &[f64]) -> Result<Complex64> {
        let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
        for a in 0..self.dim {
            z[a] = Complex64::new(xi[a], 0.0);
        }
        self.v_hat_unchecked(&z[..self.dim])
    }

    /// Pointwise value `V(x)`; `None` for singular entries.
    pub fn v_x(&self, x: &[f64]) -> Option<f64> {
        let d = self.dim;
        let r2: f64 = (0..d).map(|a| (x[a] - self.center[a]).powi(2)).sum();
        let r = r2.sqrt();
        match self.kind {
            PotentialKind::Zero => Some(0.0),
            PotentialKind::Gaussian { strength } => Some(strength * (-0.5 * r2).exp()),
            PotentialKind::Exponential { strength } => Some(strength * (-r).exp()),
            PotentialKind::Yukawa { strength, screening } => {
                (r > 0.0).then(|| strength * (-screening * r).exp() / r)
            }
            PotentialKind::Harmonic { strength } => Some(strength * r2),
            PotentialKind::SingularQuarter { .. } => None,
        }
    }

    /// `V(z)` at complex position, for potentials analytic on rotated rays.
    pub fn v_x_complex(&self, z: Complex64) -> Result<Complex64> {
        if self.dim != 1 {
            return Err(Error::InvalidArgument("complex positions are one-dimensional".into()));
        }
        let w = z - self.center[0];
        match self.kind {
            PotentialKind::Zero => Ok(Complex64::new(0.0, 0.0)),
            PotentialKind::Gaussian { strength } => Ok((-w * w * 0.5).exp() * strength),
            PotentialKind::Harmonic { strength } => Ok(w * w * strength),
            _ => Err(Error::Inadmissible(format!("`{}` is not dilation analytic", self.label))),
        }
    }

    /// Average of `V` over the cell `[a, b]` (one dimension).
    pub fn cell_average(&self, a: f64, b: f64) -> Result<f64> {
        if self.dim != 1 || b <= a {
            return Err(Error::InvalidArgument("cell averages need d = 1 and a < b".into()));
        }
        let (a, b) = (a - self.center[0], b - self.center[0]);
        match self.kind {
            PotentialKind::SingularQuarter { strength } => {
                let part = |lo: f64, hi: f64| -> f64 {
                    // x = s⁴ removes the endpoint singularity
                    let (s0, s1) = (lo.powf(0.25), hi.powf(0.25));
                    let (nodes, weights) = gauss_legendre(16);
                    nodes
                        .iter()
                        .zip(&weights)
                        .map(|(t, w)| {
                            let s = 0.5 * (t + 1.0) * (s1 - s0) + s0;
                            0.5 * (s1 - s0) * w * 4.0 * s * s * (-s.powi(8)).exp()
                        })
                        .sum()
                };
                let total = if a < 0.0 && b > 0.0 {
                    part(0.0, -a) + part(0.0, b)
                } else if a >= 0.0 {
                    part(a, b)
                } else {
                    part(-b, -a)
                };
                Ok(strength * total / (b - a))
            }
            _ => {
                let f = |x: f64| self.v_x(&[x + self.center[0]]).unwrap_or(0.0);
                let (nodes, weights) = gauss_legendre(8);
                let s: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(t, w)| 0.5 * w * f(0.5 * (t + 1.0) * (b - a) + a))
                    .sum();
                Ok(s)
            }
        }
    }

    /// Coefficients `a_j` of `V̂(ξ) ~ Σ_j a_j ξ^{-2j}` for large real-part
    /// arguments, when the transform has an algebraic tail (d = 1 only).
    pub fn tail_expansion(&self) -> Option<Vec<f64>> {
        if self.dim != 1 || !self.is_centered() {
            return None;
        }
        match self.kind {
            PotentialKind::Exponential { strength } => Some(
                (1..=8)
                    .map(|j| strength * exp_prefactor() * if j % 2 == 1 { 1.0 } else { -1.0 })
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Closed-form or table-based majorant `Ψ` for `|V̂(w)|` over
    /// `|Re w| ≥ b r`, `|Im w| ≤ a r`.
    fn declared_majorant(&self, r: f64, a: f64, b: f64) -> f64 {
        let q = b * b - a * a;
        let shift = (self.center.iter().map(|c| c * c).sum::<f64>()).sqrt() * a * r;
        let base = match self.kind {
            PotentialKind::Zero | PotentialKind::Harmonic { .. } => 0.0,
            PotentialKind::Gaussian { strength } => strength.abs() * (-0.5 * q * r * r).exp(),
            PotentialKind::Exponential { strength } => strength.abs() * exp_prefactor() / (1.0 + q * r * r),
            PotentialKind::Yukawa { strength, screening } => {
                strength.abs() * exp_prefactor() / (screening * screening + q * r * r)
            }
            PotentialKind::SingularQuarter { strength } => {
                if a > 0.0 {
                    f64::INFINITY
                } else {
                    strength.abs() * singular_quarter_envelope(b * r)
                }
            }
        };
        base * shift.exp()
    }
}

// ---------------------------------------------------------------------------
// Singular transform table

const TABLE_HEADER: &str = "# latres transform table v1";
const SINGULAR_EXPONENT: f64 = 0.25;
const SINGULAR_TABLE_STEP: f64 = 0.005;
const SINGULAR_TABLE_MAX: f64 = 40.0;
const SINGULAR_TABLE_TOLERANCE: f64 = 1e-10;

/// Samples of `g(ξ) = ∫_0^∞ x^{-1/4} e^{-x²} cos(xξ) dx` on a uniform grid
/// `ξ = 0, step, 2·step, …`; interpolated with 4-point Lagrange stencils.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformTable {
    pub label: String,
    pub tolerance: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl TransformTable {
    pub fn generate_singular_quarter(step: f64, max: f64, tolerance: f64) -> Result<Self> {
        if !(step > 0.0 && max > step) {
            return Err(Error::InvalidArgument("table needs 0 < step < max".into()));
        }
        let count = (max / step).round() as usize + 1;
        let upper = 1.65f64;
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let xi = i as f64 * step;
            let r = integrate(
                |s| {
                    let s2 = s * s;
                    let s4 = s2 * s2;
                    4.0 * s2 * (-s4 * s4).exp() * (s4 * xi).cos()
                },
                0.0,
                upper,
                0.01 * tolerance,
                0.0,
                4000,
            )?;
            values.push(r.value);
        }
        Ok(Self { label: "singular-quarter".into(), tolerance, step, values })
    }

    pub fn max_argument(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn interpolate(&self, xi: f64) -> Option<f64> {
        let x = xi.abs();
        let n = self.values.len();
        if x > self.max_argument() || n < 4 {
            return None;
        }
        let pos = x / self.step;
        let i = (pos.floor() as usize).clamp(1, n - 3);
        let t = pos - i as f64;
        let (p0, p1, p2, p3) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        // Lagrange weights on nodes -1, 0, 1, 2
        Some(
            -p0 * t * (t - 1.0) * (t - 2.0) / 6.0 + p1 * (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
                - p2 * (t + 1.0) * t * (t - 2.0) / 2.0
                + p3 * (t + 1.0) * t * (t - 1.0) / 6.0,
        )
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TABLE_HEADER}")?;
        writeln!(w, "# label {}", self.label)?;
        writeln!(w, "# tolerance {:e}", self.tolerance)?;
        writeln!(w, "# step {:e}", self.step)?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e} {:.17e}", i as f64 * self.step, v)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        if first.trim() != TABLE_HEADER {
            return Err(Error::TableFormat(format!("unrecognized header `{first}`")));
        }
        let (mut label, mut tolerance, mut step) = (None, None, None);
        let mut values = Vec::new();
        let mut last_xi = f64::NEG_INFINITY;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some("label"), Some(v)) => label = Some(v.to_string()),
                    (Some("tolerance"), Some(v)) => tolerance = v.parse::<f64>().ok(),
                    (Some("step"), Some(v)) => step = v.parse::<f64>().ok(),
                    _ => {}
                }
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<f64>);
            let (Some(Ok(xi)), Some(Ok(v))) = (parts.next(), parts.next()) else {
                return Err(Error::TableFormat(format!("malformed row `{line}`")));
            };
            if xi <= last_xi {
                return Err(Error::TableFormat("ξ column is not increasing".into()));
            }
            let step_v = step.ok_or_else(|| Error::TableFormat("step missing before data".into()))?;
            if (xi - values.len() as f64 * step_v).abs() > 1e-9 * step_v.max(xi) {
                return Err(Error::TableFormat(format!("row at ξ = {xi} off the uniform grid")));
            }
            last_xi = xi;
            values.push(v);
        }
        Ok(Self {
            label: label.ok_or_else(|| Error::TableFormat("missing label".into()))?,
            tolerance: tolerance.ok_or_else(|| Error::TableFormat("missing tolerance".into()))?,
            step: step.ok_or_else(|| Error::TableFormat("missing step".into()))?,
            values,
        })
    }
}

pub fn singular_quarter_table() -> &'static TransformTable {
    static TABLE: OnceLock<TransformTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        TransformTable::generate_singular_quarter(
            SINGULAR_TABLE_STEP,
            SINGULAR_TABLE_MAX,
            SINGULAR_TABLE_TOLERANCE,
        )
        .expect("singular transform table generation")
    })
}

/// Large-`ξ` expansion of `∫_0^∞ x^{-a} e^{-x²} cos(xξ) dx`.
fn singular_quarter_asymptotic(xi: f64) -> f64 {
    let x = xi.abs();
    let a = SINGULAR_EXPONENT;
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for k in 0..6 {
        if k > 0 {
            factorial *= k as f64;
        }
        let nu = 2.0 * k as f64 + 1.0 - a;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / factorial * statrs::function::gamma::gamma(nu) * (0.5 * PI * nu).cos() * x.powf(-nu);
    }
    sum
}

fn singular_quarter_profile(xi: f64) -> f64 {
    singular_quarter_table()
        .interpolate(xi)
        .unwrap_or_else(|| singular_quarter_asymptotic(xi))
}

/// `V̂` of `|x|^{-1/4} e^{-x²}` at real `ξ`.
pub fn singular_quarter_transform(xi: f64) -> f64 {
    2.0 * (2.0 * PI).powf(-0.5) * singular_quarter_profile(xi)
}

/// `sup_{|s| ≥ r} |V̂(s)|` for the unit-strength singular entry.
fn singular_quarter_envelope(r: f64) -> f64 {
    static SUFFIX: OnceLock<Vec<f64>> = OnceLock::new();
    let table = singular_quarter_table();
    let suffix = SUFFIX.get_or_init(|| {
        let tail = singular_quarter_asymptotic(table.max_argument()).abs();
        let mut out = vec![0.0; table.values.len()];
        let mut running = tail;
        for (i, v) in table.values.iter().enumerate().rev() {
            running = running.max(v.abs());
            out[i] = running;
        }
        out
    });
    let r = r.abs();
    let scale = 2.0 * (2.0 * PI).powf(-0.5);
    if r >= table.max_argument() {
        // the leading term dominates and decreases beyond the table
        return scale * 1.001 * singular_quarter_asymptotic(r).abs().max(1e-300);
    }
    // interpolation can overshoot a sample slightly
    scale * suffix[(r / table.step).floor() as usize] * (1.0 + 1e-9) + 1e-12
}

// ---------------------------------------------------------------------------
// Mollifiers

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MollifierKind {
    /// `φ(x) = (2π)^{-d/2} e^{-|x|²/2}`, so `φ̂(s) = (2π)^{-d/2} e^{-|s|²/2}`.
    Gaussian,
    /// Compactly supported transform, `φ̂(s) = (2π)^{-1/2} e^{1 - 1/(1 - (s/R)²)}`
    /// per axis.
    Bump { radius: f64 },
    /// Constant transform, the formal limit `φ = δ`.
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub label: String,
    pub kind: MollifierKind,
    pub dim: usize,
}

impl MollifierSpec {
    /// Builds and validates a mollifier: `φ̂(0)(2π)^{d/2} = 1` and rapid decay.
    pub fn new(kind: MollifierKind, dim: usize) -> Result<Self> {
        let label = match kind {
            MollifierKind::Gaussian => "gaussian".to_string(),
            MollifierKind::Bump { radius } => format!("bump(R={radius})"),
            MollifierKind::Delta => "delta".to_string(),
        };
        let spec = Self { label, kind, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_label(label: &str, dim: usize) -> Result<Self> {
        match label {
            "gaussian" => Self::new(MollifierKind::Gaussian, dim),
            "bump" => Self::new(MollifierKind::Bump { radius: 4.0 }, dim),
            "delta" => Self::new(MollifierKind::Delta, dim),
            other => Err(Error::InvalidArgument(format!("unknown mollifier `{other}`"))),
        }
    }

    fn validate(&self) -> Result<()> {
        let zero = [Complex64::new(0.0, 0.0); MAX_DIM];
        let at0 = self.phi_hat_unchecked(&zero[..self.dim]).re * (2.0 * PI).powf(self.dim as f64 / 2.0);
        if (at0 - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidMollifier(format!("{}: φ̂(0)(2π)^(d/2) = {at0}", self.label)));
        }
        let mut previous = f64::INFINITY;
        for r in [10.0, 20.0, 40.0, 80.0] {
            let mut s = zero;
            s[0] = Complex64::new(r, 0.0);
            let weighted = self.phi_hat_unchecked(&s[..self.dim]).norm() * (1.0 + r).powi(6);
            if weighted > 1e-3 || weighted > previous {
                return Err(Error::InvalidMollifier(self.label.clone()));
            }
            previous = weighted;
        }
        Ok(())
    }

    fn phi_hat_unchecked(&self, s: &[Complex64]) -> Complex64 {
        let d = self.dim;
        match self.kind {
            MollifierKind::Gaussian => {
                let sq: Complex64 = s[..d].iter().map(|z| z * z).sum();
                (-sq * 0.5).exp() * (2.0 * PI).powf(-(d as f64) / 2.0)
            }
            MollifierKind::Bump { radius } => s[..d]
                .iter()
                .map(|z| {
                    let t = z.re / radius;
                    Complex64::new((2.0 * PI).powf(-0.5) * smooth_step_base(1.0 - t * t) * 1f64.exp(), 0.0)
                })
                .product(),
            MollifierKind::Delta => Complex64::new((2.0 * PI).powf(-(d as f64) / 2.0), 0.0),
        }
    }

    /// `φ̂(s)`; the compact bump is defined on real arguments only.
    pub fn phi_hat(&self, s: &[Complex64]) -> Result<Complex64> {
        if matches!(self.kind, MollifierKind::Bump { .. }) && s[..self.dim].iter().any(|z| z.im != 0.0) {
            return Err(Error::OutsideStrip("compactly supported φ̂ is not analytic".into()));
        }
        Ok(self.phi_hat_unchecked(s))
    }

    /// Half-width of the support of `φ̂` on the real axis, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kind {
            MollifierKind::Bump { radius } => Some(radius),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Restriction and Poisson sums

/// `V_h(hn) = V(hn)` at every site.
pub fn restrict_to_lattice(spec: &PotentialSpec, grid: &LatticeGrid) -> Result<Vec<f64>> {
    if spec.dim != grid.dim() {
        return Err(Error::InvalidArgument("potential and grid dimensions differ".into()));
    }
    (0..grid.len())
        .map(|i| {
            spec.v_x(&grid.position(i)[..spec.dim])
                .ok_or_else(|| Error::MissingPositionForm(spec.label.clone()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonOptions {
    pub rel_tol: f64,
    pub max_shells: usize,
}

impl Default for PoissonOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_shells: 16 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonValue {
    pub value: Complex64,
    /// Largest `|m|_∞` summed explicitly.
    pub shells: usize,
    /// Magnitude of the last shell, or of the neglected tail when an
    /// asymptotic tail correction was applied.
    pub tail_bound: f64,
}

fn shell_indices(dim: usize, shell: i64, mut f: impl FnMut(&[i64])) {
    let width = (2 * shell + 1) as usize;
    let count = width.pow(dim as u32);
    let mut m = [0i64; MAX_DIM];
    for idx in 0..count {
        let mut rem = idx;
        let mut on_shell = false;
        for item in m.iter_mut().take(dim) {
            *item = (rem % width) as i64 - shell;
            rem /= width;
            if item.abs() == shell {
                on_shell = true;
            }
        }
        if on_shell || shell == 0 {
            f(&m[..dim]);
        }
    }
}

/// `(F_h V_h)(ζ) = Σ_m V̂(ζ + 2πm/h)`, with the factor `(2π)^{d/2} φ̂(hζ + 2πm)`
/// on each term when a mollifier is present.
pub fn torus_fourier_of_restriction(
    spec: &PotentialSpec,
    moll: Option<&MollifierSpec>,
    h: f64,
    zeta: &[Complex64],
    opts: &PoissonOptions,
) -> Result<PoissonValue> {
    let d = spec.dim;
    let period = 2.0 * PI / h;
    let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
    for a in 0..d {
        let re = zeta[a].re - period * (zeta[a].re / period).round();
        z[a] = Complex64::new(re, zeta[a].im);
    }
    spec.check_strip(&z[..d])?;
    let moll_scale = (2.0 * PI).powf(d as f64 / 2.0);
    let term = |m: &[i64]| -> Result<Complex64> {
        let mut w = z;
        let mut s = [Complex64::new(0.0, 0.0); MAX_DIM];
        for a in 0..d {
            w[a] += period * m[a] as f64;
            s[a] = z[a] * h + 2.0 * PI * m[a] as f64;
        }
        let weight = match moll {
            Some(mo) => mo.phi_hat(&s[..d])? * moll_scale,
            None => Complex64::new(1.0, 0.0),
        };
        if weight == Complex64::new(0.0, 0.0) {
            return Ok(weight);
        }
        Ok(weight * spec.v_hat_unchecked(&w[..d])?)
    };
    let mut partial = term(&[0, 0, 0][..d])?;
    let mut last = 0.0;
    for shell in 1..=opts.max_shells as i64 {
        let mut contribution = Complex64::new(0.0, 0.0);
        let mut err = None;
        shell_indices(d, shell, |m| match term(m) {
            Ok(t) => contribution += t,
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
        partial += contribution;
        last = contribution.norm();
        if last <= opts.rel_tol * partial.norm() {
            return Ok(PoissonValue { value: partial, shells: shell as usize, tail_bound: last });
        }
    }
    if moll.is_none() {
        if let Some(coeffs) = spec.tail_expansion() {
            let m_next = opts.max_shells as f64 + 1.0;
            let shift = z[0] / period;
            let mut tail = Complex64::new(0.0, 0.0);
            let mut last_term = 0.0;
            for (j, a) in coeffs.iter().enumerate() {
                let s = 2 * (j as u32 + 1);
                let scale = a * period.powi(-(s as i32));
                let t = (hurwitz_zeta(s, shift + m_next) + hurwitz_zeta(s, -shift + m_next)) * scale;
                tail += t;
                last_term = t.norm();
            }
            let value = partial + tail;
            if last_term <= opts.rel_tol * value.norm() {
                return Ok(PoissonValue { value, shells: opts.max_shells, tail_bound: last_term });
            }
        }
    }
    Err(Error::PoissonNonConvergence { shells: opts.max_shells, last })
}

/// Direct truncated lattice sum `(2π)^{-d/2} h^d Σ_n V(hn) e^{-ihn·ξ}` over
/// `|n|_∞ ≤ n_max`.
pub fn direct_lattice_fourier(spec: &PotentialSpec, h: f64, xi: &[f64], n_max: i64) -> Result<Complex64> {
    let d = spec.dim;
    let width = (2 * n_max + 1) as usize;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut x = [0.0; MAX_DIM];
    for idx in 0..width.pow(d as u32) {
        let mut rem = idx;
        let mut phase = 0.0;
        for a in 0..d {
            x[a] = h * ((rem % width) as i64 - n_max) as f64;
            rem /= width;
            phase += x[a] * xi[a];
        }
        let v = spec.v_x(&x[..d]).ok_or_else(|| Error::MissingPositionForm(spec.label.clone()))?;
        sum += Complex64::from_polar(v, -phase);
    }
    Ok(sum * (2.0 * PI).powf(-(d as f64) / 2.0) * h.powi(d as i32))
}

/// `V_h = (φ_h ∗ V)|_{hZ^d}` on a lattice grid, from the torus-side Poisson
/// data and the inverse lattice transform. The result is the `Nh`-periodic
/// sum of `V_h`, which equals `V_h` itself once the box contains its decay.
pub fn mollified_restrict(
    spec: &PotentialSpec,
    moll: &MollifierSpec,
    grid: &LatticeGrid,
    opts: &PoissonOptions,
) -> Result<Vec<f64>> {
    if spec.dim != grid.dim() || moll.dim != grid.dim() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let mut f = Vec::with_capacity(grid.len());
    let mut z = [Complex64::new(0.0, 0.0); MAX_DIM];
    for k in 0..grid.len() {
        let xi = grid.momentum(k);
        for a in 0..spec.dim {
            z[a] = Complex64::new(xi[a], 0.0);
        }
        f.push(torus_fourier_of_restriction(spec, Some(moll), grid.h(), &z[..spec.dim], opts)?.value);
    }
    Ok(grid.inverse_transform(&f)?.iter().map(|c| c.re).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub tail_tol: f64,
    pub initial_box: f64,
    pub max_box: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tail_tol: 1e-10, initial_box: 16.0, max_box: 1e6 }
    }
}

/// Pointwise `(φ_h ∗ V)(x) = ∫ φ̂(hξ) V̂(ξ) e^{ixξ} dξ` by adaptive quadrature
/// over `[-X, X]`, doubling `X` until `∫_{X<|ξ|<2X} |φ̂(hξ)V̂(ξ)| dξ` is below
/// the tail tolerance. One dimension.
pub fn mollified_value_at(
    spec: &PotentialSpec,
    moll: &MollifierSpec,
    h: f64,
    x: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    if spec.dim != 1 || moll.dim != 1 {
        return Err(Error::InvalidArgument("pointwise mollified values are one-dimensional".into()));
    }
    let weight = |xi: f64| -> Complex64 {
        let s = [Complex64::new(h * xi, 0.0)];
        let p = moll.phi_hat_unchecked(&s);
        if p == Complex64::new(0.0, 0.0) {
            return p;
        }
        p * spec.v_hat_real(&[xi]).unwrap_or_default()
    };
    let mut limit = opts.initial_box;
    if let Some(r) = moll.support_radius() {
        limit = limit.min(r / h);
    }
    loop {
        let tail = integrate(|xi| weight(xi).norm() + weight(-xi).norm(), limit, 2.0 * limit, 0.1 * opts.tail_tol, 1e-6, 20_000)?;
        let compact_done = moll.support_radius().is_some_and(|r| limit * h >= r);
        if tail.value < opts.tail_tol || compact_done {
            // split at the origin so both halves are smooth
            let core = integrate_complex(
                |xi| weight(xi) * Complex64::from_polar(1.0, x * xi) + weight(-xi) * Complex64::from_polar(1.0, -x * xi),
                0.0,
                limit,
                0.1 * opts.tail_tol,
                1e-13,
                200_000,
            )?;
            return Ok(core.value.re);
        }
        limit *= 2.0;
        if limit > opts.max_box {
            return Err(Error::QuadratureTail { achieved: tail.value, target: opts.tail_tol });
        }
    }
}

// ---------------------------------------------------------------------------
// Majorant check

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MajorantProfile {
    /// Bin edges in `r = |ξ − η|`.
    pub radii: Vec<f64>,
    /// Declared majorant `Ψ` at the bin edges.
    pub declared: Vec<f64>,
    /// Largest sampled `|V̂(Φ(ξ) − Φ(η))|` in each bin.
    pub empirical: Vec<f64>,
    /// `L¹` norm of `Ψ` over `r < 1`.
    pub l1_norm: f64,
    /// `L^p` norm of `Ψ` over `r ≥ 1`.
    pub lp_norm: f64,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MajorantReport {
    pub profile: MajorantProfile,
    pub passed: bool,
    /// Largest sampled ratio of kernel to declared majorant.
    pub max_ratio: f64,
    /// `sup |V̂(Φ(ξ)−Φ(η))| |ξ−η|^{d−μ}` over near-diagonal samples.
    pub near_diagonal_constant: f64,
}

fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Samples `(ξ, η)` pairs and compares `|V̂(Φ_θ(ξ) − Φ_θ(η))|` against the
/// declared majorant `Ψ(|ξ − η|)` of the potential class.
pub fn majorant_check(spec: &PotentialSpec, dist: &DistortionSpec, samples: usize, seed: u64) -> Result<MajorantReport> {
    dist.check_continuum(&spec.class)?;
    let d = spec.dim;
    let lip = dist.data.lipschitz;
    let a = dist.theta.im.abs() * lip;
    let b = 1.0 - dist.theta.re.abs() * lip;
    let psi = |r: f64| spec.declared_majorant(r, a, b);
    let reach = if dist.data.support_radius.is_finite() { 2.0 * dist.data.support_radius.max(1.0) } else { 8.0 };
    let bins: Vec<f64> = (0..=40).map(|i| 1e-3 * 10f64.powf(i as f64 * 0.125)).collect();
    let mut empirical = vec![0.0f64; bins.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    let mut near = 0.0f64;
    let mut ok = b * b > a * a;
    for i in 0..samples {
        let mut xi = [0.0; MAX_DIM];
        let mut eta = [0.0; MAX_DIM];
        let scale = if i % 2 == 0 { reach } else { 10f64.powf(rng.random_range(-3.0..0.5)) };
        for k in 0..d {
            xi[k] = rng.random_range(-reach..reach);
            eta[k] = if i % 2 == 0 { rng.random_range(-reach..reach) } else { xi[k] + rng.random_range(-scale..scale) };
        }
        let r = (0..d).map(|k| (xi[k] - eta[k]).powi(2)).sum::<f64>().sqrt();
        if r == 0.0 {
            continue;
        }
        let (p, q) = (dist.phi(&xi[..d]), dist.phi(&eta[..d]));
        let mut w = [Complex64::new(0.0, 0.0); MAX_DIM];
        for k in 0..d {
            w[k] = p[k] - q[k];
        }
        let value = spec.v_hat(&w[..d])?.norm();
        let bound = psi(r);
        let ratio = if bound > 0.0 { value / bound } else if value == 0.0 { 0.0 } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
        if value > bound * (1.0 + 1e-9) + 1e-300 {
            ok = false;
        }
        if r < 0.1 {
            near = near.max(value * r.powf(d as f64 - spec.class.mu));
        }
        let bin = bins.iter().rposition(|&edge| edge <= r).unwrap_or(0);
        empirical[bin] = empirical[bin].max(value);
    }
    let area = sphere_area(d);
    let radial = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> Result<f64> {
        Ok(area * integrate(|r| f(r) * r.powi(d as i32 - 1), lo, hi, 1e-12, 1e-7, 20_000)?.value)
    };
    let l1_norm = radial(&|r| psi(r), 0.0, 1.0)?;
    let p = spec.class.p.max(1.0);
    let mut upper = 2.0;
    let mut lp = radial(&|r| psi(r).powf(p), 1.0, upper)?;
    loop {
        let piece = radial(&|r| psi(r).powf(p), upper, 2.0 * upper)?;
        lp += piece;
        upper *= 2.0;
        if piece <= 1e-9 * lp.max(1e-300) || upper > 1e4 {
            break;
        }
    }
    // remaining tail from the declared momentum decay
    let decay = spec.class.sigma * p - d as f64;
    if decay > 0.0 && decay.is_finite() {
        lp += area * psi(upper).powf(p) * upper.powi(d as i32) / decay;
    } else if !decay.is_finite() {
    } else {
        ok = false;
    }
    let lp_norm = lp.powf(1.0 / p);
    if !(l1_norm.is_finite() && lp_norm.is_finite() && near.is_finite()) {
        ok = false;
    }
    let declared = bins.iter().map(|&r| psi(r)).collect();
    Ok(MajorantReport {
        profile: MajorantProfile { radii: bins, declared, empirical, l1_norm, lp_norm, p },
        passed: ok,
        max_ratio,
        near_diagonal_constant: near,
    })
}
