//! Report assembly and the JSON/CSV writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use latres::{ConvergenceReport, RateFit, RungSummary, Track};
use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: String,
    pub status: Status,
    pub metrics: BTreeMap<String, Value>,
}

impl Suite {
    pub fn new(name: &str, ok: bool) -> Self {
        Self { name: name.into(), status: Status::from_bool(ok), metrics: BTreeMap::new() }
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        self.metrics.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointOut {
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub re: f64,
    pub im: f64,
    pub err: Option<f64>,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackOut {
    pub id: usize,
    pub points: Vec<PointOut>,
    pub rate: Option<f64>,
    pub residual: Option<f64>,
    pub reference: Option<[f64; 3]>,
    pub complete: bool,
    pub ambiguous: bool,
    pub monotone: bool,
    pub disk_multiplicity: Vec<usize>,
    pub threshold_rung: Option<usize>,
    pub theta_deviation: Option<f64>,
}

impl TrackOut {
    pub fn from_track(t: &Track) -> Self {
        Self {
            id: t.id,
            points: t
                .points
                .iter()
                .map(|p| PointOut { h: p.h, n: p.n, re: p.z.re, im: p.z.im, err: p.err, multiplicity: p.multiplicity })
                .collect(),
            rate: t.rate.map(|r| r.slope),
            residual: t.rate.map(|r| r.max_residual),
            reference: t.reference.as_ref().map(|r| [r.z.re, r.z.im, r.tolerance]),
            complete: t.complete,
            ambiguous: t.ambiguous,
            monotone: t.monotone,
            disk_multiplicity: t.disk_multiplicity.clone(),
            threshold_rung: t.threshold_rung,
            theta_deviation: t.theta_deviation,
        }
    }

    /// A track with a single point and no fit.
    pub fn single(id: usize, point: PointOut) -> Self {
        Self {
            id,
            points: vec![point],
            rate: None,
            residual: None,
            reference: None,
            complete: true,
            ambiguous: false,
            monotone: false,
            disk_multiplicity: Vec::new(),
            threshold_rung: None,
            theta_deviation: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailBound {
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub max_shells: usize,
    pub max_tail: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub versions: BTreeMap<String, String>,
    pub tolerances: Tolerances,
    pub poisson_tail_bounds: Vec<TailBound>,
    pub references: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub suites: Vec<Suite>,
    pub tracks: Vec<TrackOut>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("latres-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("report-schema".into(), "1".into());
        Self {
            config: config.clone(),
            suites: Vec::new(),
            tracks: Vec::new(),
            provenance: Provenance {
                versions,
                tolerances: config.tolerances.clone(),
                poisson_tail_bounds: Vec::new(),
                references: Vec::new(),
            },
        }
    }

    pub fn add_rungs(&mut self, rungs: &[RungSummary]) {
        self.provenance.poisson_tail_bounds.extend(rungs.iter().map(|r| TailBound {
            h: r.rung.h,
            n: r.rung.n,
            max_shells: r.max_poisson_shells,
            max_tail: r.max_poisson_tail,
        }));
    }

    pub fn add_convergence(&mut self, report: &ConvergenceReport) {
        self.add_rungs(&report.rungs);
        self.tracks.extend(report.tracks.iter().map(TrackOut::from_track));
    }

    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.status == Status::Pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per (track, h). The first line is a comment echoing the
    /// configuration.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let config = serde_json::to_string(&self.config).expect("config serializes");
        let _ = writeln!(out, "# config: {config}");
        out.push_str("track_id,h,N,re_z,im_z,abs_err,multiplicity\n");
        for t in &self.tracks {
            for p in &t.points {
                let err = p.err.map(|e| format!("{e:e}")).unwrap_or_default();
                let _ = writeln!(out, "{},{:e},{},{:e},{:e},{},{}", t.id, p.h, p.n, p.re, p.im, err, p.multiplicity);
            }
        }
        out
    }
}

pub fn fit_metrics(fit: Option<RateFit>) -> Value {
    match fit {
        Some(f) => serde_json::json!({"slope": f.slope, "residual": f.max_residual, "points": f.points}),
        None => Value::Null,
    }
}
