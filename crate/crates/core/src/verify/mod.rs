//! Suite registry, run configuration and machine-readable reports.
//!
//! A run executes the selected suites in parallel. Every check draws its
//! randomness from `derive(derive(seed, suite_id), check_name)` and its own
//! per-sample streams, so reports depend only on `(config, seed)`.

mod suites;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::current::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::groupoid::catalog_ids;
use crate::mapping::{GridKind, GridSpec};
use crate::seed::derive;

/// A registered suite: id and the result it exercises.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteInfo {
    pub id: &'static str,
    pub anchor: &'static str,
}

pub const SUITES: [SuiteInfo; 12] = [
    SuiteInfo { id: "groupoid-axioms", anchor: "groupoid laws of the catalog Lie groupoids" },
    SuiteInfo {
        id: "current-axioms",
        anchor: "current groupoid C(K, G) is a groupoid under pointwise operations",
    },
    SuiteInfo {
        id: "flip-identities",
        anchor: "canonical flip of T²M: involution, and projection after flip equals tangent of projection",
    },
    SuiteInfo {
        id: "local-additions",
        anchor: "local additions: zero section, inverse chart, normalization, tangent lift",
    },
    SuiteInfo {
        id: "tangent-diagram",
        anchor: "tangent of the pushforward C(K, f) computed through the mapping-space chart",
    },
    SuiteInfo {
        id: "pushforward-classifier",
        anchor: "pushforward of submersions, immersions and local diffeomorphisms; local inverse of C(K, f)",
    },
    SuiteInfo {
        id: "not-tra-certificate",
        anchor: "C(S¹, R ⋉ S¹) is not locally transitive: degree obstruction",
    },
    SuiteInfo {
        id: "not-proper-certificate",
        anchor: "C(S¹, S¹ × S¹ ⇉ S¹) is not proper: unbounded anchor fibre",
    },
    SuiteInfo {
        id: "etale-current",
        anchor: "current groupoid of a proper étale groupoid is étale with finite anchor fibres",
    },
    SuiteInfo {
        id: "theorem-D-pointwise-bracket",
        anchor: "Lie algebroid of the current groupoid is the current algebroid",
    },
    SuiteInfo {
        id: "local-action-form",
        anchor: "proper étale groupoid is locally an action groupoid of the isotropy group",
    },
    SuiteInfo {
        id: "orbifold-path-lifting",
        anchor: "paths in a developable orbifold lift; too few charts give no identity current",
    },
];

pub fn suite_info(id: &str) -> Result<SuiteInfo> {
    SUITES.iter().find(|s| s.id == id).copied().ok_or_else(|| Error::UnknownSuite(id.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    pub n: usize,
    #[serde(default = "default_ell")]
    pub ell: usize,
}

fn default_ell() -> usize {
    2
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.kind, self.n, self.ell)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_chart: f64,
    pub tol_fd: f64,
    pub tol_theta: f64,
    pub tol_rank: f64,
    pub tol_bracket: f64,
    /// Identities that hold up to rounding only.
    pub tol_machine: f64,
    /// Overrides the coherence radius used by lifting algorithms.
    pub delta_coh: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_chart: 1e-9,
            tol_fd: 1e-6,
            tol_theta: 1e-10,
            tol_rank: 1e-8,
            tol_bracket: 1e-5,
            tol_machine: 1e-12,
            delta_coh: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SampleCounts {
    pub axioms: usize,
    pub flips: usize,
    pub local_additions: usize,
    pub tangent_pairs: usize,
    pub classifier: usize,
    pub inverse_instances: usize,
    pub branch_attempts: usize,
    pub etale_arrows: usize,
    pub fiber_pairs: usize,
    pub bracket_pairs: usize,
    pub law_samples: usize,
    pub paths: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            axioms: 1000,
            flips: 1000,
            local_additions: 100,
            tangent_pairs: 50,
            classifier: 100,
            inverse_instances: 100,
            branch_attempts: 32,
            etale_arrows: 200,
            fiber_pairs: 200,
            bracket_pairs: 50,
            law_samples: 20,
            paths: 100,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    /// Directory for CSV dumps of named loops and seminorm tables.
    pub csv_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Empty selects every registered suite.
    #[serde(default)]
    pub suites: Vec<String>,
    /// Groupoid ids for the axiom suites; empty selects the default catalog.
    #[serde(default)]
    pub catalog: Vec<String>,
    /// Grids for the current-groupoid axiom suite.
    #[serde(default = "default_grids")]
    pub grids: Vec<GridConfig>,
    /// Grid sizes of the refinement-stable certificates.
    #[serde(default = "default_certificate_grids")]
    pub certificate_grids: Vec<usize>,
    #[serde(default)]
    pub samples: SampleCounts,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_grids() -> Vec<GridConfig> {
    [8, 64, 256].into_iter().map(|n| GridConfig { kind: GridKind::Circle, n, ell: 2 }).collect()
}

fn default_certificate_grids() -> Vec<usize> {
    vec![64, 256, 1024]
}

impl RunConfig {
    /// Defaults for every optional field.
    pub fn with_seed(seed: u64) -> RunConfig {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    /// Parses and validates; schema errors carry serde's line/column and key.
    pub fn from_json_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let named = [
            ("tol_chart", t.tol_chart),
            ("tol_fd", t.tol_fd),
            ("tol_theta", t.tol_theta),
            ("tol_rank", t.tol_rank),
            ("tol_bracket", t.tol_bracket),
            ("tol_machine", t.tol_machine),
        ];
        for (k, v) in named.iter().copied().chain(t.delta_coh.map(|d| ("delta_coh", d))) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{k} must be positive and finite, got {v}")));
            }
        }
        for s in &self.suites {
            suite_info(s)?;
        }
        for id in &self.catalog {
            crate::groupoid::catalog(id)?;
        }
        for g in &self.grids {
            g.spec()?;
        }
        for &n in &self.certificate_grids {
            GridSpec::new(GridKind::Circle, n, 2)?;
        }
        Ok(())
    }

    /// Selected suites in registry order, without duplicates.
    pub fn selected_suites(&self) -> Vec<SuiteInfo> {
        let wanted: BTreeSet<&str> = self.suites.iter().map(String::as_str).collect();
        SUITES.iter().filter(|s| wanted.is_empty() || wanted.contains(s.id)).copied().collect()
    }

    pub fn catalog_ids(&self) -> Vec<String> {
        if self.catalog.is_empty() {
            catalog_ids().iter().map(|s| s.to_string()).collect()
        } else {
            self.catalog.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "obstructed-as-expected")]
    ObstructedAsExpected,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub check_name: String,
    pub anchor: String,
    pub status: Status,
    pub max_residual: f64,
    pub tolerance: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub wall_time_ms: f64,
    pub details: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteInfo>,
    pub records: Vec<CheckRecord>,
    pub all_passed: bool,
}

impl Report {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }

    /// The report with every `wall_time_ms` zeroed.
    pub fn without_timing(&self) -> Value {
        let mut v = self.to_json();
        if let Some(recs) = v["records"].as_array_mut() {
            for r in recs {
                r["wall_time_ms"] = Value::from(0.0);
            }
        }
        v
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| r.status == Status::Fail)
    }
}

/// What a check measured; the runner turns it into a [`CheckRecord`].
#[derive(Clone, Debug)]
pub struct Outcome {
    pub residual: f64,
    pub tolerance: f64,
    pub n_samples: usize,
    pub details: Value,
    /// With the verdict the check expects.
    pub certificate: Option<(Certificate, Verdict)>,
}

impl Outcome {
    pub fn new(residual: f64, tolerance: f64, n_samples: usize, details: Value) -> Outcome {
        Outcome { residual, tolerance, n_samples, details, certificate: None }
    }

    pub fn certified(mut self, cert: Certificate, expected: Verdict) -> Outcome {
        self.certificate = Some((cert, expected));
        self
    }

    fn status(&self) -> Status {
        // NaN residuals fail.
        let within = self.residual <= self.tolerance;
        match &self.certificate {
            None if within => Status::Pass,
            Some((c, want)) if within && c.verdict == *want => match want {
                Verdict::Obstructed => Status::ObstructedAsExpected,
                _ => Status::Pass,
            },
            _ => Status::Fail,
        }
    }
}

pub(crate) struct SuiteCtx<'a> {
    pub cfg: &'a RunConfig,
    pub info: SuiteInfo,
    pub seed: u64,
    pub records: Vec<CheckRecord>,
}

impl SuiteCtx<'_> {
    /// Runs one check with its derived seed; errors become failed records.
    pub fn check(&mut self, name: &str, f: impl FnOnce(u64) -> Result<Outcome>) {
        let seed = derive(self.seed, name);
        let start = Instant::now();
        let out = f(seed);
        let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let base = |status, error| CheckRecord {
            suite: self.info.id.to_string(),
            check_name: name.to_string(),
            anchor: self.info.anchor.to_string(),
            status,
            max_residual: f64::NAN,
            tolerance: 0.0,
            n_samples: 0,
            seed,
            wall_time_ms,
            details: Value::Null,
            certificate: None,
            error,
        };
        let rec = match out {
            Ok(o) => CheckRecord {
                status: o.status(),
                max_residual: o.residual,
                tolerance: o.tolerance,
                n_samples: o.n_samples,
                details: o.details,
                certificate: o.certificate.map(|(c, _)| c.to_json()),
                ..base(Status::Fail, None)
            },
            Err(e) => base(Status::Fail, Some(e.to_string())),
        };
        self.records.push(rec);
    }
}

fn run_suite(cfg: &RunConfig, info: SuiteInfo) -> Vec<CheckRecord> {
    let mut ctx = SuiteCtx { cfg, info, seed: derive(cfg.seed, info.id), records: Vec::new() };
    suites::run(&mut ctx);
    ctx.records
}

/// Executes the selected suites; records keep registry order.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let selected = cfg.selected_suites();
    let per_suite: Vec<Vec<CheckRecord>> = selected.par_iter().map(|info| run_suite(cfg, *info)).collect();
    let records: Vec<CheckRecord> = per_suite.into_iter().flatten().collect();
    let all_passed = records.iter().all(|r| r.status != Status::Fail);
    Ok(Report { seed: cfg.seed, suites: selected, records, all_passed })
}

/// CSV dumps of the named loops at `n` nodes and of the properness seminorm
/// table into `dir`; returns the written paths.
pub fn write_csv_dumps(dir: &std::path::Path, n: usize, report: &Report) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for id in crate::mapping::NAMED_LOOPS {
        let path = dir.join(format!("{id}.csv"));
        std::fs::write(&path, crate::mapping::named_loop(id, n)?.to_csv()?)?;
        written.push(path);
    }
    let rows: Vec<&Value> = report
        .records
        .iter()
        .filter_map(|r| r.certificate.as_ref())
        .filter(|c| c["kind"] == "not-proper")
        .flat_map(|c| c["witness_data"]["seminorms"].as_array().into_iter().flatten())
        .collect();
    if !rows.is_empty() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(e.to_string());
        w.write_record(["k", "order1_seminorm"]).map_err(io)?;
        for r in rows {
            w.write_record([r["k"].to_string(), format!("{:e}", r["order1"].as_f64().unwrap_or(f64::NAN))])
                .map_err(io)?;
        }
        let path = dir.join("seminorms.csv");
        std::fs::write(&path, w.into_inner().map_err(|e| Error::Config(e.to_string()))?)?;
        written.push(path);
    }
    Ok(written)
}
