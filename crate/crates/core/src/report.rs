//! Run configuration, manifests and the bodies of the CLI subcommands.
//!
//! Every command produces an [`Outcome`]: an exit code (0/1/2) and a JSON
//! envelope `{schema, manifest, report, error}`. Timing fields are the only
//! run-to-run variation; [`strip_volatile`] removes them for comparison.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::certifier::{
    beta_v, boundary_orbits, check_cv, dobrushin_single_site, flip_distance, BisectionStatus,
    BoundarySearch, CheckOptions, Mode, Verdict, SCHEMA_VERSION,
};
use crate::inequality::{dss_sweep, DssTrial, FieldMode, VIOLATION};
use crate::lattice::{BoundaryCondition, BoxGeometry};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Fast-vs-exact agreement required by the oracle command.
pub const ORACLE_TOL: f64 = 1e-9;
/// Closed-form single-site agreement.
pub const SINGLE_SITE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Check,
    BetaV,
    Dss,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub dim: Option<usize>,
    pub extents: Option<Vec<usize>>,
    pub beta: Option<f64>,
    pub beta_max: f64,
    pub tol: f64,
    pub grid_points: usize,
    pub mode: Mode,
    pub symmetry: bool,
    pub search: BoundarySearch,
    pub threads: Option<usize>,
    pub seed: u64,
    pub output: Option<String>,
    pub csv: Option<String>,
    pub trials: u64,
    pub max_extent: usize,
    pub fields: FieldMode,
    pub replay: Option<String>,
    pub max_volume: usize,
    pub betas: Vec<f64>,
    pub single_site: bool,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        RunConfig {
            subcommand,
            dim: None,
            extents: None,
            beta: None,
            beta_max: 1.0,
            tol: 1e-6,
            grid_points: 16,
            mode: Mode::Fast,
            symmetry: true,
            search: BoundarySearch::Full,
            threads: None,
            seed: 0,
            output: None,
            csv: None,
            trials: 10_000,
            max_extent: 3,
            fields: FieldMode::Uniform,
            replay: None,
            max_volume: 6,
            betas: vec![0.1, 0.3, 0.5],
            single_site: false,
        }
    }

    fn options(&self) -> CheckOptions {
        CheckOptions {
            mode: self.mode,
            symmetry: self.symmetry,
            search: self.search,
        }
    }

    fn geometry(&self) -> Result<BoxGeometry> {
        let extents = self
            .extents
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("--extents is required".into()))?;
        let dim = self.dim.unwrap_or(extents.len());
        BoxGeometry::new(dim, extents)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("--threads must be positive".into()));
        }
        match self.subcommand {
            Subcommand::Check => {
                self.geometry()?;
                let beta = self
                    .beta
                    .ok_or_else(|| Error::InvalidParameter("--beta is required".into()))?;
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(Error::InvalidParameter(format!("--beta {beta}")));
                }
            }
            Subcommand::BetaV => {
                self.geometry()?;
                if !(self.tol > 0.0) || !(self.beta_max > 0.0) || self.grid_points < 8 {
                    return Err(Error::InvalidParameter(
                        "need --tol > 0, --beta-max > 0 and --grid ≥ 8".into(),
                    ));
                }
            }
            Subcommand::Dss => {
                if self.replay.is_none() && !(2..=4).contains(&self.max_extent) {
                    return Err(Error::InvalidParameter("--max-extent must be in 2..=4".into()));
                }
            }
            Subcommand::Oracle => {
                if self.single_site && self.dim.is_none() {
                    return Err(Error::InvalidParameter("--single-site needs --dim".into()));
                }
                if self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                    return Err(Error::InvalidParameter("--betas must be non-negative".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub artifact_version: String,
    pub timestamp: String,
    pub wall_time_s: f64,
    pub phases: Vec<Phase>,
    pub counts: BTreeMap<String, u64>,
}

pub struct Outcome {
    pub exit_code: i32,
    pub envelope: Value,
    pub csv: Option<String>,
}

struct Recorder {
    start: Instant,
    phases: Vec<Phase>,
    counts: BTreeMap<String, u64>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            start: Instant::now(),
            phases: Vec::new(),
            counts: BTreeMap::new(),
        }
    }

    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    fn manifest(self, config: &RunConfig) -> RunManifest {
        RunManifest {
            config: config.clone(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            phases: self.phases,
            counts: self.counts,
        }
    }
}

/// Runs one command on a worker pool capped by `config.threads`.
pub fn run(config: &RunConfig) -> Outcome {
    let mut rec = Recorder::new();
    let result = config.validate().and_then(|_| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| match config.subcommand {
            Subcommand::Check => cmd_check(config, &mut rec),
            Subcommand::BetaV => cmd_beta_v(config, &mut rec),
            Subcommand::Dss => cmd_dss(config, &mut rec),
            Subcommand::Oracle => cmd_oracle(config, &mut rec),
        })
    });
    let manifest = rec.manifest(config);
    match result {
        Ok((exit_code, report, csv)) => Outcome {
            exit_code,
            envelope: json!({
                "schema": SCHEMA_VERSION,
                "manifest": manifest,
                "report": report,
                "error": Value::Null,
            }),
            csv,
        },
        Err(e) => Outcome {
            exit_code: EXIT_ERROR,
            envelope: json!({
                "schema": SCHEMA_VERSION,
                "manifest": manifest,
                "report": Value::Null,
                "error": e.to_string(),
            }),
            csv: None,
        },
    }
}

type CommandResult = Result<(i32, Value, Option<String>)>;

fn cmd_check(config: &RunConfig, rec: &mut Recorder) -> CommandResult {
    let g = config.geometry()?;
    let beta = config.beta.expect("validated");
    let report = rec.phase("certify", || check_cv(&g, beta, &config.options()))?;
    rec.counts.insert("boundary_raw".into(), report.stats.raw);
    rec.counts.insert("boundary_evaluated".into(), report.stats.evaluated);
    rec.counts.insert("boundary_skipped".into(), report.stats.skipped);
    let code = match report.verdict {
        Verdict::Holds => EXIT_OK,
        Verdict::Fails => EXIT_FAIL,
    };
    Ok((code, serde_json::to_value(&report)?, None))
}

fn cmd_beta_v(config: &RunConfig, rec: &mut Recorder) -> CommandResult {
    let g = config.geometry()?;
    let result = rec.phase("bisect", || {
        beta_v(&g, config.tol, config.beta_max, config.grid_points, &config.options())
    })?;
    rec.counts.insert("evaluations".into(), result.evaluations as u64);
    rec.counts.insert("grid_points".into(), result.grid.len() as u64);
    let code = match result.status {
        BisectionStatus::ThresholdAmbiguous => EXIT_ERROR,
        _ => EXIT_OK,
    };
    Ok((code, serde_json::to_value(&result)?, Some(result.grid_csv())))
}

/// A replay argument is either `SEED:INDEX` or a JSON trial tuple.
fn parse_replay(arg: &str, config: &RunConfig) -> Result<DssTrial> {
    let arg = arg.trim();
    if arg.starts_with('{') {
        return Ok(serde_json::from_str(arg)?);
    }
    let (seed, index) = arg
        .split_once(':')
        .ok_or_else(|| Error::InvalidParameter(format!("replay `{arg}`: expected SEED:INDEX or JSON")))?;
    let parse = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| Error::InvalidParameter(format!("replay `{arg}`")))
    };
    Ok(crate::inequality::generate_trial(
        parse(seed)?,
        parse(index)?,
        config.max_extent,
        config.fields,
    ))
}

fn cmd_dss(config: &RunConfig, rec: &mut Recorder) -> CommandResult {
    if let Some(arg) = &config.replay {
        let mut trial = parse_replay(arg, config)?;
        let margin = rec.phase("replay", || trial.evaluate())?;
        trial.margin = Some(margin);
        let code = if margin < -VIOLATION { EXIT_FAIL } else { EXIT_OK };
        return Ok((code, json!({ "schema": SCHEMA_VERSION, "replay": trial }), None));
    }
    let sweep = rec.phase("sweep", || {
        dss_sweep(config.seed, config.trials, config.max_extent, config.fields)
    })?;
    rec.counts.insert("trials".into(), sweep.trials);
    rec.counts.insert("violations".into(), sweep.violations.len() as u64);
    let code = if sweep.violations.is_empty() { EXIT_OK } else { EXIT_FAIL };
    Ok((code, serde_json::to_value(&sweep)?, None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleWorst {
    pub beta: f64,
    pub y: usize,
    pub boundary: BoundaryCondition,
    pub fast: f64,
    pub exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleBox {
    pub geometry: String,
    pub comparisons: u64,
    pub max_delta: f64,
    pub worst: Option<OracleWorst>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleSiteComparison {
    pub dim: usize,
    pub beta: f64,
    pub certifier_k: f64,
    pub brute_force_k: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub schema: u32,
    pub betas: Vec<f64>,
    pub tolerance: f64,
    pub boxes: Vec<OracleBox>,
    pub single_site: Vec<SingleSiteComparison>,
    pub max_delta: f64,
    pub pass: bool,
}

/// Near-square 2D boxes `W ≤ H ≤ W + 1` with `W·H ≤ max_volume`.
pub fn oracle_boxes(max_volume: usize) -> Vec<BoxGeometry> {
    let mut out = Vec::new();
    for w in 1..=max_volume {
        for h in w..=w + 1 {
            if w * h <= max_volume {
                out.push(BoxGeometry::new(2, &[w, h]).expect("small box"));
            }
        }
    }
    out
}

/// Fast (monotone) against exact-transport distance over every boundary
/// condition, every flip site and every `β`.
pub fn oracle_box(g: &BoxGeometry, betas: &[f64]) -> Result<OracleBox> {
    let mut cases = Vec::new();
    for &beta in betas {
        for y in 0..g.boundary_len() {
            for o in boundary_orbits(g, y, false, BoundarySearch::Full)? {
                cases.push((beta, y, o.representative));
            }
        }
    }
    let results: Vec<Result<OracleWorst>> = cases
        .into_par_iter()
        .map(|(beta, y, b)| {
            let fast = flip_distance(g, beta, &b, y, Mode::Fast)?;
            let exact = flip_distance(g, beta, &b, y, Mode::Oracle)?;
            Ok(OracleWorst {
                beta,
                y,
                boundary: b,
                fast,
                exact,
            })
        })
        .collect();
    let mut out = OracleBox {
        geometry: g.id(),
        comparisons: 0,
        max_delta: 0.0,
        worst: None,
    };
    for r in results {
        let r = r?;
        out.comparisons += 1;
        let delta = (r.fast - r.exact).abs();
        if out.worst.is_none() || delta > out.max_delta {
            out.max_delta = delta;
            out.worst = Some(r);
        }
    }
    Ok(out)
}

pub fn single_site_comparison(dim: usize, betas: &[f64]) -> Result<Vec<SingleSiteComparison>> {
    let g = BoxGeometry::new(dim, &vec![1; dim])?;
    betas
        .iter()
        .map(|&beta| {
            let report = check_cv(&g, beta, &CheckOptions::default())?;
            let certifier_k = report
                .coefficients
                .iter()
                .map(|k| k.value)
                .fold(f64::NEG_INFINITY, f64::max);
            let brute_force_k = dobrushin_single_site(dim, beta)?.k;
            Ok(SingleSiteComparison {
                dim,
                beta,
                certifier_k,
                brute_force_k,
                delta: (certifier_k - brute_force_k).abs(),
            })
        })
        .collect()
}

fn cmd_oracle(config: &RunConfig, rec: &mut Recorder) -> CommandResult {
    let mut report = OracleReport {
        schema: SCHEMA_VERSION,
        betas: config.betas.clone(),
        tolerance: ORACLE_TOL,
        boxes: Vec::new(),
        single_site: Vec::new(),
        max_delta: 0.0,
        pass: true,
    };
    if config.single_site {
        let dim = config.dim.expect("validated");
        report.single_site = rec.phase("single-site", || single_site_comparison(dim, &config.betas))?;
        report.pass &= report.single_site.iter().all(|c| c.delta <= SINGLE_SITE_TOL);
    } else {
        let boxes = match &config.extents {
            Some(_) => vec![config.geometry()?],
            None => oracle_boxes(config.max_volume),
        };
        for g in &boxes {
            let r = rec.phase(&g.id(), || oracle_box(g, &config.betas))?;
            report.max_delta = report.max_delta.max(r.max_delta);
            report.boxes.push(r);
        }
        report.pass &= report.max_delta <= ORACLE_TOL;
    }
    rec.counts.insert(
        "comparisons".into(),
        report.boxes.iter().map(|b| b.comparisons).sum::<u64>() + report.single_site.len() as u64,
    );
    let code = if report.pass { EXIT_OK } else { EXIT_FAIL };
    Ok((code, serde_json::to_value(&report)?, None))
}

/// Removes timing and worker-count fields so that reports from different
/// runs can be compared byte for byte.
pub fn strip_volatile(v: &mut Value) {
    const KEYS: [&str; 5] = ["timestamp", "wall_time_s", "phases", "threads", "seconds"];
    match v {
        Value::Object(map) => {
            for k in KEYS {
                map.remove(k);
            }
            map.values_mut().for_each(strip_volatile);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_volatile),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(sub: Subcommand) -> RunConfig {
        let mut c = RunConfig::new(sub);
        c.threads = Some(1);
        c
    }

    #[test]
    fn check_exit_codes() {
        let mut c = config(Subcommand::Check);
        c.dim = Some(2);
        c.extents = Some(vec![1, 1]);
        c.beta = Some(0.2);
        let out = run(&c);
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.envelope["report"]["verdict"], "holds");
        c.beta = Some(0.0);
        let out = run(&c);
        assert_eq!(out.envelope["report"]["sum"], 0.0);
        c.beta = Some(0.3);
        assert_eq!(run(&c).exit_code, EXIT_FAIL);
        c.beta = None;
        let out = run(&c);
        assert_eq!(out.exit_code, EXIT_ERROR);
        assert!(out.envelope["error"].is_string());
        assert!(out.envelope["manifest"]["config"].is_object());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let mut v = serde_json::to_value(RunConfig::new(Subcommand::Check)).unwrap();
        assert!(serde_json::from_value::<RunConfig>(v.clone()).is_ok());
        v["colour"] = json!("blue");
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn oracle_empty_and_single_site() {
        let mut c = config(Subcommand::Oracle);
        c.max_volume = 0;
        let out = run(&c);
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.envelope["report"]["boxes"], json!([]));

        let mut c = config(Subcommand::Oracle);
        c.single_site = true;
        c.dim = Some(3);
        let out = run(&c);
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.envelope["report"]["single_site"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn oracle_box_list() {
        let ids: Vec<String> = oracle_boxes(6).iter().map(|g| g.id()).collect();
        assert_eq!(ids, ["d=2;extents=1x1", "d=2;extents=1x2", "d=2;extents=2x2", "d=2;extents=2x3"]);
    }

    #[test]
    fn dss_zero_field_and_replay() {
        let mut c = config(Subcommand::Dss);
        c.trials = 1;
        c.fields = FieldMode::Zero;
        let out = run(&c);
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.envelope["report"]["min_margin"], 0.0);

        let mut c = config(Subcommand::Dss);
        c.trials = 5;
        c.seed = 9;
        let sweep = run(&c).envelope;
        let logged = &sweep["report"]["log"][3];
        c.replay = Some("9:3".into());
        let replay = run(&c).envelope;
        assert_eq!(replay["report"]["replay"], *logged);
        c.replay = Some(logged.to_string());
        let replay = run(&c).envelope;
        assert_eq!(replay["report"]["replay"]["margin"], logged["margin"]);
    }

    #[test]
    fn strip_volatile_removes_timing() {
        let mut v = json!({"a": {"wall_time_s": 1.0, "b": [{"timestamp": "x", "c": 2}]}, "threads": 4});
        strip_volatile(&mut v);
        assert_eq!(v, json!({"a": {"b": [{"c": 2}]}}));
    }
}
