use serde::Serialize;

use super::{check_cv, CheckOptions, Verdict, GUARD, SCHEMA_VERSION};
use crate::lattice::BoxGeometry;
use crate::{Error, Result};

/// Slack allowed before a decrease of `Σk` or `k_y` along the grid is
/// flagged as non-monotone.
const MONOTONE_SLACK: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BisectionStatus {
    /// `β_lo` holds, `β_hi` fails, `β_hi − β_lo ≤ tol`.
    Bracketed,
    /// The condition held on the whole grid up to `β_max`.
    UnboundedUpToBetaMax,
    /// The grid crosses the threshold more than once.
    ThresholdAmbiguous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub beta: f64,
    pub sum: f64,
    pub holds: bool,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub beta: f64,
    pub sum: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BisectionResult {
    pub schema: u32,
    pub geometry: String,
    pub volume: usize,
    pub options: CheckOptions,
    pub certifying: bool,
    pub status: BisectionStatus,
    pub beta_lo: f64,
    pub beta_hi: Option<f64>,
    pub sum_lo: f64,
    pub sum_hi: Option<f64>,
    pub tolerance: f64,
    pub beta_max: f64,
    pub guard: f64,
    /// Grid brackets `[β_i, β_{i+1}]` where the verdict changes.
    pub crossings: Vec<(f64, f64)>,
    /// Human-readable notes on grid points where `Σk` or some `k_y` decreased.
    pub monotonicity_violations: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub grid: Vec<GridRow>,
    pub evaluations: usize,
    pub wall_time_s: f64,
}

impl BisectionResult {
    /// Grid scan as CSV: `beta,sum,threshold,holds,k_0,…`.
    pub fn grid_csv(&self) -> String {
        let n = self.grid.first().map_or(0, |r| r.coefficients.len());
        let mut out = String::from("beta,sum,threshold,holds");
        for y in 0..n {
            out.push_str(&format!(",k_{y}"));
        }
        out.push('\n');
        for row in &self.grid {
            out.push_str(&format!("{:e},{:e},{},{}", row.beta, row.sum, self.volume, row.holds));
            for k in &row.coefficients {
                out.push_str(&format!(",{k:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Brackets `β_V`, the largest `β` below which the condition holds.
///
/// A uniform grid over `(0, β_max]` is scanned first; the first
/// hold→fail transition is then bisected until the bracket is narrower
/// than `tol`. Both endpoints are verified evaluations.
pub fn beta_v(
    g: &BoxGeometry,
    tol: f64,
    beta_max: f64,
    grid_points: usize,
    opts: &CheckOptions,
) -> Result<BisectionResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    if !(beta_max > 0.0 && beta_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta_max {beta_max}")));
    }
    if grid_points < 8 {
        return Err(Error::InvalidParameter(format!(
            "grid_points = {grid_points}, need at least 8"
        )));
    }
    let start = std::time::Instant::now();
    let mut evaluations = 0usize;

    let mut grid = Vec::with_capacity(grid_points + 1);
    for i in 0..=grid_points {
        let beta = beta_max * i as f64 / grid_points as f64;
        let r = check_cv(g, beta, opts)?;
        evaluations += 1;
        grid.push(GridRow {
            beta,
            sum: r.sum,
            holds: r.verdict == Verdict::Holds,
            coefficients: r.coefficients.iter().map(|k| k.value).collect(),
        });
    }

    let mut violations = Vec::new();
    for w in grid.windows(2) {
        if w[1].sum < w[0].sum - MONOTONE_SLACK {
            violations.push(format!(
                "sum decreases from {:e} at beta={} to {:e} at beta={}",
                w[0].sum, w[0].beta, w[1].sum, w[1].beta
            ));
        }
        for (y, (a, b)) in w[0].coefficients.iter().zip(&w[1].coefficients).enumerate() {
            if *b < a - MONOTONE_SLACK {
                violations.push(format!(
                    "k_{y} decreases from {a:e} at beta={} to {b:e} at beta={}",
                    w[0].beta, w[1].beta
                ));
            }
        }
    }

    let crossings: Vec<(f64, f64)> = grid
        .windows(2)
        .filter(|w| w[0].holds != w[1].holds)
        .map(|w| (w[0].beta, w[1].beta))
        .collect();

    let mut result = BisectionResult {
        schema: SCHEMA_VERSION,
        geometry: g.id(),
        volume: g.volume(),
        options: *opts,
        certifying: opts.certifying(),
        status: BisectionStatus::Bracketed,
        beta_lo: 0.0,
        beta_hi: None,
        sum_lo: grid[0].sum,
        sum_hi: None,
        tolerance: tol,
        beta_max,
        guard: GUARD,
        crossings: crossings.clone(),
        monotonicity_violations: violations,
        iterations: Vec::new(),
        grid: Vec::new(),
        evaluations: 0,
        wall_time_s: 0.0,
    };

    let first_fail = grid.iter().position(|r| !r.holds);
    match first_fail {
        None => {
            let last = grid.last().expect("grid is non-empty");
            result.status = BisectionStatus::UnboundedUpToBetaMax;
            result.beta_lo = last.beta;
            result.sum_lo = last.sum;
        }
        Some(0) => {
            // β = 0 always holds (Σk = 0); reaching here means |V| ≤ guard.
            return Err(Error::InvalidParameter("condition fails at beta = 0".into()));
        }
        Some(i) => {
            if crossings.len() > 1 {
                result.status = BisectionStatus::ThresholdAmbiguous;
            }
            let (mut lo, mut sum_lo) = (grid[i - 1].beta, grid[i - 1].sum);
            let (mut hi, mut sum_hi) = (grid[i].beta, grid[i].sum);
            for _ in 0..MAX_ITERATIONS {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let r = check_cv(g, mid, opts)?;
                evaluations += 1;
                let holds = r.verdict == Verdict::Holds;
                result.iterations.push(IterationRecord {
                    beta: mid,
                    sum: r.sum,
                    holds,
                });
                if holds {
                    lo = mid;
                    sum_lo = r.sum;
                } else {
                    hi = mid;
                    sum_hi = r.sum;
                }
            }
            result.beta_lo = lo;
            result.sum_lo = sum_lo;
            result.beta_hi = Some(hi);
            result.sum_hi = Some(sum_hi);
        }
    }
    result.grid = grid;
    result.evaluations = evaluations;
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}
