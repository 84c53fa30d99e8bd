//! Dependence coefficients `k_{V,y}^β`, the uniqueness condition
//! `Σ_{y∈∂V} k_{V,y} < |V|`, and threshold bracketing in `β`.
//!
//! `k_{V,y}^β = ½ max_{σ_∂V} d_K(q(·|σ_∂V), q(·|σ_∂V^y))`, where the pair is
//! always taken with `σ_y = +1` on the first boundary condition. The
//! maximum is over full symmetry orbits of `σ_{∂V∖y}`; nothing is pruned.

mod bisection;
mod orbits;

pub use bisection::{beta_v, BisectionResult, BisectionStatus, GridRow, IterationRecord};
pub use orbits::{boundary_orbits, BoundaryOrbit, BoundarySearch, MAX_FREE_BOUNDARY};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{
    distribution_table, spin_system, Boundary, BoundaryCondition, BoxGeometry, Coord, FieldAssignment,
    MAX_VOLUME,
};
use crate::transport::{kantorovich_exact, kantorovich_monotone, MetricSpec};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Margin subtracted from `|V|` before the strict comparison.
pub const GUARD: f64 = 1e-9;

/// Largest volume for which oracle mode builds full tables and solves the
/// transport problem exactly.
pub const MAX_ORACLE_VOLUME: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Monotone-coupling distance from magnetization differences.
    Fast,
    /// Exact transport between the two conditional tables.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    ExactOt,
    Monotone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub mode: Mode,
    pub symmetry: bool,
    pub search: BoundarySearch,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            mode: Mode::Fast,
            symmetry: true,
            search: BoundarySearch::Full,
        }
    }
}

impl CheckOptions {
    pub fn certifying(&self) -> bool {
        self.search == BoundarySearch::Full
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceCoefficient {
    pub y: usize,
    pub site: Coord,
    pub value: f64,
    pub argmax: BoundaryCondition,
    pub method: DistanceMethod,
    /// Boundary conditions evaluated for this site (0 when copied from a
    /// symmetric site).
    pub evaluated: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnumerationStats {
    /// `|∂V| · 2^{|∂V|−1}`: flip pairs without any reduction.
    pub raw: u64,
    pub evaluated: u64,
    pub skipped: u64,
    /// `skipped / raw`.
    pub reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub schema: u32,
    pub geometry: String,
    pub volume: usize,
    pub beta: f64,
    pub mode: Mode,
    pub symmetry: bool,
    pub search: BoundarySearch,
    pub certifying: bool,
    pub coefficients: Vec<DependenceCoefficient>,
    pub sum: f64,
    pub threshold: f64,
    pub guard: f64,
    pub verdict: Verdict,
    pub stats: EnumerationStats,
    pub wall_time_s: f64,
}

fn check_sizes(g: &BoxGeometry, mode: Mode) -> Result<()> {
    let limit = match mode {
        Mode::Fast => MAX_VOLUME,
        Mode::Oracle => MAX_ORACLE_VOLUME,
    };
    if g.volume() > limit {
        return Err(Error::TooLarge {
            what: "volume for certification",
            actual: g.volume(),
            limit,
        });
    }
    Ok(())
}

fn exact_distance(g: &BoxGeometry, beta: f64, hi: &BoundaryCondition, lo: &BoundaryCondition) -> Result<f64> {
    let h = FieldAssignment::zero(g.volume());
    let mu = distribution_table(g, beta, &h, &Boundary::Fixed(hi.clone()))?;
    let nu = distribution_table(g, beta, &h, &Boundary::Fixed(lo.clone()))?;
    Ok(kantorovich_exact(&mu, &nu, &MetricSpec::spin_difference(g.volume()))?.0)
}

/// `d_K(q(·|b), q(·|b^y))` for a boundary condition with `σ_y = +1`.
pub fn flip_distance(g: &BoxGeometry, beta: f64, b: &BoundaryCondition, y: usize, mode: Mode) -> Result<f64> {
    let lower = b.flipped(y);
    match mode {
        Mode::Oracle => exact_distance(g, beta, b, &lower),
        Mode::Fast => {
            let h = FieldAssignment::zero(g.volume());
            let m_hi = spin_system(g, beta, &h, &Boundary::Fixed(b.clone())).moments();
            let m_lo = spin_system(g, beta, &h, &Boundary::Fixed(lower.clone())).moments();
            let delta: Vec<f64> = m_hi
                .magnetization
                .iter()
                .zip(&m_lo.magnetization)
                .map(|(a, c)| a - c)
                .collect();
            match kantorovich_monotone(&delta) {
                Err(Error::NotOrdered { .. }) if g.volume() <= MAX_ORACLE_VOLUME => {
                    exact_distance(g, beta, b, &lower)
                }
                other => other,
            }
        }
    }
}

fn validate(g: &BoxGeometry, beta: f64, opts: &CheckOptions) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta = {beta}")));
    }
    check_sizes(g, opts.mode)
}

/// `k_{V,y}^β` by enumeration of the boundary orbits for `y`.
pub fn dependence_coefficient(
    g: &BoxGeometry,
    beta: f64,
    y: usize,
    opts: &CheckOptions,
) -> Result<DependenceCoefficient> {
    validate(g, beta, opts)?;
    let orbits = if beta == 0.0 {
        // No boundary field at β = 0: every σ_∂V induces the same measure,
        // so one pair decides the maximum.
        if y >= g.boundary_len() {
            return Err(Error::NotBoundarySite(y));
        }
        let mut b = BoundaryCondition::all_plus(g.boundary_len());
        b.set(y, 1);
        vec![BoundaryOrbit {
            representative: b,
            multiplicity: 1u64 << (g.boundary_len() - 1).min(63),
        }]
    } else {
        boundary_orbits(g, y, opts.symmetry, opts.search)?
    };
    let distances: Vec<Result<f64>> = orbits
        .par_iter()
        .map(|o| flip_distance(g, beta, &o.representative, y, opts.mode))
        .collect();
    // canonical-order reduction; first maximum wins
    let mut best = 0usize;
    let mut best_d = f64::NEG_INFINITY;
    for (k, d) in distances.into_iter().enumerate() {
        let d = d?;
        if d > best_d {
            best_d = d;
            best = k;
        }
    }
    Ok(DependenceCoefficient {
        y,
        site: g.boundary_sites()[y].clone(),
        value: 0.5 * best_d,
        argmax: orbits[best].representative.clone(),
        method: match opts.mode {
            Mode::Fast => DistanceMethod::Monotone,
            Mode::Oracle => DistanceMethod::ExactOt,
        },
        evaluated: orbits.len() as u64,
    })
}

/// Evaluates `Σ_{y∈∂V} k_{V,y}^β < |V|`.
pub fn check_cv(g: &BoxGeometry, beta: f64, opts: &CheckOptions) -> Result<CertificateReport> {
    let start = Instant::now();
    validate(g, beta, opts)?;
    let n = g.boundary_len();
    if beta > 0.0 && n - 1 > MAX_FREE_BOUNDARY {
        return Err(Error::TooLarge {
            what: "free boundary sites",
            actual: n - 1,
            limit: MAX_FREE_BOUNDARY,
        });
    }
    let syms = g.symmetries();
    let mut slots: Vec<Option<DependenceCoefficient>> = vec![None; n];
    for (rep, members) in orbits::site_classes(g, opts.symmetry) {
        let k = dependence_coefficient(g, beta, rep, opts)?;
        for (z, via) in members {
            slots[z] = Some(match via {
                None => k.clone(),
                Some(s) => {
                    let sym = &syms[s];
                    let mut argmax = BoundaryCondition::all_minus(n);
                    for i in 0..n {
                        argmax.set(sym.boundary[i], k.argmax.spin(i));
                    }
                    DependenceCoefficient {
                        y: z,
                        site: g.boundary_sites()[z].clone(),
                        argmax,
                        evaluated: 0,
                        ..k.clone()
                    }
                }
            });
        }
    }
    let coefficients: Vec<DependenceCoefficient> = slots.into_iter().map(|k| k.expect("every site classified")).collect();
    let sum: f64 = coefficients.iter().map(|k| k.value).sum();
    let threshold = g.volume() as f64;
    let raw = (n as u64).saturating_mul(1u64.checked_shl(n as u32 - 1).unwrap_or(u64::MAX));
    let evaluated: u64 = coefficients.iter().map(|k| k.evaluated).sum();
    Ok(CertificateReport {
        schema: SCHEMA_VERSION,
        geometry: g.id(),
        volume: g.volume(),
        beta,
        mode: opts.mode,
        symmetry: opts.symmetry,
        search: opts.search,
        certifying: opts.certifying(),
        coefficients,
        sum,
        threshold,
        guard: GUARD,
        verdict: if sum < threshold - GUARD {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
        stats: EnumerationStats {
            raw,
            evaluated,
            skipped: raw - evaluated,
            reduction: (raw - evaluated) as f64 / raw as f64,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingleSite {
    pub k: f64,
    pub condition_holds: bool,
}

/// Single-site coefficient from the one-spin conditional law
/// `q(σ_x | σ_∂{x}) ∝ exp(β σ_x Σ_y σ_y)`, maximized over the `2^{2d−1}`
/// configurations of the neighbours other than `y`.
pub fn dobrushin_single_site(dim: usize, beta: f64) -> Result<SingleSite> {
    if dim == 0 || dim > 16 {
        return Err(Error::InvalidParameter(format!("dimension {dim}")));
    }
    let others = 2 * dim - 1;
    let p_plus = |field: f64| {
        let up = (beta * field).exp();
        let down = (-beta * field).exp();
        up / (up + down)
    };
    let mut k = 0.0f64;
    for c in 0u32..(1 << others) {
        let s = 2 * c.count_ones() as i32 - others as i32;
        let d_k = 2.0 * (p_plus((s + 1) as f64) - p_plus((s - 1) as f64)).abs();
        k = k.max(0.5 * d_k);
    }
    Ok(SingleSite {
        k,
        condition_holds: 2.0 * dim as f64 * k < 1.0,
    })
}
