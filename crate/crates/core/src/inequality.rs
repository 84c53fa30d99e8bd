//! Executable checks of the two facts linking `k_{V,y}` to correlations:
//!
//! * the covariance inequality `⟨σ_u; σ_v⟩^h ≤ ⟨σ_u; σ_v⟩^{h=0}` under empty
//!   boundary conditions, probed by seeded random sweeps;
//! * the balancing-field identity: with `y` promoted to a spin and its field
//!   `h*` chosen so that `⟨σ_y⟩ = 0`, the magnetization difference across
//!   the flip at `y` equals `2⟨σ_x; σ_y⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{
    covariance, distribution_table, Boundary, BoundaryCondition, BoxGeometry, DistributionTable,
    FieldAssignment, SpinSystem,
};
use crate::{Error, Result};

/// Largest volume for covariance-inequality trials.
pub const MAX_DSS_VOLUME: usize = 16;
/// A margin below `-VIOLATION` is a counterexample.
pub const VIOLATION: f64 = 1e-12;
/// Default tolerance on `|⟨σ_y⟩|` at the balancing field.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-10;
/// Fraction of trials drawn with `u = v`.
pub const SAME_SITE_RATE: f64 = 0.05;

/// `⟨σ_u;σ_v⟩^{h=0} − ⟨σ_u;σ_v⟩^{h}` under empty boundary conditions.
pub fn dss_check(g: &BoxGeometry, beta: f64, h: &FieldAssignment, u: usize, v: usize) -> Result<f64> {
    if g.volume() > MAX_DSS_VOLUME {
        return Err(Error::TooLarge {
            what: "volume for covariance inequality",
            actual: g.volume(),
            limit: MAX_DSS_VOLUME,
        });
    }
    let zero = FieldAssignment::zero(g.volume());
    let free = covariance(g, beta, &zero, &Boundary::Free, u, v)?;
    let with_field = covariance(g, beta, h, &Boundary::Free, u, v)?;
    Ok(free - with_field)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Uniform,
    Zero,
}

/// One covariance-inequality trial; enough to replay it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DssTrial {
    pub index: u64,
    pub extents: Vec<usize>,
    pub beta: f64,
    pub h: Vec<f64>,
    pub u: usize,
    pub v: usize,
    #[serde(default)]
    pub margin: Option<f64>,
}

impl DssTrial {
    pub fn same_site(&self) -> bool {
        self.u == self.v
    }

    /// Recomputes the margin from the stored tuple.
    pub fn evaluate(&self) -> Result<f64> {
        let g = BoxGeometry::new(self.extents.len(), &self.extents)?;
        let h = FieldAssignment(self.h.clone());
        h.validate(g.volume())?;
        dss_check(&g, self.beta, &h, self.u, self.v)
    }
}

/// Deterministic trial `index` of the sweep seeded by `seed`: each index
/// reads its own ChaCha stream.
pub fn generate_trial(seed: u64, index: u64, max_extent: usize, fields: FieldMode) -> DssTrial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let extents = loop {
        let e = vec![rng.gen_range(1..=max_extent), rng.gen_range(1..=max_extent)];
        if e[0] * e[1] >= 2 {
            break e;
        }
    };
    let n = extents[0] * extents[1];
    let beta = 1.0 - rng.gen::<f64>();
    let h = match fields {
        FieldMode::Uniform => (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect(),
        FieldMode::Zero => vec![0.0; n],
    };
    let u = rng.gen_range(0..n);
    let v = if rng.gen_bool(SAME_SITE_RATE) {
        u
    } else {
        (u + rng.gen_range(1..n)) % n
    };
    DssTrial {
        index,
        extents,
        beta,
        h,
        u,
        v,
        margin: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DssSweep {
    pub schema: u32,
    pub seed: u64,
    pub trials: u64,
    pub max_extent: usize,
    pub fields: FieldMode,
    pub min_margin: f64,
    pub min_margin_distinct: f64,
    pub worst_trial: Option<u64>,
    pub same_site_trials: u64,
    pub violations: Vec<DssTrial>,
    pub log: Vec<DssTrial>,
}

pub fn dss_sweep(seed: u64, trials: u64, max_extent: usize, fields: FieldMode) -> Result<DssSweep> {
    if max_extent == 0 || max_extent * max_extent > MAX_DSS_VOLUME {
        return Err(Error::InvalidParameter(format!(
            "max extent {max_extent} must be in 1..=4"
        )));
    }
    if max_extent == 1 {
        return Err(Error::InvalidParameter(
            "max extent 1 leaves no pair of distinct sites".into(),
        ));
    }
    let log: Vec<DssTrial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut t = generate_trial(seed, i, max_extent, fields);
            t.margin = Some(t.evaluate()?);
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let margin = |t: &DssTrial| t.margin.unwrap_or(f64::NAN);
    let mut min_margin = f64::INFINITY;
    let mut min_distinct = f64::INFINITY;
    let mut worst = None;
    for t in &log {
        if margin(t) < min_margin {
            min_margin = margin(t);
            worst = Some(t.index);
        }
        if !t.same_site() {
            min_distinct = min_distinct.min(margin(t));
        }
    }
    Ok(DssSweep {
        schema: crate::certifier::SCHEMA_VERSION,
        seed,
        trials,
        max_extent,
        fields,
        min_margin,
        min_margin_distinct: min_distinct,
        worst_trial: worst,
        same_site_trials: log.iter().filter(|t| t.same_site()).count() as u64,
        violations: log.iter().filter(|t| margin(t) < -VIOLATION).cloned().collect(),
        log,
    })
}

/// The box `V ∪ {y}`: `y ∈ ∂V` becomes a spin carrying field `field_y`,
/// the rest of `∂V` stays frozen (or is dropped entirely when `rest` is
/// `None`). Outer neighbours of `y` do not interact.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedVolume {
    pub base: BoxGeometry,
    pub y: usize,
    /// Full-length boundary condition; the entry at `y` is ignored.
    pub rest: Option<BoundaryCondition>,
    pub field_y: f64,
}

impl AugmentedVolume {
    pub fn new(base: BoxGeometry, y: usize, rest: Option<BoundaryCondition>) -> Result<Self> {
        if y >= base.boundary_len() {
            return Err(Error::NotBoundarySite(y));
        }
        if let Some(b) = &rest {
            if b.len() != base.boundary_len() {
                return Err(Error::LengthMismatch {
                    what: "boundary condition",
                    expected: base.boundary_len(),
                    actual: b.len(),
                });
            }
        }
        if base.volume() >= crate::lattice::MAX_TABLE_VOLUME {
            return Err(Error::TooLarge {
                what: "augmented volume",
                actual: base.volume() + 1,
                limit: crate::lattice::MAX_TABLE_VOLUME,
            });
        }
        Ok(AugmentedVolume {
            base,
            y,
            rest,
            field_y: 0.0,
        })
    }

    pub fn with_field(&self, field_y: f64) -> Self {
        AugmentedVolume {
            field_y,
            ..self.clone()
        }
    }

    /// Index of the adjoined spin in the augmented system.
    pub fn y_index(&self) -> usize {
        self.base.volume()
    }

    /// Fields on `V` from the frozen part of `∂V`, plus `β σ_y` if `y` is
    /// treated as frozen at `sigma_y`.
    fn frozen_fields(&self, beta: f64, sigma_y: Option<i32>) -> Vec<f64> {
        let mut pull = vec![0i32; self.base.volume()];
        for &(x, z) in self.base.crossing_edges() {
            if z == self.y {
                if let Some(s) = sigma_y {
                    pull[x] += s;
                }
            } else if let Some(b) = &self.rest {
                pull[x] += b.spin(z);
            }
        }
        pull.iter().map(|&p| beta * p as f64).collect()
    }

    fn system(&self, beta: f64) -> SpinSystem {
        let n = self.base.volume();
        let mut edges = self.base.interior_edges().to_vec();
        edges.extend(self.base.boundary_neighbors(self.y).into_iter().map(|x| (x, n)));
        let mut field = self.frozen_fields(beta, None);
        field.push(self.field_y);
        SpinSystem::new(n + 1, &edges, beta, field)
    }

    /// `⟨σ_y⟩` in the augmented volume.
    pub fn mean_y(&self, beta: f64) -> f64 {
        self.system(beta).moments().magnetization[self.y_index()]
    }

    pub fn table(&self, beta: f64) -> DistributionTable {
        let (log_z, p) = self.system(beta).table();
        DistributionTable::from_parts(self.base.volume() + 1, p, log_z)
    }

    /// `q_V(· | σ_{∂V∖y}, σ_y)`: the measure on `V` with `y` frozen.
    pub fn frozen_table(&self, beta: f64, sigma_y: i32) -> DistributionTable {
        let sys = SpinSystem::new(
            self.base.volume(),
            self.base.interior_edges(),
            beta,
            self.frozen_fields(beta, Some(sigma_y)),
        );
        let (log_z, p) = sys.table();
        DistributionTable::from_parts(self.base.volume(), p, log_z)
    }

    fn frozen_magnetizations(&self, beta: f64, sigma_y: i32) -> Vec<f64> {
        SpinSystem::new(
            self.base.volume(),
            self.base.interior_edges(),
            beta,
            self.frozen_fields(beta, Some(sigma_y)),
        )
        .moments()
        .magnetization
    }
}

/// Field `h*` at `y` with `|⟨σ_y⟩^{β,h*}| ≤ tol`, by bisection on
/// `[−(2dβ+1), 2dβ+1]`.
pub fn balancing_field(av: &AugmentedVolume, beta: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let reach = 2.0 * av.base.dim() as f64 * beta + 1.0;
    let f = |h: f64| av.with_field(h).mean_y(beta);
    let (mut lo, mut hi) = (-reach, reach);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::BadBracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if !(f_lo <= f_mid && f_mid <= f_hi) {
            return Err(Error::BadBracket { lo, hi, f_lo, f_hi });
        }
        if f_mid.abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub h_star: f64,
    pub mean_y: f64,
    /// `⟨σ_x⟩_{σ_y=+} − ⟨σ_x⟩_{σ_y=−}`.
    pub magnetization_difference: f64,
    /// `2⟨σ_x; σ_y⟩` in the augmented volume at `h*`.
    pub twice_covariance: f64,
    pub residual: f64,
}

/// Compares the flip magnetization difference at `x` with twice the
/// augmented-volume covariance at the balancing field.
pub fn covariance_identity_check(av: &AugmentedVolume, beta: f64, x: usize, tol: f64) -> Result<IdentityCheck> {
    if x >= av.base.volume() {
        return Err(Error::SiteNotInVolume(x));
    }
    let h_star = balancing_field(av, beta, tol)?;
    let balanced = av.with_field(h_star);
    let table = balanced.table(beta);
    let cov = table.covariance(x, balanced.y_index());
    let diff = av.frozen_magnetizations(beta, 1)[x] - av.frozen_magnetizations(beta, -1)[x];
    Ok(IdentityCheck {
        h_star,
        mean_y: table.mean_spin(balanced.y_index()),
        magnetization_difference: diff,
        twice_covariance: 2.0 * cov,
        residual: (diff - 2.0 * cov).abs(),
    })
}

/// Largest entrywise gap between the augmented measure conditioned on
/// `σ_y = ±1` and the box measures `q_V(·|σ_∂V)`, `q_V(·|σ_∂V^y)`.
pub fn conditional_table_gap(av: &AugmentedVolume, beta: f64) -> Result<f64> {
    let n = av.base.volume();
    let joint = av.table(beta);
    let p = joint.probabilities();
    let half = 1usize << n;
    let mut gap = 0.0f64;
    for (sigma_y, offset) in [(1, half), (-1, 0)] {
        let mass: f64 = p[offset..offset + half].iter().sum();
        let reference = match &av.rest {
            Some(b) => {
                let mut b = b.clone();
                b.set(av.y, sigma_y);
                distribution_table(&av.base, beta, &FieldAssignment::zero(n), &Boundary::Fixed(b))?
            }
            None => av.frozen_table(beta, sigma_y),
        };
        for (c, r) in reference.probabilities().iter().enumerate() {
            gap = gap.max((p[offset + c] / mass - r).abs());
        }
    }
    Ok(gap)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityInstance {
    pub extents: Vec<usize>,
    pub y: usize,
    pub rest: BoundaryCondition,
    pub beta: f64,
    pub x: usize,
    pub check: IdentityCheck,
    pub table_gap: f64,
}

/// Random augmented-volume instances on 2D boxes of side at most
/// `max_extent`, one ChaCha stream per instance.
pub fn identity_sweep(seed: u64, count: u64, max_extent: usize, tol: f64) -> Result<Vec<IdentityInstance>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let extents = vec![rng.gen_range(1..=max_extent), rng.gen_range(1..=max_extent)];
            let g = BoxGeometry::new(2, &extents)?;
            let y = rng.gen_range(0..g.boundary_len());
            let spins: Vec<i32> = (0..g.boundary_len())
                .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let rest = BoundaryCondition::from_spins(&spins)?;
            let beta = 1.0 - rng.gen::<f64>();
            let x = rng.gen_range(0..g.volume());
            let av = AugmentedVolume::new(g, y, Some(rest.clone()))?;
            let check = covariance_identity_check(&av, beta, x, tol)?;
            let table_gap = conditional_table_gap(&av.with_field(check.h_star), beta)?;
            Ok(IdentityInstance {
                extents,
                y,
                rest,
                beta,
                x,
                check,
                table_gap,
            })
        })
        .collect()
}
