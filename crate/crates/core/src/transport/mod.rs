//! Kantorovich (KROV) distance between Gibbs measures on `Ω_V`.
//!
//! Two routes are provided: [`kantorovich_exact`], an exact transportation
//! simplex over the full supports, and [`kantorovich_monotone`], which reads
//! the distance off the magnetization difference of a stochastically
//! ordered pair. The second is what the certifier uses; the first is the
//! oracle it is validated against.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::lattice::DistributionTable;
use crate::{Error, Result};

/// Largest support (number of atoms with positive mass) the exact solver takes.
pub const MAX_EXACT_SUPPORT: usize = 1 << 12;

/// Entries of `Δm` below this are treated as rounding noise and clipped.
pub const ORDER_NOISE: f64 = 1e-12;
/// Entries below `-ORDER_VIOLATION` mean the pair is not ordered.
pub const ORDER_VIOLATION: f64 = 1e-9;

const MARGINAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    /// `ρ(σ′, σ″) = Σ_x w_x 1{σ′_x ≠ σ″_x}`.
    WeightedHamming { weights: Vec<f64> },
    /// `ρ(σ′, σ″) = 1{σ′ ≠ σ″}`; transport cost is then the variational distance.
    Discrete,
}

impl MetricSpec {
    /// `Σ_x |σ′_x − σ″_x|`, i.e. weight 2 on every site.
    pub fn spin_difference(volume: usize) -> Self {
        MetricSpec::WeightedHamming {
            weights: vec![2.0; volume],
        }
    }

    fn validate(&self, volume: usize) -> Result<()> {
        if let MetricSpec::WeightedHamming { weights } = self {
            if weights.len() != volume {
                return Err(Error::LengthMismatch {
                    what: "metric weights",
                    expected: volume,
                    actual: weights.len(),
                });
            }
            if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::InvalidParameter("metric weights must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        match self {
            MetricSpec::Discrete => (a != b) as u8 as f64,
            MetricSpec::WeightedHamming { weights } => {
                let mut diff = a ^ b;
                let mut d = 0.0;
                while diff != 0 {
                    d += weights[diff.trailing_zeros() as usize];
                    diff &= diff - 1;
                }
                d
            }
        }
    }

    fn is_integral(&self) -> bool {
        match self {
            MetricSpec::Discrete => true,
            MetricSpec::WeightedHamming { weights } => weights.iter().all(|w| w.fract() == 0.0),
        }
    }
}

/// Sparse coupling of two measures on `Ω_V`: `(i, j, mass)` triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingPlan {
    pub entries: Vec<(usize, usize, f64)>,
}

impl CouplingPlan {
    pub fn row_sums(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, _, x) in &self.entries {
            out[i] += x;
        }
        out
    }

    pub fn column_sums(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(_, j, x) in &self.entries {
            out[j] += x;
        }
        out
    }

    pub fn cost(&self, metric: &MetricSpec) -> f64 {
        self.entries.iter().map(|&(i, j, x)| x * metric.distance(i, j)).sum()
    }

    /// Largest marginal deviation from `(μ, ν)`.
    pub fn marginal_error(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let rows = self.row_sums(mu.len());
        let cols = self.column_sums(nu.len());
        rows.iter()
            .zip(mu)
            .chain(cols.iter().zip(nu))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn same_space(mu: &DistributionTable, nu: &DistributionTable) -> Result<()> {
    if mu.volume() != nu.volume() {
        return Err(Error::SupportMismatch(mu.volume(), nu.volume()));
    }
    Ok(())
}

/// Exact `d_K(μ, ν) = inf_{P ∈ Π(μ,ν)} Σ ρ(x, y) P(x, y)` with an optimal plan.
pub fn kantorovich_exact(
    mu: &DistributionTable,
    nu: &DistributionTable,
    metric: &MetricSpec,
) -> Result<(f64, CouplingPlan)> {
    same_space(mu, nu)?;
    metric.validate(mu.volume())?;
    let support = |t: &DistributionTable| -> Vec<usize> {
        t.probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    };
    let (rows, cols) = (support(mu), support(nu));
    for s in [rows.len(), cols.len()] {
        if s > MAX_EXACT_SUPPORT {
            return Err(Error::TooLarge {
                what: "transport support",
                actual: s,
                limit: MAX_EXACT_SUPPORT,
            });
        }
    }
    let supply: Vec<f64> = rows.iter().map(|&i| mu.probabilities()[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu.probabilities()[j]).collect();
    let cost: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| metric.distance(i, j))
        .collect();
    let sol = simplex::solve(&supply, &demand, &cost, metric.is_integral())?;
    let plan = CouplingPlan {
        entries: sol
            .flows
            .iter()
            .map(|&(a, b, x)| (rows[a], cols[b], x))
            .collect(),
    };
    let err = plan.marginal_error(mu.probabilities(), nu.probabilities());
    if err > MARGINAL_TOL {
        return Err(Error::MarginalMismatch(err));
    }
    Ok((sol.cost, plan))
}

/// Distance of an ordered pair from its magnetization difference
/// `Δm_x = ⟨σ_x⟩_higher − ⟨σ_x⟩_lower`, under the metric `Σ_x |σ′_x − σ″_x|`.
///
/// The monotone coupling moves mass only upward, so its cost is `Σ_x Δm_x`;
/// `Σ_x σ_x` is 1-Lipschitz for that metric, so no coupling does better.
pub fn kantorovich_monotone(delta_m: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (index, &d) in delta_m.iter().enumerate() {
        if !d.is_finite() || d < -ORDER_VIOLATION {
            return Err(Error::NotOrdered { index, value: d });
        }
        if d > 0.0 {
            total += d;
        } else if d < -ORDER_NOISE {
            log_clip(index, d);
        }
    }
    Ok(total)
}

// Between the noise floor and the violation threshold: clipped, but kept
// visible in debug builds.
fn log_clip(index: usize, value: f64) {
    debug_assert!(value >= -ORDER_VIOLATION, "entry {index} = {value:e}");
}

/// `(1/2) Σ_i |μ_i − ν_i|`.
pub fn variational_distance(mu: &DistributionTable, nu: &DistributionTable) -> Result<f64> {
    same_space(mu, nu)?;
    Ok(0.5
        * mu.probabilities()
            .iter()
            .zip(nu.probabilities())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}
