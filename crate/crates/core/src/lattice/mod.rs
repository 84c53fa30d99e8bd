//! Exact finite-volume Ising computations on rectangular boxes.
//!
//! Energies follow `H_V(σ_V | σ_∂V) = −Σ_{x∼y ∈ V} σ_x σ_y − Σ_{x ∈ V, y ∈ ∂V} σ_x σ_y`
//! with unit ferromagnetic couplings; the measure is
//! `exp(−β H_V + Σ_x h_x σ_x) / Z`.

mod enumerate;
mod geometry;
mod spins;
pub mod transfer;

pub use geometry::{parse_extents, BoxGeometry, BoxSymmetry, Coord, MAX_TABLE_VOLUME, MAX_VOLUME};
pub use spins::{Boundary, BoundaryCondition, FieldAssignment, SpinConfiguration};

pub(crate) use enumerate::SpinSystem;

use serde::{Deserialize, Serialize};
use transfer::TransferSystem;

use crate::{Error, Result};

/// Summation strategy for partition functions and magnetizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Transfer,
}

/// Normalized Gibbs measure on `Ω_V`, indexed by configuration bits.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    volume: usize,
    probabilities: Vec<f64>,
    log_z: f64,
}

impl DistributionTable {
    pub(crate) fn from_parts(volume: usize, probabilities: Vec<f64>, log_z: f64) -> Self {
        debug_assert_eq!(probabilities.len(), 1 << volume);
        DistributionTable {
            volume,
            probabilities,
            log_z,
        }
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn mean_spin(&self, x: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(c, p)| if c >> x & 1 == 1 { *p } else { -*p })
            .sum()
    }

    pub fn mean_product(&self, u: usize, v: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(c, p)| if (c >> u ^ c >> v) & 1 == 0 { *p } else { -*p })
            .sum()
    }

    pub fn covariance(&self, u: usize, v: usize) -> f64 {
        self.mean_product(u, v) - self.mean_spin(u) * self.mean_spin(v)
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        (0..self.volume).map(|x| self.mean_spin(x)).collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be finite and non-negative, got {beta}"
        )));
    }
    Ok(())
}

fn check_boundary(g: &BoxGeometry, b: &Boundary) -> Result<()> {
    if let Boundary::Fixed(bc) = b {
        if bc.len() != g.boundary_len() {
            return Err(Error::LengthMismatch {
                what: "boundary condition",
                expected: g.boundary_len(),
                actual: bc.len(),
            });
        }
    }
    Ok(())
}

/// `H_V(σ_V | σ_∂V)`; always an integer.
pub fn energy(g: &BoxGeometry, sigma: &SpinConfiguration, b: &BoundaryCondition) -> Result<f64> {
    if sigma.len() != g.volume() {
        return Err(Error::LengthMismatch {
            what: "spin configuration",
            expected: g.volume(),
            actual: sigma.len(),
        });
    }
    check_boundary(g, &Boundary::Fixed(b.clone()))?;
    let interior: i64 = g
        .interior_edges()
        .iter()
        .map(|&(i, j)| (sigma.spin(i) * sigma.spin(j)) as i64)
        .sum();
    let crossing: i64 = g
        .crossing_edges()
        .iter()
        .map(|&(x, y)| (sigma.spin(x) * b.spin(y)) as i64)
        .sum();
    Ok(-(interior + crossing) as f64)
}

/// Effective linear coefficient of each interior spin in the log-weight:
/// `h_x + β Σ_{y ∈ ∂V, y∼x} σ_y`.
pub(crate) fn site_fields(g: &BoxGeometry, beta: f64, h: &FieldAssignment, b: &Boundary) -> Vec<f64> {
    let mut pull = vec![0i32; g.volume()];
    if let Boundary::Fixed(bc) = b {
        for &(x, y) in g.crossing_edges() {
            pull[x] += bc.spin(y);
        }
    }
    pull.iter()
        .zip(&h.0)
        .map(|(&p, &hx)| hx + beta * p as f64)
        .collect()
}

pub(crate) fn spin_system(g: &BoxGeometry, beta: f64, h: &FieldAssignment, b: &Boundary) -> SpinSystem {
    SpinSystem::new(g.volume(), g.interior_edges(), beta, site_fields(g, beta, h, b))
}

type SiteIndex = Box<dyn Fn(usize, usize) -> usize>;

/// Column layout of a 2D box for the transfer path: `(columns, height,
/// site index of (column, row))`.
fn strip_layout(g: &BoxGeometry) -> Result<(usize, usize, SiteIndex)> {
    if g.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "transfer path needs d = 2, got d = {}",
            g.dim()
        )));
    }
    let (l0, l1) = (g.extents()[0], g.extents()[1]);
    let (cols, height) = if l1 <= l0 { (l0, l1) } else { (l1, l0) };
    if height > transfer::MAX_HEIGHT {
        return Err(Error::TooLarge {
            what: "transfer strip height",
            actual: height,
            limit: transfer::MAX_HEIGHT,
        });
    }
    if cols > transfer::MAX_COLUMNS {
        return Err(Error::TooLarge {
            what: "transfer strip length",
            actual: cols,
            limit: transfer::MAX_COLUMNS,
        });
    }
    let index: SiteIndex = if l1 <= l0 {
        Box::new(move |c, r| c * l1 + r)
    } else {
        Box::new(move |c, r| r * l1 + c)
    };
    Ok((cols, height, index))
}

fn transfer_system(
    g: &BoxGeometry,
    beta: f64,
    h: &FieldAssignment,
    b: &Boundary,
) -> Result<(TransferSystem, SiteIndex)> {
    let (cols, height, index) = strip_layout(g)?;
    let f = site_fields(g, beta, h, b);
    let field = (0..cols)
        .map(|c| (0..height).map(|r| f[index(c, r)]).collect())
        .collect();
    Ok((TransferSystem::new(beta, field), index))
}

fn validate(g: &BoxGeometry, beta: f64, h: &FieldAssignment, b: &Boundary) -> Result<()> {
    check_beta(beta)?;
    h.validate(g.volume())?;
    check_boundary(g, b)
}

/// `log Z(V, β, h, σ_∂V)`. Uses enumeration when `|V| ≤ 24`, otherwise
/// the transfer matrix.
pub fn partition_function(g: &BoxGeometry, beta: f64, h: &FieldAssignment, b: &Boundary) -> Result<f64> {
    let method = if g.volume() <= MAX_VOLUME {
        Method::Naive
    } else {
        Method::Transfer
    };
    partition_function_with(g, beta, h, b, method)
}

pub fn partition_function_with(
    g: &BoxGeometry,
    beta: f64,
    h: &FieldAssignment,
    b: &Boundary,
    method: Method,
) -> Result<f64> {
    validate(g, beta, h, b)?;
    match method {
        Method::Naive => {
            g.check_naive_size()?;
            Ok(spin_system(g, beta, h, b).log_partition())
        }
        Method::Transfer => Ok(transfer_system(g, beta, h, b)?.0.log_partition()),
    }
}

pub fn distribution_table(
    g: &BoxGeometry,
    beta: f64,
    h: &FieldAssignment,
    b: &Boundary,
) -> Result<DistributionTable> {
    validate(g, beta, h, b)?;
    g.check_table_size()?;
    let (log_z, probabilities) = spin_system(g, beta, h, b).table();
    Ok(DistributionTable::from_parts(g.volume(), probabilities, log_z))
}

/// `⟨σ_x⟩` for every interior site.
pub fn magnetizations(
    g: &BoxGeometry,
    beta: f64,
    h: &FieldAssignment,
    b: &Boundary,
    method: Method,
) -> Result<Vec<f64>> {
    validate(g, beta, h, b)?;
    match method {
        Method::Naive => {
            g.check_naive_size()?;
            Ok(spin_system(g, beta, h, b).moments().magnetization)
        }
        Method::Transfer => {
            let (sys, index) = transfer_system(g, beta, h, b)?;
            let (_, cols) = sys.moments();
            let mut out = vec![0.0; g.volume()];
            for (c, col) in cols.iter().enumerate() {
                for (r, m) in col.iter().enumerate() {
                    out[index(c, r)] = *m;
                }
            }
            Ok(out)
        }
    }
}

/// `⟨σ_u; σ_v⟩ = ⟨σ_u σ_v⟩ − ⟨σ_u⟩⟨σ_v⟩`.
pub fn covariance(
    g: &BoxGeometry,
    beta: f64,
    h: &FieldAssignment,
    b: &Boundary,
    u: usize,
    v: usize,
) -> Result<f64> {
    for s in [u, v] {
        if s >= g.volume() {
            return Err(Error::SiteNotInVolume(s));
        }
    }
    Ok(distribution_table(g, beta, h, b)?.covariance(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plus(g: &BoxGeometry) -> Boundary {
        Boundary::Fixed(BoundaryCondition::all_plus(g.boundary_len()))
    }

    #[test]
    fn energies() {
        let g = BoxGeometry::new(2, &[1, 1]).unwrap();
        let up = SpinConfiguration::all_plus(1);
        assert_eq!(energy(&g, &up, &BoundaryCondition::all_plus(4)).unwrap(), -4.0);
        let b: BoundaryCondition = "+++-".parse().unwrap();
        assert_eq!(energy(&g, &up, &b).unwrap(), -2.0);

        let g = BoxGeometry::new(2, &[2, 1]).unwrap();
        let e = energy(&g, &SpinConfiguration::all_plus(2), &BoundaryCondition::all_plus(6)).unwrap();
        assert_eq!(e, -7.0);

        assert!(energy(&g, &SpinConfiguration::all_plus(3), &BoundaryCondition::all_plus(6)).is_err());
        assert!(energy(&g, &SpinConfiguration::all_plus(2), &BoundaryCondition::all_plus(5)).is_err());
    }

    #[test]
    fn single_site_partition_function() {
        let g = BoxGeometry::new(2, &[1, 1]).unwrap();
        for beta in [0.0, 0.1, 0.7, 3.0] {
            let lz = partition_function(&g, beta, &FieldAssignment::zero(1), &plus(&g)).unwrap();
            let expect = ((4.0 * beta).exp() + (-4.0 * beta).exp()).ln();
            assert_abs_diff_eq!(lz, expect, epsilon = 1e-14);
            let m = magnetizations(&g, beta, &FieldAssignment::zero(1), &plus(&g), Method::Naive).unwrap();
            assert_abs_diff_eq!(m[0], (4.0 * beta).tanh(), epsilon = 1e-14);
            let t = distribution_table(&g, beta, &FieldAssignment::zero(1), &plus(&g)).unwrap();
            let p = (4.0 * beta).exp() / ((4.0 * beta).exp() + (-4.0 * beta).exp());
            assert_abs_diff_eq!(t.probabilities()[1], p, epsilon = 1e-14);
        }
    }

    #[test]
    fn infinite_temperature() {
        for ext in [vec![2, 2], vec![3, 2], vec![1, 4]] {
            let g = BoxGeometry::new(2, &ext).unwrap();
            let b = Boundary::Fixed("+-".repeat(g.boundary_len())[..g.boundary_len()].parse().unwrap());
            let h = FieldAssignment::zero(g.volume());
            let lz = partition_function(&g, 0.0, &h, &b).unwrap();
            assert_abs_diff_eq!(lz, g.volume() as f64 * 2f64.ln(), epsilon = 1e-13);
            let t = distribution_table(&g, 0.0, &h, &b).unwrap();
            let u = 1.0 / (1u32 << g.volume()) as f64;
            assert!(t.probabilities().iter().all(|&p| (p - u).abs() < 1e-16));
            for method in [Method::Naive, Method::Transfer] {
                let m = magnetizations(&g, 0.0, &h, &b, method).unwrap();
                assert!(m.iter().all(|x| x.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn two_by_two_partition_paths_agree() {
        // 16-term sum written out from the energy function
        let g = BoxGeometry::new(2, &[2, 2]).unwrap();
        let bc = BoundaryCondition::all_plus(g.boundary_len());
        let beta = 0.3;
        let z: f64 = (0u32..16)
            .map(|c| {
                let e = energy(&g, &SpinConfiguration::new(4, c).unwrap(), &bc).unwrap();
                (-beta * e).exp()
            })
            .sum();
        let h = FieldAssignment::zero(4);
        let b = Boundary::Fixed(bc);
        let naive = partition_function_with(&g, beta, &h, &b, Method::Naive).unwrap();
        let tm = partition_function_with(&g, beta, &h, &b, Method::Transfer).unwrap();
        assert_abs_diff_eq!(naive, z.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(tm, z.ln(), epsilon = 1e-13);
    }

    #[test]
    fn three_by_three_center_magnetization() {
        let g = BoxGeometry::new(2, &[3, 3]).unwrap();
        let bc = BoundaryCondition::all_plus(g.boundary_len());
        let beta = 0.44;
        let (mut z, mut m) = (0.0, 0.0);
        for c in 0u32..512 {
            let sigma = SpinConfiguration::new(9, c).unwrap();
            let w = (-beta * energy(&g, &sigma, &bc).unwrap()).exp();
            z += w;
            m += w * sigma.spin(4) as f64;
        }
        let expect = m / z;
        let h = FieldAssignment::zero(9);
        let b = Boundary::Fixed(bc);
        for method in [Method::Naive, Method::Transfer] {
            let got = magnetizations(&g, beta, &h, &b, method).unwrap();
            assert_abs_diff_eq!(got[4], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn table_spin_flip_symmetry() {
        let g = BoxGeometry::new(2, &[2, 3]).unwrap();
        let bc: BoundaryCondition = "++-+--+-++".parse().unwrap();
        let h = FieldAssignment::zero(6);
        let a = distribution_table(&g, 0.37, &h, &Boundary::Fixed(bc.clone())).unwrap();
        let b = distribution_table(&g, 0.37, &h, &Boundary::Fixed(bc.negated())).unwrap();
        let n = a.probabilities().len();
        for c in 0..n {
            assert_abs_diff_eq!(a.probabilities()[c], b.probabilities()[n - 1 - c], epsilon = 1e-15);
        }
    }

    #[test]
    fn free_pair_covariance() {
        let g = BoxGeometry::new(2, &[2, 1]).unwrap();
        let h = FieldAssignment::zero(2);
        for beta in [0.0, 0.2, 0.9] {
            let c = covariance(&g, beta, &h, &Boundary::Free, 0, 1).unwrap();
            assert_abs_diff_eq!(c, f64::tanh(beta), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(covariance(&g, 0.0, &h, &Boundary::Free, 0, 0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            covariance(&g, 0.1, &h, &Boundary::Free, 0, 2),
            Err(Error::SiteNotInVolume(2))
        ));
    }

    #[test]
    fn method_limits() {
        let g = BoxGeometry::new(3, &[1, 1, 2]).unwrap();
        let h = FieldAssignment::zero(2);
        assert!(matches!(
            magnetizations(&g, 0.1, &h, &Boundary::Free, Method::Transfer),
            Err(Error::Unsupported(_))
        ));
        let strip = BoxGeometry::new(2, &[3, 2000]).unwrap();
        let h = FieldAssignment::zero(strip.volume());
        let b = Boundary::Fixed(BoundaryCondition::all_plus(strip.boundary_len()));
        assert!(magnetizations(&strip, 0.2, &h, &b, Method::Naive).is_err());
        let m = magnetizations(&strip, 0.2, &h, &b, Method::Transfer).unwrap();
        assert!(m.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(partition_function(&strip, 0.2, &h, &b).unwrap().is_finite());
        assert!(partition_function(&g, -1.0, &FieldAssignment::zero(2), &Boundary::Free).is_err());
    }
}
