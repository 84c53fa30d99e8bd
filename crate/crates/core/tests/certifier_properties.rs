use proptest::prelude::*;

use dscert::certifier::{
    beta_v, boundary_orbits, check_cv, dependence_coefficient, dobrushin_single_site, BisectionStatus,
    BoundarySearch, CheckOptions, Mode, Verdict,
};
use dscert::lattice::BoxGeometry;

fn opts(mode: Mode, symmetry: bool, search: BoundarySearch) -> CheckOptions {
    CheckOptions { mode, symmetry, search }
}

fn small_box() -> impl Strategy<Value = BoxGeometry> {
    prop::sample::select(vec![vec![1, 1], vec![1, 2], vec![2, 2], vec![1, 3]])
        .prop_map(|e| BoxGeometry::new(2, &e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coefficients_grow_with_beta(g in small_box(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let k_lo = check_cv(&g, lo, &CheckOptions::default()).unwrap();
        let k_hi = check_cv(&g, hi, &CheckOptions::default()).unwrap();
        for (x, y) in k_lo.coefficients.iter().zip(&k_hi.coefficients) {
            prop_assert!(y.value >= x.value - 1e-12, "{} > {}", x.value, y.value);
        }
    }

    #[test]
    fn symmetry_reduction_preserves_coefficients(g in small_box(), beta in 0.0f64..1.0) {
        let with = check_cv(&g, beta, &opts(Mode::Fast, true, BoundarySearch::Full)).unwrap();
        let without = check_cv(&g, beta, &opts(Mode::Fast, false, BoundarySearch::Full)).unwrap();
        for (x, y) in with.coefficients.iter().zip(&without.coefficients) {
            prop_assert!((x.value - y.value).abs() <= 1e-12);
        }
        prop_assert!(with.stats.evaluated <= without.stats.evaluated);
    }

    #[test]
    fn fast_mode_matches_exact_transport(g in small_box(), beta in 0.0f64..1.0) {
        let fast = check_cv(&g, beta, &opts(Mode::Fast, true, BoundarySearch::Full)).unwrap();
        let exact = check_cv(&g, beta, &opts(Mode::Oracle, true, BoundarySearch::Full)).unwrap();
        prop_assert!((fast.sum - exact.sum).abs() <= 1e-9);
    }

    #[test]
    fn extremal_search_is_a_lower_bound(g in small_box(), beta in 0.0f64..1.0) {
        let full = check_cv(&g, beta, &opts(Mode::Fast, true, BoundarySearch::Full)).unwrap();
        let extremal = check_cv(&g, beta, &opts(Mode::Fast, true, BoundarySearch::ExtremalOnly)).unwrap();
        prop_assert!(!extremal.certifying);
        prop_assert!(extremal.sum <= full.sum + 1e-12);
    }
}

#[test]
fn orbit_multiplicities_cover_the_boundary() {
    let g = BoxGeometry::new(2, &[2, 3]).unwrap();
    for y in 0..g.boundary_len() {
        let orbits = boundary_orbits(&g, y, true, BoundarySearch::Full).unwrap();
        let total: u64 = orbits.iter().map(|o| o.multiplicity).sum();
        assert_eq!(total, 1 << (g.boundary_len() - 1));
        assert!(orbits.iter().all(|o| o.representative.spin(y) == 1));
    }
}

#[test]
fn single_site_box_matches_local_coefficient() {
    for dim in 1..=3 {
        let extents = vec![1; dim];
        let g = BoxGeometry::new(dim, &extents).unwrap();
        for beta in [0.05, 0.2, 0.7] {
            let k = dependence_coefficient(&g, beta, 0, &CheckOptions::default()).unwrap();
            let local = dobrushin_single_site(dim, beta).unwrap();
            assert!((k.value - local.k).abs() <= 1e-12);
            assert!((k.value - 0.5 * (2.0 * beta).tanh()).abs() <= 1e-12);
        }
    }
}

#[test]
fn larger_box_certifies_further() {
    let o = CheckOptions::default();
    let one = beta_v(&BoxGeometry::new(2, &[1, 1]).unwrap(), 1e-6, 1.0, 16, &o).unwrap();
    let four = beta_v(&BoxGeometry::new(2, &[2, 2]).unwrap(), 1e-6, 1.0, 16, &o).unwrap();
    assert_eq!(one.status, BisectionStatus::Bracketed);
    assert_eq!(four.status, BisectionStatus::Bracketed);
    assert!(one.beta_hi.unwrap() < four.beta_lo);
    assert!(four.beta_hi.unwrap() < dscert::onsager_beta());
    assert!(four.monotonicity_violations.is_empty());
    assert!(four.beta_hi.unwrap() - four.beta_lo <= 1e-6);
}

#[test]
fn chain_never_loses_uniqueness() {
    let g = BoxGeometry::new(1, &[3]).unwrap();
    let r = beta_v(&g, 1e-6, 2.0, 8, &CheckOptions::default()).unwrap();
    assert_eq!(r.status, BisectionStatus::UnboundedUpToBetaMax);
    assert!(r.beta_hi.is_none());
    assert_eq!(check_cv(&g, 5.0, &CheckOptions::default()).unwrap().verdict, Verdict::Holds);
}

#[test]
fn zero_beta_is_trivial() {
    let g = BoxGeometry::new(2, &[3, 3]).unwrap();
    let r = check_cv(&g, 0.0, &CheckOptions::default()).unwrap();
    assert!(r.coefficients.iter().all(|k| k.value == 0.0));
    assert_eq!(r.verdict, Verdict::Holds);
}
