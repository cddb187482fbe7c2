mod common;

use approx::assert_abs_diff_eq;
use common::{random_diffeo, unit_grid};
use gaprenorm::diffeo::{Diffeo, Endpoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Up to ten random coefficients, zero-padded to the default basis size.
fn coeffs(max: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-max..max, 1..10).prop_map(|mut c| {
        c.resize(16, 0.0);
        c
    })
}

/// Geometrically decaying coefficients (an analytic nonlinearity), so compositions
/// stay resolvable in the basis.
fn smooth(max: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-max..max, 16)
        .prop_map(|c| c.iter().enumerate().map(|(j, x)| x * 0.25f64.powi(j as i32)).collect())
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (0.0..0.9f64, 0.01..1.0f64).prop_map(|(a, w)| (a, (a + w * (1.0 - a)).min(1.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonlinearity_round_trip(c in coeffs(0.5)) {
        let d = Diffeo::from_coeffs(c).unwrap();
        for x in unit_grid(129) {
            prop_assert!((d.reconstructed_nonlinearity(x) - d.eta(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn cdf_is_an_increasing_diffeomorphism(c in coeffs(0.8)) {
        let d = Diffeo::from_coeffs(c).unwrap();
        prop_assert_eq!(d.value(0.0), 0.0);
        prop_assert_eq!(d.value(1.0), 1.0);
        let mut prev = 0.0;
        for x in unit_grid(257).skip(1) {
            let v = d.value(x);
            prop_assert!(v >= prev);
            prop_assert!(d.derivative(x) > 0.0);
            prev = v;
        }
    }

    #[test]
    fn composition_follows_the_chain_rule(a in smooth(0.3), b in smooth(0.3)) {
        let psi = Diffeo::from_coeffs(a).unwrap();
        let phi = Diffeo::from_coeffs(b).unwrap();
        let c = psi.compose(&phi).unwrap();
        for x in unit_grid(101) {
            let n = psi.eta(phi.value(x)) * phi.derivative(x) + phi.eta(x);
            prop_assert!((c.eta(x) - n).abs() < 1e-8);
            prop_assert!((c.value(x) - psi.value(phi.value(x))).abs() < 1e-8);
        }
    }

    #[test]
    fn zoom_is_the_rescaled_restriction(c in coeffs(0.5), (a, b) in interval()) {
        let d = Diffeo::from_coeffs(c).unwrap();
        let z = d.zoom(a, b).unwrap();
        let (pa, pb) = (d.value(a), d.value(b));
        for x in unit_grid(101) {
            let direct = (d.value(a + (b - a) * x) - pa) / (pb - pa);
            prop_assert!((z.value(x) - direct).abs() < 1e-8);
        }
    }

    #[test]
    fn flip_is_the_mirror_image(c in coeffs(0.5)) {
        let d = Diffeo::from_coeffs(c).unwrap();
        let f = d.flip();
        for x in unit_grid(65) {
            prop_assert!((f.value(x) - (1.0 - d.value(1.0 - x))).abs() < 1e-12);
            prop_assert!((f.eta(x) + d.eta(1.0 - x)).abs() < 1e-12);
        }
        let ff = f.flip();
        prop_assert_eq!(ff.coeffs(), d.coeffs());
    }

    #[test]
    fn evaluation_derivative_matches_differences(c in coeffs(0.5), dc in coeffs(1.0), x in 0.0..1.0f64) {
        let d = Diffeo::from_coeffs(c.clone()).unwrap();
        let eps = 1e-5;
        let shifted = |s: f64| {
            let n = c.len().max(dc.len());
            let v: Vec<f64> = (0..n)
                .map(|j| c.get(j).unwrap_or(&0.0) + s * dc.get(j).unwrap_or(&0.0))
                .collect();
            Diffeo::from_coeffs(v).unwrap().value(x)
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let an = d.evaluation_derivative(x, &dc).unwrap();
        prop_assert!((fd - an).abs() < 1e-7, "fd {} analytic {}", fd, an);
    }

    #[test]
    fn zoom_endpoint_derivatives_match_differences(c in coeffs(0.5), (a, b) in interval(), x in 0.0..1.0f64) {
        prop_assume!(a > 1e-3 && b < 1.0 - 1e-3);
        let d = Diffeo::from_coeffs(c).unwrap();
        let eps = 1e-6;
        let zl = |s: f64| (b - a + s) * d.eta(a - s + (b - a + s) * x);
        let zr = |s: f64| (b - a + s) * d.eta(a + (b - a + s) * x);
        let fdl = (zl(eps) - zl(-eps)) / (2.0 * eps);
        let fdr = (zr(eps) - zr(-eps)) / (2.0 * eps);
        // the left endpoint moves as a − s, so its derivative has the opposite sign
        let left = d.zoom_endpoint_derivative(a, b, Endpoint::Left, x).unwrap();
        let right = d.zoom_endpoint_derivative(a, b, Endpoint::Right, x).unwrap();
        prop_assert!((fdl + left).abs() < 1e-6);
        prop_assert!((fdr - right).abs() < 1e-6);
    }
}

#[test]
fn evaluation_derivative_at_the_identity() {
    let id = Diffeo::identity(8);
    for x in unit_grid(21) {
        let v = id.evaluation_derivative(x, &[1.0]).unwrap();
        assert_abs_diff_eq!(v, -x * (1.0 - x) / 2.0, epsilon = 1e-14);
    }
}

#[test]
fn unit_perturbation_is_comparable_to_distance_from_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let d = random_diffeo(&mut rng, 16, 0.045);
        for x in unit_grid(101) {
            let v = d.evaluation_derivative(x, &[1.0]).unwrap().abs();
            let p = d.value(x);
            let m = p.min(1.0 - p);
            assert!(v >= m / 8.0 - 1e-15 && v <= 2.0 * m + 1e-15, "x = {x}: {v} vs {m}");
        }
    }
}

#[test]
fn constant_nonlinearity_closed_form() {
    let c = 0.7;
    let d = Diffeo::constant(c, 16).unwrap();
    for x in unit_grid(33) {
        assert_abs_diff_eq!(d.value(x), (c * x).exp_m1() / c.exp_m1(), epsilon = 1e-13);
    }
}

#[test]
fn degenerate_zoom_is_rejected() {
    let d = Diffeo::constant(0.4, 8).unwrap();
    assert!(d.zoom(0.5, 0.5 + 1e-15).is_err());
    assert!(d.zoom(0.6, 0.4).is_err());
    assert!(d.zoom(-0.1, 0.4).is_err());
}

#[test]
fn json_round_trip() {
    let d = Diffeo::from_coeffs(vec![0.1, -0.2, 0.05]).unwrap();
    let s = serde_json::to_string(&d).unwrap();
    assert!(s.contains("cheb01"));
    let back: Diffeo = serde_json::from_str(&s).unwrap();
    assert_eq!(back, d);
}
