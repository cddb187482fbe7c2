mod common;

use approx::assert_abs_diff_eq;
use gaprenorm::{Diffeo, Error, GapMap, Sign};
use proptest::prelude::*;

fn analytic(max: f64) -> impl Strategy<Value = Diffeo> {
    prop::collection::vec(-max..max, 8).prop_map(|c| {
        Diffeo::from_coeffs(c.iter().enumerate().map(|(j, x)| x * 0.25f64.powi(j as i32)).collect()).unwrap()
    })
}

fn gap_map() -> impl Strategy<Value = GapMap> {
    (0.1..0.95f64, 0.1..0.95f64, 0.05..0.95f64, analytic(0.05), analytic(0.05))
        .prop_filter_map("dissipative", |(a, bt, b, l, r)| GapMap::new(a, bt, b, l, r).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn branches_are_increasing_and_map_into_the_domain(f in gap_map()) {
        let (lo, hi) = (f.b() - 1.0, f.b());
        let n = 200;
        let mut prev_l = f64::NEG_INFINITY;
        let mut prev_r = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let xl = lo + t * (0.0 - lo);
            let xr = t * hi;
            let (yl, yr) = (f.left_branch(xl), f.right_branch(xr));
            prop_assert!(yl >= prev_l && yr >= prev_r);
            prop_assert!((lo..=hi).contains(&yl) && (lo..=hi).contains(&yr));
            prev_l = yl;
            prev_r = yr;
        }
    }

    #[test]
    fn images_leave_the_gap_uncovered(f in gap_map()) {
        let (glo, ghi) = f.gap().unwrap();
        prop_assert!(glo < ghi);
        assert_abs_diff_eq!(f.right_branch(f.b()), glo, epsilon = 1e-15);
        assert_abs_diff_eq!(f.left_branch(f.b() - 1.0), ghi, epsilon = 1e-15);
        for i in 1..100 {
            let x = f.b() - 1.0 + i as f64 / 100.0;
            if x != 0.0 {
                let y = f.apply(x);
                prop_assert!(!(glo < y && y < ghi));
            }
        }
    }

    #[test]
    fn branches_contract_by_nu(f in gap_map(), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let nu = f.nu();
        prop_assert!(nu < 1.0);
        let (xl, yl) = ((f.b() - 1.0) * s, (f.b() - 1.0) * t);
        prop_assert!((f.left_branch(xl) - f.left_branch(yl)).abs() <= nu * (xl - yl).abs() * (1.0 + 1e-9) + 1e-15);
        let (xr, yr) = (f.b() * s, f.b() * t);
        prop_assert!((f.right_branch(xr) - f.right_branch(yr)).abs() <= nu * (xr - yr).abs() * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn mirror_conjugates_by_reflection(f in gap_map()) {
        let g = f.mirror();
        prop_assert_eq!(g.sign(), if f.b() < 0.5 { Sign::Plus } else { Sign::Minus });
        for i in 1..50 {
            let x = f.b() - 1.0 + i as f64 / 50.0;
            if x.abs() > 1e-12 {
                prop_assert!((g.apply(-x) + f.apply(x)).abs() < 1e-12);
            }
        }
        let back = g.mirror();
        prop_assert!((back.b() - f.b()).abs() < 1e-15);
        prop_assert_eq!(back.phi_l().coeffs(), f.phi_l().coeffs());
    }

    #[test]
    fn derivatives_match_differences(f in gap_map(), s in 0.05..0.95f64) {
        let eps = 1e-6;
        let x = (f.b() - 1.0) * s;
        let fd = (f.left_branch(x + eps) - f.left_branch(x - eps)) / (2.0 * eps);
        prop_assert!((fd - f.left_derivative(x)).abs() < 1e-7);
        let x = f.b() * s;
        let fd = (f.right_branch(x + eps) - f.right_branch(x - eps)) / (2.0 * eps);
        prop_assert!((fd - f.right_derivative(x)).abs() < 1e-7);
    }
}

#[test]
fn affine_branches() {
    let f = GapMap::affine(0.5, 0.4, 0.3).unwrap();
    assert_abs_diff_eq!(f.apply(-0.2), 0.3 - 0.1, epsilon = 1e-15);
    assert_abs_diff_eq!(f.apply(0.2), -0.7 + 0.08, epsilon = 1e-15);
    assert_eq!(f.gap().unwrap(), (0.4 * 0.3 + 0.3 - 1.0, 0.5 * (0.3 - 1.0) + 0.3));
}

#[test]
fn invalid_coordinates_are_rejected() {
    let id = Diffeo::identity(4);
    assert!(GapMap::new(1.2, 0.5, 0.3, id.clone(), id.clone()).is_err());
    assert!(GapMap::new(0.5, 0.5, 1.0, id.clone(), id.clone()).is_err());
    assert!(GapMap::new(0.5, 0.0, 0.3, id.clone(), id.clone()).is_err());
    let steep = Diffeo::constant(0.9, 8).unwrap();
    assert!(matches!(
        GapMap::new(0.9, 0.5, 0.3, steep, id).unwrap_err(),
        Error::NotDissipative { .. }
    ));
}

#[test]
fn evaluation_at_the_discontinuity_fails() {
    let f = GapMap::affine(0.5, 0.5, 0.3).unwrap();
    assert!(matches!(f.eval(0.0), Err(Error::OrbitHitsDiscontinuity { .. })));
    assert!(f.eval(0.5).is_err());
    assert!(f.eval(-0.1).is_ok());
}

#[test]
fn json_round_trip() {
    let f = GapMap::new(0.6, 0.5, 0.4, Diffeo::constant(0.1, 4).unwrap(), Diffeo::identity(4)).unwrap();
    let s = serde_json::to_string(&f).unwrap();
    assert!(s.contains("phi_L") && s.contains("phi_R"));
    let g: GapMap = serde_json::from_str(&s).unwrap();
    assert_eq!(g, f);
}
