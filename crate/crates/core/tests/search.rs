mod common;

use std::cmp::Ordering;

use approx::assert_abs_diff_eq;
use common::{deep_map, minus_one, test_family};
use gaprenorm::search::{
    bisect_b, classify, rotation_from_combinatorics, rotation_number, transversality_check, Family,
};
use gaprenorm::{Combinatorics, Diffeo, Error, GapMap, RenormOptions, Sign};

#[test]
fn affine_boundary_points_move_with_b() {
    let (a, bt) = (0.5, 0.5);
    let f = GapMap::affine(a, bt, 0.3).unwrap();
    let rep = transversality_check(&f, 1, 1e-6).unwrap();
    assert_abs_diff_eq!(rep.levels[0].d_left, 1.0 + a, epsilon = 1e-8);
    assert_abs_diff_eq!(rep.levels[0].d_right, 1.0 + a + a * bt, epsilon = 1e-8);
    assert!(rep.all_positive);
}

#[test]
fn deep_boundary_points_are_transversal() {
    let rep = transversality_check(deep_map(), 6, 1e-9).unwrap();
    assert_eq!(rep.levels.len(), 6);
    assert!(rep.all_positive);
}

#[test]
fn classification_is_monotone_in_b() {
    let fam = test_family();
    let target = minus_one(3);
    let opts = RenormOptions::default();
    let mut rank = 0;
    for i in 1..400 {
        let f = fam.at(i as f64 / 400.0).unwrap();
        let r = match classify(&f, &target, 3, &opts).unwrap().0 {
            Ordering::Less => 0,
            Ordering::Equal => 1,
            Ordering::Greater => 2,
        };
        assert!(r >= rank, "b = {}", i as f64 / 400.0);
        rank = r;
    }
    assert_eq!(rank, 2);
}

#[test]
fn bisection_brackets_the_window_edge() {
    let fam = test_family();
    let target = minus_one(4);
    let res = bisect_b(&fam, &target, 4, 1e-10).unwrap();
    assert_eq!(res.gamma, target);
    assert!(res.bracket_width <= 1e-10);
    let opts = RenormOptions::default();
    let at = |b: f64| classify(&fam.at(b).unwrap(), &target, 4, &opts).unwrap().0;
    assert_ne!(at(res.bracket.0), Ordering::Equal);
    assert_eq!(at(res.bracket.1), Ordering::Equal);
    assert_eq!(at(res.b_star), Ordering::Equal);
}

#[test]
fn plus_targets_are_found_too() {
    let fam = test_family();
    let target: Combinatorics = "(+,2)(-,1)".parse().unwrap();
    let res = bisect_b(&fam, &target, 2, 1e-10).unwrap();
    assert_eq!(res.gamma, target);
    assert!(res.b_star > 0.5);
}

#[test]
fn unrealizable_return_times_are_reported() {
    let fam = Family::new(0.5, 0.5, Diffeo::identity(4), Diffeo::identity(4));
    let target = Combinatorics(vec![(Sign::Minus, 10_000_000)]);
    let err = bisect_b(&fam, &target, 1, 1e-12).unwrap_err();
    assert!(matches!(err, Error::UnrealizableCombinatorics { .. }), "{err}");
}

#[test]
fn rotation_number_agrees_with_the_combinatorics() {
    let rho = rotation_number(deep_map(), 20_000).unwrap();
    let gamma = minus_one(8);
    let lo = rotation_from_combinatorics(&gamma, 0.0);
    let hi = rotation_from_combinatorics(&gamma, 1.0);
    assert!(lo.min(hi) - 1e-4 <= rho && rho <= lo.max(hi) + 1e-4, "{rho} not in [{lo}, {hi}]");
    let golden = (3.0 - 5f64.sqrt()) / 2.0;
    assert!((rho - golden).abs() < 0.01);
}

#[test]
fn deep_map_rotation_number_avoids_small_denominators() {
    let rho = rotation_number(deep_map(), 100_000).unwrap();
    for q in 1..=8u32 {
        for p in 0..=q {
            let d = (rho - p as f64 / q as f64).abs();
            assert!(d >= 1e-3, "{rho} within {d} of {p}/{q}");
        }
    }
}
