#![allow(dead_code)]

use std::sync::OnceLock;

use gaprenorm::search::{window_center, Family};
use gaprenorm::{Combinatorics, Diffeo, GapMap, Sign};
use rand::Rng;

pub const FAMILY_CONTRACTION: f64 = 0.996;
pub const PERTURBATION_C1: f64 = 0.3;

/// Basis size of the test family; 16 coefficients cannot hold every level-one
/// renormalization of the family to the fit tolerance.
pub const FAMILY_M: usize = 24;

/// `η_L = c·T₈(2x−1)` with `‖η_L‖_{C¹} = 0.3`, `φ_R` the mirror image of `φ_L`.
pub fn test_family() -> Family {
    let mut c = vec![0.0; FAMILY_M];
    c[8] = PERTURBATION_C1 / 128.0;
    let phi = Diffeo::from_coeffs(c).unwrap();
    Family::new(FAMILY_CONTRACTION, FAMILY_CONTRACTION, phi.clone(), phi.flip())
}

pub fn minus_one(n: usize) -> Combinatorics {
    Combinatorics::repeat(Sign::Minus, 1, n)
}

/// Centre of the depth-8 window of the test family, computed once per test binary.
pub fn deep_map() -> &'static GapMap {
    static MAP: OnceLock<GapMap> = OnceLock::new();
    MAP.get_or_init(|| {
        let fam = test_family();
        let (b, _) = window_center(&fam, &minus_one(8), 8, 1e-14).unwrap();
        fam.at(b).unwrap()
    })
}

/// Random analytic nonlinearity (coefficients decaying like `8^{-j}`), rescaled to `sup|η| ≤ c0`.
pub fn random_diffeo(rng: &mut impl Rng, m: usize, c0: f64) -> Diffeo {
    let mut c: Vec<f64> = (0..m)
        .map(|j| rng.random_range(-1.0..1.0) * 0.125f64.powi(j as i32))
        .collect();
    let bound: f64 = c.iter().map(|x| x.abs()).sum();
    let scale = rng.random_range(0.0..c0) / bound;
    for x in &mut c {
        *x *= scale;
    }
    Diffeo::from_coeffs(c).unwrap()
}

pub fn unit_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}
