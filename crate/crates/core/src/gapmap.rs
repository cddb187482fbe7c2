//! Dissipative gap maps on `[b−1, b]` in the coordinates `(α, β, b, φ_L, φ_R)`.
//!
//! The left branch maps `I₀,L = [b−1, 0]` onto `T₀,L = [α(b−1)+b, b]` and the
//! right branch maps `I₀,R = [0, b]` onto `T₀,R = [b−1, βb+b−1]`, each as an
//! affine conjugate of its diffeomorphism.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diffeo::{Diffeo, DEFAULT_M};
use crate::error::{Error, Result};

/// Distance to 0 below which an orbit point is treated as hitting the discontinuity.
pub const ZERO_TOL: f64 = 1e-14;
/// Minimal gap width.
pub const MIN_GAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Minus => "-",
            Sign::Plus => "+",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GapMapJson", try_from = "GapMapJson")]
pub struct GapMap {
    alpha: f64,
    beta: f64,
    b: f64,
    phi_l: Diffeo,
    phi_r: Diffeo,
    nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapMapJson {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    #[serde(rename = "phi_L")]
    pub phi_l: Diffeo,
    #[serde(rename = "phi_R")]
    pub phi_r: Diffeo,
}

impl From<GapMap> for GapMapJson {
    fn from(f: GapMap) -> Self {
        GapMapJson {
            alpha: f.alpha,
            beta: f.beta,
            b: f.b,
            phi_l: f.phi_l,
            phi_r: f.phi_r,
        }
    }
}

impl TryFrom<GapMapJson> for GapMap {
    type Error = Error;

    fn try_from(j: GapMapJson) -> Result<Self> {
        GapMap::new(j.alpha, j.beta, j.b, j.phi_l, j.phi_r)
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside (0, 1)")))
    }
}

impl GapMap {
    pub fn new(alpha: f64, beta: f64, b: f64, phi_l: Diffeo, phi_r: Diffeo) -> Result<GapMap> {
        check_open_unit("alpha", alpha)?;
        check_open_unit("beta", beta)?;
        check_open_unit("b", b)?;
        let nu = (alpha * phi_l.sup_derivative()).max(beta * phi_r.sup_derivative());
        if nu >= 1.0 {
            return Err(Error::NotDissipative { nu });
        }
        Ok(GapMap { alpha, beta, b, phi_l, phi_r, nu })
    }

    /// Map with identity diffeomorphisms (affine branches).
    pub fn affine(alpha: f64, beta: f64, b: f64) -> Result<GapMap> {
        GapMap::new(alpha, beta, b, Diffeo::identity(DEFAULT_M), Diffeo::identity(DEFAULT_M))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn phi_l(&self) -> &Diffeo {
        &self.phi_l
    }

    pub fn phi_r(&self) -> &Diffeo {
        &self.phi_r
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn is_affine(&self) -> bool {
        self.phi_l.is_identity() && self.phi_r.is_identity()
    }

    /// Same coordinates with new parameters and diffeos; used for perturbations.
    pub fn with(&self, alpha: f64, beta: f64, b: f64) -> Result<GapMap> {
        GapMap::new(alpha, beta, b, self.phi_l.clone(), self.phi_r.clone())
    }

    /// Normalized coordinate of `x ∈ I₀,L`.
    #[inline]
    pub fn left_coord(&self, x: f64) -> f64 {
        (x - (self.b - 1.0)) / (1.0 - self.b)
    }

    /// Normalized coordinate of `x ∈ I₀,R`.
    #[inline]
    pub fn right_coord(&self, x: f64) -> f64 {
        x / self.b
    }

    #[inline]
    pub fn left_branch(&self, x: f64) -> f64 {
        let u = self.left_coord(x);
        self.b - self.alpha * (1.0 - self.b) * (1.0 - self.phi_l.value(u))
    }

    #[inline]
    pub fn right_branch(&self, x: f64) -> f64 {
        (self.b - 1.0) + self.beta * self.b * self.phi_r.value(self.right_coord(x))
    }

    #[inline]
    pub fn left_derivative(&self, x: f64) -> f64 {
        self.alpha * self.phi_l.derivative(self.left_coord(x))
    }

    #[inline]
    pub fn right_derivative(&self, x: f64) -> f64 {
        self.beta * self.phi_r.derivative(self.right_coord(x))
    }

    /// `N f_L(x)`.
    #[inline]
    pub fn left_nonlinearity(&self, x: f64) -> f64 {
        self.phi_l.eta(self.left_coord(x)) / (1.0 - self.b)
    }

    /// `N f_R(x)`.
    #[inline]
    pub fn right_nonlinearity(&self, x: f64) -> f64 {
        self.phi_r.eta(self.right_coord(x)) / self.b
    }

    /// Evaluation without checks: left branch for `x < 0`, right branch otherwise.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.left_branch(x)
        } else {
            self.right_branch(x)
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::OrbitHitsDiscontinuity { iterate: 0, x });
        }
        if !(self.b - 1.0 <= x && x <= self.b) {
            return Err(Error::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.b - 1.0,
                self.b
            )));
        }
        Ok(self.apply(x))
    }

    pub fn sign(&self) -> Sign {
        if self.b <= 0.5 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// Open gap `(βb+b−1, α(b−1)+b)` as `(lo, hi)`.
    pub fn gap(&self) -> Result<(f64, f64)> {
        let lo = self.beta * self.b + self.b - 1.0;
        let hi = self.alpha * (self.b - 1.0) + self.b;
        if hi - lo < MIN_GAP {
            return Err(Error::DegenerateGap { lo, hi });
        }
        Ok((lo, hi))
    }

    pub fn gap_and_sign(&self) -> Result<((f64, f64), Sign)> {
        Ok((self.gap()?, self.sign()))
    }

    /// `0_j^+ = f^{j−1}(b−1)` or `0_j^− = f^{j−1}(b)`.
    pub fn lateral_orbit(&self, side: Sign, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Domain("lateral orbit index starts at 1".into()));
        }
        let mut x = match side {
            Sign::Plus => self.b - 1.0,
            Sign::Minus => self.b,
        };
        for i in 1..j {
            if x.abs() < ZERO_TOL {
                return Err(Error::OrbitHitsDiscontinuity { iterate: i - 1, x });
            }
            x = self.apply(x);
        }
        Ok(x)
    }

    /// Conjugate by `x ↦ −x`: branches swap, `b ↦ 1−b`, diffeos are flipped.
    pub fn mirror(&self) -> GapMap {
        GapMap {
            alpha: self.beta,
            beta: self.alpha,
            b: 1.0 - self.b,
            phi_l: self.phi_r.flip(),
            phi_r: self.phi_l.flip(),
            nu: self.nu,
        }
    }

    /// Largest basis dimension of the two diffeos.
    pub fn m(&self) -> usize {
        self.phi_l.m().max(self.phi_r.m())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn affine_branches() {
        let f = GapMap::affine(0.5, 0.5, 0.3).unwrap();
        for i in 1..10 {
            let x = -0.7 + 0.07 * i as f64;
            assert_abs_diff_eq!(f.eval(x).unwrap(), 0.5 * x + 0.3, epsilon = 1e-15);
            let y = 0.03 * i as f64;
            assert_abs_diff_eq!(f.eval(y).unwrap(), 0.5 * y - 0.7, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(f.eval(-0.7).unwrap(), -0.05, epsilon = 1e-15);
        assert_eq!(f.left_branch(0.0), 0.3);
        assert_eq!(f.right_branch(0.0), 0.3 - 1.0);
        assert!(matches!(f.eval(0.0), Err(Error::OrbitHitsDiscontinuity { .. })));
        assert!(matches!(f.eval(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(GapMap::affine(1.0, 0.5, 0.3), Err(Error::Domain(_))));
        assert!(matches!(GapMap::affine(0.5, 0.5, 0.0), Err(Error::Domain(_))));
        // a diffeo with sup Dφ ≈ 1.2 pushes 0.99·1.2 above 1
        let c = 0.6;
        let d = Diffeo::constant(c, 4).unwrap();
        assert!(d.sup_derivative() > 1.2);
        let r = GapMap::new(0.99, 0.5, 0.3, d, Diffeo::identity(4));
        assert!(matches!(r, Err(Error::NotDissipative { .. })));
    }

    #[test]
    fn gap_sign_and_orbits() {
        let f = GapMap::affine(0.5, 0.5, 0.3).unwrap();
        let ((lo, hi), s) = f.gap_and_sign().unwrap();
        assert_abs_diff_eq!(lo, -0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, -0.05, epsilon = 1e-15);
        assert_eq!(s, Sign::Minus);
        assert_eq!(GapMap::affine(0.5, 0.5, 0.7).unwrap().sign(), Sign::Plus);
        assert_eq!(GapMap::affine(0.3, 0.8, 0.5 - 1e-9).unwrap().sign(), Sign::Minus);
        assert_eq!(f.lateral_orbit(Sign::Plus, 1).unwrap(), 0.3 - 1.0);
        assert_eq!(f.lateral_orbit(Sign::Minus, 1).unwrap(), 0.3);
        assert_abs_diff_eq!(f.lateral_orbit(Sign::Plus, 2).unwrap(), -0.05, epsilon = 1e-15);
    }

    #[test]
    fn slopes_recovered_from_branches() {
        let phi = Diffeo::from_coeffs(vec![0.1, -0.2, 0.05]).unwrap();
        let f = GapMap::new(0.4, 0.6, 0.35, phi.clone(), phi.flip()).unwrap();
        let b = f.b();
        assert_abs_diff_eq!((b - f.left_branch(b - 1.0)) / (1.0 - b), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!((f.right_branch(b) - (b - 1.0)) / b, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn mirror_conjugates() {
        let phi = Diffeo::from_coeffs(vec![0.1, -0.2, 0.05]).unwrap();
        let f = GapMap::new(0.4, 0.6, 0.35, phi, Diffeo::constant(0.3, 3).unwrap()).unwrap();
        let g = f.mirror();
        for i in 1..20 {
            let x = f.b() - 1.0 + i as f64 / 20.0;
            if x.abs() < 1e-9 {
                continue;
            }
            assert_abs_diff_eq!(g.apply(-x), -f.apply(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = GapMap::affine(0.5, 0.25, 0.3).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"phi_L\""));
        let back: GapMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
