//! Orientation-preserving diffeomorphisms of `[0, 1]` stored by their nonlinearity.
//!
//! A diffeomorphism `φ` is determined by `η = Nφ = D log Dφ` through
//! `φ(x) = ∫₀ˣ e^{H} / ∫₀¹ e^{H}` with `H(s) = ∫₀ˢ η`. The nonlinearity is kept
//! as a Chebyshev series; `H` is its exact antiderivative and the density
//! `e^H` is interpolated once at construction so that evaluation is a pair of
//! Clenshaw sums.

use serde::{Deserialize, Serialize};

use crate::cheb;
use crate::error::{Error, Result};

pub const DEFAULT_M: usize = 16;
/// Clenshaw–Curtis nodes used to resolve the density `e^H`.
pub const QUAD_NODES: usize = 129;
/// Least-squares residual above which re-projection is reported as an accuracy error.
pub const FIT_TOL: f64 = 1e-9;
pub const MIN_ZOOM_WIDTH: f64 = 1e-13;
/// Points of the equispaced grid used for norms (2048 intervals).
pub const NORM_GRID: usize = 2049;

const TAIL_TOL: f64 = 1e-13;
const TAIL_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub c0_nonlinearity: f64,
    pub c1_nonlinearity: f64,
    pub c0_dist_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DiffeoJson", try_from = "DiffeoJson")]
pub struct Diffeo {
    coeffs: Vec<f64>,
    d_coeffs: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    norm_integral: f64,
    identity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffeoJson {
    pub basis: String,
    pub m: usize,
    pub coeffs: Vec<f64>,
}

impl From<Diffeo> for DiffeoJson {
    fn from(d: Diffeo) -> Self {
        DiffeoJson {
            basis: "cheb01".into(),
            m: d.coeffs.len(),
            coeffs: d.coeffs,
        }
    }
}

impl TryFrom<DiffeoJson> for Diffeo {
    type Error = Error;

    fn try_from(j: DiffeoJson) -> Result<Self> {
        if j.basis != "cheb01" {
            return Err(Error::Parse(format!("unsupported basis {:?}", j.basis)));
        }
        if j.m != j.coeffs.len() {
            return Err(Error::Parse(format!(
                "m = {} but {} coefficients given",
                j.m,
                j.coeffs.len()
            )));
        }
        Diffeo::from_coeffs(j.coeffs)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} outside [0, 1]")))
    }
}

/// Least-squares fit of `f` with `m` coefficients from `4m` Chebyshev–Gauss samples.
///
/// The residual at the samples is measured against `tol · max(1, max |f|)`.
pub fn fit_function(f: impl Fn(f64) -> f64, m: usize, tol: f64) -> Result<Vec<f64>> {
    let nodes = cheb::gauss_nodes(4 * m);
    let samples: Vec<f64> = nodes.iter().map(|&x| f(x)).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite nonlinearity sample".into()));
    }
    let c = cheb::fit_gauss(&samples, m);
    let scale = samples.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let residual = nodes
        .iter()
        .zip(&samples)
        .map(|(&x, &s)| (cheb::eval(&c, x) - s).abs())
        .fold(0.0, f64::max);
    if residual > tol * scale {
        return Err(Error::Accuracy { residual, tol });
    }
    Ok(c)
}

impl Diffeo {
    pub fn identity(m: usize) -> Diffeo {
        Diffeo {
            coeffs: vec![0.0; m.max(1)],
            d_coeffs: vec![0.0],
            density: vec![1.0],
            cdf: vec![0.5, 0.5],
            norm_integral: 1.0,
            identity: true,
        }
    }

    /// Builds the diffeomorphism whose nonlinearity has the given Chebyshev coefficients.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Diffeo> {
        if coeffs.is_empty() {
            return Err(Error::Domain("a diffeo needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite nonlinearity coefficient".into()));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Ok(Diffeo::identity(coeffs.len()));
        }
        let h = cheb::antiderivative(&coeffs);
        let nodes = cheb::lobatto_nodes(QUAD_NODES);
        let samples: Vec<f64> = nodes.iter().map(|&x| cheb::eval(&h, x).exp()).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("nonlinearity too large to exponentiate".into()));
        }
        let mut e = cheb::interp_lobatto(&samples);
        let lead = e.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let tail = e[e.len() - TAIL_LEN..]
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        if tail > TAIL_TOL * lead {
            return Err(Error::QuadratureNotConverged {
                tail: tail / lead,
                tol: TAIL_TOL,
            });
        }
        // drop the rounding plateau, which would otherwise dominate derivatives near the endpoints
        cheb::chop(&mut e, 1e-15);
        let p = cheb::antiderivative(&e);
        let z = cheb::eval(&p, 1.0);
        let density: Vec<f64> = e.iter().map(|v| v / z).collect();
        let cdf: Vec<f64> = p.iter().map(|v| v / z).collect();
        let d_coeffs = cheb::derivative(&coeffs);
        Ok(Diffeo {
            coeffs,
            d_coeffs,
            density,
            cdf,
            norm_integral: z,
            identity: false,
        })
    }

    /// Diffeo with constant nonlinearity `c`.
    pub fn constant(c: f64, m: usize) -> Result<Diffeo> {
        let mut coeffs = vec![0.0; m.max(1)];
        coeffs[0] = c;
        Diffeo::from_coeffs(coeffs)
    }

    /// Fits the nonlinearity `eta` with `m` coefficients.
    pub fn from_nonlinearity(eta: impl Fn(f64) -> f64, m: usize) -> Result<Diffeo> {
        Diffeo::from_coeffs(fit_function(eta, m, FIT_TOL)?)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm_integral(&self) -> f64 {
        self.norm_integral
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Same diffeo with the coefficient vector truncated or zero-padded to length `m`.
    pub fn resized(&self, m: usize) -> Result<Diffeo> {
        let mut c = self.coeffs.clone();
        c.resize(m.max(1), 0.0);
        Diffeo::from_coeffs(c)
    }

    /// `η(x)` without the domain check.
    #[inline]
    pub fn eta(&self, x: f64) -> f64 {
        if self.identity {
            0.0
        } else {
            cheb::eval(&self.coeffs, x)
        }
    }

    /// `Dη(x)` without the domain check.
    #[inline]
    pub fn d_eta(&self, x: f64) -> f64 {
        if self.identity {
            0.0
        } else {
            cheb::eval(&self.d_coeffs, x)
        }
    }

    pub fn nonlinearity_eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.eta(x))
    }

    /// `φ(x)`, clamped to `[0, 1]` with the endpoints pinned.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else if self.identity {
            x
        } else {
            cheb::eval(&self.cdf, x).clamp(0.0, 1.0)
        }
    }

    /// `Dφ(x)`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        if self.identity {
            1.0
        } else {
            cheb::eval(&self.density, x.clamp(0.0, 1.0))
        }
    }

    /// `(φ(x), Dφ(x))`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        check_unit(x)?;
        Ok((self.value(x), self.derivative(x)))
    }

    /// `φ(x1) − φ(x0)` computed from the density on `[x0, x1]` directly.
    pub fn increment(&self, x0: f64, x1: f64) -> f64 {
        if self.identity {
            x1 - x0
        } else {
            cheb::integrate_between(&self.density, x0, x1)
        }
    }

    /// Nonlinearity recovered from the stored density as `D(Dφ)/Dφ`.
    pub fn reconstructed_nonlinearity(&self, x: f64) -> f64 {
        if self.identity {
            return 0.0;
        }
        let dd = cheb::derivative(&self.density);
        cheb::eval(&dd, x) / cheb::eval(&self.density, x)
    }

    /// Largest value of `Dφ` on the norm grid.
    pub fn sup_derivative(&self) -> f64 {
        if self.identity {
            return 1.0;
        }
        grid()
            .map(|x| self.derivative(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mirror image `u ↦ 1 − φ(1 − u)`; its nonlinearity is `−η(1 − u)`.
    pub fn flip(&self) -> Diffeo {
        if self.identity {
            return self.clone();
        }
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| if j % 2 == 0 { -c } else { c })
            .collect();
        Diffeo::from_coeffs(c).expect("flip of a valid diffeo")
    }

    /// `ψ ∘ φ` with `self = ψ`, from `N(ψ∘φ) = Nψ∘φ·Dφ + Nφ`.
    pub fn compose(&self, inner: &Diffeo) -> Result<Diffeo> {
        let m = self.m().max(inner.m());
        if self.identity {
            return inner.resized(m);
        }
        if inner.identity {
            return self.resized(m);
        }
        let c = fit_function(
            |x| self.eta(inner.value(x)) * inner.derivative(x) + inner.eta(x),
            m,
            FIT_TOL,
        )?;
        Diffeo::from_coeffs(c)
    }

    /// Restriction to `[a, b]` renormalized to `[0, 1]`; nonlinearity `|I|·η(a + |I|x)`.
    pub fn zoom(&self, a: f64, b: f64) -> Result<Diffeo> {
        check_interval(a, b)?;
        if self.identity {
            return Ok(self.clone());
        }
        if a == 0.0 && b == 1.0 {
            return Ok(self.clone());
        }
        let w = b - a;
        let c = fit_function(|x| w * self.eta(a + w * x), self.m(), FIT_TOL)?;
        Diffeo::from_coeffs(c)
    }

    /// Derivative of `φ(x)` along the nonlinearity perturbation `delta_eta`.
    pub fn evaluation_derivative(&self, x: f64, delta_eta: &[f64]) -> Result<f64> {
        check_unit(x)?;
        if x == 0.0 || x == 1.0 {
            return Ok(0.0);
        }
        let dh = cheb::antiderivative(delta_eta);
        let panels = (self.density.len() + dh.len()).div_ceil(32);
        let weight = |s: f64| cheb::eval(&dh, s) * self.derivative(s);
        let partial = cheb::integrate_fn(weight, 0.0, x, panels);
        let full = cheb::integrate_fn(weight, 0.0, 1.0, panels);
        Ok(partial - self.value(x) * full)
    }

    /// Derivative of `Z_{[a,b]}η (x)` with respect to one endpoint of the zoom interval.
    pub fn zoom_endpoint_derivative(&self, a: f64, b: f64, which: Endpoint, x: f64) -> Result<f64> {
        check_interval(a, b)?;
        check_unit(x)?;
        let w = b - a;
        let y = a + w * x;
        let (eta, d_eta) = (self.eta(y), self.d_eta(y));
        Ok(match which {
            Endpoint::Left => w * (1.0 - x) * d_eta - eta,
            Endpoint::Right => w * x * d_eta + eta,
        })
    }

    /// Schwarzian derivative `Dη − η²/2`.
    pub fn schwarzian_eval(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.schwarzian(x))
    }

    #[inline]
    pub fn schwarzian(&self, x: f64) -> f64 {
        let e = self.eta(x);
        self.d_eta(x) - 0.5 * e * e
    }

    pub fn norms(&self) -> NormReport {
        let mut r = NormReport {
            c0_nonlinearity: 0.0,
            c1_nonlinearity: 0.0,
            c0_dist_identity: 0.0,
        };
        if self.identity {
            return r;
        }
        let mut d1 = 0.0_f64;
        for x in grid() {
            r.c0_nonlinearity = r.c0_nonlinearity.max(self.eta(x).abs());
            d1 = d1.max(self.d_eta(x).abs());
            r.c0_dist_identity = r.c0_dist_identity.max((self.value(x) - x).abs());
        }
        r.c1_nonlinearity = r.c0_nonlinearity.max(d1);
        r
    }

    /// `sup|η| + sup|Dη| + sup|S|` on the norm grid.
    pub fn c3_deviation(&self) -> f64 {
        if self.identity {
            return 0.0;
        }
        let (mut e, mut d, mut s) = (0.0_f64, 0.0_f64, 0.0_f64);
        for x in grid() {
            e = e.max(self.eta(x).abs());
            d = d.max(self.d_eta(x).abs());
            s = s.max(self.schwarzian(x).abs());
        }
        e + d + s
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        if b - a < MIN_ZOOM_WIDTH && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            return Err(Error::DegenerateInterval { lo: a, hi: b, min: MIN_ZOOM_WIDTH });
        }
        return Err(Error::Domain(format!("[{a}, {b}] is not a subinterval of [0, 1]")));
    }
    if b - a < MIN_ZOOM_WIDTH {
        return Err(Error::DegenerateInterval { lo: a, hi: b, min: MIN_ZOOM_WIDTH });
    }
    Ok(())
}

/// Equispaced grid on `[0, 1]` used for norms.
pub fn grid() -> impl Iterator<Item = f64> {
    let n = NORM_GRID - 1;
    (0..=n).map(move |i| i as f64 / n as f64)
}
