//! Renormalizability, first-return maps and the renormalization operator.
//!
//! Maps with `σ = −` are renormalized directly from the lateral orbits of 0.
//! For `σ = +` the map is conjugated by `x ↦ −x`, renormalized, and conjugated
//! back, so only one set of formulas is needed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffeo::{fit_function, Diffeo};
use crate::error::{Blocked, Error, Result};
use crate::gapmap::{GapMap, Sign};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormOptions {
    /// Basis dimension of the renormalized diffeos; `None` keeps the input dimension.
    pub m: Option<usize>,
    /// Residual tolerance of the nonlinearity fits.
    pub fit_tol: f64,
    /// Maximal number of gap iterates examined by [`find_k`].
    pub cap: usize,
    /// Relative geometric margin (in units of `|G|`) for 0 to count as inside a closure.
    pub margin: f64,
    /// Agreement required between the slope recipe and the literal orbit formulas.
    pub coord_tol: f64,
}

impl Default for RenormOptions {
    fn default() -> Self {
        RenormOptions {
            m: None,
            fit_tol: 1e-9,
            cap: 1_000_000,
            margin: 1e-12,
            coord_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    L,
    R,
}

/// One application of the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormStep {
    pub k: usize,
    pub sigma: Sign,
    #[serde(rename = "I_prime")]
    pub i_prime: (f64, f64),
    #[serde(rename = "map")]
    pub renormalized: GapMap,
}

impl RenormStep {
    pub fn i_prime_len(&self) -> f64 {
        self.i_prime.1 - self.i_prime.0
    }
}

/// Sequence `((σ_i, k_i))`, written as `(-,1)(-,2)(+,1)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Combinatorics(pub Vec<(Sign, usize)>);

impl Combinatorics {
    pub fn repeat(sigma: Sign, k: usize, n: usize) -> Combinatorics {
        Combinatorics(vec![(sigma, k); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts_with(&self, prefix: &[(Sign, usize)]) -> bool {
        self.0.starts_with(prefix)
    }
}

impl fmt::Display for Combinatorics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, k) in &self.0 {
            write!(f, "({s},{k})")?;
        }
        Ok(())
    }
}

impl FromStr for Combinatorics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Vec::new();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .and_then(|r| r.split_once(')'))
                .ok_or_else(|| Error::Parse(format!("expected '(sign,k)' at {rest:?}")))?;
            let (entry, tail) = body;
            let (sign, k) = entry
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("missing ',' in ({entry})")))?;
            let sign = match sign {
                "-" => Sign::Minus,
                "+" => Sign::Plus,
                other => return Err(Error::Parse(format!("bad sign {other:?}"))),
            };
            let k: usize = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad k {k:?}")))?;
            if k == 0 {
                return Err(Error::Parse("k must be positive".into()));
            }
            out.push((sign, k));
            rest = tail;
        }
        Ok(Combinatorics(out))
    }
}

impl Serialize for Combinatorics {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Combinatorics {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Minimal `k` for which the gap orbit crosses 0, with the sign of the map.
pub fn find_k(f: &GapMap) -> Result<(usize, Sign)> {
    find_k_with(f, &RenormOptions::default())
}

pub fn find_k_with(f: &GapMap, opts: &RenormOptions) -> Result<(usize, Sign)> {
    let (mut lo, mut hi) = f.gap()?;
    let margin = opts.margin * (hi - lo);
    let sigma = f.sign();
    let check = |j: usize, lo: f64, hi: f64| -> Result<()> {
        if lo - margin <= 0.0 && 0.0 <= hi + margin {
            let boundary = lo.abs() <= margin || hi.abs() <= margin;
            return Err(Error::NotRenormalizable(Blocked { iterate: j, boundary, sigma }));
        }
        Ok(())
    };
    check(0, lo, hi)?;
    let left = hi < 0.0;
    for j in 1..=opts.cap {
        lo = f.apply(lo);
        hi = f.apply(hi);
        check(j, lo, hi)?;
        if (hi < 0.0) != left {
            return Ok((j, sigma));
        }
    }
    Err(Error::IterationCap { cap: opts.cap })
}

/// Branch words in application order for the return map with the given `(k, σ)`.
pub fn branch_words(k: usize, sigma: Sign) -> (Vec<Branch>, Vec<Branch>) {
    let mut left = Vec::with_capacity(k + 2);
    let mut right = Vec::with_capacity(k + 2);
    match sigma {
        Sign::Minus => {
            left.extend([Branch::L, Branch::R]);
            left.extend(std::iter::repeat_n(Branch::L, k));
            right.push(Branch::R);
            right.extend(std::iter::repeat_n(Branch::L, k));
        }
        Sign::Plus => {
            left.push(Branch::L);
            left.extend(std::iter::repeat_n(Branch::R, k));
            right.extend([Branch::R, Branch::L]);
            right.extend(std::iter::repeat_n(Branch::R, k));
        }
    }
    (left, right)
}

#[inline]
fn step(f: &GapMap, br: Branch, x: f64) -> f64 {
    match br {
        Branch::L => f.left_branch(x),
        Branch::R => f.right_branch(x),
    }
}

pub fn apply_word(f: &GapMap, word: &[Branch], x: f64) -> f64 {
    word.iter().fold(x, |y, &br| step(f, br, y))
}

/// Value, derivative and nonlinearity of the composition `word` at `x`,
/// using `N(g∘h) = Ng∘h·Dh + Nh`.
pub fn word_jet(f: &GapMap, word: &[Branch], x: f64) -> (f64, f64, f64) {
    let (mut y, mut d, mut n) = (x, 1.0, 0.0);
    for &br in word {
        let (nb, db) = match br {
            Branch::L => (f.left_nonlinearity(y), f.left_derivative(y)),
            Branch::R => (f.right_nonlinearity(y), f.right_derivative(y)),
        };
        n += nb * d;
        d *= db;
        y = step(f, br, y);
    }
    (y, d, n)
}

/// First-return map to `I′` as a pair of branch words.
#[derive(Debug, Clone)]
pub struct ReturnMap {
    pub k: usize,
    pub sigma: Sign,
    pub i_prime: (f64, f64),
    pub left_word: Vec<Branch>,
    pub right_word: Vec<Branch>,
    map: GapMap,
}

impl ReturnMap {
    pub fn left(&self, x: f64) -> f64 {
        apply_word(&self.map, &self.left_word, x)
    }

    pub fn right(&self, x: f64) -> f64 {
        apply_word(&self.map, &self.right_word, x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (l, r) = self.i_prime;
        if x == 0.0 {
            return Err(Error::OrbitHitsDiscontinuity { iterate: 0, x });
        }
        if !(l <= x && x <= r) {
            return Err(Error::Domain(format!("x = {x} outside I' = [{l}, {r}]")));
        }
        Ok(if x < 0.0 { self.left(x) } else { self.right(x) })
    }

    /// Number of iterates of `f` making up the branch at `x`.
    pub fn return_time(&self, x: f64) -> usize {
        if x < 0.0 {
            self.left_word.len()
        } else {
            self.right_word.len()
        }
    }
}

pub fn return_map(f: &GapMap) -> Result<ReturnMap> {
    return_map_with(f, &RenormOptions::default())
}

pub fn return_map_with(f: &GapMap, opts: &RenormOptions) -> Result<ReturnMap> {
    let (k, sigma) = find_k_with(f, opts)?;
    let i_prime = match sigma {
        Sign::Minus => (f.lateral_orbit(Sign::Plus, k + 1)?, f.lateral_orbit(Sign::Minus, k + 2)?),
        Sign::Plus => (f.lateral_orbit(Sign::Plus, k + 2)?, f.lateral_orbit(Sign::Minus, k + 1)?),
    };
    let (left_word, right_word) = branch_words(k, sigma);
    Ok(ReturnMap { k, sigma, i_prime, left_word, right_word, map: f.clone() })
}

/// Renormalized coordinates read off the lateral orbits by the closed formulas,
/// for a map with `σ = −`: `(α̃, β̃, b̃)`.
pub fn literal_minus_coordinates(f: &GapMap, k: usize) -> Result<(f64, f64, f64)> {
    let l = f.lateral_orbit(Sign::Plus, k + 1)?;
    let r = f.lateral_orbit(Sign::Minus, k + 2)?;
    let (lw, rw) = branch_words(k, Sign::Minus);
    let alpha = (apply_word(f, &lw, l) - r) / l;
    let beta = (apply_word(f, &rw, r) - l) / r;
    Ok((alpha, beta, r / (r - l)))
}

pub fn renormalize(f: &GapMap) -> Result<RenormStep> {
    renormalize_with(f, &RenormOptions::default())
}

pub fn renormalize_with(f: &GapMap, opts: &RenormOptions) -> Result<RenormStep> {
    let (k, sigma) = find_k_with(f, opts)?;
    match sigma {
        Sign::Minus => renormalize_minus(f, k, opts),
        Sign::Plus => {
            let s = renormalize_minus(&f.mirror(), k, opts)?;
            Ok(RenormStep {
                k,
                sigma: Sign::Plus,
                i_prime: (-s.i_prime.1, -s.i_prime.0),
                renormalized: s.renormalized.mirror(),
            })
        }
    }
}

fn renormalize_minus(f: &GapMap, k: usize, opts: &RenormOptions) -> Result<RenormStep> {
    let l = f.lateral_orbit(Sign::Plus, k + 1)?;
    let r = f.lateral_orbit(Sign::Minus, k + 2)?;
    if !(l < 0.0 && 0.0 < r) {
        return Err(Error::Domain(format!("I' = [{l}, {r}] does not straddle 0")));
    }
    let (lw, rw) = branch_words(k, Sign::Minus);
    let len = r - l;
    let b_t = r / len;

    // slope recipe on the rescaled return map g(y) = R(|I'| y) / |I'|
    let g_left = |y: f64| apply_word(f, &lw, len * y) / len;
    let g_right = |y: f64| apply_word(f, &rw, len * y) / len;
    let alpha_t = (b_t - g_left(b_t - 1.0)) / (1.0 - b_t);
    let beta_t = (g_right(b_t) - (b_t - 1.0)) / b_t;

    let (a19, b19, _) = literal_minus_coordinates(f, k)?;
    let dev = (alpha_t - a19).abs().max((beta_t - b19).abs());
    if dev > opts.coord_tol {
        return Err(Error::Accuracy { residual: dev, tol: opts.coord_tol });
    }

    let m = opts.m.unwrap_or_else(|| f.m());
    let wl = -l;
    let eta_l = fit_function(|u| wl * word_jet(f, &lw, l + u * wl).2, m, opts.fit_tol)?;
    let eta_r = fit_function(|u| r * word_jet(f, &rw, u * r).2, m, opts.fit_tol)?;
    let renormalized = GapMap::new(
        alpha_t,
        beta_t,
        b_t,
        Diffeo::from_coeffs(eta_l)?,
        Diffeo::from_coeffs(eta_r)?,
    )?;
    Ok(RenormStep { k, sigma: Sign::Minus, i_prime: (l, r), renormalized })
}

/// Result of iterating the operator.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<RenormStep>,
    pub gamma: Combinatorics,
    /// Why iteration stopped before the requested depth, if it did.
    pub stopped: Option<Error>,
}

impl Trajectory {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Map after `i` renormalizations (`i = 0` is the input).
    pub fn map_at<'a>(&'a self, input: &'a GapMap, i: usize) -> &'a GapMap {
        if i == 0 {
            input
        } else {
            &self.steps[i - 1].renormalized
        }
    }
}

pub fn renormalize_n(f: &GapMap, n: usize) -> Result<Trajectory> {
    renormalize_n_with(f, n, &RenormOptions::default())
}

/// Iterates [`renormalize_with`]; stops early when a level is not renormalizable
/// (or the gap orbit exceeds the cap). Other failures carry the failing depth.
pub fn renormalize_n_with(f: &GapMap, n: usize, opts: &RenormOptions) -> Result<Trajectory> {
    let mut steps: Vec<RenormStep> = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    let mut stopped = None;
    for depth in 1..=n {
        let current = steps.last().map_or(f, |s| &s.renormalized);
        match renormalize_with(current, opts) {
            Ok(s) => {
                gamma.push((s.sigma, s.k));
                steps.push(s);
            }
            Err(e @ (Error::NotRenormalizable(_) | Error::IterationCap { .. })) => {
                stopped = Some(Error::AtDepth { depth, source: Box::new(e) });
                break;
            }
            Err(e) => return Err(Error::AtDepth { depth, source: Box::new(e) }),
        }
    }
    Ok(Trajectory { steps, gamma: Combinatorics(gamma), stopped })
}

/// Deviation of `f` from the affine map with the same `(α, β, b)`:
/// the larger over both branches of `sup|η| + sup|Dη| + sup|S|`.
pub fn affine_distance(f: &GapMap) -> f64 {
    f.phi_l().c3_deviation().max(f.phi_r().c3_deviation())
}
