//! Parameter search along the family `b ↦ f_b`, rotation numbers and
//! transversality of the gap boundary points.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::diffeo::Diffeo;
use crate::error::{Error, Result};
use crate::gapmap::{GapMap, Sign, ZERO_TOL};
use crate::renorm::{find_k_with, renormalize_with, return_map_with, Combinatorics, RenormOptions};

/// One-parameter family with fixed slopes and diffeos, varying `b`.
#[derive(Debug, Clone)]
pub struct Family {
    pub alpha: f64,
    pub beta: f64,
    pub phi_l: Diffeo,
    pub phi_r: Diffeo,
}

impl Family {
    pub fn new(alpha: f64, beta: f64, phi_l: Diffeo, phi_r: Diffeo) -> Family {
        Family { alpha, beta, phi_l, phi_r }
    }

    pub fn at(&self, b: f64) -> Result<GapMap> {
        GapMap::new(self.alpha, self.beta, b, self.phi_l.clone(), self.phi_r.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub b_star: f64,
    pub achieved_depth: usize,
    pub gamma: Combinatorics,
    /// `[failing, passing]` endpoints of the final bracket, in increasing order of `b` or reversed.
    pub bracket: (f64, f64),
    pub bracket_width: f64,
}

/// Position of one renormalization outcome on a line ordered like `b`.
///
/// Windows `(−, k)` sit at `−2 + 1/k`, windows `(+, k)` at `2 − 1/k`; a map
/// blocked by its `j`-th gap iterate sits between the neighbouring windows, and
/// a gap containing 0 sits at 0.
pub fn outcome_key(outcome: &Result<(usize, Sign)>) -> f64 {
    match outcome {
        Ok((k, Sign::Minus)) => -2.0 + 1.0 / *k as f64,
        Ok((k, Sign::Plus)) => 2.0 - 1.0 / *k as f64,
        Err(e) => match e.root() {
            Error::NotRenormalizable(b) if b.iterate == 0 => 0.0,
            Error::NotRenormalizable(b) => {
                let t = 1.0 / (b.iterate as f64 + 0.5);
                match b.sigma {
                    Sign::Minus => -2.0 + t,
                    Sign::Plus => 2.0 - t,
                }
            }
            Error::IterationCap { .. } => f64::NAN,
            _ => 0.0,
        },
    }
}

fn target_key(sigma: Sign, k: usize) -> f64 {
    outcome_key(&Ok((k, sigma)))
}

/// Compares the combinatorics of `f` with `target` level by level up to `depth`.
///
/// Returns `Equal` when the first `depth` entries match, together with the
/// prefix that was realized.
pub fn classify(
    f: &GapMap,
    target: &Combinatorics,
    depth: usize,
    opts: &RenormOptions,
) -> Result<(Ordering, Combinatorics)> {
    let mut realized = Vec::with_capacity(depth);
    let mut current = f.clone();
    for level in 0..depth {
        let (ts, tk) = target.0[level];
        let outcome = find_k_with(&current, opts);
        let mut key = outcome_key(&outcome);
        if key.is_nan() {
            // orbit too long to resolve: the limit of the windows on this side
            key = match current.sign() {
                Sign::Minus => -2.0,
                Sign::Plus => 2.0,
            };
        }
        match key.partial_cmp(&target_key(ts, tk)) {
            Some(Ordering::Equal) => {}
            Some(o) => return Ok((o, Combinatorics(realized))),
            None => return Err(Error::Domain("unordered outcome".into())),
        }
        realized.push((ts, tk));
        if level + 1 < depth {
            current = renormalize_with(&current, opts)
                .map_err(|e| Error::AtDepth { depth: level + 1, source: Box::new(e) })?
                .renormalized;
        }
    }
    Ok((Ordering::Equal, Combinatorics(realized)))
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub renorm: RenormOptions,
    /// Initial bracket in `b`.
    pub lo: f64,
    pub hi: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { renorm: RenormOptions::default(), lo: 1e-12, hi: 1.0 - 1e-12 }
    }
}

struct Searcher<'a> {
    family: &'a Family,
    target: &'a Combinatorics,
    depth: usize,
    opts: &'a SearchOptions,
}

impl Searcher<'_> {
    fn classify(&self, b: f64) -> Result<(Ordering, Combinatorics)> {
        let f = self.family.at(b)?;
        classify(&f, self.target, self.depth, &self.opts.renorm)
    }

    fn passes(&self, b: f64) -> Result<bool> {
        Ok(self.classify(b)?.0 == Ordering::Equal)
    }

    /// Some `b` realizing the target prefix, by three-way bisection.
    fn find_inside(&self) -> Result<(f64, f64, f64)> {
        let (mut lo, mut hi) = (self.opts.lo, self.opts.hi);
        let unrealizable = |lo, hi| Error::UnrealizableCombinatorics { lo, hi };
        match self.classify(lo)?.0 {
            Ordering::Less => {}
            Ordering::Equal => return Ok((lo, lo, hi)),
            Ordering::Greater => return Err(unrealizable(lo, hi)),
        }
        match self.classify(hi)?.0 {
            Ordering::Greater => {}
            Ordering::Equal => return Ok((hi, lo, hi)),
            Ordering::Less => return Err(unrealizable(lo, hi)),
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Err(unrealizable(lo, hi));
            }
            match self.classify(mid)?.0 {
                Ordering::Less => lo = mid,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Ok((mid, lo, hi)),
            }
        }
    }

    /// Shrinks `[fail, pass]` (in either orientation) to width `tol` around the
    /// edge of the passing set; the returned midpoint passes.
    fn edge(&self, mut fail: f64, mut pass: f64, tol: f64) -> Result<(f64, f64, f64)> {
        loop {
            let mid = 0.5 * (fail + pass);
            if mid == fail || mid == pass {
                return Ok((pass, fail, pass));
            }
            let ok = self.passes(mid)?;
            if (pass - fail).abs() <= tol && ok {
                return Ok((mid, fail, pass));
            }
            if ok {
                pass = mid;
            } else {
                fail = mid;
            }
        }
    }
}

/// Bisection in `b` for a map realizing the first `depth` entries of `target`.
pub fn bisect_b(
    family: &Family,
    target: &Combinatorics,
    depth: usize,
    tol: f64,
) -> Result<SearchResult> {
    bisect_b_with(family, target, depth, tol, &SearchOptions::default())
}

pub fn bisect_b_with(
    family: &Family,
    target: &Combinatorics,
    depth: usize,
    tol: f64,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    check_request(target, depth, tol)?;
    let s = Searcher { family, target, depth, opts };
    let (inside, lo, _) = s.find_inside()?;
    let (b_star, fail, pass) = s.edge(lo, inside, tol)?;
    let gamma = s.classify(b_star)?.1;
    Ok(SearchResult {
        b_star,
        achieved_depth: gamma.len(),
        gamma,
        bracket: (fail, pass),
        bracket_width: (pass - fail).abs(),
    })
}

/// Midpoint of the parameter window realizing the target prefix, with the
/// window edges resolved to `tol`. Maps chosen this way sit well inside every
/// window down to `depth`.
pub fn window_center(
    family: &Family,
    target: &Combinatorics,
    depth: usize,
    tol: f64,
) -> Result<(f64, (f64, f64))> {
    check_request(target, depth, tol)?;
    let opts = SearchOptions::default();
    let s = Searcher { family, target, depth, opts: &opts };
    let (inside, lo, hi) = s.find_inside()?;
    let (_, _, left) = s.edge(lo, inside, tol)?;
    let (_, _, right) = s.edge(hi, inside, tol)?;
    Ok((0.5 * (left + right), (left, right)))
}

fn check_request(target: &Combinatorics, depth: usize, tol: f64) -> Result<()> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    if target.len() < depth {
        return Err(Error::Domain(format!(
            "target has {} entries, depth {depth} requested",
            target.len()
        )));
    }
    if !(tol >= 1e-14) {
        return Err(Error::Domain(format!("tolerance {tol} below 1e-14")));
    }
    Ok(())
}

/// Frequency of right-branch visits along the orbit of `b`, over the last half
/// of `iterations` steps. A periodic tail is detected and reported exactly.
pub fn rotation_number(f: &GapMap, iterations: usize) -> Result<f64> {
    if iterations < 1000 {
        return Err(Error::Domain("at least 1000 iterations are required".into()));
    }
    let n = iterations;
    let mut xs = Vec::with_capacity(n + 1);
    let mut x = f.b();
    xs.push(x);
    for i in 0..n {
        if x.abs() < ZERO_TOL {
            return Err(Error::OrbitHitsDiscontinuity { iterate: i, x });
        }
        x = f.apply(x);
        xs.push(x);
    }
    let last = xs[n];
    for q in 1..=n / 2 {
        if (last - xs[n - q]).abs() < 1e-12 {
            let p = xs[n - q..n].iter().filter(|&&v| v > 0.0).count();
            return Ok(p as f64 / q as f64);
        }
    }
    let tail = &xs[n - n / 2..n];
    Ok(tail.iter().filter(|&&v| v > 0.0).count() as f64 / tail.len() as f64)
}

/// Rotation number implied by a combinatorics prefix and the rotation number
/// `inner` of the deepest renormalization.
///
/// Each level relates the visit frequency of the map to that of its return map:
/// the return map's left and right branches take `n_L`, `n_R` iterates of
/// which `r_L`, `r_R` fall in the right half.
pub fn rotation_from_combinatorics(gamma: &Combinatorics, inner: f64) -> f64 {
    gamma.0.iter().rev().fold(inner, |rho, &(sigma, k)| {
        let k = k as f64;
        let ((n_l, r_l), (n_r, r_r)) = match sigma {
            Sign::Minus => ((k + 2.0, 1.0), (k + 1.0, 1.0)),
            Sign::Plus => ((k + 1.0, k), (k + 2.0, k + 1.0)),
        };
        (rho * r_r + (1.0 - rho) * r_l) / (rho * n_r + (1.0 - rho) * n_l)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDerivative {
    pub level: usize,
    pub d_left: f64,
    pub d_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub levels: Vec<LevelDerivative>,
    pub h: f64,
    pub all_positive: bool,
}

/// Endpoints of `I′` at levels `1..=depth`, in the coordinates of `f`.
pub fn gap_boundaries(f: &GapMap, depth: usize, opts: &RenormOptions) -> Result<(Vec<(f64, f64)>, Combinatorics)> {
    let mut out = Vec::with_capacity(depth);
    let mut gamma = Vec::with_capacity(depth);
    let mut current = f.clone();
    let mut scale = 1.0;
    for level in 0..depth {
        let at = |e: Error| Error::AtDepth { depth: level + 1, source: Box::new(e) };
        let rm = return_map_with(&current, opts).map_err(at)?;
        out.push((scale * rm.i_prime.0, scale * rm.i_prime.1));
        gamma.push((rm.sigma, rm.k));
        if level + 1 < depth {
            current = renormalize_with(&current, opts).map_err(at)?.renormalized;
            scale *= rm.i_prime.1 - rm.i_prime.0;
        }
    }
    Ok((out, Combinatorics(gamma)))
}

/// Central differences in `b` of the level-`i` boundary points of `I′`.
pub fn transversality_check(f: &GapMap, depth: usize, h: f64) -> Result<TransversalityReport> {
    let opts = RenormOptions::default();
    let (_, gamma) = gap_boundaries(f, depth, &opts)?;
    let mut step = h;
    for halvings in 0..=4 {
        let plus = f.with(f.alpha(), f.beta(), f.b() + step).and_then(|g| gap_boundaries(&g, depth, &opts));
        let minus = f.with(f.alpha(), f.beta(), f.b() - step).and_then(|g| gap_boundaries(&g, depth, &opts));
        if let (Ok((p, gp)), Ok((m, gm))) = (plus, minus) {
            if gp == gamma && gm == gamma {
                let levels: Vec<LevelDerivative> = p
                    .iter()
                    .zip(&m)
                    .enumerate()
                    .map(|(i, (p, m))| LevelDerivative {
                        level: i + 1,
                        d_left: (p.0 - m.0) / (2.0 * step),
                        d_right: (p.1 - m.1) / (2.0 * step),
                    })
                    .collect();
                let all_positive = levels.iter().all(|l| l.d_left > 0.0 && l.d_right > 0.0);
                return Ok(TransversalityReport { levels, h: step, all_positive });
            }
        }
        if halvings == 4 {
            break;
        }
        step *= 0.5;
    }
    Err(Error::StepTooLarge { column: 2, halvings: 4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn keys_are_ordered_like_b() {
        let f = |b| GapMap::affine(0.5, 0.5, b).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let b = i as f64 / 200.0;
            let key = outcome_key(&find_k_with(&f(b), &RenormOptions::default()));
            assert!(key >= prev, "b = {b}: {key} < {prev}");
            prev = key;
        }
    }

    #[test]
    fn continued_fraction_fixed_point() {
        let gamma = Combinatorics::repeat(Sign::Minus, 1, 40);
        let rho = rotation_from_combinatorics(&gamma, 0.5);
        assert_abs_diff_eq!(rho, (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_number_of_worked_example_is_two_fifths() {
        let f = GapMap::affine(0.5, 0.5, 0.3).unwrap();
        assert_abs_diff_eq!(rotation_number(&f, 10_000).unwrap(), 0.4, epsilon = 1e-12);
        assert!(rotation_number(&f, 10).is_err());
    }

    #[test]
    fn request_validation() {
        let fam = Family::new(0.5, 0.5, Diffeo::identity(4), Diffeo::identity(4));
        let t = Combinatorics::repeat(Sign::Minus, 1, 1);
        assert!(bisect_b(&fam, &t, 2, 1e-10).is_err());
        assert!(bisect_b(&fam, &t, 0, 1e-10).is_err());
        assert!(bisect_b(&fam, &t, 1, 1e-16).is_err());
    }
}
