//! Chebyshev series on the unit interval.
//!
//! A series `c` represents `f(x) = Σ c[j] T_j(2x - 1)` for `x ∈ [0, 1]`.
//! Everything in the crate that stores a function of `[0, 1]` does so in this
//! form: nonlinearities, their antiderivatives and the normalized densities of
//! diffeomorphisms.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Maps `x ∈ [0, 1]` to the Chebyshev variable `t ∈ [-1, 1]`.
#[inline]
pub fn to_t(x: f64) -> f64 {
    2.0 * x - 1.0
}

/// Evaluates the series at `x` with the Clenshaw recurrence.
pub fn eval(c: &[f64], x: f64) -> f64 {
    let t = to_t(x);
    let t2 = 2.0 * t;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + t2 * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => c0 + t * b1 - b2,
        None => 0.0,
    }
}

/// Value of `T_j(2x - 1)` for `j = 0..n`.
pub fn basis_values(n: usize, x: f64) -> Vec<f64> {
    let t = to_t(x);
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(1.0);
    }
    if n > 1 {
        out.push(t);
    }
    for j in 2..n {
        let next = 2.0 * t * out[j - 1] - out[j - 2];
        out.push(next);
    }
    out
}

/// Coefficients of `d/dx` of the series (with respect to `x`, not `t`).
pub fn derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for j in (0..n - 1).rev() {
        d[j] = d[j + 2] + 2.0 * (j as f64 + 1.0) * c[j + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    // chain rule for t = 2x - 1
    for v in &mut d {
        *v *= 2.0;
    }
    d
}

/// Antiderivative in `x`, normalized to vanish at `x = 0`.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut a = vec![0.0; n + 1];
    for (j, &cj) in c.iter().enumerate() {
        match j {
            0 => a[1] += cj,
            1 => {
                a[0] += 0.25 * cj;
                a[2] += 0.25 * cj;
            }
            _ => {
                let jf = j as f64;
                a[j + 1] += cj / (2.0 * (jf + 1.0));
                a[j - 1] -= cj / (2.0 * (jf - 1.0));
            }
        }
    }
    // dx = dt / 2
    for v in &mut a {
        *v *= 0.5;
    }
    let at_zero = eval(&a, 0.0);
    a[0] -= at_zero;
    a
}

/// Chebyshev–Gauss nodes (first kind) mapped to `[0, 1]`.
pub fn gauss_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = (PI * (k as f64 + 0.5) / n as f64).cos();
            0.5 * (t + 1.0)
        })
        .collect()
}

/// Clenshaw–Curtis (Chebyshev–Lobatto) nodes mapped to `[0, 1]`, `n ≥ 2` points.
pub fn lobatto_nodes(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let t = (PI * k as f64 / last).cos();
            0.5 * (t + 1.0)
        })
        .collect()
}

/// Discrete Chebyshev transform of samples taken at [`gauss_nodes`]`(samples.len())`,
/// truncated to `m` coefficients.
///
/// By discrete orthogonality of the first-kind nodes this is the least-squares
/// fit of degree `< m` to the samples.
pub fn fit_gauss(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    let nf = n as f64;
    let mut c = vec![0.0; m];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, &fk) in samples.iter().enumerate() {
            // reduce the angle exactly before scaling by π
            let a = (j * (2 * k + 1)) % (4 * n);
            s += fk * (PI * a as f64 / (2.0 * nf)).cos();
        }
        *cj = 2.0 * s / nf;
    }
    if let Some(c0) = c.first_mut() {
        *c0 *= 0.5;
    }
    c
}

/// Interpolating series through samples at [`lobatto_nodes`]`(samples.len())`.
pub fn interp_lobatto(samples: &[f64]) -> Vec<f64> {
    let n = samples.len() - 1;
    let nf = n as f64;
    let mut c = vec![0.0; n + 1];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, &fk) in samples.iter().enumerate() {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            s += w * fk * (PI * ((j * k) % (2 * n)) as f64 / nf).cos();
        }
        *cj = 2.0 * s / nf;
    }
    c[0] *= 0.5;
    c[n] *= 0.5;
    c
}

/// Drops trailing coefficients that are negligible relative to the largest one.
pub fn chop(c: &mut Vec<f64>, rel: f64) {
    let scale = c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cutoff = rel * scale;
    while c.len() > 1 && c.last().is_some_and(|v| v.abs() <= cutoff) {
        c.pop();
    }
}

const GL_POINTS: usize = 32;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// Composite Gauss–Legendre quadrature of `f` over `[lo, hi]` split into `panels` equal pieces.
pub fn integrate_fn(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let panels = panels.max(1);
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let centre = lo + (p as f64 + 0.5) * width;
        let s: f64 = nodes
            .iter()
            .zip(weights)
            .map(|(&z, &w)| w * f(centre + half * z))
            .sum();
        total += s * half;
    }
    total
}

/// `∫_lo^hi f(x) dx` for the series `c`, by quadrature on the subinterval itself
/// so that short intervals keep full relative accuracy.
pub fn integrate_between(c: &[f64], lo: f64, hi: f64) -> f64 {
    // 32 points integrate degree 63 exactly; beyond that split the interval
    let panels = c.len().div_ceil(GL_POINTS);
    integrate_fn(|x| eval(c, x), lo, hi, panels)
}
