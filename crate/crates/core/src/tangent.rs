//! Derivative of the renormalization operator in the coordinates
//! `(α, β, b, η_L, η_R)`, its block structure, spectrum and cone fields.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffeo::Diffeo;
use crate::error::{Error, Result};
use crate::gapmap::{GapMap, Sign};
use crate::renorm::{renormalize_with, RenormOptions};

pub const MAX_HALVINGS: u32 = 4;

/// Coordinate vector `(α, β, b, η_L[0..m], η_R[0..m])`; coefficients are truncated or zero-padded.
pub fn coordinates(f: &GapMap, m: usize) -> DVector<f64> {
    let mut v = DVector::zeros(3 + 2 * m);
    v[0] = f.alpha();
    v[1] = f.beta();
    v[2] = f.b();
    for (j, &c) in f.phi_l().coeffs().iter().take(m).enumerate() {
        v[3 + j] = c;
    }
    for (j, &c) in f.phi_r().coeffs().iter().take(m).enumerate() {
        v[3 + m + j] = c;
    }
    v
}

pub fn from_coordinates(v: &DVector<f64>, m: usize) -> Result<GapMap> {
    if v.len() != 3 + 2 * m {
        return Err(Error::Domain(format!("coordinate vector of length {} for m = {m}", v.len())));
    }
    let phi_l = Diffeo::from_coeffs(v.rows(3, m).iter().copied().collect())?;
    let phi_r = Diffeo::from_coeffs(v.rows(3 + m, m).iter().copied().collect())?;
    GapMap::new(v[0], v[1], v[2], phi_l, phi_r)
}

#[derive(Debug, Clone)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
    pub m: usize,
    pub base_point: GapMap,
    pub i_prime_len: f64,
    pub fd_step: f64,
    pub k: usize,
    pub sigma: Sign,
}

impl Jacobian {
    pub fn a(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (3, 3)).into_owned()
    }

    pub fn b_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, 3), (3, 2 * self.m)).into_owned()
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.matrix.view((3, 0), (2 * self.m, 3)).into_owned()
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.matrix.view((3, 3), (2 * self.m, 2 * self.m)).into_owned()
    }

    pub fn dim(&self) -> usize {
        3 + 2 * self.m
    }
}

/// Central-difference Jacobian of renormalization at `f`, truncated to `m` coefficients per branch.
///
/// `α, β, b` are stepped by `h` relative to their value, nonlinearity coefficients by `h`.
/// When a perturbed map changes combinatorics the column is retried with half the
/// step, at most [`MAX_HALVINGS`] times.
pub fn jacobian(f: &GapMap, m: usize, h: f64) -> Result<Jacobian> {
    jacobian_with(f, m, h, &RenormOptions::default())
}

/// [`jacobian`] with explicit renormalization tolerances; `opts.m` is replaced by `m`.
pub fn jacobian_with(f: &GapMap, m: usize, h: f64, opts: &RenormOptions) -> Result<Jacobian> {
    if m == 0 || !(h > 0.0) {
        return Err(Error::Domain("jacobian needs m >= 1 and h > 0".into()));
    }
    let opts = RenormOptions { m: Some(m), ..*opts };
    let x0 = coordinates(f, m);
    let base = from_coordinates(&x0, m)?;
    let step0 = renormalize_with(&base, &opts)?;
    let (k, sigma) = (step0.k, step0.sigma);
    let n = 3 + 2 * m;
    let mut matrix = DMatrix::zeros(n, n);
    let image = |x: &DVector<f64>| -> Option<DVector<f64>> {
        let g = from_coordinates(x, m).ok()?;
        let s = renormalize_with(&g, &opts).ok()?;
        (s.k == k && s.sigma == sigma).then(|| coordinates(&s.renormalized, m))
    };
    for j in 0..n {
        let scale = if j < 3 { x0[j].abs() } else { 1.0 };
        let mut hj = h * scale;
        let mut column = None;
        for _ in 0..=MAX_HALVINGS {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[j] += hj;
            xm[j] -= hj;
            if let (Some(p), Some(q)) = (image(&xp), image(&xm)) {
                column = Some((p - q) / (2.0 * hj));
                break;
            }
            hj *= 0.5;
        }
        match column {
            Some(c) => matrix.set_column(j, &c),
            None => return Err(Error::StepTooLarge { column: j, halvings: MAX_HALVINGS }),
        }
    }
    Ok(Jacobian {
        matrix,
        m,
        base_point: base,
        i_prime_len: step0.i_prime_len(),
        fd_step: h,
        k,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BlockReport {
    pub K1: f64,
    pub K2: f64,
    pub K3: f64,
    /// Largest `|∂b̃/∂η_L|` over basis coefficients (dual of the ℓ¹ coefficient norm).
    pub K4: f64,
    /// ℓ¹ norm of `∂η̃_L/∂b` over coefficients.
    pub M1: f64,
    pub M2: f64,
    /// `Σ_j ∂b̃/∂η_L[j] · ∂η̃_L[j]/∂b`, the signed coupling between `b` and `η_L`.
    pub coupling: f64,
    pub eps_max: f64,
    pub i_prime_len: f64,
}

pub fn block_report(j: &Jacobian) -> BlockReport {
    let m = j.m;
    let a = &j.matrix;
    let row_b_l = a.view((2, 3), (1, m));
    let col_b_l = a.view((3, 2), (m, 1));
    let col_b_r = a.view((3 + m, 2), (m, 1));
    let k4 = row_b_l.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let m1 = col_b_l.iter().map(|v| v.abs()).sum();
    let m2 = col_b_r.iter().map(|v| v.abs()).sum();
    let coupling = row_b_l.iter().zip(col_b_l.iter()).map(|(x, y)| x * y).sum();
    let top = a.view((0, 0), (2, j.dim())).iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let d = a.view((3, 3), (2 * m, 2 * m)).iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    BlockReport {
        K1: a[(2, 0)],
        K2: a[(2, 1)],
        K3: a[(2, 2)],
        K4: k4,
        M1: m1,
        M2: m2,
        coupling,
        eps_max: top.max(d),
        i_prime_len: j.i_prime_len,
    }
}

/// Eigenvalues of a square matrix via the real Schur form, sorted by decreasing modulus.
pub fn eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::linalg::Schur::try_new(mat.clone(), f64::EPSILON, 10_000).ok_or(Error::Eigen)?;
    let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(ev)
}

/// Eigenvalue moduli sorted in decreasing order.
pub fn spectrum_of(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(eigenvalues(mat)?.iter().map(|z| z.norm()).collect())
}

pub fn spectrum(j: &Jacobian) -> Result<Vec<f64>> {
    spectrum_of(&j.matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingVerdict {
    pub magnitudes: Vec<f64>,
    pub delta: f64,
    /// Eigenvalues with `|λ| ≥ 1/δ`.
    pub unstable: usize,
    /// Eigenvalues with `|λ| ≤ δ`.
    pub stable: usize,
    pub passes: bool,
}

pub fn splitting_verdict_of(mat: &DMatrix<f64>, delta: f64) -> Result<SplittingVerdict> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1)")));
    }
    let magnitudes = spectrum_of(mat)?;
    let unstable = magnitudes.iter().filter(|&&v| v >= 1.0 / delta).count();
    let stable = magnitudes.iter().filter(|&&v| v <= delta).count();
    let passes = unstable == 1 && stable + 1 == magnitudes.len();
    Ok(SplittingVerdict { magnitudes, delta, unstable, stable, passes })
}

pub fn splitting_verdict(j: &Jacobian, delta: f64) -> Result<SplittingVerdict> {
    splitting_verdict_of(&j.matrix, delta)
}

/// Roots of `λ² − K₃λ − K₄M₁`; when the discriminant is negative the roots are
/// `re ± i·im` and `complex` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedRoots {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub imag: f64,
    pub complex: bool,
}

pub fn reduced_model_roots(k3: f64, k4: f64, m1: f64) -> ReducedRoots {
    let disc = k3 * k3 + 4.0 * k4 * m1;
    if disc >= 0.0 {
        let s = disc.sqrt();
        ReducedRoots {
            lambda_plus: 0.5 * (k3 + s),
            lambda_minus: 0.5 * (k3 - s),
            imag: 0.0,
            complex: false,
        }
    } else {
        ReducedRoots {
            lambda_plus: 0.5 * k3,
            lambda_minus: 0.5 * k3,
            imag: 0.5 * (-disc).sqrt(),
            complex: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub r: f64,
    pub delta: f64,
}

impl ConeParams {
    pub fn new(r: f64, delta: f64) -> Result<ConeParams> {
        if !(r > 0.0 && r < 1.0) || !(delta > 0.0) {
            return Err(Error::Domain(format!("cone parameters r = {r}, delta = {delta}")));
        }
        Ok(ConeParams { r, delta })
    }

    pub fn halved(self) -> ConeParams {
        ConeParams { r: 0.5 * self.r, delta: 0.5 * self.delta }
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `|Δα|+|Δβ| ≤ r|Δb|` and `Σ|Δη_L|+Σ|Δη_R| ≤ δ|Δb|`.
pub fn cone_contains(v: &[f64], p: &ConeParams) -> bool {
    if v.len() < 3 {
        return false;
    }
    let db = v[2].abs();
    v[0].abs() + v[1].abs() <= p.r * db && l1(&v[3..]) <= p.delta * db
}

/// Uniform point of the ℓ¹ ball of radius `radius` in `out.len()` dimensions.
fn l1_ball(rng: &mut ChaCha8Rng, radius: f64, out: &mut [f64]) {
    let mut total = 0.0;
    for x in out.iter_mut() {
        let e = -(1.0 - rng.random::<f64>()).ln();
        total += e;
        *x = if rng.random::<bool>() { e } else { -e };
    }
    total += -(1.0 - rng.random::<f64>()).ln();
    for x in out.iter_mut() {
        *x *= radius / total;
    }
}

fn normalize(v: &mut [f64]) {
    let n = l1(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Random unit vector (ℓ¹) of the cone `C_{r,δ}` in dimension `3 + 2m`.
pub fn sample_cone(rng: &mut ChaCha8Rng, p: &ConeParams, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    l1_ball(rng, p.r, &mut v[0..2]);
    v[2] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    l1_ball(rng, p.delta, &mut v[3..]);
    normalize(&mut v);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub samples: usize,
    pub r: f64,
    pub delta: f64,
    /// Fraction of images in `C_{r/2, δ/2}`.
    pub inside_fraction: f64,
    pub min_expansion: f64,
    pub seed: u64,
}

fn apply(j: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (j * DVector::from_column_slice(v)).iter().copied().collect()
}

pub fn cone_invariance_test(j: &Jacobian, p: &ConeParams, samples: usize, seed: u64) -> ConeReport {
    cone_invariance_of(&j.matrix, p, samples, seed)
}

pub fn cone_invariance_of(mat: &DMatrix<f64>, p: &ConeParams, samples: usize, seed: u64) -> ConeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = p.halved();
    let mut inside = 0;
    let mut min_expansion = f64::INFINITY;
    for _ in 0..samples {
        let v = sample_cone(&mut rng, p, mat.ncols());
        let w = apply(mat, &v);
        if cone_contains(&w, &target) {
            inside += 1;
        }
        min_expansion = min_expansion.min(l1(&w) / l1(&v));
    }
    ConeReport {
        samples,
        r: p.r,
        delta: p.delta,
        inside_fraction: inside as f64 / samples.max(1) as f64,
        min_expansion,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub out_of_cone: usize,
    /// Largest `|Δb| / (|I′|·‖v‖)` over vectors whose image leaves `C_{r,δ}`.
    pub k_empirical: Option<f64>,
    /// Largest `‖Jv‖ / ‖v‖` over the same vectors.
    pub max_growth: Option<f64>,
    pub inconclusive: bool,
}

pub fn technical_lemma_check(j: &Jacobian, p: &ConeParams, samples: usize, seed: u64) -> LemmaReport {
    technical_lemma_of(&j.matrix, j.i_prime_len, p, samples, seed)
}

/// Samples uniform unit vectors and, for every coordinate other than `b`, a family
/// of vectors near the kernel of the `b̃` row (where images leave the cone with
/// the largest `Δb`).
pub fn technical_lemma_of(
    mat: &DMatrix<f64>,
    i_prime_len: f64,
    p: &ConeParams,
    samples: usize,
    seed: u64,
) -> LemmaReport {
    let n = mat.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(samples + n * 24);
    for _ in 0..samples {
        let mut v = vec![0.0; n];
        l1_ball(&mut rng, 1.0, &mut v);
        normalize(&mut v);
        candidates.push(v);
    }
    if n > 2 {
        let row: Vec<f64> = mat.row(2).iter().copied().collect();
        for c in (0..n).filter(|&c| c != 2 && row[c] != 0.0) {
            for e in -12..=-1 {
                for sign in [-1.0, 1.0] {
                    let mut v = vec![0.0; n];
                    v[2] = 1.0;
                    v[c] = -row[2] / row[c] * (1.0 + sign * 10f64.powi(e));
                    normalize(&mut v);
                    candidates.push(v);
                }
            }
        }
    }
    let mut out = 0;
    let mut k_emp: Option<f64> = None;
    let mut growth: Option<f64> = None;
    for v in &candidates {
        let w = apply(mat, v);
        if cone_contains(&w, p) {
            continue;
        }
        out += 1;
        let norm = l1(v);
        let kv = v[2].abs() / (i_prime_len * norm);
        let gv = l1(&w) / norm;
        k_emp = Some(k_emp.map_or(kv, |x| x.max(kv)));
        growth = Some(growth.map_or(gv, |x| x.max(gv)));
    }
    LemmaReport {
        samples: candidates.len(),
        out_of_cone: out,
        k_empirical: k_emp,
        max_growth: growth,
        inconclusive: out == 0,
    }
}
