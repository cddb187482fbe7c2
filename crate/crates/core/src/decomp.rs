//! Decomposition space: finite, ordered sequences of diffeomorphisms and the
//! renormalization operator acting on them by zooming and concatenation.

use serde::{Deserialize, Serialize};

use crate::diffeo::{Diffeo, DEFAULT_M};
use crate::error::Result;
use crate::gapmap::{GapMap, Sign};
use crate::renorm::{branch_words, find_k, renormalize, Branch};

/// Timeset token: `(depth, index)`. Items are stored in application order.
pub type Label = (u32, u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub label: Label,
    pub diffeo: Diffeo,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decomposition {
    pub items: Vec<Item>,
}

impl Decomposition {
    pub fn new(items: Vec<Item>) -> Decomposition {
        Decomposition { items }
    }

    pub fn singleton(d: Diffeo) -> Decomposition {
        Decomposition { items: vec![Item { label: (0, 0), diffeo: d }] }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `Σ ‖Nφ_τ‖_{C¹}`.
    pub fn norm(&self) -> f64 {
        self.items.iter().map(|i| i.diffeo.norms().c1_nonlinearity).sum()
    }

    /// `self ⊕ later`: the items of `later` come after (and are applied after) those of `self`.
    pub fn concat(mut self, later: Decomposition) -> Decomposition {
        self.items.extend(later.items);
        self
    }

    fn m(&self) -> usize {
        self.items.iter().map(|i| i.diffeo.m()).max().unwrap_or(DEFAULT_M)
    }

    /// Composition in timeset order; the empty decomposition composes to the identity.
    pub fn compose(&self) -> Result<Diffeo> {
        let mut acc = Diffeo::identity(self.m());
        for item in &self.items {
            acc = item.diffeo.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Pointwise value of the composition, applying the items one after another.
    pub fn value(&self, x: f64) -> f64 {
        self.items.iter().fold(x, |y, i| i.diffeo.value(y))
    }

    /// Zooms every item onto the successive images of `[a, b]`.
    pub fn zoom(&self, a: f64, b: f64, label_depth: u32, first_index: u32) -> Result<Decomposition> {
        let (mut lo, mut hi) = (a, b);
        let mut items = Vec::with_capacity(self.items.len());
        for (i, item) in self.items.iter().enumerate() {
            items.push(Item {
                label: (label_depth, first_index + i as u32),
                diffeo: item.diffeo.zoom(lo, hi)?,
            });
            lo = item.diffeo.value(lo);
            hi = item.diffeo.value(hi);
        }
        Ok(Decomposition { items })
    }

    /// Conjugate of every item by `u ↦ 1 − u`.
    pub fn flip(&self) -> Decomposition {
        Decomposition {
            items: self
                .items
                .iter()
                .map(|i| Item { label: i.label, diffeo: i.diffeo.flip() })
                .collect(),
        }
    }

    fn max_depth(&self) -> Option<u32> {
        self.items.iter().map(|i| i.label.0).max()
    }
}

pub fn compose_decomposition(d: &Decomposition) -> Result<Diffeo> {
    d.compose()
}

pub fn decomposition_norm(d: &Decomposition) -> f64 {
    d.norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedGapMap {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    #[serde(rename = "dec_L")]
    pub dec_l: Decomposition,
    #[serde(rename = "dec_R")]
    pub dec_r: Decomposition,
}

impl DecomposedGapMap {
    pub fn from_gap_map(f: &GapMap) -> DecomposedGapMap {
        DecomposedGapMap {
            alpha: f.alpha(),
            beta: f.beta(),
            b: f.b(),
            dec_l: Decomposition::singleton(f.phi_l().clone()),
            dec_r: Decomposition::singleton(f.phi_r().clone()),
        }
    }

    /// `Ξ`: the gap map with the composed decompositions as diffeos.
    pub fn project(&self) -> Result<GapMap> {
        GapMap::new(self.alpha, self.beta, self.b, self.dec_l.compose()?, self.dec_r.compose()?)
    }

    pub fn mirror(&self) -> DecomposedGapMap {
        DecomposedGapMap {
            alpha: self.beta,
            beta: self.alpha,
            b: 1.0 - self.b,
            dec_l: self.dec_r.flip(),
            dec_r: self.dec_l.flip(),
        }
    }
}

pub fn project(df: &DecomposedGapMap) -> Result<GapMap> {
    df.project()
}

/// Renormalization in decomposition space.
///
/// The new left decomposition is the concatenation of the branch decompositions
/// zoomed onto the orbit `U₀, U₁ = f(U₀), …` of `U₀ = [0_{k+1}^+, 0]` (and
/// likewise for the right one along `V₀ = [0, 0_{k+2}^−]`), in the order the
/// branches are applied. The parameters `(α̃, β̃, b̃)` are those of the
/// renormalization of the projected map.
pub fn renormalize_decomposed(df: &DecomposedGapMap) -> Result<DecomposedGapMap> {
    let f = df.project()?;
    let (k, sigma) = find_k(&f)?;
    match sigma {
        Sign::Minus => renormalize_decomposed_minus(df, &f, k),
        Sign::Plus => {
            let g = df.mirror();
            let fg = g.project()?;
            Ok(renormalize_decomposed_minus(&g, &fg, k)?.mirror())
        }
    }
}

fn renormalize_decomposed_minus(df: &DecomposedGapMap, f: &GapMap, k: usize) -> Result<DecomposedGapMap> {
    let step = renormalize(f)?;
    let (l, r) = step.i_prime;
    let (lw, rw) = branch_words(k, Sign::Minus);
    let depth = df
        .dec_l
        .max_depth()
        .into_iter()
        .chain(df.dec_r.max_depth())
        .max()
        .map_or(1, |d| d + 1);
    let dec_l = zoom_along(df, f, &lw, (l, 0.0), depth)?;
    let dec_r = zoom_along(df, f, &rw, (0.0, r), depth)?;
    let g = &step.renormalized;
    Ok(DecomposedGapMap { alpha: g.alpha(), beta: g.beta(), b: g.b(), dec_l, dec_r })
}

fn zoom_along(
    df: &DecomposedGapMap,
    f: &GapMap,
    word: &[Branch],
    start: (f64, f64),
    depth: u32,
) -> Result<Decomposition> {
    let (mut x0, mut x1) = start;
    let mut out = Decomposition::default();
    let mut index = 0u32;
    for &br in word {
        let (dec, u0, u1) = match br {
            Branch::L => (&df.dec_l, f.left_coord(x0), f.left_coord(x1)),
            Branch::R => (&df.dec_r, f.right_coord(x0), f.right_coord(x1)),
        };
        let (u0, u1) = (u0.clamp(0.0, 1.0), u1.clamp(0.0, 1.0));
        let piece = dec.zoom(u0, u1, depth, index)?;
        index += piece.len() as u32;
        out = out.concat(piece);
        (x0, x1) = match br {
            Branch::L => (f.left_branch(x0), f.left_branch(x1)),
            Branch::R => (f.right_branch(x0), f.right_branch(x1)),
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trivial_compositions() {
        let empty = Decomposition::default();
        assert!(empty.compose().unwrap().is_identity());
        let d = Diffeo::from_coeffs(vec![0.2, -0.1, 0.05]).unwrap();
        assert_eq!(Decomposition::singleton(d.clone()).compose().unwrap(), d.resized(3).unwrap());
    }

    #[test]
    fn two_items_compose_in_order() {
        let c = Diffeo::constant(0.5, 16).unwrap();
        let e = Diffeo::from_coeffs(vec![0.0, 0.4]).unwrap().resized(16).unwrap();
        let dec = Decomposition::new(vec![
            Item { label: (0, 0), diffeo: c.clone() },
            Item { label: (0, 1), diffeo: e.clone() },
        ]);
        let composed = dec.compose().unwrap();
        let direct = e.compose(&c).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_abs_diff_eq!(composed.value(x), direct.value(x), epsilon = 1e-14);
            assert_abs_diff_eq!(composed.value(x), e.value(c.value(x)), epsilon = 1e-10);
        }
        let reversed = Decomposition::new(dec.items.iter().rev().cloned().collect());
        let rc = reversed.compose().unwrap();
        assert!((0..=20).any(|i| (rc.value(i as f64 / 20.0) - composed.value(i as f64 / 20.0)).abs() > 1e-6));
    }

    #[test]
    fn norms_add() {
        let a = Decomposition::singleton(Diffeo::constant(0.3, 4).unwrap());
        let b = Decomposition::singleton(Diffeo::constant(-0.2, 4).unwrap());
        assert_abs_diff_eq!(a.norm(), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(a.clone().concat(b.clone()).norm(), 0.5, epsilon = 1e-14);
        assert_eq!(Decomposition::singleton(Diffeo::identity(4)).norm(), 0.0);
    }

    #[test]
    fn affine_decomposed_renormalization() {
        let f = GapMap::affine(0.5, 0.5, 0.3).unwrap();
        let df = DecomposedGapMap::from_gap_map(&f);
        let g = renormalize_decomposed(&df).unwrap();
        assert_abs_diff_eq!(g.alpha, 0.125, epsilon = 1e-14);
        assert_abs_diff_eq!(g.beta, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(g.b, 1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(g.dec_l.len(), 3);
        assert_eq!(g.dec_r.len(), 2);
        assert!(g.dec_l.items.iter().chain(&g.dec_r.items).all(|i| i.diffeo.is_identity()));
        assert!(g.dec_l.items.iter().all(|i| i.label.0 == 1));
    }

    #[test]
    fn empty_decompositions_project_to_affine() {
        let df = DecomposedGapMap {
            alpha: 0.5,
            beta: 0.4,
            b: 0.3,
            dec_l: Decomposition::default(),
            dec_r: Decomposition::default(),
        };
        assert!(df.project().unwrap().is_affine());
    }
}
