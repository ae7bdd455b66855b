//! Factorization of an invertible finitary matrix into permutation matrices and
//! elements of `K^m = diag(1_m, *)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, SubgroupSpec};
use crate::matrix::{Echelon, ResidueMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Permutation,
    Stabilizer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub kind: FactorKind,
    pub element: GroupElement,
}

impl Factor {
    /// Whether the factor really has the kind it is tagged with.
    pub fn check(&self, m: usize) -> bool {
        match self.kind {
            FactorKind::Permutation => self.element.is_permutation(),
            FactorKind::Stabilizer => self.element.is_member(SubgroupSpec::Stabilizer { m }),
        }
    }
}

/// Writes `g` as a product of permutation matrices and elements of `K^m`.
///
/// The top `m` rows of `g` are completed to a basis by standard vectors, giving `R`
/// with `g R^-1 = [[1, 0], [x, y]]`; a lower unitriangular `L` then gives
/// `L g R^-1 in K^m`. The two remaining factors are moved into `K^m` by conjugating
/// with the block swap `theta_T`, `T >= max(m, window)`.
pub fn generator_factorization(g: &GroupElement, m: usize) -> Result<Vec<Factor>> {
    let modulus = g.modulus();
    if g.is_member(SubgroupSpec::Stabilizer { m }) {
        return Ok(vec![Factor {
            kind: FactorKind::Stabilizer,
            element: g.clone(),
        }]);
    }
    if g.is_permutation() {
        return Ok(vec![Factor {
            kind: FactorKind::Permutation,
            element: g.clone(),
        }]);
    }
    let w = g.window().max(m);
    let gm = g.padded(w);

    let mut basis = Echelon::new(w, modulus.p());
    let mut r0 = ResidueMatrix::zeros(w, w, modulus);
    for i in 0..m {
        if !basis.insert(gm.row(i)) {
            return Err(Error::Internal("top rows of an invertible matrix are dependent".into()));
        }
        for j in 0..w {
            r0[(i, j)] = gm[(i, j)];
        }
    }
    let mut next = m;
    for c in 0..w {
        let mut e = vec![0; w];
        e[c] = 1;
        if basis.insert(&e) {
            r0[(next, c)] = 1;
            next += 1;
        }
    }
    debug_assert_eq!(next, w);
    let r0 = GroupElement::new(r0)?;

    let g1 = GroupElement::new(gm)?.mul(&r0.inverse())?;
    let mut l_inv = ResidueMatrix::identity(w, modulus);
    for i in m..w {
        for j in 0..m {
            l_inv[(i, j)] = g1.get(i, j);
        }
    }
    let l_inv = GroupElement::new(l_inv)?;
    let middle = l_inv.inverse().mul(&g1)?;
    if !middle.is_member(SubgroupSpec::Stabilizer { m }) {
        return Err(Error::Internal("cleared factor is not in the stabilizer".into()));
    }

    let theta = GroupElement::theta(w, 0, modulus);
    let conj = |y: &GroupElement| -> Result<GroupElement> { theta.mul(y)?.mul(&theta) };
    let pieces = [
        (FactorKind::Permutation, theta.clone()),
        (FactorKind::Stabilizer, conj(&l_inv)?),
        (FactorKind::Permutation, theta.clone()),
        (FactorKind::Stabilizer, middle),
        (FactorKind::Permutation, theta.clone()),
        (FactorKind::Stabilizer, conj(&r0)?),
        (FactorKind::Permutation, theta),
    ];
    // drop identity pieces, and a theta pair left adjacent by the removal
    let mut factors: Vec<Factor> = Vec::new();
    for (kind, element) in pieces {
        if element.is_identity() {
            continue;
        }
        if kind == FactorKind::Permutation {
            if let Some(last) = factors.last() {
                if last.kind == FactorKind::Permutation && last.element == element {
                    factors.pop();
                    continue;
                }
            }
        }
        factors.push(Factor { kind, element });
    }

    let product = GroupElement::product(modulus, factors.iter().map(|f| &f.element))?;
    if product != *g || !factors.iter().all(|f| f.check(m)) {
        return Err(Error::Internal("factorization does not reproduce its input".into()));
    }
    Ok(factors)
}
