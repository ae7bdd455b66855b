//! Double cosets of tuples `K^alpha \ G^n / K^gamma` under the diagonal action, and
//! their associative product.

use crate::equivalence::{self, compact, compact_with_multipliers, Decision, Witness};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::matrix::ResidueMatrix;
use crate::residue::Modulus;

/// A tuple `(g_1, .., g_n)` of group elements over one ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleElement {
    parts: Vec<GroupElement>,
}

impl TupleElement {
    pub fn new(parts: Vec<GroupElement>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::Shape("a tuple needs at least one part".into()));
        };
        let modulus = first.modulus();
        if let Some(bad) = parts.iter().find(|x| x.modulus() != modulus) {
            return Err(Error::ModulusMismatch(modulus, bad.modulus()));
        }
        Ok(TupleElement { parts })
    }

    pub fn identity(n: usize, modulus: Modulus) -> Self {
        TupleElement {
            parts: vec![GroupElement::identity(modulus); n.max(1)],
        }
    }

    pub fn parts(&self) -> &[GroupElement] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn modulus(&self) -> Modulus {
        self.parts[0].modulus()
    }

    pub fn window(&self) -> usize {
        self.parts.iter().map(GroupElement::window).max().unwrap_or(0)
    }

    /// `(x g_1 y, .., x g_n y)`.
    pub fn sandwich(&self, x: &GroupElement, y: &GroupElement) -> Result<Self> {
        let parts = self.parts.iter().map(|g| x.mul(g)?.mul(y)).collect::<Result<_>>()?;
        Ok(TupleElement { parts })
    }
}

/// `K^alpha rep K^gamma`.
#[derive(Debug, Clone)]
pub struct TrainCoset {
    pub alpha: usize,
    pub gamma: usize,
    pub rep: TupleElement,
}

impl TrainCoset {
    pub fn new(alpha: usize, gamma: usize, rep: TupleElement) -> Self {
        TrainCoset { alpha, gamma, rep }
    }

    /// The unit at depth `alpha`: the identity tuple.
    pub fn identity(alpha: usize, n: usize, modulus: Modulus) -> Self {
        TrainCoset::new(alpha, alpha, TupleElement::identity(n, modulus))
    }

    /// Same coset with a representative of small window.
    pub fn compacted(&self) -> Self {
        let parts = compact(self.rep.parts(), self.alpha, self.gamma);
        TrainCoset::new(self.alpha, self.gamma, TupleElement { parts })
    }
}

/// How the two residual index sets are merged in the product representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interleave {
    /// The residual block of the first factor, then that of the second.
    #[default]
    Stack,
    /// Alternating between the two residual blocks.
    Riffle,
}

fn merge_order(first: usize, second: usize, mode: Interleave) -> Vec<usize> {
    // positions, in the merged block, of [first block.., second block..]
    match mode {
        Interleave::Stack => (0..first + second).collect(),
        Interleave::Riffle => {
            let mut order = Vec::with_capacity(first + second);
            let (mut a, mut b) = (0, 0);
            while a < first || b < second {
                if a < first {
                    order.push(('a', a));
                    a += 1;
                }
                if b < second {
                    order.push(('b', b));
                    b += 1;
                }
            }
            let mut pos = vec![0; first + second];
            for (slot, (which, i)) in order.into_iter().enumerate() {
                let idx = if which == 'a' { i } else { first + i };
                pos[idx] = slot;
            }
            pos
        }
    }
}

/// The product representative of `K^alpha g1 K^beta` and `K^beta g2 K^gamma`, part
/// by part:
///
/// ```text
/// [[a1, b1], [c1, d1]] ◎ [[a2, b2], [c2, d2]] = [[a1 a2, b1, a1 b2],
///                                                [c1 a2, d1, c1 b2],
///                                                [c2,    0,  d2   ]]
/// ```
///
/// where `a1` is `alpha x beta` and `a2` is `beta x gamma`.
pub fn circ_representative(
    g1: &TupleElement,
    g2: &TupleElement,
    alpha: usize,
    beta: usize,
    gamma: usize,
    mode: Interleave,
) -> Result<TupleElement> {
    if g1.len() != g2.len() {
        return Err(Error::Shape(format!("tuples have {} and {} parts", g1.len(), g2.len())));
    }
    if g1.modulus() != g2.modulus() {
        return Err(Error::ModulusMismatch(g1.modulus(), g2.modulus()));
    }
    let modulus = g1.modulus();
    let n1 = g1.window().max(alpha).max(beta);
    let n2 = g2.window().max(beta).max(gamma);
    let size = n1 + n2 - beta;
    // row and column positions of each block
    let row_mid = merge_order(n1 - alpha, n2 - beta, mode);
    let col_mid = merge_order(n1 - beta, n2 - gamma, mode);
    let row_of_1 = |i: usize| if i < alpha { i } else { alpha + row_mid[i - alpha] };
    let row_of_2 = |i: usize| alpha + row_mid[n1 - alpha + i - beta];
    let col_of_1 = |j: usize| gamma + col_mid[j - beta];
    let col_of_2 = |j: usize| {
        if j < gamma {
            j
        } else {
            gamma + col_mid[n1 - beta + j - gamma]
        }
    };

    let mut parts = Vec::with_capacity(g1.len());
    for (x, y) in g1.parts().iter().zip(g2.parts()) {
        let x = x.padded(n1);
        let y = y.padded(n2);
        let mut out = ResidueMatrix::zeros(size, size, modulus);
        // columns of g1 below beta meet the rows of g2 above beta
        let top2 = y.block(0, beta, 0, n2);
        let mixed = x.block(0, n1, 0, beta).mul(&top2)?;
        for i in 0..n1 {
            for j in 0..n2 {
                out[(row_of_1(i), col_of_2(j))] = mixed[(i, j)];
            }
            for j in beta..n1 {
                out[(row_of_1(i), col_of_1(j))] = x[(i, j)];
            }
        }
        for i in beta..n2 {
            for j in 0..n2 {
                out[(row_of_2(i), col_of_2(j))] = y[(i, j)];
            }
        }
        parts.push(GroupElement::new(out)?.trimmed());
    }
    TupleElement::new(parts)
}

fn composable(a: &TrainCoset, b: &TrainCoset) -> Result<()> {
    if a.gamma != b.alpha {
        return Err(Error::Precondition(format!(
            "depths do not compose: {} then {}",
            a.gamma, b.alpha
        )));
    }
    if a.rep.len() != b.rep.len() {
        return Err(Error::Shape(format!(
            "tuples have {} and {} parts",
            a.rep.len(),
            b.rep.len()
        )));
    }
    if a.rep.modulus() != b.rep.modulus() {
        return Err(Error::ModulusMismatch(a.rep.modulus(), b.rep.modulus()));
    }
    Ok(())
}

pub fn train_product(a: &TrainCoset, b: &TrainCoset) -> Result<TrainCoset> {
    train_product_with(a, b, Interleave::Stack)
}

pub fn train_product_with(a: &TrainCoset, b: &TrainCoset, mode: Interleave) -> Result<TrainCoset> {
    composable(a, b)?;
    let rep = circ_representative(&a.rep, &b.rep, a.alpha, a.gamma, b.gamma, mode)?;
    Ok(TrainCoset::new(a.alpha, b.gamma, rep))
}

/// Decides `A = B` as double cosets of tuples.
pub fn train_coset_eq(a: &TrainCoset, b: &TrainCoset, budget: u64) -> Result<Decision> {
    if a.alpha != b.alpha || a.gamma != b.gamma {
        return Err(Error::Precondition(format!(
            "depths differ: ({}, {}) vs ({}, {})",
            a.alpha, a.gamma, b.alpha, b.gamma
        )));
    }
    if a.rep.len() != b.rep.len() {
        return Err(Error::Shape(format!(
            "tuples have {} and {} parts",
            a.rep.len(),
            b.rep.len()
        )));
    }
    if a.rep.modulus() != b.rep.modulus() {
        return Err(Error::ModulusMismatch(a.rep.modulus(), b.rep.modulus()));
    }
    let (alpha, gamma) = (a.alpha, a.gamma);
    if alpha == 0 && gamma == 0 && a.rep.len() == 1 {
        // single coset; the witness is explicit
        let x = &a.rep.parts()[0];
        let y = &b.rep.parts()[0];
        return Ok(Decision::Equivalent(Witness {
            left: y.mul(&x.inverse())?,
            right: GroupElement::identity(x.modulus()),
        }));
    }
    if invariants(&a.rep, alpha, gamma) != invariants(&b.rep, alpha, gamma) {
        return Ok(Decision::Distinct);
    }
    let (ca, la, ra) = compact_with_multipliers(a.rep.parts(), alpha, gamma);
    let (cb, lb, rb) = compact_with_multipliers(b.rep.parts(), alpha, gamma);
    let d = equivalence::decide(&ca, &cb, alpha, gamma, budget)?;
    let Decision::Equivalent(w) = d else {
        return Ok(d);
    };
    // b = lb^-1 u la a ra v rb^-1
    let w = Witness {
        left: lb.inverse().mul(&w.left)?.mul(&la)?.trimmed(),
        right: ra.mul(&w.right)?.mul(&rb.inverse())?.trimmed(),
    };
    if !w.verify(a.rep.parts(), b.rep.parts(), alpha, gamma) {
        return Err(Error::Internal("train witness failed verification".into()));
    }
    Ok(Decision::Equivalent(w))
}

/// Top-left blocks of every part and its inverse; shared by all coset members.
fn invariants(t: &TupleElement, alpha: usize, gamma: usize) -> Vec<ResidueMatrix> {
    t.parts()
        .iter()
        .flat_map(|g| {
            let w = g.window().max(alpha).max(gamma);
            [
                g.padded(w).block(0, alpha, 0, gamma),
                g.inverse().padded(w).block(0, gamma, 0, alpha),
            ]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Stabilization {
    /// The cosets agree for every `j` from `index` through the last one computed.
    Stable {
        index: usize,
        coset: TrainCoset,
        computed: usize,
    },
    /// The last two cosets differ, so no stable value was observed.
    Inconclusive { computed: usize },
}

/// The sequence `K^alpha g1 theta_j^[beta] g2 K^gamma`, `j = 0..=j_max`, with the same
/// `theta` in every part. `j_max` defaults to `2 * window + beta`.
pub fn stabilization_limit(a: &TrainCoset, b: &TrainCoset, j_max: Option<usize>, budget: u64) -> Result<Stabilization> {
    composable(a, b)?;
    let beta = a.gamma;
    let modulus = a.rep.modulus();
    let j_max = j_max.unwrap_or(2 * a.rep.window().max(b.rep.window()) + beta);
    let term = |j: usize| -> Result<TrainCoset> {
        let theta = GroupElement::theta(j, beta, modulus);
        let parts = a
            .rep
            .parts()
            .iter()
            .zip(b.rep.parts())
            .map(|(x, y)| x.mul(&theta)?.mul(y))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainCoset::new(a.alpha, b.gamma, TupleElement::new(parts)?).compacted())
    };
    let mut prev = term(0)?;
    let mut index = 0;
    for j in 1..=j_max {
        let cur = term(j)?;
        match train_coset_eq(&prev, &cur, budget)? {
            Decision::Equivalent(_) => {}
            Decision::Distinct => index = j,
            Decision::Undecided { needed, budget } => return Err(Error::Budget { needed, budget }),
        }
        prev = cur;
    }
    if index < j_max {
        Ok(Stabilization::Stable {
            index,
            coset: term(index)?,
            computed: j_max + 1,
        })
    } else {
        Ok(Stabilization::Inconclusive { computed: j_max + 1 })
    }
}

/// Compares `(A B) C` with `A (B C)`.
pub fn associativity_check(a: &TrainCoset, b: &TrainCoset, c: &TrainCoset, budget: u64) -> Result<Decision> {
    let left = train_product(&train_product(a, b)?, c)?;
    let right = train_product(a, &train_product(b, c)?)?;
    train_coset_eq(&left, &right, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z2() -> Modulus {
        Modulus::new(2, 1).unwrap()
    }

    fn random_tuple(rng: &mut ChaCha8Rng, n: usize, w: usize, m: Modulus) -> TupleElement {
        TupleElement::new((0..n).map(|_| GroupElement::random(rng, w, m)).collect()).unwrap()
    }

    #[test]
    fn colligation_block_formula() {
        // 2x2 blocks of size 1 each: alpha = beta = gamma = 1
        let m = Modulus::new(5, 1).unwrap();
        let g1 = GroupElement::from_rows(&[vec![1, 2], vec![3, 4]], m).unwrap();
        let g2 = GroupElement::from_rows(&[vec![2, 1], vec![1, 1]], m).unwrap();
        let t1 = TupleElement::new(vec![g1]).unwrap();
        let t2 = TupleElement::new(vec![g2]).unwrap();
        let out = circ_representative(&t1, &t2, 1, 1, 1, Interleave::Stack).unwrap();
        // [[a1a2, b1, a1b2], [c1a2, d1, c1b2], [c2, 0, d2]]
        let expected = vec![vec![2, 2, 1], vec![6 % 5, 4, 3], vec![1, 0, 1]];
        assert_eq!(out.parts()[0].core().to_rows(), expected);
    }

    #[test]
    fn identity_right_factor_keeps_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_tuple(&mut rng, 1, 3, z2());
        let e = TupleElement::identity(1, z2());
        let out = circ_representative(&g, &e, 1, 1, 1, Interleave::Stack).unwrap();
        assert_eq!(out.parts()[0], g.parts()[0]);
    }

    #[test]
    fn unit_law_and_stabilization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = z2();
        for n in 1..=2 {
            for depth in 0..=1 {
                for _ in 0..10 {
                    let a = TrainCoset::new(depth, depth, random_tuple(&mut rng, n, 3, m));
                    let e = TrainCoset::identity(depth, n, m);
                    let ea = train_product(&e, &a).unwrap();
                    let ae = train_product(&a, &e).unwrap();
                    assert!(train_coset_eq(&ea, &a, 1 << 16).unwrap().is_equivalent());
                    assert!(train_coset_eq(&ae, &a, 1 << 16).unwrap().is_equivalent());
                    let b = TrainCoset::new(depth, depth, random_tuple(&mut rng, n, 3, m));
                    let Stabilization::Stable { coset, .. } = stabilization_limit(&a, &b, None, 1 << 16).unwrap()
                    else {
                        panic!("no stabilization")
                    };
                    let prod = train_product(&a, &b).unwrap();
                    assert!(train_coset_eq(&coset, &prod, 1 << 16).unwrap().is_equivalent());
                }
            }
        }
    }

    #[test]
    fn riffle_and_stack_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = z2();
        for _ in 0..10 {
            let a = TrainCoset::new(1, 1, random_tuple(&mut rng, 2, 3, m));
            let b = TrainCoset::new(1, 0, random_tuple(&mut rng, 2, 2, m));
            let s = train_product_with(&a, &b, Interleave::Stack).unwrap();
            let r = train_product_with(&a, &b, Interleave::Riffle).unwrap();
            assert!(train_coset_eq(&s, &r, 1 << 16).unwrap().is_equivalent());
        }
    }

    #[test]
    fn non_diagonal_twist_differs() {
        let m = z2();
        let g = TupleElement::new(vec![GroupElement::theta(1, 1, m), GroupElement::identity(m)]).unwrap();
        let u = GroupElement::from_rows(&[vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]], m).unwrap();
        let h = TupleElement::new(vec![u.mul(&g.parts()[0]).unwrap(), g.parts()[1].clone()]).unwrap();
        let d = train_coset_eq(&TrainCoset::new(1, 1, g), &TrainCoset::new(1, 1, h), 1 << 16).unwrap();
        assert_eq!(d, Decision::Distinct);
    }
}
