//! Finitary invertible matrices: elements of GL(n, Z/p^k) viewed inside the infinite
//! group through identity padding.

use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{Echelon, ResidueMatrix};
use crate::residue::{Modulus, Norm};

/// The infinite matrix `diag(core, 1, 1, ...)` with an invertible core.
///
/// Equality and hashing ignore the window: padding the core with identity rows and
/// columns yields the same element.
#[derive(Clone)]
pub struct GroupElement {
    core: ResidueMatrix,
}

impl GroupElement {
    pub fn new(core: ResidueMatrix) -> Result<Self> {
        if !core.is_square() {
            return Err(Error::Shape(format!(
                "group element core must be square, got {}x{}",
                core.rows(),
                core.cols()
            )));
        }
        let rank = core.rank_mod_p();
        if rank != core.rows() {
            return Err(Error::Singular {
                rank,
                size: core.rows(),
            });
        }
        Ok(GroupElement { core })
    }

    pub(crate) fn new_unchecked(core: ResidueMatrix) -> Self {
        debug_assert!(core.is_invertible());
        GroupElement { core }
    }

    pub fn from_rows(rows: &[Vec<u64>], modulus: Modulus) -> Result<Self> {
        Self::new(ResidueMatrix::from_rows(rows, modulus)?)
    }

    pub fn from_i64_rows(rows: &[Vec<i64>], modulus: Modulus) -> Result<Self> {
        Self::new(ResidueMatrix::from_i64_rows(rows, modulus)?)
    }

    /// The identity, with an empty window.
    pub fn identity(modulus: Modulus) -> Self {
        GroupElement {
            core: ResidueMatrix::identity(0, modulus),
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.core.modulus()
    }

    pub fn window(&self) -> usize {
        self.core.rows()
    }

    pub fn core(&self) -> &ResidueMatrix {
        &self.core
    }

    /// Entry of the infinite matrix.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        if i < self.window() && j < self.window() {
            self.core[(i, j)]
        } else {
            u64::from(i == j)
        }
    }

    /// The core padded to size `max(n, window)`.
    pub fn padded(&self, n: usize) -> ResidueMatrix {
        if n <= self.window() {
            self.core.clone()
        } else {
            self.core.pad_identity(n)
        }
    }

    /// Same element with window at least `n`.
    pub fn with_window(&self, n: usize) -> GroupElement {
        GroupElement { core: self.padded(n) }
    }

    /// Smallest window `w` such that the element is identity outside `w x w`.
    pub fn support(&self) -> usize {
        let n = self.window();
        (0..n)
            .rev()
            .find(|&i| (0..n).any(|j| self.core[(i, j)] != u64::from(i == j) || self.core[(j, i)] != u64::from(i == j)))
            .map_or(0, |i| i + 1)
    }

    pub fn trimmed(&self) -> GroupElement {
        let s = self.support();
        if s == self.window() {
            self.clone()
        } else {
            GroupElement {
                core: self.core.block(0, s, 0, s),
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        let n = self.window().max(other.window());
        let core = self.padded(n).mul(&other.padded(n))?;
        Ok(GroupElement { core })
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            core: self.core.inverse().expect("group elements are invertible"),
        }
    }

    /// Product of a sequence, left to right.
    pub fn product<'a>(modulus: Modulus, factors: impl IntoIterator<Item = &'a GroupElement>) -> Result<GroupElement> {
        factors
            .into_iter()
            .try_fold(GroupElement::identity(modulus), |acc, f| acc.mul(f))
    }

    pub fn is_permutation(&self) -> bool {
        let n = self.window();
        (0..n).all(|i| {
            let row = self.core.row(i);
            row.iter().filter(|&&x| x == 1).count() == 1 && row.iter().all(|&x| x <= 1)
        }) && (0..n).all(|j| (0..n).filter(|&i| self.core[(i, j)] == 1).count() == 1)
    }

    /// Permutation matrix of `sigma` (0-based images), with `e_i -> e_sigma(i)` so that
    /// the embedding is a homomorphism.
    pub fn from_permutation(sigma: &[usize], modulus: Modulus) -> Result<GroupElement> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &s in sigma {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Precondition(format!("{sigma:?} is not a bijection")));
            }
        }
        let mut core = ResidueMatrix::zeros(n, n, modulus);
        for (i, &s) in sigma.iter().enumerate() {
            core[(s, i)] = 1;
        }
        Ok(GroupElement { core })
    }

    /// The involution fixing the first `alpha` coordinates and swapping the next two
    /// blocks of size `j`.
    pub fn theta(j: usize, alpha: usize, modulus: Modulus) -> GroupElement {
        let sigma: Vec<usize> = (0..alpha + 2 * j)
            .map(|i| {
                if i < alpha {
                    i
                } else if i < alpha + j {
                    i + j
                } else {
                    i - j
                }
            })
            .collect();
        Self::from_permutation(&sigma, modulus).expect("theta is a permutation")
    }

    /// `1 + c E_ij`, `i != j`.
    pub fn transvection(i: usize, j: usize, c: u64, modulus: Modulus) -> GroupElement {
        assert_ne!(i, j);
        let mut core = ResidueMatrix::identity(i.max(j) + 1, modulus);
        core[(i, j)] = modulus.reduce(c);
        GroupElement { core }
    }

    /// `diag(1, .., u, .., 1)` with the unit `u` at position `i`.
    pub fn scaling(i: usize, unit: u64, modulus: Modulus) -> Result<GroupElement> {
        let mut core = ResidueMatrix::identity(i + 1, modulus);
        core[(i, i)] = modulus.reduce(unit);
        GroupElement::new(core)
    }

    /// `diag(1_m, inner)`.
    pub fn shifted(m: usize, inner: &GroupElement) -> GroupElement {
        let n = m + inner.window();
        let mut core = ResidueMatrix::identity(n, inner.modulus());
        core.set_block(m, m, inner.core());
        GroupElement { core }
    }

    /// Conjugates by the permutation `perm` (0-based, `e_i -> e_perm(i)`), i.e. returns
    /// `P g P^-1`.
    pub fn conjugate_by_permutation(&self, perm: &[usize]) -> GroupElement {
        let n = perm.len().max(self.window());
        let mut core = ResidueMatrix::identity(n, self.modulus());
        let image = |i: usize| if i < perm.len() { perm[i] } else { i };
        for i in 0..n {
            for j in 0..n {
                core[(image(i), image(j))] = self.get(i, j);
            }
        }
        GroupElement { core }
    }

    pub fn transpose(&self) -> GroupElement {
        GroupElement {
            core: self.core.transpose(),
        }
    }

    /// `max_ij |z_ij - u_ij|` over the union of windows.
    pub fn distance(&self, other: &GroupElement) -> Result<Norm> {
        if self.modulus() != other.modulus() {
            return Err(Error::ModulusMismatch(self.modulus(), other.modulus()));
        }
        let m = self.modulus();
        let n = self.window().max(other.window());
        let mut best = Norm::Zero;
        for i in 0..n {
            for j in 0..n {
                let d = m.norm(m.sub(self.get(i, j), other.get(i, j)));
                if d > best {
                    best = d;
                    if best == Norm::ONE {
                        return Ok(best);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Uniformly random element of GL(n, Z/p^k) by rejection sampling.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, modulus: Modulus) -> GroupElement {
        loop {
            let core = ResidueMatrix::from_fn(n, n, modulus, |_, _| rng.gen_range(0..modulus.order()));
            if core.is_invertible() {
                return GroupElement { core };
            }
        }
    }

    /// Random element of `GL^[m] ∩ GL(n)`.
    pub fn random_stabilizer<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, modulus: Modulus) -> GroupElement {
        let inner = Self::random(rng, n.saturating_sub(m), modulus);
        Self::shifted(m, &inner)
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        if self.modulus() != other.modulus() {
            return false;
        }
        let n = self.window().max(other.window());
        (0..n).all(|i| (0..n).all(|j| self.get(i, j) == other.get(i, j)))
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let t = self.trimmed();
        t.modulus().hash(state);
        t.window().hash(state);
        t.core.data().hash(state);
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement{:?}", self.core)
    }
}

/// Exact order of GL(n, Z/p^k): `p^((k-1) n^2) * prod_{i<n} (p^n - p^i)`.
pub fn gl_order(n: usize, modulus: Modulus) -> Option<u128> {
    let p = modulus.p() as u128;
    let n32 = n as u32;
    let mut total = p.checked_pow((modulus.k() - 1) * n32 * n32)?;
    let pn = p.checked_pow(n32)?;
    for i in 0..n32 {
        total = total.checked_mul(pn - p.pow(i))?;
    }
    Some(total)
}

/// Every element of GL(n, Z/p^k), rows chosen depth-first with mod-p independence
/// pruning. Fails if the group order exceeds `budget`.
pub fn enumerate_gl(n: usize, modulus: Modulus, budget: u64) -> Result<Vec<GroupElement>> {
    let needed = gl_order(n, modulus).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let q = modulus.order();
    let vectors: Vec<Vec<u64>> = (0..q.pow(n as u32))
        .map(|mut idx| {
            let mut v = vec![0; n];
            for x in v.iter_mut().rev() {
                *x = idx % q;
                idx /= q;
            }
            v
        })
        .collect();
    let mut out = Vec::with_capacity(needed as usize);
    let mut rows: Vec<usize> = Vec::with_capacity(n);
    fn dfs(
        n: usize,
        modulus: Modulus,
        vectors: &[Vec<u64>],
        echelon: &Echelon,
        rows: &mut Vec<usize>,
        out: &mut Vec<GroupElement>,
    ) {
        if rows.len() == n {
            let data: Vec<Vec<u64>> = rows.iter().map(|&r| vectors[r].clone()).collect();
            let core = ResidueMatrix::from_rows(&data, modulus).expect("canonical");
            out.push(GroupElement::new_unchecked(core));
            return;
        }
        for (idx, v) in vectors.iter().enumerate() {
            let mut e = echelon.clone();
            if e.insert(v) {
                rows.push(idx);
                dfs(n, modulus, vectors, &e, rows, out);
                rows.pop();
            }
        }
    }
    if n == 0 {
        return Ok(vec![GroupElement::identity(modulus)]);
    }
    dfs(n, modulus, &vectors, &Echelon::new(n, modulus.p()), &mut rows, &mut out);
    Ok(out)
}

/// The closed subgroups tested by [`GroupElement::is_member`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupSpec {
    /// `diag(1_m, *)`, written `GL^[m]` or `K^m`.
    Stabilizer { m: usize },
    /// Block form `[[1 + p^j A, p^j B], [p^j C, D]]` with an `m x m` corner.
    DeepStabilizer { m: usize, j: u32 },
    /// `1 + p^j Q`.
    Congruence { j: u32 },
    /// `g^t g = 1`.
    Orthogonal,
    /// `g^t I g = I` for the block-diagonal form `I = diag(J, J, ..)`,
    /// `J = [[0, 1], [-1, 0]]`. With `literal` the right-hand side is the identity
    /// instead, evaluated on the (even) window.
    Symplectic { literal: bool },
}

impl SubgroupSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SubgroupSpec::DeepStabilizer { j: 0, .. } | SubgroupSpec::Congruence { j: 0 } => {
                Err(Error::Precondition("congruence exponent must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// The symplectic form restricted to an `n x n` window, `n` even.
pub fn symplectic_form(n: usize, modulus: Modulus) -> ResidueMatrix {
    debug_assert!(n.is_multiple_of(2));
    let mut form = ResidueMatrix::zeros(n, n, modulus);
    for b in 0..n / 2 {
        form[(2 * b, 2 * b + 1)] = 1;
        form[(2 * b + 1, 2 * b)] = modulus.neg(1);
    }
    form
}

impl GroupElement {
    pub fn is_member(&self, spec: SubgroupSpec) -> bool {
        let m = self.modulus();
        let divisible = |x: u64, j: u32| m.valuation(x) >= j;
        match spec {
            SubgroupSpec::Stabilizer { m: depth } => (0..depth).all(|i| {
                (0..self.window().max(depth))
                    .all(|j| self.get(i, j) == u64::from(i == j) && self.get(j, i) == u64::from(i == j))
            }),
            SubgroupSpec::DeepStabilizer { m: depth, j } => {
                let n = self.window().max(depth);
                (0..depth).all(|i| {
                    (0..n).all(|c| {
                        divisible(m.sub(self.get(i, c), u64::from(i == c)), j)
                            && divisible(m.sub(self.get(c, i), u64::from(i == c)), j)
                    })
                })
            }
            SubgroupSpec::Congruence { j } => {
                let n = self.window();
                (0..n).all(|i| (0..n).all(|c| divisible(m.sub(self.get(i, c), u64::from(i == c)), j)))
            }
            SubgroupSpec::Orthogonal => {
                let core = self.core();
                core.transpose().mul(core).map(|x| x.is_identity()).unwrap_or(false)
            }
            SubgroupSpec::Symplectic { literal } => {
                let n = self.window() + self.window() % 2;
                let g = self.padded(n);
                let form = symplectic_form(n, m);
                let lhs = g.transpose().mul(&form).and_then(|x| x.mul(&g)).expect("shapes agree");
                if literal {
                    lhs.is_identity()
                } else {
                    lhs == form
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(p: u64, k: u32) -> Modulus {
        Modulus::new(p, k).unwrap()
    }

    #[test]
    fn theta_matches_block_pattern() {
        let m = z(2, 1);
        let t = GroupElement::theta(1, 0, m);
        assert_eq!(t.core().to_rows(), vec![vec![0, 1], vec![1, 0]]);
        let t = GroupElement::theta(1, 1, m);
        assert_eq!(t.core().to_rows(), vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]);
        for j in 0..4 {
            for a in 0..3 {
                let t = GroupElement::theta(j, a, m);
                assert!(t.mul(&t).unwrap().is_identity());
                assert!(t.is_member(SubgroupSpec::Stabilizer { m: a }));
            }
        }
    }

    #[test]
    fn products_and_padding() {
        let m = z(2, 2);
        let u = GroupElement::from_rows(&[vec![1, 1], vec![0, 1]], m).unwrap();
        let u2 = u.mul(&u).unwrap();
        assert_eq!(u2.core().to_rows(), vec![vec![1, 2], vec![0, 1]]);
        assert!(u.mul(&u.inverse()).unwrap().is_identity());
        assert_eq!(u.with_window(5), u);
        assert_eq!(u.with_window(5).trimmed().window(), 2);
        let t = GroupElement::theta(1, 0, m);
        assert_eq!(u.mul(&t).unwrap().window(), 2);
        assert_eq!(GroupElement::identity(m).with_window(3).support(), 0);
    }

    #[test]
    fn permutation_embedding_is_homomorphism() {
        let m = z(3, 1);
        let perms: Vec<Vec<usize>> = {
            let mut all = Vec::new();
            let mut p = vec![0, 1, 2, 3];
            permute(&mut p, 0, &mut all);
            all
        };
        assert_eq!(perms.len(), 24);
        for s in &perms {
            for t in &perms {
                let st: Vec<usize> = (0..4).map(|i| s[t[i]]).collect();
                let lhs = GroupElement::from_permutation(&st, m).unwrap();
                let rhs = GroupElement::from_permutation(s, m)
                    .unwrap()
                    .mul(&GroupElement::from_permutation(t, m).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        assert_eq!(
            GroupElement::from_permutation(&[1, 0], m).unwrap(),
            GroupElement::theta(1, 0, m)
        );
        assert!(GroupElement::from_permutation(&[0, 1, 2], m).unwrap().is_identity());
        assert!(GroupElement::from_permutation(&[0, 0], m).is_err());
    }

    fn permute(p: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            permute(p, i + 1, out);
            p.swap(i, j);
        }
    }

    #[test]
    fn metric_examples() {
        let m = z(2, 3);
        let one = GroupElement::identity(m);
        let t = GroupElement::theta(1, 0, m);
        assert_eq!(one.distance(&one).unwrap(), Norm::Zero);
        assert_eq!(one.distance(&t).unwrap(), Norm::ONE);
        let g = GroupElement::from_rows(&[vec![3]], m).unwrap();
        assert_eq!(one.distance(&g).unwrap(), Norm::Power(1));
    }

    #[test]
    fn membership_examples() {
        let m = z(3, 2);
        let one = GroupElement::identity(m);
        let specs = [
            SubgroupSpec::Stabilizer { m: 2 },
            SubgroupSpec::DeepStabilizer { m: 2, j: 1 },
            SubgroupSpec::Congruence { j: 1 },
            SubgroupSpec::Orthogonal,
            SubgroupSpec::Symplectic { literal: false },
        ];
        for s in specs {
            assert!(one.is_member(s), "{s:?}");
        }
        assert!(GroupElement::theta(1, 0, m).is_member(SubgroupSpec::Orthogonal));
        let c = GroupElement::from_i64_rows(&[vec![4, 3], vec![0, 1]], m).unwrap();
        assert!(c.is_member(SubgroupSpec::Congruence { j: 1 }));
        assert!(!c.is_member(SubgroupSpec::Congruence { j: 2 }));
        assert!(c.is_member(SubgroupSpec::DeepStabilizer { m: 1, j: 1 }));
        assert!(!c.is_member(SubgroupSpec::Stabilizer { m: 1 }));
        // [[a, b], [c, d]] with det 1 is symplectic for one J block
        let s = GroupElement::from_i64_rows(&[vec![2, 1], vec![1, 1]], m).unwrap();
        assert!(s.is_member(SubgroupSpec::Symplectic { literal: false }));
        assert!(!s.is_member(SubgroupSpec::Symplectic { literal: true }));
        let s3 = GroupElement::from_i64_rows(&[vec![2, 1], vec![0, 1]], m).unwrap();
        assert!(!s3.is_member(SubgroupSpec::Symplectic { literal: false }));
    }

    #[test]
    fn gl_counts() {
        assert_eq!(gl_order(2, z(2, 1)), Some(6));
        assert_eq!(gl_order(2, z(2, 2)), Some(96));
        assert_eq!(enumerate_gl(2, z(2, 1), 100).unwrap().len(), 6);
        assert_eq!(enumerate_gl(3, z(2, 1), 1000).unwrap().len(), 168);
        assert_eq!(enumerate_gl(2, z(3, 1), 1000).unwrap().len(), 48);
        assert!(matches!(
            enumerate_gl(4, z(2, 1), 100),
            Err(Error::Budget { needed: 20160, .. })
        ));
    }

    #[test]
    fn random_stabilizer_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = z(2, 2);
        for _ in 0..20 {
            let g = GroupElement::random_stabilizer(&mut rng, 2, 5, m);
            assert!(g.is_member(SubgroupSpec::Stabilizer { m: 2 }));
        }
    }
}
