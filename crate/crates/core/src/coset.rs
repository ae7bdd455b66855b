//! Double cosets `K^m g K^m` with `K^m = diag(1_m, *)`: reduction of a representative
//! into `GL(3m)`, localization of conjugators, equality and the two coset metrics.

use std::collections::HashMap;

use crate::equivalence::{self, Decision, Witness};
use crate::error::{Error, Result};
use crate::group::{enumerate_gl, GroupElement, SubgroupSpec};
use crate::matrix::ResidueMatrix;
use crate::residue::{Modulus, Norm};

/// `q * g * r = out` with `q, r in K^m` and `window(out) <= 3m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionCertificate {
    pub m: usize,
    pub g: GroupElement,
    pub q: GroupElement,
    pub r: GroupElement,
    pub out: GroupElement,
}

impl ReductionCertificate {
    /// Rechecks the certificate using only multiplication and membership.
    pub fn verify(&self) -> bool {
        let k = SubgroupSpec::Stabilizer { m: self.m };
        self.q.is_member(k)
            && self.r.is_member(k)
            && self.out.support() <= 3 * self.m
            && self
                .q
                .mul(&self.g)
                .and_then(|x| x.mul(&self.r))
                .is_ok_and(|x| x == self.out)
    }
}

/// Brings `g` into `GL(2m + gamma)`, `gamma <= m`, by multiplications from `K^m`.
pub fn normalize_to_window(g: &GroupElement, m: usize) -> Result<ReductionCertificate> {
    let modulus = g.modulus();
    if m == 0 {
        return Ok(ReductionCertificate {
            m,
            g: g.clone(),
            q: g.inverse(),
            r: GroupElement::identity(modulus),
            out: GroupElement::identity(modulus),
        });
    }
    let w = g.window().max(2 * m);
    let mut a = g.padded(w);
    let mut q = ResidueMatrix::identity(w, modulus);
    let mut r = ResidueMatrix::identity(w, modulus);

    // 1. top-right band into the first m columns after the corner
    let (_, u, _) = a.block(0, m, m, w).column_compress();
    let mut right = ResidueMatrix::identity(w, modulus);
    right.set_block(m, m, &u);
    a = a.mul(&right)?;
    r = r.mul(&right)?;

    // 2. bottom-left band into the first m rows after the corner
    let (_, v, _) = a.block(m, w, 0, m).row_compress();
    let mut left = ResidueMatrix::identity(w, modulus);
    left.set_block(m, m, &v);
    a = left.mul(&a)?;
    q = left.mul(&q)?;

    // 3. unit pivots of the lower-right block, placed from the bottom-right corner up
    let lo = 2 * m;
    let mut s = w;
    while s > lo {
        let t = s - 1;
        let pivot = (lo..s)
            .flat_map(|i| (lo..s).map(move |j| (i, j)))
            .find(|&(i, j)| modulus.is_unit(a[(i, j)]));
        let Some((pi, pj)) = pivot else { break };
        a.swap_rows(t, pi);
        q.swap_rows(t, pi);
        a.swap_cols(t, pj);
        r.swap_cols(t, pj);
        let inv = modulus.inv(a[(t, t)])?;
        a.scale_row(t, inv);
        q.scale_row(t, inv);
        for i in lo..t {
            let f = a[(i, t)];
            if f != 0 {
                a.add_row_multiple(i, t, modulus.neg(f));
                q.add_row_multiple(i, t, modulus.neg(f));
            }
        }
        for j in lo..t {
            let f = a[(t, j)];
            if f != 0 {
                a.add_col_multiple(j, t, modulus.neg(f));
                r.add_col_multiple(j, t, modulus.neg(f));
            }
        }
        s = t;
    }
    let top = s;

    // 4. clear the middle band against the unit pivots
    for t in top..w {
        for i in m..lo {
            let f = a[(i, t)];
            if f != 0 {
                a.add_row_multiple(i, t, modulus.neg(f));
                q.add_row_multiple(i, t, modulus.neg(f));
            }
        }
        for j in m..lo {
            let f = a[(t, j)];
            if f != 0 {
                a.add_col_multiple(j, t, modulus.neg(f));
                r.add_col_multiple(j, t, modulus.neg(f));
            }
        }
    }

    let out = GroupElement::new(a)?.trimmed();
    let cert = ReductionCertificate {
        m,
        g: g.clone(),
        q: GroupElement::new(q)?.trimmed(),
        r: GroupElement::new(r)?.trimmed(),
        out,
    };
    if cert.out.window() > top || !cert.verify() {
        return Err(Error::Internal(format!(
            "normal form certificate failed for m = {m}, window {}",
            cert.out.window()
        )));
    }
    Ok(cert)
}

/// Given `g1 = q g2 r` with `q, r in K^m` of any window, returns `(q', r')` in
/// `K^m ∩ GL(m + 2l)`, `l = M - m`, with `g1 = q' g2 r'`, where `M` bounds the
/// windows of `g1`, `g2` and `m`.
pub fn localize_conjugators(
    g1: &GroupElement,
    g2: &GroupElement,
    m: usize,
    q: &GroupElement,
    r: &GroupElement,
) -> Result<(GroupElement, GroupElement)> {
    let k = SubgroupSpec::Stabilizer { m };
    if !q.is_member(k) || !r.is_member(k) {
        return Err(Error::Precondition("conjugators must lie in the stabilizer".into()));
    }
    if q.mul(g2)?.mul(r)? != *g1 {
        return Err(Error::Precondition("g1 != q g2 r".into()));
    }
    let modulus = g1.modulus();
    let big_m = g1.window().max(g2.window()).max(m);
    let l = big_m - m;
    let bound = m + 2 * l;
    if q.support() <= bound && r.support() <= bound {
        return Ok((q.trimmed(), r.trimmed()));
    }
    let xi = r.inverse();
    let wx = xi.window().max(big_m);
    let xm = xi.padded(wx);

    let x = xm.block(m, big_m, m, big_m);
    let y = xm.block(m, big_m, big_m, wx);
    let z = xm.block(big_m, wx, m, big_m);
    let (y_c, _, _) = y.column_compress();
    let (z_c, _, _) = z.row_compress();

    let mut core = ResidueMatrix::identity(bound, modulus);
    core.set_block(m, m, &x);
    for i in 0..l {
        for j in 0..l {
            core[(m + i, big_m + j)] = if j < y_c.cols() { y_c[(i, j)] } else { 0 };
            core[(big_m + i, m + j)] = if i < z_c.rows() { z_c[(i, j)] } else { 0 };
        }
    }
    let mut inner = core.block(m, bound, m, bound);
    equivalence::complete_rows(&mut inner, l)?;
    core.set_block(m, m, &inner);
    let xi_new = GroupElement::new(core)?;
    let eta = g1.mul(&xi_new)?.mul(&g2.inverse())?;
    let (q_new, r_new) = (eta.trimmed(), xi_new.inverse().trimmed());
    if !q_new.is_member(k)
        || !r_new.is_member(k)
        || q_new.support().max(r_new.support()) > bound
        || q_new.mul(g2)?.mul(&r_new)? != *g1
    {
        return Err(Error::Internal("localized conjugators failed verification".into()));
    }
    Ok((q_new, r_new))
}

/// The double coset `K^m rep K^m`.
#[derive(Debug, Clone)]
pub struct DoubleCoset {
    m: usize,
    rep: GroupElement,
}

impl DoubleCoset {
    pub fn new(m: usize, rep: GroupElement) -> Self {
        DoubleCoset { m, rep }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn representative(&self) -> &GroupElement {
        &self.rep
    }

    pub fn modulus(&self) -> Modulus {
        self.rep.modulus()
    }

    pub fn contains(&self, g: &GroupElement, budget: u64) -> Result<Decision> {
        coset_eq(self, &DoubleCoset::new(self.m, g.clone()), budget)
    }
}

fn compatible(a: &DoubleCoset, b: &DoubleCoset) -> Result<()> {
    if a.m != b.m {
        return Err(Error::Precondition(format!("depths differ: {} vs {}", a.m, b.m)));
    }
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch(a.modulus(), b.modulus()));
    }
    Ok(())
}

/// Blocks of `g` and `g^-1` that every element of the coset shares.
fn invariants(g: &GroupElement, m: usize) -> (ResidueMatrix, ResidueMatrix) {
    let w = g.window().max(m);
    (g.padded(w).block(0, m, 0, m), g.inverse().padded(w).block(0, m, 0, m))
}

/// Decides coset equality. A witness is returned as `b.rep = left * a.rep * right`.
pub fn coset_eq(a: &DoubleCoset, b: &DoubleCoset, budget: u64) -> Result<Decision> {
    compatible(a, b)?;
    let m = a.m;
    if a.rep == b.rep {
        return Ok(Decision::Equivalent(Witness::identity(a.modulus())));
    }
    if invariants(&a.rep, m) != invariants(&b.rep, m) {
        return Ok(Decision::Distinct);
    }
    let ca = normalize_to_window(&a.rep, m)?;
    let cb = normalize_to_window(&b.rep, m)?;
    let d = equivalence::decide(
        std::slice::from_ref(&ca.out),
        std::slice::from_ref(&cb.out),
        m,
        m,
        budget,
    )?;
    let Decision::Equivalent(w) = d else {
        return Ok(d);
    };
    // b = qb^-1 u qa a ra v rb^-1
    let left = cb.q.inverse().mul(&w.left)?.mul(&ca.q)?;
    let right = ca.r.mul(&w.right)?.mul(&cb.r.inverse())?;
    let w = Witness {
        left: left.trimmed(),
        right: right.trimmed(),
    };
    if !w.verify(std::slice::from_ref(&a.rep), std::slice::from_ref(&b.rep), m, m) {
        return Err(Error::Internal("coset witness failed verification".into()));
    }
    Ok(Decision::Equivalent(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    /// `inf_z d(g, z)` over `z` in the second coset, `g` a fixed representative of the
    /// first.
    Inf,
    /// Hausdorff distance between the intersections of both cosets with `GL(3m)`.
    Hausdorff,
}

/// All double cosets of `GL(n)` by `K^m`, with `n = 3m` unless chosen otherwise,
/// obtained by enumerating the group.
#[derive(Debug, Clone)]
pub struct CosetSpace {
    m: usize,
    window: usize,
    modulus: Modulus,
    elements: Vec<GroupElement>,
    class_of: Vec<usize>,
    index: HashMap<GroupElement, usize>,
    representatives: Vec<usize>,
}

impl CosetSpace {
    pub fn enumerate(m: usize, modulus: Modulus, budget: u64) -> Result<Self> {
        Self::with_window(m, 3 * m, modulus, budget)
    }

    pub fn with_window(m: usize, window: usize, modulus: Modulus, budget: u64) -> Result<Self> {
        if window < 3 * m {
            return Err(Error::Precondition(format!("window {window} is below 3m = {}", 3 * m)));
        }
        let elements = enumerate_gl(window, modulus, budget)?;
        let mut buckets: HashMap<(Vec<u64>, Vec<u64>), Vec<usize>> = HashMap::new();
        let mut representatives: Vec<usize> = Vec::new();
        let mut class_of = vec![usize::MAX; elements.len()];
        for (idx, g) in elements.iter().enumerate() {
            let (x, y) = invariants(g, m);
            let bucket = buckets.entry((x.data().to_vec(), y.data().to_vec())).or_default();
            let mut found = None;
            for &cls in bucket.iter() {
                let rep = &elements[representatives[cls]];
                let d = equivalence::decide(std::slice::from_ref(rep), std::slice::from_ref(g), m, m, budget)?;
                match d {
                    Decision::Equivalent(_) => {
                        found = Some(cls);
                        break;
                    }
                    Decision::Distinct => {}
                    Decision::Undecided { needed, budget } => return Err(Error::Budget { needed, budget }),
                }
            }
            let cls = found.unwrap_or_else(|| {
                representatives.push(idx);
                bucket.push(representatives.len() - 1);
                representatives.len() - 1
            });
            class_of[idx] = cls;
        }
        let index = elements.iter().enumerate().map(|(i, g)| (g.trimmed(), i)).collect();
        Ok(CosetSpace {
            m,
            window,
            modulus,
            elements,
            class_of,
            index,
            representatives,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn representative(&self, class: usize) -> &GroupElement {
        &self.elements[self.representatives[class]]
    }

    pub fn members(&self, class: usize) -> impl Iterator<Item = &GroupElement> + '_ {
        self.elements
            .iter()
            .zip(&self.class_of)
            .filter(move |(_, &c)| c == class)
            .map(|(g, _)| g)
    }

    /// Class of an arbitrary element, through its normal form.
    pub fn classify(&self, g: &GroupElement) -> Result<usize> {
        if g.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus, g.modulus()));
        }
        let key = if g.support() <= self.window {
            g.trimmed()
        } else {
            normalize_to_window(g, self.m)?.out.trimmed()
        };
        self.index
            .get(&key)
            .map(|&i| self.class_of[i])
            .ok_or_else(|| Error::Internal("normal form outside the enumerated window".into()))
    }

    /// Hausdorff distance between two classes, restricted to this window.
    pub fn hausdorff(&self, a: usize, b: usize) -> Result<Norm> {
        let xs: Vec<&GroupElement> = self.members(a).collect();
        let ys: Vec<&GroupElement> = self.members(b).collect();
        let one_sided = |xs: &[&GroupElement], ys: &[&GroupElement]| -> Result<Norm> {
            let mut worst = Norm::Zero;
            for x in xs {
                let mut best = Norm::ONE;
                for y in ys {
                    best = best.min(x.distance(y)?);
                    if best == Norm::Zero {
                        break;
                    }
                }
                worst = worst.max(best);
            }
            Ok(worst)
        };
        Ok(one_sided(&xs, &ys)?.max(one_sided(&ys, &xs)?))
    }

    /// `max_u min_w d(u, w)` for `u` in class `a`, `w` in class `b`.
    pub fn directed(&self, a: usize, b: usize) -> Result<Norm> {
        let ys: Vec<&GroupElement> = self.members(b).collect();
        let mut worst = Norm::Zero;
        for x in self.members(a) {
            let mut best = Norm::ONE;
            for y in &ys {
                best = best.min(x.distance(y)?);
            }
            worst = worst.max(best);
        }
        Ok(worst)
    }

    /// `min d(g1, g2)` over representatives in this window.
    pub fn closest(&self, a: usize, b: usize) -> Result<Norm> {
        let ys: Vec<&GroupElement> = self.members(b).collect();
        let mut best = Norm::ONE;
        for x in self.members(a) {
            for y in &ys {
                best = best.min(x.distance(y)?);
            }
        }
        Ok(best)
    }
}

/// Distance between two cosets, by enumeration.
///
/// `Inf` minimizes over the part of the second coset inside `GL(inf_window)`
/// (`3m + 1` by default); `Hausdorff` compares the intersections with `GL(3m)`.
pub fn coset_dist(
    a: &DoubleCoset,
    b: &DoubleCoset,
    method: DistanceMethod,
    inf_window: Option<usize>,
    budget: u64,
) -> Result<Norm> {
    compatible(a, b)?;
    let m = a.m;
    let modulus = a.modulus();
    match method {
        DistanceMethod::Hausdorff => {
            let space = CosetSpace::enumerate(m, modulus, budget)?;
            let (ca, cb) = (space.classify(&a.rep)?, space.classify(&b.rep)?);
            space.hausdorff(ca, cb)
        }
        DistanceMethod::Inf => {
            let window = inf_window.unwrap_or(3 * m + 1).max(3 * m);
            let base = CosetSpace::enumerate(m, modulus, budget)?;
            let target = base.classify(&b.rep)?;
            let g = if a.rep.support() <= window {
                a.rep.trimmed()
            } else {
                normalize_to_window(&a.rep, m)?.out
            };
            inf_distance(&base, &g, target, window, budget)
        }
    }
}

/// `min d(g, z)` over `z in GL(window)` lying in class `target` of `space`.
pub fn inf_distance(space: &CosetSpace, g: &GroupElement, target: usize, window: usize, budget: u64) -> Result<Norm> {
    let mut best = Norm::ONE;
    let mut seen = false;
    for z in enumerate_gl(window, space.modulus, budget)? {
        let d = g.distance(&z)?;
        if seen && d >= best {
            continue;
        }
        if space.classify(&z)? == target {
            best = if seen { best.min(d) } else { d };
            seen = true;
            if best == Norm::Zero {
                break;
            }
        }
    }
    if !seen {
        return Err(Error::Internal("coset has no element in the window".into()));
    }
    Ok(best)
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
    fn m_zero_collapses_everything() {
        let m = z(2, 2);
        let g = GroupElement::from_rows(&[vec![1, 1], vec![1, 2]], m).unwrap();
        let c = normalize_to_window(&g, 0).unwrap();
        assert!(c.out.is_identity());
        assert_eq!(c.q, g.inverse());
        assert!(c.r.is_identity());
    }

    #[test]
    fn stabilizer_elements_reduce_to_identity_corner() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = z(3, 1);
        let g = GroupElement::random_stabilizer(&mut rng, 2, 7, m);
        let c = normalize_to_window(&g, 2).unwrap();
        assert!(c.verify());
        assert!(c.out.is_member(SubgroupSpec::Stabilizer { m: 2 }));
    }

    #[test]
    fn random_certificates_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (p, k) in [(2, 1), (2, 2), (3, 2)] {
            let modulus = z(p, k);
            for m in 0..=2 {
                for n in 0..=3 * m + 3 {
                    for _ in 0..10 {
                        let g = GroupElement::random(&mut rng, n, modulus);
                        let c = normalize_to_window(&g, m).unwrap();
                        assert!(c.verify());
                        assert!(c.out.window() <= 3 * m);
                    }
                }
            }
        }
    }

    #[test]
    fn localization_shrinks_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let modulus = z(2, 2);
        for m in 1..=2 {
            for _ in 0..20 {
                let g2 = GroupElement::random(&mut rng, 3 * m, modulus);
                let q0 = GroupElement::random_stabilizer(&mut rng, m, 3 * m + 5, modulus);
                let r0 = GroupElement::random_stabilizer(&mut rng, m, 3 * m + 6, modulus);
                let g1 = q0.mul(&g2).unwrap().mul(&r0).unwrap();
                let (q, r) = localize_conjugators(&g1, &g2, m, &q0, &r0).unwrap();
                let big_m = g1.window().max(g2.window()).max(m);
                assert!(q.support().max(r.support()) <= m + 2 * (big_m - m));
                assert_eq!(q.mul(&g2).unwrap().mul(&r).unwrap(), g1);
            }
        }
        let g = GroupElement::random(&mut rng, 3, modulus);
        let one = GroupElement::identity(modulus);
        let (q, r) = localize_conjugators(&g, &g, 1, &one, &one).unwrap();
        assert!(q.is_identity() && r.is_identity());
        assert!(matches!(
            localize_conjugators(&g, &one, 1, &one, &one),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn constructed_cosets_are_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let modulus = z(2, 1);
        for m in 1..=2 {
            for _ in 0..20 {
                let g = GroupElement::random(&mut rng, 3 * m + 1, modulus);
                let q = GroupElement::random_stabilizer(&mut rng, m, 3 * m + 3, modulus);
                let r = GroupElement::random_stabilizer(&mut rng, m, 3 * m + 2, modulus);
                let h = q.mul(&g).unwrap().mul(&r).unwrap();
                let d = coset_eq(&DoubleCoset::new(m, g.clone()), &DoubleCoset::new(m, h), 1 << 16).unwrap();
                assert!(d.is_equivalent());
            }
        }
    }

    #[test]
    fn theta_times_swap_example() {
        // identity vs theta_1^[1] s, s swapping the second and third coordinates
        let modulus = z(2, 1);
        let s = GroupElement::from_permutation(&[0, 2, 1], modulus).unwrap();
        let g = GroupElement::theta(1, 1, modulus).mul(&s).unwrap();
        let a = DoubleCoset::new(1, GroupElement::identity(modulus));
        let b = DoubleCoset::new(1, g.clone());
        let d = coset_eq(&a, &b, 1 << 16).unwrap();
        let brute = equivalence::exhaustive_search(&[GroupElement::identity(modulus)], &[g], 1, 1, 3, 1000).unwrap();
        assert_eq!(d.is_equivalent(), brute.is_some());
        assert!(d.is_equivalent());
    }

    #[test]
    fn metrics_on_gl3_z2() {
        let modulus = z(2, 1);
        let space = CosetSpace::enumerate(1, modulus, 1 << 20).unwrap();
        assert!(space.len() > 1);
        for a in 0..space.len() {
            assert_eq!(space.hausdorff(a, a).unwrap(), Norm::Zero);
        }
        // 1 + p E_22 is itself a witness at distance 1/p from the identity
        let z4 = z(2, 2);
        let one = GroupElement::identity(z4);
        let t = GroupElement::from_rows(&[vec![1, 0], vec![0, 3]], z4).unwrap();
        assert_eq!(one.distance(&t).unwrap(), Norm::Power(1));
        let d = coset_eq(&DoubleCoset::new(1, one), &DoubleCoset::new(1, t), 1 << 16).unwrap();
        assert!(d.is_equivalent());
        for a in 0..space.len() {
            for b in 0..space.len() {
                let rep = DoubleCoset::new(1, space.representative(a).clone());
                let other = DoubleCoset::new(1, space.representative(b).clone());
                let inf = coset_dist(&rep, &other, DistanceMethod::Inf, None, 1 << 20).unwrap();
                assert_eq!(inf, space.hausdorff(a, b).unwrap());
            }
        }
    }
}
