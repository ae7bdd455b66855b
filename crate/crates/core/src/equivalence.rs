//! Deciding whether two tuples lie in the same double coset `K^alpha \ G^n / K^gamma`
//! for the diagonal action `(g_l) -> (u g_l v)`.
//!
//! Writing `xi = v^-1 = [[P, Q], [R, U]]` with `P` the leading `M x M` block, `M` at
//! least every window and both depths, the conditions `h_l xi g_l^-1 = u in K^alpha`
//! separate into linear conditions on `P`, on each column of `Q` and on each row of
//! `R`, while `U` is free. An invertible `xi` with such blocks exists exactly when
//! some admissible `P` has `rank_p [P | Q-module] = M` and `rank_p [P ; R-module] = M`,
//! so only the reduction of `P` mod p has to be searched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{enumerate_gl, GroupElement, SubgroupSpec};
use crate::linear::{solve, AffineSolutions};
use crate::matrix::{Echelon, ResidueMatrix};
use crate::residue::Modulus;

/// `left * g_l * right = h_l` for every `l`, with `left in K^alpha`, `right in K^gamma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub left: GroupElement,
    pub right: GroupElement,
}

impl Witness {
    pub fn identity(modulus: Modulus) -> Self {
        Witness {
            left: GroupElement::identity(modulus),
            right: GroupElement::identity(modulus),
        }
    }

    pub fn verify(&self, g: &[GroupElement], h: &[GroupElement], alpha: usize, gamma: usize) -> bool {
        self.left.is_member(SubgroupSpec::Stabilizer { m: alpha })
            && self.right.is_member(SubgroupSpec::Stabilizer { m: gamma })
            && g.len() == h.len()
            && g.iter().zip(h).all(|(gl, hl)| {
                self.left
                    .mul(gl)
                    .and_then(|x| x.mul(&self.right))
                    .is_ok_and(|x| x == *hl)
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Equivalent(Witness),
    Distinct,
    /// The search space of `needed` candidates exceeded the budget and no witness was
    /// found among the `budget` candidates tried.
    Undecided {
        needed: u128,
        budget: u64,
    },
}

impl Decision {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Decision::Equivalent(_))
    }

    /// `Some(true)`, `Some(false)` or `None` when undecided.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Decision::Equivalent(_) => Some(true),
            Decision::Distinct => Some(false),
            Decision::Undecided { .. } => None,
        }
    }
}

fn check_parts(g: &[GroupElement], h: &[GroupElement]) -> Result<Modulus> {
    if g.len() != h.len() || g.is_empty() {
        return Err(Error::Shape(format!(
            "tuples must be nonempty and of equal length, got {} and {}",
            g.len(),
            h.len()
        )));
    }
    let modulus = g[0].modulus();
    for x in g.iter().chain(h) {
        if x.modulus() != modulus {
            return Err(Error::ModulusMismatch(modulus, x.modulus()));
        }
    }
    Ok(modulus)
}

/// Decides `exists u in K^alpha, v in K^gamma: u g_l v = h_l for all l`.
///
/// `budget` bounds the number of mod-p candidates for the leading block that are
/// examined; it is only reached when the linear constraints leave many free
/// parameters.
pub fn decide(g: &[GroupElement], h: &[GroupElement], alpha: usize, gamma: usize, budget: u64) -> Result<Decision> {
    let modulus = check_parts(g, h)?;
    if g == h {
        return Ok(Decision::Equivalent(Witness::identity(modulus)));
    }
    let big_m = g
        .iter()
        .chain(h)
        .map(GroupElement::window)
        .chain([alpha, gamma])
        .max()
        .unwrap_or(0);
    let p = modulus.p();
    let gi: Vec<ResidueMatrix> = g.iter().map(|x| x.inverse().padded(big_m)).collect();
    let hm: Vec<ResidueMatrix> = h.iter().map(|x| x.padded(big_m)).collect();

    let Some(p_set) = solve_p(&hm, &gi, alpha, gamma, big_m, modulus) else {
        return Ok(Decision::Distinct);
    };
    let q_set = solve_q(&hm, alpha, gamma, big_m, modulus);
    let r_set = solve_r(&gi, alpha, gamma, big_m, modulus);
    let q_gens: Vec<Vec<u64>> = q_set.free().to_vec();
    let r_gens: Vec<Vec<u64>> = r_set.free().to_vec();

    // necessary condition over the whole affine family
    let span_ok = |transpose: bool, extra: &[Vec<u64>]| {
        let mut e = Echelon::new(big_m, p);
        let mats = std::iter::once(p_set.particular()).chain(p_set.free().iter().map(Vec::as_slice));
        for flat in mats {
            for c in 0..big_m {
                let v: Vec<u64> = (0..big_m)
                    .map(|i| {
                        if transpose {
                            flat[c * big_m + i]
                        } else {
                            flat[i * big_m + c]
                        }
                    })
                    .collect();
                e.insert(&v);
            }
        }
        for v in extra {
            e.insert(v);
        }
        e.is_full()
    };
    if !span_ok(false, &q_gens) || !span_ok(true, &r_gens) {
        return Ok(Decision::Distinct);
    }

    let admissible = |flat: &[u64]| -> bool {
        let mut cols = Echelon::new(big_m, p);
        let mut rows = Echelon::new(big_m, p);
        for c in 0..big_m {
            let col: Vec<u64> = (0..big_m).map(|i| flat[i * big_m + c]).collect();
            cols.insert(&col);
            rows.insert(&flat[c * big_m..(c + 1) * big_m]);
        }
        for q in &q_gens {
            if cols.is_full() {
                break;
            }
            cols.insert(q);
        }
        for r in &r_gens {
            if rows.is_full() {
                break;
            }
            rows.insert(r);
        }
        cols.is_full() && rows.is_full()
    };

    let free = p_set.free().len();
    let needed = p_set.count_mod_p().unwrap_or(u128::MAX);
    let found = search(&p_set, free, p, needed, budget, &admissible);
    match found {
        Some(flat) => {
            let w = build_witness(h, &flat, &gi, &q_gens, &r_gens, big_m, modulus)?;
            if !w.verify(g, h, alpha, gamma) {
                return Err(Error::Internal("equivalence witness failed verification".into()));
            }
            Ok(Decision::Equivalent(w))
        }
        None if needed <= budget as u128 => Ok(Decision::Distinct),
        None => Ok(Decision::Undecided { needed, budget }),
    }
}

fn search(
    p_set: &AffineSolutions,
    free: usize,
    p: u64,
    needed: u128,
    budget: u64,
    admissible: &dyn Fn(&[u64]) -> bool,
) -> Option<Vec<u64>> {
    let particular = p_set.particular();
    if admissible(particular) {
        return Some(particular.to_vec());
    }
    // a few seeded random probes first: witnesses are usually plentiful
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let probes = needed.min(64).min(budget as u128) as usize;
    for _ in 0..probes {
        let coeffs: Vec<u64> = (0..free).map(|_| rng.gen_range(0..p)).collect();
        let point = p_set.point(&coeffs);
        if admissible(&point) {
            return Some(point);
        }
    }
    if needed <= budget as u128 {
        let mut coeffs = vec![0u64; free];
        for _ in 0..needed {
            let point = p_set.point(&coeffs);
            if admissible(&point) {
                return Some(point);
            }
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < p {
                    break;
                }
                *c = 0;
            }
        }
    } else {
        for _ in probes as u64..budget {
            let coeffs: Vec<u64> = (0..free).map(|_| rng.gen_range(0..p)).collect();
            let point = p_set.point(&coeffs);
            if admissible(&point) {
                return Some(point);
            }
        }
    }
    None
}

/// Linear system on the entries of `P` (row-major, `M^2` unknowns).
fn solve_p(
    h: &[ResidueMatrix],
    gi: &[ResidueMatrix],
    alpha: usize,
    gamma: usize,
    big_m: usize,
    modulus: Modulus,
) -> Option<AffineSolutions> {
    let n2 = big_m * big_m;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut rhs: Vec<u64> = Vec::new();
    let idx = |i: usize, j: usize| i * big_m + j;
    for i in 0..big_m {
        for j in 0..big_m {
            if i < gamma || j < gamma {
                let mut row = vec![0; n2];
                row[idx(i, j)] = 1;
                rows.push(row);
                rhs.push(u64::from(i == j));
            }
        }
    }
    // coefficient of P_ij in (h P g^-1)_ab is h_ai * gi_jb
    let coefficients = |l: usize, a: usize, b: usize| -> Vec<u64> {
        let mut row = vec![0; n2];
        for i in 0..big_m {
            let hai = h[l][(a, i)];
            if hai == 0 {
                continue;
            }
            for j in 0..big_m {
                row[idx(i, j)] = modulus.mul(hai, gi[l][(j, b)]);
            }
        }
        row
    };
    for l in 1..h.len() {
        for a in 0..big_m {
            for b in 0..big_m {
                let lhs = coefficients(l, a, b);
                let base = coefficients(0, a, b);
                rows.push(lhs.iter().zip(&base).map(|(&x, &y)| modulus.sub(x, y)).collect());
                rhs.push(0);
            }
        }
    }
    for a in 0..big_m {
        for b in 0..big_m {
            if a < alpha || b < alpha {
                rows.push(coefficients(0, a, b));
                rhs.push(u64::from(a == b));
            }
        }
    }
    if rows.is_empty() {
        rows.push(vec![0; n2]);
        rhs.push(0);
    }
    let a = ResidueMatrix::from_rows(&rows, modulus).expect("canonical entries");
    solve(&a, &rhs)
}

/// Columns `q` of `Q`: `q[<gamma] = 0`, `h_l q` independent of `l`, `(h_1 q)[<alpha] = 0`.
fn solve_q(h: &[ResidueMatrix], alpha: usize, gamma: usize, big_m: usize, modulus: Modulus) -> AffineSolutions {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for i in 0..gamma.min(big_m) {
        let mut row = vec![0; big_m];
        row[i] = 1;
        rows.push(row);
    }
    for hl in &h[1..] {
        for a in 0..big_m {
            rows.push((0..big_m).map(|i| modulus.sub(hl[(a, i)], h[0][(a, i)])).collect());
        }
    }
    for a in 0..alpha.min(big_m) {
        rows.push(h[0].row(a).to_vec());
    }
    homogeneous(rows, big_m, modulus)
}

/// Rows `r` of `R`: `r[<gamma] = 0`, `r g_l^-1` independent of `l`, `(r g_1^-1)[<alpha] = 0`.
fn solve_r(gi: &[ResidueMatrix], alpha: usize, gamma: usize, big_m: usize, modulus: Modulus) -> AffineSolutions {
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for j in 0..gamma.min(big_m) {
        let mut row = vec![0; big_m];
        row[j] = 1;
        rows.push(row);
    }
    for gl in &gi[1..] {
        for b in 0..big_m {
            rows.push((0..big_m).map(|j| modulus.sub(gl[(j, b)], gi[0][(j, b)])).collect());
        }
    }
    for b in 0..alpha.min(big_m) {
        rows.push((0..big_m).map(|j| gi[0][(j, b)]).collect());
    }
    homogeneous(rows, big_m, modulus)
}

fn homogeneous(mut rows: Vec<Vec<u64>>, n: usize, modulus: Modulus) -> AffineSolutions {
    if rows.is_empty() {
        rows.push(vec![0; n]);
    }
    let a = ResidueMatrix::from_rows(&rows, modulus).expect("canonical entries");
    solve(&a, &vec![0; a.rows()]).expect("homogeneous systems are consistent")
}

fn build_witness(
    h: &[GroupElement],
    flat: &[u64],
    gi: &[ResidueMatrix],
    q_gens: &[Vec<u64>],
    r_gens: &[Vec<u64>],
    big_m: usize,
    modulus: Modulus,
) -> Result<Witness> {
    let p = modulus.p();
    let mut cols = Echelon::new(big_m, p);
    let mut rows = Echelon::new(big_m, p);
    for c in 0..big_m {
        let col: Vec<u64> = (0..big_m).map(|i| flat[i * big_m + c]).collect();
        cols.insert(&col);
        rows.insert(&flat[c * big_m..(c + 1) * big_m]);
    }
    let q_cols: Vec<&Vec<u64>> = q_gens.iter().filter(|q| cols.insert(q)).collect();
    let r_rows: Vec<&Vec<u64>> = r_gens.iter().filter(|r| rows.insert(r)).collect();
    let l = q_cols.len();
    if l != r_rows.len() || !cols.is_full() || !rows.is_full() {
        return Err(Error::Internal("completion of the leading block failed".into()));
    }
    let size = big_m + l;
    let mut xi = ResidueMatrix::zeros(size, size, modulus);
    for i in 0..big_m {
        for j in 0..big_m {
            xi[(i, j)] = flat[i * big_m + j];
        }
    }
    for (c, q) in q_cols.iter().enumerate() {
        for i in 0..big_m {
            xi[(i, big_m + c)] = q[i];
        }
    }
    for (r, row) in r_rows.iter().enumerate() {
        for j in 0..big_m {
            xi[(big_m + r, j)] = row[j];
        }
    }
    complete_rows(&mut xi, big_m)?;
    let xi = GroupElement::new(xi)?;
    let left = h[0].mul(&xi)?.mul(&GroupElement::new_unchecked(gi[0].clone()))?;
    Ok(Witness {
        left: left.trimmed(),
        right: xi.inverse().trimmed(),
    })
}

/// Fills the lower-right block of `x` (rows and columns from `top` on) with zero or
/// standard rows so that `x` becomes invertible mod p, given that the first `top`
/// rows are independent and the first `top` columns have full rank.
pub(crate) fn complete_rows(x: &mut ResidueMatrix, top: usize) -> Result<()> {
    let n = x.rows();
    let p = x.modulus().p();
    let mut span = Echelon::new(n, p);
    for i in 0..top {
        if !span.insert(x.row(i)) {
            return Err(Error::Internal("leading rows are dependent".into()));
        }
    }
    for i in top..n {
        let mut placed = false;
        for t in std::iter::once(None).chain((top..n).map(Some)) {
            for j in top..n {
                x[(i, j)] = u64::from(Some(j) == t);
            }
            if span.insert(x.row(i)) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Internal("no completing row found".into()));
        }
    }
    Ok(())
}

/// Searches `v in K^gamma ∩ GL(window)` exhaustively, solving for `u` from the first
/// part. Complete only for witnesses whose right factor fits in `window`.
pub fn exhaustive_search(
    g: &[GroupElement],
    h: &[GroupElement],
    alpha: usize,
    gamma: usize,
    window: usize,
    budget: u64,
) -> Result<Option<Witness>> {
    let modulus = check_parts(g, h)?;
    let inner = enumerate_gl(window.saturating_sub(gamma), modulus, budget)?;
    let g0_inv = g[0].inverse();
    for y in inner {
        let v = GroupElement::shifted(gamma, &y);
        let u = h[0].mul(&v.inverse())?.mul(&g0_inv)?;
        if !u.is_member(SubgroupSpec::Stabilizer { m: alpha }) {
            continue;
        }
        let w = Witness { left: u, right: v };
        if w.verify(g, h, alpha, gamma) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Shrinks a tuple without leaving its double coset: isolated unit entries outside
/// the fixed corners are moved onto the diagonal, and coordinates on which every
/// part acts trivially are dropped.
pub fn compact(parts: &[GroupElement], alpha: usize, gamma: usize) -> Vec<GroupElement> {
    compact_with_multipliers(parts, alpha, gamma).0
}

/// As [`compact`], also returning `left in K^alpha`, `right in K^gamma` with
/// `compacted_l = left * parts_l * right`.
#[allow(clippy::mut_range_bound)]
pub fn compact_with_multipliers(
    parts: &[GroupElement],
    alpha: usize,
    gamma: usize,
) -> (Vec<GroupElement>, GroupElement, GroupElement) {
    let Some(first) = parts.first() else {
        panic!("compaction needs a nonempty tuple");
    };
    let modulus = first.modulus();
    let floor = alpha.max(gamma);
    let mut n = parts.iter().map(GroupElement::window).max().unwrap_or(0);
    let mut mats: Vec<ResidueMatrix> = parts.iter().map(|x| x.padded(n)).collect();
    let mut left = GroupElement::identity(modulus);
    let mut right = GroupElement::identity(modulus);
    let transposition = |a: usize, b: usize, n: usize| {
        let sigma: Vec<usize> = (0..n)
            .map(|x| {
                if x == a {
                    b
                } else if x == b {
                    a
                } else {
                    x
                }
            })
            .collect();
        GroupElement::from_permutation(&sigma, modulus).expect("transposition")
    };
    let isolated = |m: &ResidueMatrix, i: usize, c: usize| -> bool {
        (0..m.rows()).all(|t| m[(i, t)] == u64::from(t == c) && m[(t, c)] == u64::from(t == i))
    };
    'outer: loop {
        for i in alpha..n {
            for c in gamma..n {
                if !mats.iter().all(|m| isolated(m, i, c)) {
                    continue;
                }
                let t = if i == c {
                    i
                } else if i >= gamma {
                    mats.iter_mut().for_each(|m| m.swap_cols(i, c));
                    right = right.mul(&transposition(i, c, n)).expect("same modulus");
                    i
                } else if c >= alpha {
                    mats.iter_mut().for_each(|m| m.swap_rows(i, c));
                    left = transposition(i, c, n).mul(&left).expect("same modulus");
                    c
                } else {
                    continue;
                };
                debug_assert!(t >= floor);
                // move t past the window; it acts trivially there
                let sigma: Vec<usize> = (0..n)
                    .map(|x| match x.cmp(&t) {
                        std::cmp::Ordering::Less => x,
                        std::cmp::Ordering::Equal => n - 1,
                        std::cmp::Ordering::Greater => x - 1,
                    })
                    .collect();
                let perm = GroupElement::from_permutation(&sigma, modulus).expect("cycle");
                left = perm.mul(&left).expect("same modulus");
                right = right.mul(&perm.inverse()).expect("same modulus");
                let keep: Vec<usize> = (0..n).filter(|&x| x != t).collect();
                mats = mats
                    .iter()
                    .map(|m| ResidueMatrix::from_fn(n - 1, n - 1, modulus, |a, b| m[(keep[a], keep[b])]))
                    .collect();
                n -= 1;
                continue 'outer;
            }
        }
        break;
    }
    let out = mats
        .into_iter()
        .map(|m| GroupElement::new_unchecked(m).trimmed())
        .collect();
    (out, left.trimmed(), right.trimmed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn z(p: u64, k: u32) -> Modulus {
        Modulus::new(p, k).unwrap()
    }

    #[test]
    fn constructed_pairs_are_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, k) in [(2, 1), (2, 2), (3, 1)] {
            let m = z(p, k);
            for alpha in 0..=2 {
                for gamma in 0..=2 {
                    for n in 1..=2 {
                        let g: Vec<GroupElement> = (0..n).map(|_| GroupElement::random(&mut rng, 3, m)).collect();
                        let u = GroupElement::random_stabilizer(&mut rng, alpha, 4, m);
                        let v = GroupElement::random_stabilizer(&mut rng, gamma, 5, m);
                        let h: Vec<GroupElement> = g.iter().map(|x| u.mul(x).unwrap().mul(&v).unwrap()).collect();
                        let d = decide(&g, &h, alpha, gamma, 1 << 16).unwrap();
                        let Decision::Equivalent(w) = d else { panic!("{d:?}") };
                        assert!(w.verify(&g, &h, alpha, gamma));
                    }
                }
            }
        }
    }

    #[test]
    fn agrees_with_exhaustive_search_on_small_windows() {
        // every pair of elements of GL(3, Z/2) for depth 1 on both sides
        let m = z(2, 1);
        let all = enumerate_gl(3, m, 1000).unwrap();
        let base = &all[17];
        for x in &all {
            let lin = decide(std::slice::from_ref(base), std::slice::from_ref(x), 1, 1, 1 << 16).unwrap();
            let brute = exhaustive_search(std::slice::from_ref(base), std::slice::from_ref(x), 1, 1, 3, 1000).unwrap();
            assert_eq!(lin.is_equivalent(), brute.is_some(), "{x:?}");
        }
    }

    #[test]
    fn diagonal_twist_is_detected() {
        // different right factors per part
        let m = z(2, 1);
        let g = vec![GroupElement::identity(m), GroupElement::identity(m)];
        let s = GroupElement::from_permutation(&[0, 2, 1], m).unwrap();
        let h = vec![GroupElement::identity(m), s];
        assert_eq!(decide(&g, &h, 1, 1, 1 << 16).unwrap(), Decision::Distinct);
        assert!(exhaustive_search(&g, &h, 1, 1, 4, 100_000).unwrap().is_none());
    }

    #[test]
    fn compaction_removes_swapped_identity_blocks() {
        let m = z(2, 1);
        let t = GroupElement::theta(3, 1, m);
        let c = compact(std::slice::from_ref(&t), 1, 1);
        assert!(c[0].is_identity());
        let g = GroupElement::from_rows(&[vec![1, 1], vec![0, 1]], m).unwrap();
        let gt = g.mul(&t).unwrap();
        let (c, l, r) = compact_with_multipliers(std::slice::from_ref(&gt), 1, 1);
        assert!(c[0].window() <= 2);
        assert!(Witness { left: l, right: r }.verify(std::slice::from_ref(&gt), &c, 1, 1));
        assert!(decide(&[gt], &c, 1, 1, 1 << 16).unwrap().is_equivalent());
    }
}
