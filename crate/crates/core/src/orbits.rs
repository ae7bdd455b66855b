//! The action `(v, w) -> (v g, g^-1 w)` on finitely supported vectors and covectors,
//! and orbit counts of `GL(N, Z/p^k)` on tuples of them.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::residue::Modulus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Vector,
    Covector,
}

/// A finitely supported row vector or column covector.
#[derive(Debug, Clone)]
pub struct VectorFin {
    coords: Vec<u64>,
    flavor: Flavor,
    modulus: Modulus,
}

impl VectorFin {
    pub fn new(coords: Vec<u64>, flavor: Flavor, modulus: Modulus) -> Result<Self> {
        if let Some(&x) = coords.iter().find(|&&x| x >= modulus.order()) {
            return Err(Error::Format(format!("{x} is not canonical mod {modulus}")));
        }
        let mut v = VectorFin {
            coords,
            flavor,
            modulus,
        };
        v.trim();
        Ok(v)
    }

    fn trim(&mut self) {
        while self.coords.last() == Some(&0) {
            self.coords.pop();
        }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn get(&self, i: usize) -> u64 {
        self.coords.get(i).copied().unwrap_or(0)
    }

    /// `w(v)` for a covector `self` and a vector `v`.
    pub fn pair(&self, v: &VectorFin) -> u64 {
        let m = self.modulus;
        self.coords
            .iter()
            .zip(&v.coords)
            .fold(0, |acc, (&a, &b)| m.mul_add(acc, a, b))
    }
}

impl PartialEq for VectorFin {
    fn eq(&self, other: &Self) -> bool {
        self.flavor == other.flavor && self.modulus == other.modulus && self.coords == other.coords
    }
}

impl Eq for VectorFin {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitState {
    pub vectors: Vec<VectorFin>,
    pub covectors: Vec<VectorFin>,
}

impl OrbitState {
    /// The matrix `w_i(v_j)`.
    pub fn pairings(&self) -> Vec<Vec<u64>> {
        self.covectors
            .iter()
            .map(|w| self.vectors.iter().map(|v| w.pair(v)).collect())
            .collect()
    }
}

/// `v -> v g`, `w -> g^-1 w`.
pub fn act(g: &GroupElement, s: &OrbitState) -> Result<OrbitState> {
    let modulus = g.modulus();
    let g_inv = g.inverse();
    let mut out = s.clone();
    for v in out.vectors.iter_mut() {
        check(v, modulus)?;
        let n = g.window().max(v.coords.len());
        v.coords = (0..n)
            .map(|j| (0..n).fold(0, |acc, i| modulus.mul_add(acc, v.get(i), g.get(i, j))))
            .collect();
        v.trim();
    }
    for w in out.covectors.iter_mut() {
        check(w, modulus)?;
        let n = g.window().max(w.coords.len());
        w.coords = (0..n)
            .map(|i| (0..n).fold(0, |acc, j| modulus.mul_add(acc, g_inv.get(i, j), w.get(j))))
            .collect();
        w.trim();
    }
    Ok(out)
}

fn check(v: &VectorFin, modulus: Modulus) -> Result<()> {
    if v.modulus != modulus {
        return Err(Error::ModulusMismatch(modulus, v.modulus));
    }
    Ok(())
}

/// Which components a state carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `n` vectors.
    Vectors,
    /// `n` vectors and `n` covectors.
    Full,
}

impl StateKind {
    fn covectors(self, n: usize) -> usize {
        match self {
            StateKind::Vectors => 0,
            StateKind::Full => n,
        }
    }
}

/// Orbits of `GL(N, Z/p^k)` on states supported in the first `N` coordinates.
#[derive(Debug, Clone)]
pub struct OrbitCensus {
    pub n: usize,
    pub window: usize,
    pub kind: StateKind,
    pub modulus: Modulus,
    /// Least state of each orbit, in increasing order.
    pub representatives: Vec<OrbitState>,
}

impl OrbitCensus {
    pub fn count(&self) -> usize {
        self.representatives.len()
    }
}

/// Number of states, `(p^k)^((vectors + covectors) N)`, if it fits.
pub fn state_count(n: usize, window: usize, kind: StateKind, modulus: Modulus) -> Option<u128> {
    let digits = (n + kind.covectors(n)) * window;
    (modulus.order() as u128).checked_pow(u32::try_from(digits).ok()?)
}

type Move = Box<dyn Fn(&mut [u64])>;

/// Breadth-first closure under transvections `1 + E_ij`, unit scalings and adjacent
/// transpositions, which generate `GL(N, Z/p^k)`.
pub fn orbit_census(n: usize, window: usize, kind: StateKind, modulus: Modulus, budget: u64) -> Result<OrbitCensus> {
    let needed = state_count(n, window, kind, modulus).unwrap_or(u128::MAX);
    if needed > budget as u128 || needed > u32::MAX as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let total = needed as usize;
    let q = modulus.order();
    let nv = n;
    let nc = kind.covectors(n);
    let digits = (nv + nc) * window;
    // digit d: component d / window, coordinate d % window; most significant first
    let decode = |mut code: usize, out: &mut [u64]| {
        for x in out.iter_mut().rev() {
            *x = code as u64 % q;
            code /= q as usize;
        }
    };
    let encode = |digits: &[u64]| digits.iter().fold(0usize, |acc, &x| acc * q as usize + x as usize);

    let units: Vec<u64> = modulus.units().filter(|&u| u != 1).collect();
    let mut moves: Vec<Move> = Vec::new();
    for i in 0..window {
        for j in 0..window {
            if i == j {
                continue;
            }
            // v_j += v_i ; w_i -= w_j
            moves.push(Box::new(move |s: &mut [u64]| {
                for c in 0..nv {
                    let b = c * window;
                    s[b + j] = modulus.add(s[b + j], s[b + i]);
                }
                for c in nv..nv + nc {
                    let b = c * window;
                    s[b + i] = modulus.sub(s[b + i], s[b + j]);
                }
            }));
        }
    }
    for i in 0..window {
        for &u in &units {
            let inv = modulus.inv(u)?;
            moves.push(Box::new(move |s: &mut [u64]| {
                for c in 0..nv {
                    s[c * window + i] = modulus.mul(s[c * window + i], u);
                }
                for c in nv..nv + nc {
                    s[c * window + i] = modulus.mul(s[c * window + i], inv);
                }
            }));
        }
    }
    for i in 0..window.saturating_sub(1) {
        moves.push(Box::new(move |s: &mut [u64]| {
            for c in 0..nv + nc {
                s.swap(c * window + i, c * window + i + 1);
            }
        }));
    }

    let mut seen = vec![false; total];
    let mut representatives = Vec::new();
    let mut buf = vec![0u64; digits];
    let mut queue = VecDeque::new();
    for start in 0..total {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        decode(start, &mut buf);
        representatives.push(to_state(&buf, nv, nc, window, modulus));
        queue.push_back(start);
        while let Some(code) = queue.pop_front() {
            for mv in &moves {
                decode(code, &mut buf);
                mv(&mut buf);
                let next = encode(&buf);
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(OrbitCensus {
        n,
        window,
        kind,
        modulus,
        representatives,
    })
}

fn to_state(digits: &[u64], nv: usize, nc: usize, window: usize, modulus: Modulus) -> OrbitState {
    let part = |c: usize, flavor| {
        VectorFin::new(digits[c * window..(c + 1) * window].to_vec(), flavor, modulus).expect("canonical")
    };
    OrbitState {
        vectors: (0..nv).map(|c| part(c, Flavor::Vector)).collect(),
        covectors: (nv..nv + nc).map(|c| part(c, Flavor::Covector)).collect(),
    }
}

pub fn orbit_count(n: usize, window: usize, kind: StateKind, modulus: Modulus, budget: u64) -> Result<usize> {
    Ok(orbit_census(n, window, kind, modulus, budget)?.count())
}

/// One line of an orbit table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct OrbitRow {
    pub n: usize,
    pub p: u64,
    pub k: u32,
    #[serde(rename = "N")]
    pub window: usize,
    pub orbit_count: usize,
    /// The count equals the one for the previous window.
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitTable {
    pub rows: Vec<OrbitRow>,
    /// Smallest window from which every listed count is the same.
    pub stable_from: Option<usize>,
    /// False if the budget stopped the sweep early.
    pub complete: bool,
}

/// Orbit counts for each window in `windows`, stopping at the first budget failure.
pub fn orbit_stabilization(
    n: usize,
    windows: std::ops::RangeInclusive<usize>,
    kind: StateKind,
    modulus: Modulus,
    budget: u64,
) -> Result<OrbitTable> {
    let mut rows: Vec<OrbitRow> = Vec::new();
    let mut complete = true;
    for window in windows {
        let count = match orbit_count(n, window, kind, modulus, budget) {
            Ok(c) => c,
            Err(Error::Budget { .. }) if !rows.is_empty() => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        };
        let stabilized = rows.last().is_some_and(|r| r.orbit_count == count);
        rows.push(OrbitRow {
            n,
            p: modulus.p(),
            k: modulus.k(),
            window,
            orbit_count: count,
            stabilized,
        });
    }
    let stable_from = rows.last().map(|last| {
        rows.iter()
            .rev()
            .take_while(|r| r.orbit_count == last.orbit_count)
            .last()
            .map_or(last.window, |r| r.window)
    });
    let stable_from = if rows.len() >= 2 && rows.last().is_some_and(|r| r.stabilized) {
        stable_from
    } else {
        None
    };
    Ok(OrbitTable {
        rows,
        stable_from,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::enumerate_gl;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn z(p: u64, k: u32) -> Modulus {
        Modulus::new(p, k).unwrap()
    }

    #[test]
    fn vector_orbit_counts() {
        assert_eq!(orbit_count(1, 2, StateKind::Vectors, z(2, 1), 1 << 20).unwrap(), 2);
        assert_eq!(orbit_count(1, 3, StateKind::Vectors, z(2, 2), 1 << 20).unwrap(), 3);
        assert_eq!(orbit_count(0, 3, StateKind::Full, z(2, 2), 1 << 20).unwrap(), 1);
    }

    #[test]
    fn full_state_counts_stabilize() {
        let t = orbit_stabilization(1, 1..=4, StateKind::Full, z(2, 1), 1 << 20).unwrap();
        let counts: Vec<usize> = t.rows.iter().map(|r| r.orbit_count).collect();
        assert_eq!(counts, vec![4, 5, 5, 5]);
        assert_eq!(t.stable_from, Some(2));
    }

    #[test]
    fn generators_regenerate_gl2() {
        // closure of the generating set in GL(2) against exhaustive enumeration
        for (p, k) in [(2, 1), (2, 2), (3, 1)] {
            let m = z(p, k);
            let mut gens = vec![
                GroupElement::transvection(0, 1, 1, m).with_window(2),
                GroupElement::transvection(1, 0, 1, m).with_window(2),
                GroupElement::theta(1, 0, m),
            ];
            for u in m.units() {
                gens.push(GroupElement::scaling(0, u, m).unwrap().with_window(2));
                gens.push(GroupElement::scaling(1, u, m).unwrap());
            }
            let mut seen: HashSet<GroupElement> = HashSet::new();
            let mut queue = vec![GroupElement::identity(m)];
            seen.insert(GroupElement::identity(m));
            while let Some(g) = queue.pop() {
                for s in &gens {
                    let h = g.mul(s).unwrap();
                    if seen.insert(h.clone()) {
                        queue.push(h);
                    }
                }
            }
            assert_eq!(seen.len(), enumerate_gl(2, m, 10_000).unwrap().len());
        }
    }

    #[test]
    fn action_laws_and_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = z(3, 2);
        for _ in 0..20 {
            let g = GroupElement::random(&mut rng, 3, m);
            let h = GroupElement::random(&mut rng, 3, m);
            let mk = |flavor, rng: &mut ChaCha8Rng| {
                use rand::Rng;
                VectorFin::new((0..3).map(|_| rng.gen_range(0..9)).collect(), flavor, m).unwrap()
            };
            let s = OrbitState {
                vectors: vec![mk(Flavor::Vector, &mut rng), mk(Flavor::Vector, &mut rng)],
                covectors: vec![mk(Flavor::Covector, &mut rng), mk(Flavor::Covector, &mut rng)],
            };
            assert_eq!(act(&GroupElement::identity(m), &s).unwrap(), s);
            let gh = act(&g.mul(&h).unwrap(), &s).unwrap();
            assert_eq!(gh, act(&h, &act(&g, &s).unwrap()).unwrap());
            assert_eq!(act(&g, &s).unwrap().pairings(), s.pairings());
        }
    }
}
