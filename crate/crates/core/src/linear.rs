//! Linear systems over Z/p^k.

use crate::matrix::{Echelon, ResidueMatrix};
use crate::residue::Modulus;

/// The solution set `{x : A x = b}` of a consistent system, parametrised through the
/// Smith form of `A`.
#[derive(Debug, Clone)]
pub struct AffineSolutions {
    modulus: Modulus,
    particular: Vec<u64>,
    /// Generators of additive order `p^e < p^k`; they all vanish mod p.
    torsion: Vec<(Vec<u64>, u32)>,
    /// Generators of full order `p^k`, independent mod p.
    free: Vec<Vec<u64>>,
}

impl AffineSolutions {
    pub fn particular(&self) -> &[u64] {
        &self.particular
    }

    pub fn free(&self) -> &[Vec<u64>] {
        &self.free
    }

    /// Number of solutions, `None` if it does not fit in a `u128`.
    pub fn count(&self) -> Option<u128> {
        let p = self.modulus.p() as u128;
        let mut total: u128 = 1;
        for &(_, e) in &self.torsion {
            total = total.checked_mul(p.checked_pow(e)?)?;
        }
        let q = self.modulus.order() as u128;
        for _ in &self.free {
            total = total.checked_mul(q)?;
        }
        Some(total)
    }

    /// Number of distinct reductions mod p, `p^(free generators)`.
    pub fn count_mod_p(&self) -> Option<u128> {
        (self.modulus.p() as u128).checked_pow(self.free.len() as u32)
    }

    /// The solution `particular + sum coeffs[i] * free[i]`.
    pub fn point(&self, coeffs: &[u64]) -> Vec<u64> {
        debug_assert_eq!(coeffs.len(), self.free.len());
        let m = self.modulus;
        let mut x = self.particular.clone();
        for (c, g) in coeffs.iter().zip(&self.free) {
            if *c != 0 {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi = m.mul_add(*xi, *c, *gi);
                }
            }
        }
        x
    }

    /// Every solution, in a fixed order. Only for small solution sets.
    pub fn all(&self) -> Vec<Vec<u64>> {
        let m = self.modulus;
        let mut out = vec![self.particular.clone()];
        let p = m.p();
        let gens = self
            .torsion
            .iter()
            .map(|(g, e)| (g, p.pow(*e)))
            .chain(self.free.iter().map(|g| (g, m.order())));
        for (g, order) in gens {
            let mut next = Vec::with_capacity(out.len() * order as usize);
            for x in &out {
                for c in 0..order {
                    next.push(x.iter().zip(g).map(|(&xi, &gi)| m.mul_add(xi, c, gi)).collect());
                }
            }
            out = next;
        }
        out
    }
}

/// Solves `a x = b`; `None` if inconsistent.
pub fn solve(a: &ResidueMatrix, b: &[u64]) -> Option<AffineSolutions> {
    let m = a.modulus();
    debug_assert_eq!(a.rows(), b.len());
    let smith = a.smith();
    let r = smith.rank();
    // c = left * b
    let c: Vec<u64> = (0..a.rows())
        .map(|i| {
            b.iter()
                .enumerate()
                .fold(0, |acc, (j, &bj)| m.mul_add(acc, smith.left[(i, j)], bj))
        })
        .collect();
    if c[r..].iter().any(|&x| x != 0) {
        return None;
    }
    let mut y = vec![0u64; a.cols()];
    for (i, &e) in smith.exponents.iter().enumerate() {
        if m.valuation(c[i]) < e {
            return None;
        }
        y[i] = c[i] / m.p().pow(e);
    }
    let right = &smith.right;
    let column = |j: usize| -> Vec<u64> { (0..a.cols()).map(|i| right[(i, j)]).collect() };
    let particular = (0..a.cols())
        .map(|i| (0..a.cols()).fold(0, |acc, j| m.mul_add(acc, right[(i, j)], y[j])))
        .collect();
    let torsion = smith
        .exponents
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| {
            let scale = m.pow_p(m.k() - e);
            (column(i).into_iter().map(|x| m.mul(x, scale)).collect(), e)
        })
        .collect();
    let free = (r..a.cols()).map(column).collect();
    Some(AffineSolutions {
        modulus: m,
        particular,
        torsion,
        free,
    })
}

/// Generators of the kernel `{x : a x = 0}` reduced mod p, as an F_p basis.
///
/// This is the image of the kernel in F_p^n, which can be smaller than the kernel of
/// `a mod p`.
pub fn kernel_mod_p(a: &ResidueMatrix) -> Echelon {
    let sol = solve(a, &vec![0; a.rows()]).expect("homogeneous systems are consistent");
    let mut e = Echelon::new(a.cols(), a.modulus().p());
    for g in sol.free() {
        e.insert(g);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(a: &ResidueMatrix, b: &[u64]) -> Vec<Vec<u64>> {
        let m = a.modulus();
        let n = a.cols();
        let total = m.order().pow(n as u32);
        let mut out = Vec::new();
        for idx in 0..total {
            let mut x = Vec::with_capacity(n);
            let mut t = idx;
            for _ in 0..n {
                x.push(t % m.order());
                t /= m.order();
            }
            let ok = (0..a.rows()).all(|i| (0..n).fold(0, |acc, j| m.mul_add(acc, a[(i, j)], x[j])) == b[i]);
            if ok {
                out.push(x);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn matches_brute_force_over_z8() {
        let m = Modulus::new(2, 3).unwrap();
        let systems: Vec<(Vec<Vec<u64>>, Vec<u64>)> = vec![
            (vec![vec![2, 4, 0], vec![0, 2, 6]], vec![4, 2]),
            (vec![vec![2, 4, 0], vec![0, 2, 6]], vec![1, 2]),
            (vec![vec![4, 0, 0]], vec![4]),
            (vec![vec![1, 1, 1], vec![2, 2, 2]], vec![3, 6]),
            (vec![vec![1, 1, 1], vec![2, 2, 2]], vec![3, 5]),
            (vec![vec![0, 0, 0]], vec![0]),
        ];
        for (rows, b) in systems {
            let a = ResidueMatrix::from_rows(&rows, m).unwrap();
            let expected = brute_force(&a, &b);
            match solve(&a, &b) {
                None => assert!(expected.is_empty(), "{rows:?} {b:?}"),
                Some(sol) => {
                    let mut got = sol.all();
                    got.sort();
                    assert_eq!(got, expected, "{rows:?} {b:?}");
                    assert_eq!(sol.count(), Some(expected.len() as u128));
                }
            }
        }
    }

    #[test]
    fn kernel_mod_p_is_image_of_kernel() {
        let m = Modulus::new(3, 2).unwrap();
        // 3x = 0 has kernel 3Z/9, which vanishes mod 3, unlike ker(0 mod 3) = F_3.
        let a = ResidueMatrix::from_rows(&[vec![3]], m).unwrap();
        assert_eq!(kernel_mod_p(&a).dim(), 0);
        let a = ResidueMatrix::from_rows(&[vec![1, 3]], m).unwrap();
        assert_eq!(kernel_mod_p(&a).dim(), 1);
    }
}
