//! Acceptance criteria, one line each. Exact arithmetic throughout, so every numeric
//! comparison is an equality.

use std::process::ExitCode;
use std::time::Instant;

use padic_gl::coset::{coset_dist, localize_conjugators, normalize_to_window, CosetSpace, DistanceMethod, DoubleCoset};
use padic_gl::equivalence::Decision;
use padic_gl::factor::generator_factorization;
use padic_gl::group::{enumerate_gl, gl_order, GroupElement, SubgroupSpec};
use padic_gl::matrix::ResidueMatrix;
use padic_gl::orbits::{orbit_stabilization, StateKind};
use padic_gl::residue::{Modulus, Norm, Residue};
use padic_gl::train::{
    associativity_check, stabilization_limit, train_coset_eq, train_product, train_product_with, Interleave,
    Stabilization, TrainCoset, TupleElement,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Metric values are compared exactly.
const METRIC_TOLERANCE: Norm = Norm::Zero;
const NORMAL_FORM_SAMPLES: usize = 500;
const LOCALIZATION_SAMPLES: usize = 200;
const TRAIN_SAMPLES: usize = 200;
const FACTOR_SAMPLES: usize = 200;
const BUDGET: u64 = 1 << 22;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn z(p: u64, k: u32) -> Modulus {
    Modulus::new(p, k).unwrap()
}

fn grid() -> Vec<Modulus> {
    vec![z(2, 1), z(2, 2), z(3, 1), z(3, 2)]
}

fn normal_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut total = 0;
    for modulus in grid() {
        for m in 0..=2 {
            for _ in 0..NORMAL_FORM_SAMPLES {
                let n = rng.gen_range(0..=3 * m + 3);
                let g = GroupElement::random(&mut rng, n, modulus);
                let c = normalize_to_window(&g, m).map_err(|e| format!("{modulus} m={m}: {e}"))?;
                let k = SubgroupSpec::Stabilizer { m };
                let exact = c.q.mul(&g).and_then(|x| x.mul(&c.r)).map_err(|e| e.to_string())? == c.out;
                if !(exact && c.q.is_member(k) && c.r.is_member(k) && c.out.support() <= 3 * m) {
                    return Err(format!(
                        "{modulus} m={m}: certificate fails for {:?}",
                        g.core().to_rows()
                    ));
                }
                total += 1;
            }
        }
    }
    Ok(format!("{total} certificates, q g r = out exactly, window <= 3m"))
}

fn localization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut total = 0;
    let mut widest = 0;
    for modulus in grid() {
        for m in 0..=2 {
            for _ in 0..LOCALIZATION_SAMPLES {
                let g2 = GroupElement::random(&mut rng, 3 * m, modulus);
                let (wq, wr) = (3 * m + rng.gen_range(1..=6), 3 * m + rng.gen_range(1..=6));
                let q0 = GroupElement::random_stabilizer(&mut rng, m, wq, modulus);
                let r0 = GroupElement::random_stabilizer(&mut rng, m, wr, modulus);
                let g1 = q0.mul(&g2).unwrap().mul(&r0).unwrap();
                let (q, r) = localize_conjugators(&g1, &g2, m, &q0, &r0).map_err(|e| e.to_string())?;
                let big_m = g1.window().max(g2.window()).max(m);
                let k = SubgroupSpec::Stabilizer { m };
                let w = q.support().max(r.support());
                if w > m + 2 * (big_m - m)
                    || !q.is_member(k)
                    || !r.is_member(k)
                    || q.mul(&g2).unwrap().mul(&r).unwrap() != g1
                {
                    return Err(format!("{modulus} m={m}: localization fails"));
                }
                widest = widest.max(w);
                total += 1;
            }
        }
    }
    Ok(format!(
        "{total} instances, g1 = q' g2 r' exactly, window <= m + 2(M - m) (widest {widest})"
    ))
}

fn metrics() -> Outcome {
    let modulus = z(2, 1);
    let space = CosetSpace::enumerate(1, modulus, BUDGET).map_err(|e| e.to_string())?;
    let classes = space.len();
    for a in 0..classes {
        for b in 0..classes {
            let x = DoubleCoset::new(1, space.representative(a).clone());
            let y = DoubleCoset::new(1, space.representative(b).clone());
            let inf = coset_dist(&x, &y, DistanceMethod::Inf, None, BUDGET).map_err(|e| e.to_string())?;
            let haus = coset_dist(&x, &y, DistanceMethod::Hausdorff, None, BUDGET).map_err(|e| e.to_string())?;
            let gap = if inf >= haus {
                difference(inf, haus)
            } else {
                difference(haus, inf)
            };
            if gap > METRIC_TOLERANCE {
                return Err(format!(
                    "classes {a}, {b}: inf {} vs hausdorff {}",
                    inf.rational(2),
                    haus.rational(2)
                ));
            }
            if (inf == Norm::Zero) != (a == b) {
                return Err(format!(
                    "classes {a}, {b}: distance {} but same coset is {}",
                    inf.rational(2),
                    a == b
                ));
            }
            let directed = space.directed(a, b).map_err(|e| e.to_string())?;
            let closest = space.closest(a, b).map_err(|e| e.to_string())?;
            if directed > closest {
                return Err(format!("classes {a}, {b}: one-sided bound {directed:?} > {closest:?}"));
            }
        }
    }
    Ok(format!("{classes} double cosets of GL(3, Z/2) by K^1, {} pairs, inf = hausdorff exactly, zero only on the diagonal, one-sided bound holds", classes * classes))
}

/// `|x - y|` for norms on a common ladder, as a norm: zero iff equal.
fn difference(x: Norm, y: Norm) -> Norm {
    if x == y {
        Norm::Zero
    } else {
        x.max(y)
    }
}

fn random_tuple(rng: &mut ChaCha8Rng, n: usize, modulus: Modulus) -> TupleElement {
    let w = rng.gen_range(1..=3);
    TupleElement::new((0..n).map(|_| GroupElement::random(rng, w, modulus)).collect()).unwrap()
}

fn trains() -> Outcome {
    let modulus = z(2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut assoc, mut undecided, mut worst_j, mut beyond_window) = (0, 0, 0, 0);
    let eq = |a: &TrainCoset, b: &TrainCoset| train_coset_eq(a, b, BUDGET).map_err(|e| e.to_string());
    for _ in 0..TRAIN_SAMPLES {
        let n = rng.gen_range(1..=2);
        let d: Vec<usize> = (0..4).map(|_| rng.gen_range(0..=1)).collect();
        let a = TrainCoset::new(d[0], d[1], random_tuple(&mut rng, n, modulus));
        let b = TrainCoset::new(d[1], d[2], random_tuple(&mut rng, n, modulus));
        let c = TrainCoset::new(d[2], d[3], random_tuple(&mut rng, n, modulus));
        let product = train_product(&a, &b).map_err(|e| e.to_string())?;
        match stabilization_limit(&a, &b, None, BUDGET).map_err(|e| e.to_string())? {
            Stabilization::Stable { index, coset, .. } => {
                if eq(&coset, &product)?.as_bool() != Some(true) {
                    return Err("stable coset differs from the product".into());
                }
                if index > a.rep.window().max(b.rep.window()) {
                    beyond_window += 1;
                }
                worst_j = worst_j.max(index);
            }
            Stabilization::Inconclusive { computed } => {
                return Err(format!("no stabilization within {computed} terms"))
            }
        }
        match associativity_check(&a, &b, &c, BUDGET).map_err(|e| e.to_string())? {
            Decision::Equivalent(_) => assoc += 1,
            Decision::Distinct => return Err("associativity fails".into()),
            Decision::Undecided { .. } => undecided += 1,
        }
        let unit_left = TrainCoset::identity(d[0], n, modulus);
        let unit_right = TrainCoset::identity(d[1], n, modulus);
        let el = train_product(&unit_left, &a).map_err(|e| e.to_string())?;
        let er = train_product(&a, &unit_right).map_err(|e| e.to_string())?;
        if eq(&el, &a)?.as_bool() != Some(true) || eq(&er, &a)?.as_bool() != Some(true) {
            return Err("identity coset is not a unit".into());
        }
        let riffle = train_product_with(&a, &b, Interleave::Riffle).map_err(|e| e.to_string())?;
        if eq(&riffle, &product)?.as_bool() != Some(true) {
            return Err("stack and riffle products differ".into());
        }
    }
    Ok(format!(
        "{TRAIN_SAMPLES} pairs/triples: stable = product, {assoc} associative ({undecided} undecided), units, interleaving independent, max j* = {worst_j} ({beyond_window} beyond the input window)"
    ))
}

fn generation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut total = 0;
    for modulus in [z(2, 1), z(2, 2), z(3, 1)] {
        for n in 1..=5 {
            for m in 0..=2 {
                for _ in 0..FACTOR_SAMPLES {
                    let g = GroupElement::random(&mut rng, n, modulus);
                    let f = generator_factorization(&g, m).map_err(|e| e.to_string())?;
                    let prod = GroupElement::product(modulus, f.iter().map(|x| &x.element)).unwrap();
                    if prod != g || !f.iter().all(|x| x.check(m)) {
                        return Err(format!("{modulus} n={n} m={m}"));
                    }
                    total += 1;
                }
            }
        }
    }
    Ok(format!(
        "{total} factorizations re-multiply exactly, every factor passes its tag"
    ))
}

fn oligomorphy() -> Outcome {
    let mut parts = Vec::new();
    for (k, expected) in [(1, 2), (2, 3)] {
        let t = orbit_stabilization(1, 1..=4, StateKind::Vectors, z(2, k), BUDGET).map_err(|e| e.to_string())?;
        let last = t.rows.last().map(|r| r.orbit_count);
        if last != Some(expected) || t.stable_from.is_none_or(|n| n > 3) {
            return Err(format!("k={k}: vector orbit counts {:?}", t.rows));
        }
        parts.push(format!("vectors k={k}: {expected}"));
    }
    let t = orbit_stabilization(1, 1..=4, StateKind::Full, z(2, 1), BUDGET).map_err(|e| e.to_string())?;
    let Some(n0) = t.stable_from.filter(|&n| n <= 3) else {
        return Err(format!("full state counts {:?}", t.rows));
    };
    let counts: Vec<String> = t.rows.iter().map(|r| r.orbit_count.to_string()).collect();
    parts.push(format!(
        "vectors+covectors k=1: [{}] stable from N={n0}",
        counts.join(", ")
    ));
    Ok(parts.join("; "))
}

fn substrate() -> Outcome {
    for (p, k, expected) in [(2, 1, 6u128), (2, 2, 96)] {
        let m = z(p, k);
        let n = enumerate_gl(2, m, BUDGET).map_err(|e| e.to_string())?.len() as u128;
        if n != expected || gl_order(2, m) != Some(expected) {
            return Err(format!("|GL(2, Z/{})| = {n}", m.order()));
        }
    }
    let m = z(2, 2);
    for idx in 0..256u64 {
        let e: Vec<u64> = (0..4).map(|t| (idx >> (2 * t)) & 3).collect();
        let a = ResidueMatrix::from_rows(&[vec![e[0], e[1]], vec![e[2], e[3]]], m).unwrap();
        let det_unit = m.is_unit(a.det_cofactor().unwrap());
        if a.is_invertible() != det_unit || a.inverse().is_ok() != det_unit {
            return Err(format!("invertibility disagreement at {:?}", a.to_rows()));
        }
    }
    let mut rings = 0;
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61] {
        let mut k = 1;
        while p.pow(k) <= 64 {
            ring_axioms(z(p, k))?;
            rings += 1;
            k += 1;
        }
    }
    Ok(format!(
        "|GL(2,Z/2)| = 6, |GL(2,Z/4)| = 96, 256 matrices agree three ways, {rings} rings pass axioms"
    ))
}

fn ring_axioms(m: Modulus) -> Result<(), String> {
    let q = m.order();
    let el = |x| Residue::new(x, m);
    for a in 0..q {
        let x = el(a);
        for b in 0..q {
            let y = el(b);
            let xy = x.mul(&y).unwrap();
            if xy != y.mul(&x).unwrap() || x.add(&y).unwrap() != y.add(&x).unwrap() {
                return Err(format!("commutativity in {m}"));
            }
            if xy.valuation() != (x.valuation() + y.valuation()).min(m.k()) {
                return Err(format!("valuation in {m}"));
            }
            for j in 1..=m.k() {
                let r = |t: Residue| t.reduce_precision(j).unwrap();
                if r(x.add(&y).unwrap()) != r(x).add(&r(y)).unwrap() || r(xy) != r(x).mul(&r(y)).unwrap() {
                    return Err(format!("reduction to precision {j} in {m}"));
                }
            }
            for c in 0..q {
                let w = el(c);
                if x.mul(&y.add(&w).unwrap()).unwrap() != xy.add(&x.mul(&w).unwrap()).unwrap()
                    || xy.mul(&w).unwrap() != x.mul(&y.mul(&w).unwrap()).unwrap()
                    || x.add(&y).unwrap().add(&w).unwrap() != x.add(&y.add(&w).unwrap()).unwrap()
                {
                    return Err(format!("ring axioms in {m}"));
                }
            }
        }
        if x.is_unit() && x.mul(&x.inv_unit().unwrap()).unwrap().value() != 1 {
            return Err(format!("inverse of {a} in {m}"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 7] = [
        ("1 normal-form certificates", normal_forms),
        ("2 conjugator localization", localization),
        ("3 metric coincidence", metrics),
        ("4 train semigroup", trains),
        ("5 generation", generation),
        ("6 oligomorphy", oligomorphy),
        ("7 arithmetic substrate", substrate),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
