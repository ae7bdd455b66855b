//! A seeded property sweep over one ring, used by the command-line `selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coset::{coset_eq, localize_conjugators, normalize_to_window, CosetSpace, DistanceMethod, DoubleCoset};
use crate::equivalence::Decision;
use crate::error::Result;
use crate::factor::generator_factorization;
use crate::group::{enumerate_gl, gl_order, GroupElement, SubgroupSpec};
use crate::matrix::ResidueMatrix;
use crate::orbits::{orbit_stabilization, StateKind};
use crate::residue::{Modulus, Residue, RingOp};
use crate::train::{associativity_check, stabilization_limit, train_coset_eq, train_product, TrainCoset, TupleElement};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestConfig {
    pub modulus: Modulus,
    pub seed: u64,
    /// Random instances per randomized check.
    pub samples: usize,
    pub budget: u64,
}

fn check(name: &str, cases: usize, failures: Vec<String>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: failures.is_empty(),
        cases,
        detail: failures.into_iter().take(3).collect::<Vec<_>>().join("; "),
    }
}

pub fn run(cfg: &SelftestConfig) -> Result<Vec<CheckResult>> {
    let m = cfg.modulus;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = vec![
        ring_axioms(m),
        group_orders(m, cfg.budget)?,
        certificates(m, &mut rng, cfg.samples)?,
        localization(m, &mut rng, cfg.samples)?,
        coset_equality(m, &mut rng, cfg.samples, cfg.budget)?,
        factorization(m, &mut rng, cfg.samples)?,
    ];
    if m.order() <= 3 {
        out.push(trains(m, &mut rng, cfg.samples.min(50), cfg.budget)?);
    }
    if m.order() == 2 {
        out.push(metrics(m, cfg.budget)?);
    }
    out.push(orbits(m, cfg.budget)?);
    Ok(out)
}

fn ring_axioms(m: Modulus) -> CheckResult {
    let mut failures = Vec::new();
    let q = m.order().min(64);
    let el = |x| Residue::new(x, m);
    let mut cases = 0;
    for a in 0..q {
        for b in 0..q {
            let (x, y) = (el(a), el(b));
            let xy = x.mul(&y).expect("same modulus");
            if xy.valuation() != (x.valuation() + y.valuation()).min(m.k()) {
                failures.push(format!("valuation of {a}*{b}"));
            }
            if x.apply(RingOp::Add, &y).ok() != y.apply(RingOp::Add, &x).ok() || xy != y.mul(&x).expect("same modulus")
            {
                failures.push(format!("commutativity at {a}, {b}"));
            }
            for c in 0..q {
                cases += 1;
                let z = el(c);
                let lhs = x.mul(&y.add(&z).expect("same")).expect("same");
                let rhs = xy.add(&x.mul(&z).expect("same")).expect("same");
                if lhs != rhs {
                    failures.push(format!("distributivity at {a}, {b}, {c}"));
                }
            }
        }
        if m.is_unit(a) && el(a).mul(&el(a).inv_unit().expect("unit")).map(|r| r.value()) != Ok(1) {
            failures.push(format!("inverse of {a}"));
        }
    }
    check("ring axioms", cases, failures)
}

fn group_orders(m: Modulus, budget: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let all = enumerate_gl(2, m, budget)?;
    if Some(all.len() as u128) != gl_order(2, m) {
        failures.push(format!("|GL(2)| = {}", all.len()));
    }
    let mut agree = 0;
    let q = m.order();
    let total = q.pow(4).min(1 << 16);
    for idx in 0..total {
        let e = [idx % q, idx / q % q, idx / q / q % q, idx / q / q / q % q];
        let a = ResidueMatrix::from_rows(&[vec![e[0], e[1]], vec![e[2], e[3]]], m)?;
        let det_unit = m.is_unit(a.det_cofactor()?);
        if a.is_invertible() == det_unit && a.inverse().is_ok() == det_unit {
            agree += 1;
        } else {
            failures.push(format!("{:?}", a.to_rows()));
        }
    }
    Ok(check("GL(2) order and invertibility", agree, failures))
}

fn certificates(m: Modulus, rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for depth in 0..=2 {
        for _ in 0..samples {
            let n = rng.gen_range(0..=3 * depth + 3);
            let g = GroupElement::random(rng, n, m);
            let c = normalize_to_window(&g, depth)?;
            cases += 1;
            if !c.verify() {
                failures.push(format!("m = {depth}: {:?}", g.core().to_rows()));
            }
        }
    }
    Ok(check("normal form certificates", cases, failures))
}

fn localization(m: Modulus, rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for depth in 1..=2 {
        for _ in 0..samples {
            let g2 = GroupElement::random(rng, 3 * depth, m);
            let (wq, wr) = (3 * depth + rng.gen_range(1..5), 3 * depth + rng.gen_range(1..5));
            let q0 = GroupElement::random_stabilizer(rng, depth, wq, m);
            let r0 = GroupElement::random_stabilizer(rng, depth, wr, m);
            let g1 = q0.mul(&g2)?.mul(&r0)?;
            let (q, r) = localize_conjugators(&g1, &g2, depth, &q0, &r0)?;
            let big_m = g1.window().max(g2.window()).max(depth);
            cases += 1;
            let ok = q.support().max(r.support()) <= 2 * big_m - depth
                && q.is_member(SubgroupSpec::Stabilizer { m: depth })
                && r.is_member(SubgroupSpec::Stabilizer { m: depth })
                && q.mul(&g2)?.mul(&r)? == g1;
            if !ok {
                failures.push(format!("m = {depth}"));
            }
        }
    }
    Ok(check("conjugator localization", cases, failures))
}

fn coset_equality(m: Modulus, rng: &mut ChaCha8Rng, samples: usize, budget: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for depth in 1..=2 {
        for _ in 0..samples {
            let g = GroupElement::random(rng, 3 * depth, m);
            let q = GroupElement::random_stabilizer(rng, depth, 3 * depth + 2, m);
            let r = GroupElement::random_stabilizer(rng, depth, 3 * depth + 2, m);
            let h = q.mul(&g)?.mul(&r)?;
            cases += 1;
            match coset_eq(&DoubleCoset::new(depth, g), &DoubleCoset::new(depth, h), budget)? {
                Decision::Equivalent(_) => {}
                other => failures.push(format!("m = {depth}: {other:?}")),
            }
        }
    }
    Ok(check("coset equality on constructed pairs", cases, failures))
}

fn factorization(m: Modulus, rng: &mut ChaCha8Rng, samples: usize) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    for n in 1..=5 {
        for depth in 0..=2 {
            for _ in 0..samples.div_ceil(10) {
                let g = GroupElement::random(rng, n, m);
                let f = generator_factorization(&g, depth)?;
                let prod = GroupElement::product(m, f.iter().map(|x| &x.element))?;
                cases += 1;
                if prod != g || !f.iter().all(|x| x.check(depth)) {
                    failures.push(format!("n = {n}, m = {depth}"));
                }
            }
        }
    }
    Ok(check("generator factorization", cases, failures))
}

fn trains(m: Modulus, rng: &mut ChaCha8Rng, samples: usize, budget: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut cases = 0;
    let tuple = |rng: &mut ChaCha8Rng, n: usize| -> Result<TupleElement> {
        let w = rng.gen_range(1..=3);
        TupleElement::new((0..n).map(|_| GroupElement::random(rng, w, m)).collect())
    };
    for _ in 0..samples {
        let n = rng.gen_range(1..=2);
        let d: Vec<usize> = (0..4).map(|_| rng.gen_range(0..=1)).collect();
        let a = TrainCoset::new(d[0], d[1], tuple(rng, n)?);
        let b = TrainCoset::new(d[1], d[2], tuple(rng, n)?);
        let c = TrainCoset::new(d[2], d[3], tuple(rng, n)?);
        cases += 1;
        if associativity_check(&a, &b, &c, budget)?.as_bool() == Some(false) {
            failures.push("associativity".into());
        }
        let e = TrainCoset::identity(d[0], n, m);
        if train_coset_eq(&train_product(&e, &a)?, &a, budget)?.as_bool() == Some(false) {
            failures.push("unit".into());
        }
        match stabilization_limit(&a, &b, None, budget)? {
            crate::train::Stabilization::Stable { coset, .. } => {
                if train_coset_eq(&coset, &train_product(&a, &b)?, budget)?.as_bool() == Some(false) {
                    failures.push("stable value differs from product".into());
                }
            }
            crate::train::Stabilization::Inconclusive { .. } => failures.push("no stabilization".into()),
        }
    }
    Ok(check("train product laws", cases, failures))
}

fn metrics(m: Modulus, budget: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let space = CosetSpace::enumerate(1, m, budget)?;
    let mut cases = 0;
    for a in 0..space.len() {
        for b in 0..space.len() {
            let x = DoubleCoset::new(1, space.representative(a).clone());
            let y = DoubleCoset::new(1, space.representative(b).clone());
            let inf = crate::coset::coset_dist(&x, &y, DistanceMethod::Inf, None, budget)?;
            let haus = space.hausdorff(a, b)?;
            cases += 1;
            if inf != haus {
                failures.push(format!("classes {a}, {b}: {inf:?} vs {haus:?}"));
            }
        }
    }
    Ok(check("coset metrics coincide", cases, failures))
}

fn orbits(m: Modulus, budget: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let t = orbit_stabilization(1, 1..=3, StateKind::Vectors, m, budget)?;
    if t.stable_from.is_none() {
        failures.push("vector orbit counts did not stabilize".into());
    }
    let expected = m.k() as usize + 1;
    if t.rows.last().map(|r| r.orbit_count) != Some(expected) {
        failures.push(format!("expected {expected} vector orbits"));
    }
    Ok(check("orbit counts", t.rows.len(), failures))
}
