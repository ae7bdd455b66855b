//! Browser bindings. Each export takes plain numbers and inline matrix specs and
//! returns a JSON string; `www/index.html` renders them.

use padic_gl::format::{parse_rows, parse_train, CertificateRecord, TrainRecord};
use padic_gl::orbits::StateKind;
use padic_gl::{
    normalize_to_window, orbit_stabilization, stabilization_limit, train_product, GroupElement, Modulus, Stabilization,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

const BUDGET: u64 = 1 << 20;

fn modulus(p: u32, k: u32) -> padic_gl::Result<Modulus> {
    Modulus::new(p as u64, k)
}

/// Normal form of `rows`, or of a seeded random matrix of size `random_size` when `rows` is blank.
pub fn canonical_form_json(
    p: u32,
    k: u32,
    m: u32,
    rows: &str,
    random_size: u32,
    seed: u32,
) -> padic_gl::Result<String> {
    let modulus = modulus(p, k)?;
    let g = if rows.trim().is_empty() && random_size > 0 {
        GroupElement::random(
            &mut ChaCha8Rng::seed_from_u64(seed as u64),
            random_size as usize,
            modulus,
        )
    } else {
        parse_rows(rows, modulus)?
    };
    let cert = normalize_to_window(&g, m as usize)?;
    Ok(json!({
        "verified": cert.verify(),
        "certificate": CertificateRecord::from_certificate(&cert),
    })
    .to_string())
}

/// Product of two trains plus the index where the theta sequence settles.
pub fn train_product_json(p: u32, k: u32, a: &str, b: &str) -> padic_gl::Result<String> {
    let modulus = modulus(p, k)?;
    let (a, b) = (parse_train(a, modulus)?, parse_train(b, modulus)?);
    let product = train_product(&a, &b)?;
    let settles_at = match stabilization_limit(&a, &b, None, BUDGET)? {
        Stabilization::Stable { index, .. } => Some(index),
        Stabilization::Inconclusive { .. } => None,
    };
    Ok(json!({
        "product": TrainRecord::from_train(&product.compacted()),
        "settles_at": settles_at,
    })
    .to_string())
}

/// Orbit counts of `GL(N)` on `n` vectors (and covectors if `full`), `N` in `from..=to`.
pub fn orbit_table_json(n: u32, p: u32, k: u32, from: u32, to: u32, full: bool) -> padic_gl::Result<String> {
    let kind = if full { StateKind::Full } else { StateKind::Vectors };
    let table = orbit_stabilization(n as usize, from as usize..=to as usize, kind, modulus(p, k)?, BUDGET)?;
    Ok(json!({
        "rows": table.rows,
        "stable_from": table.stable_from,
        "complete": table.complete,
    })
    .to_string())
}

fn js(r: padic_gl::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = canonicalForm)]
pub fn canonical_form(p: u32, k: u32, m: u32, rows: &str, random_size: u32, seed: u32) -> Result<String, JsError> {
    js(canonical_form_json(p, k, m, rows, random_size, seed))
}

#[wasm_bindgen(js_name = trainProduct)]
pub fn train_product_js(p: u32, k: u32, a: &str, b: &str) -> Result<String, JsError> {
    js(train_product_json(p, k, a, b))
}

#[wasm_bindgen(js_name = orbitTable)]
pub fn orbit_table(n: u32, p: u32, k: u32, from: u32, to: u32, full: bool) -> Result<String, JsError> {
    js(orbit_table_json(n, p, k, from, to, full))
}
