//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON text. The `*_json` functions hold the
//! logic and are plain Rust so they can be tested natively.

use fairdiv::io::{parse_allocation, parse_instance_json};
use fairdiv::solvers::{minimize_index, MinimizeOptions};
use fairdiv::{index_report_with, mechanism_support, EnvyNormalization, IndexKind, MechanismKind};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Browsers get a smaller enumeration budget than the CLI.
pub const BROWSER_CAP: u64 = 500_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rational(r: &fairdiv::Rational) -> Value {
    json!({ "exact": r.to_string(), "decimal": r.to_f64() })
}

/// Indices and welfare of `allocation` (a JSON owner list).
pub fn evaluate_json(instance: &str, allocation: &str, envy_norm: &str) -> Result<String, String> {
    let inst = parse_instance_json(instance).map_err(err)?;
    let alloc = parse_allocation(allocation).map_err(err)?;
    let norm: EnvyNormalization = envy_norm.parse().map_err(err)?;
    let r = index_report_with(&inst, &alloc, norm).map_err(err)?;
    Ok(json!({
        "gini": rational(&r.gini),
        "subjective_gini": rational(&r.subjective_gini),
        "envy": rational(&r.envy),
        "utilitarian": rational(&r.utilitarian),
        "egalitarian": rational(&r.egalitarian),
        "envy_free": r.envy_free,
    })
    .to_string())
}

/// Minimum of `index` over complete allocations with every minimizer.
pub fn minimize_json(instance: &str, index: &str, envy_norm: &str) -> Result<String, String> {
    let inst = parse_instance_json(instance).map_err(err)?;
    let kind: IndexKind = index.parse().map_err(err)?;
    let norm: EnvyNormalization = envy_norm.parse().map_err(err)?;
    let r = minimize_index(&inst, kind, norm, MinimizeOptions { cap: BROWSER_CAP }).map_err(err)?;
    Ok(json!({
        "value": rational(&r.min_value),
        "minimizers": r.minimizers,
        "explored": r.explored,
    })
    .to_string())
}

/// Exact outcome distribution of an online mechanism, items in index order.
pub fn support_json(instance: &str, mechanism: &str) -> Result<String, String> {
    let inst = parse_instance_json(instance).map_err(err)?;
    let kind: MechanismKind = mechanism.parse().map_err(err)?;
    let order: Vec<usize> = (0..inst.num_items()).collect();
    let support = mechanism_support(&inst, &order, kind, EnvyNormalization::default(), BROWSER_CAP)
        .map_err(err)?;
    let outcomes = support
        .iter()
        .map(|(a, p)| {
            let r = index_report_with(&inst, a, EnvyNormalization::default()).map_err(err)?;
            Ok(json!({
                "allocation": a,
                "probability": rational(p),
                "utilitarian": rational(&r.utilitarian),
                "egalitarian": rational(&r.egalitarian),
            }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(Value::Array(outcomes).to_string())
}

#[wasm_bindgen]
pub fn evaluate(instance: &str, allocation: &str, envy_norm: &str) -> Result<String, JsError> {
    evaluate_json(instance, allocation, envy_norm).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn minimize(instance: &str, index: &str, envy_norm: &str) -> Result<String, JsError> {
    minimize_json(instance, index, envy_norm).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn support(instance: &str, mechanism: &str) -> Result<String, JsError> {
    support_json(instance, mechanism).map_err(|e| JsError::new(&e))
}
