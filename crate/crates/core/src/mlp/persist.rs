//! JSON model files. Numbers are written with 17 significant digits so every
//! `f64` survives a save/load cycle bit for bit.

use std::fmt::Write;

use serde::Deserialize;

use super::{MlpError, MlpModel, Network};
use crate::features::FeatureScaler;
use crate::model::Gesture;

pub const MODEL_VERSION: &str = "emg-mlp/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: String,
    layer_sizes: Vec<usize>,
    classes: Vec<String>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    scaler: FeatureScaler,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&num(*v));
    }
    out.push(']');
}

fn array_block(out: &mut String, key: &str, rows: &[Vec<f64>], last: bool) {
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, row) in rows.iter().enumerate() {
        out.push_str("    ");
        array(out, row);
        out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str(if last { "  ]\n" } else { "  ],\n" });
}

/// Serialize a model as a JSON document.
pub fn save_model(model: &MlpModel) -> String {
    let net = model.network();
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"version\": \"{MODEL_VERSION}\",");
    let sizes: Vec<String> = net.layer_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "  \"layer_sizes\": [{}],", sizes.join(", "));
    let classes: Vec<String> = model.classes.iter().map(|g| format!("\"{g}\"")).collect();
    let _ = writeln!(out, "  \"classes\": [{}],", classes.join(", "));
    array_block(&mut out, "weights", net.weights(), false);
    array_block(&mut out, "biases", net.biases(), false);
    out.push_str("  \"scaler\": {\n    \"means\": ");
    array(&mut out, &model.scaler.means);
    out.push_str(",\n    \"sigmas\": ");
    array(&mut out, &model.scaler.sigmas);
    out.push_str("\n  }\n}\n");
    out
}

/// Parse and validate a model document.
pub fn load_model(text: &str) -> Result<MlpModel, MlpError> {
    #[derive(Deserialize)]
    struct VersionOnly {
        version: String,
    }
    // check the version first so a future layout reports as a version error
    let v: VersionOnly = serde_json::from_str(text).map_err(|e| MlpError::Format(e.to_string()))?;
    if v.version != MODEL_VERSION {
        return Err(MlpError::Version { found: v.version });
    }
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| MlpError::Format(e.to_string()))?;
    debug_assert_eq!(doc.version, MODEL_VERSION);
    let classes = doc
        .classes
        .iter()
        .map(|c| c.parse::<Gesture>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| MlpError::Invalid(e.to_string()))?;
    let net = Network::from_parts(doc.layer_sizes, doc.weights, doc.biases).map_err(MlpError::Invalid)?;
    MlpModel::new(net, doc.scaler, classes)
}
