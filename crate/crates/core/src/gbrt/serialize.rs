//! Versioned JSON model files. Floats are written in shortest round-trip
//! form, so predictions after a reload are bit-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::Scalar;

use super::{GbrtError, GbrtModel};

pub const FORMAT: &str = "linkpred-gbrt";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelFile<T> {
    format: String,
    version: u32,
    scalar: String,
    model: GbrtModel<T>,
}

pub fn to_json<T: Scalar>(model: &GbrtModel<T>) -> String {
    let file = ModelFile {
        format: FORMAT.to_string(),
        version: VERSION,
        scalar: T::TAG.to_string(),
        model: model.clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn from_json<T: Scalar>(text: &str) -> Result<GbrtModel<T>, GbrtError> {
    let header: serde_json::Value = serde_json::from_str(text).map_err(|e| GbrtError::Format(e.to_string()))?;
    if header.get("format").and_then(|v| v.as_str()) != Some(FORMAT) {
        return Err(GbrtError::Format(format!("not a {FORMAT} file")));
    }
    match header.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == VERSION as u64 => {}
        other => return Err(GbrtError::Format(format!("unsupported version {other:?}"))),
    }
    let scalar = header.get("scalar").and_then(|v| v.as_str()).unwrap_or("");
    if scalar != T::TAG {
        return Err(GbrtError::Format(format!("model stores {scalar}, requested {}", T::TAG)));
    }
    let file: ModelFile<T> = serde_json::from_str(text).map_err(|e| GbrtError::Format(e.to_string()))?;
    Ok(file.model)
}

pub fn save<T: Scalar, W: Write>(model: &GbrtModel<T>, mut out: W) -> std::io::Result<()> {
    out.write_all(to_json(model).as_bytes())
}

pub fn load<T: Scalar, R: Read>(mut input: R) -> Result<GbrtModel<T>, GbrtError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| GbrtError::Format(e.to_string()))?;
    from_json(&text)
}
