//! JSON envelopes for the pipeline's artifacts.
//!
//! Every artifact is written as a single compact JSON object whose first two
//! keys are `kind` and `schema_version`, followed by the artifact's own
//! fields in a fixed order. Floats use the shortest representation that
//! parses back to the same value, so `parse(serialize(x)) == x` and repeated
//! serialization is byte-identical.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{RegenPlan, SegmentationResult, SpfCurve, WarpSchedule};

pub const SCHEMA_VERSION: u32 = 1;

pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Artifact for SpfCurve {
    const KIND: &'static str = "spf_curve";
}

impl Artifact for WarpSchedule {
    const KIND: &'static str = "warp_schedule";
}

impl Artifact for SegmentationResult {
    const KIND: &'static str = "segmentation";
}

impl Artifact for RegenPlan {
    const KIND: &'static str = "regen_plan";
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    kind: &'static str,
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

pub fn serialize_artifact<T: Artifact>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&Envelope {
        kind: T::KIND,
        schema_version: SCHEMA_VERSION,
        body: value,
    })?)
}

pub fn parse_artifact<T: Artifact>(text: &str) -> Result<T> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::format("artifact is not a JSON object"))?;
    match obj.remove("kind") {
        Some(serde_json::Value::String(k)) if k == T::KIND => {}
        Some(other) => {
            return Err(Error::format(format!(
                "expected a {} artifact, found kind {other}",
                T::KIND
            )))
        }
        None => return Err(Error::format("artifact has no kind field")),
    }
    match obj.remove("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::format(format!("unsupported schema version {v}"))),
        None => return Err(Error::format("artifact has no schema_version field")),
    }
    Ok(serde_json::from_value(value)?)
}

/// Writes the artifact followed by a newline.
pub fn write_artifact<T: Artifact>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serialize_artifact(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_artifact<T: Artifact>(path: impl AsRef<Path>) -> Result<T> {
    parse_artifact(&fs::read_to_string(path)?)
}
