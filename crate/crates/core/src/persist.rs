//! Self-describing JSON container shared by every saved model.
//!
//! ```text
//! {"format":"stockcast-model","version":1,"kind":"...","spec":{...},"payload":{...}}
//! ```
//! Floats are written with round-trip precision, so load(save(m)) == m.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "stockcast-model";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Container<S, P> {
    format: String,
    version: u32,
    kind: String,
    spec: S,
    payload: P,
}

pub fn to_string<S: Serialize, P: Serialize>(kind: &str, spec: &S, payload: &P) -> Result<String> {
    let c = Container { format: FORMAT.to_string(), version: VERSION, kind: kind.to_string(), spec, payload };
    Ok(serde_json::to_string(&c)?)
}

pub fn from_str<S: DeserializeOwned, P: DeserializeOwned>(kind: &str, text: &str) -> Result<(S, P)> {
    let header: Container<serde::de::IgnoredAny, serde::de::IgnoredAny> =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(format!("not a model container: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::ModelFile(format!("unknown format {:?}", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::ModelFile(format!("unsupported version {}", header.version)));
    }
    if header.kind != kind {
        return Err(Error::ModelFile(format!("expected a {kind} model, found {}", header.kind)));
    }
    let c: Container<S, P> = serde_json::from_str(text)?;
    Ok((c.spec, c.payload))
}

pub fn save<S: Serialize, P: Serialize>(path: &Path, kind: &str, spec: &S, payload: &P) -> Result<()> {
    std::fs::write(path, to_string(kind, spec, payload)?)?;
    Ok(())
}

pub fn load<S: DeserializeOwned, P: DeserializeOwned>(path: &Path, kind: &str) -> Result<(S, P)> {
    from_str(kind, &std::fs::read_to_string(path)?)
}
