//! Library side of the `imaginarity-lab` command-line tool.

pub mod experiment;
pub mod registry;

use std::path::Path;

use imaginarity::channels::KrausChannel;
use imaginarity::{DensityMatrix, Error, PureState, Result};
use registry::Named;

/// Resolves a registry name, or else reads a JSON file holding a density
/// matrix, a pure state or a channel.
pub fn load(arg: &str) -> Result<Named> {
    match registry::load_named(arg) {
        Ok(v) => return Ok(v),
        Err(e) if !Path::new(arg).is_file() => return Err(e),
        Err(_) => {}
    }
    let text = std::fs::read_to_string(arg).map_err(|e| Error::InvalidParameter(format!("reading {arg}: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("parsing {arg}: {e}")))?;
    if value.get("kraus").is_some() {
        return parse::<KrausChannel>(value, arg).map(Named::Channel);
    }
    if value.get("dim").is_some() {
        return parse::<DensityMatrix>(value, arg).map(Named::Mixed);
    }
    parse::<PureState>(value, arg).map(Named::Pure)
}

fn parse<T: serde::de::DeserializeOwned>(value: serde_json::Value, arg: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::InvalidParameter(format!("{arg}: {e}")))
}
