use std::path::Path;

use serde::de::DeserializeOwned;

use nodecount_core::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
const EXIT_OTHER: u8 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(err: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: err.to_string(),
        }
    }

    pub fn usage(message: &str) -> Self {
        Failure::config(message)
    }

    pub fn data(err: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_DATA,
            message: err.to_string(),
        }
    }

    pub fn internal(err: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_OTHER,
            message: err.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        if err.is_data_error() {
            Failure::data(err)
        } else {
            Failure::config(err)
        }
    }
}

/// Reads a config file as TOML when it ends in `.toml`, JSON otherwise.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}
