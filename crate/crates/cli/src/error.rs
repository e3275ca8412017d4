// Copyright 2026 The shockhier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config schema error at line {line}, column {column}: {message}")]
    Schema { message: String, line: usize, column: usize },
    #[error("invalid {field}: {message}")]
    Validation {
        field: String,
        /// Variant name of the forwarded module error, if any.
        kind: Option<String>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// Machine-readable record written to stderr before a nonzero exit.
    pub fn record(&self) -> Value {
        match self {
            CliError::Schema { message, line, column } => json!({
                "error": "SchemaError",
                "message": message,
                "line": line,
                "column": column,
            }),
            CliError::Validation { field, kind, message } => json!({
                "error": "ValidationError",
                "field": field,
                "kind": kind,
                "message": message,
            }),
            CliError::Io { path, message } => json!({
                "error": "IoError",
                "path": path.display().to_string(),
                "message": message,
            }),
            CliError::Usage(m) => json!({ "error": "UsageError", "message": m }),
            CliError::Run(m) => json!({ "error": "RunError", "message": m }),
        }
    }
}
