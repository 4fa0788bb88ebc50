//! CSV and JSON emission with a metadata header.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// 12 significant digits, trailing zeros dropped. Plain positional
/// notation except for magnitudes below 1e-6 or at least 1e15, which use
/// an exponent so that states near a face stay short.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-6..15).contains(&exp) {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        return format!("{mant}e{e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: &'static str,
    pub version: &'static str,
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            entries: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), self.command.into());
        map.insert("version".into(), self.version.into());
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone().into());
        }
        serde_json::Value::Object(map)
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(meta: &Metadata, header: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# command: {}", meta.command);
        let _ = writeln!(text, "# version: {}", meta.version);
        for (k, v) in &meta.entries {
            let _ = writeln!(text, "# {k}: {v}");
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// `{"metadata": {...}, <body fields>}`
pub fn json_document(meta: &Metadata, body: impl Serialize) -> Result<String, CliError> {
    let mut value = serde_json::to_value(body).map_err(|e| CliError::Invalid(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .expect("report bodies serialize as JSON objects");
    obj.insert("metadata".into(), meta.json());
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
