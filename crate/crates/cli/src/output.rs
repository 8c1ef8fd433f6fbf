use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sicyig_core::report::{json_string, write_text, Format, Table};
use sicyig_core::{Error, Result};

pub enum Body {
    Table(Table),
    /// Structured record, always written as JSON.
    Record(Value),
}

pub struct Output {
    pub name: String,
    pub body: Body,
}

impl Output {
    pub fn table(name: impl Into<String>, t: Table) -> Self {
        Output { name: name.into(), body: Body::Table(t) }
    }

    pub fn record<T: Serialize>(name: impl Into<String>, v: &T) -> Result<Self> {
        let v = serde_json::to_value(v).map_err(|e| Error::Format(format!("json: {e}")))?;
        Ok(Output { name: name.into(), body: Body::Record(v) })
    }

    fn extension(&self, fmt: Format) -> &'static str {
        match (&self.body, fmt) {
            (Body::Table(_), Format::Csv) => "csv",
            _ => "json",
        }
    }

    fn render(&self, fmt: Format) -> Result<String> {
        match &self.body {
            Body::Table(t) => t.render(fmt),
            Body::Record(v) => json_string(v),
        }
    }

    fn json_value(&self) -> Value {
        match &self.body {
            Body::Table(t) => t.to_json_value(),
            Body::Record(v) => v.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: String,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

/// Writes every output into `dir`, named `<name>.<ext>`.
pub fn write_dir(dir: &Path, outputs: &[Output], fmt: Format) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for o in outputs {
        let path: PathBuf = dir.join(format!("{}.{}", o.name, o.extension(fmt)));
        write_text(&path, &o.render(fmt)?)?;
        paths.push(path.display().to_string());
    }
    Ok(paths)
}

/// Stdout gets the first output. In JSON mode with several outputs, one
/// object keyed by output name carries all of them.
pub fn write_stdout(outputs: &[Output], fmt: Format) -> Result<Vec<String>> {
    let text = match (outputs, fmt) {
        ([], _) => return Ok(Vec::new()),
        ([only], _) => only.render(fmt)?,
        (many, Format::Json) => {
            let obj: serde_json::Map<String, Value> =
                many.iter().map(|o| (o.name.clone(), o.json_value())).collect();
            json_string(&Value::Object(obj))?
        }
        ([first, rest @ ..], Format::Csv) => {
            let names: Vec<_> = rest.iter().map(|o| o.name.as_str()).collect();
            eprintln!("note: {} also produced; use --out or --format json to get them", names.join(", "));
            first.render(fmt)?
        }
    };
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(vec!["-".into()])
}

pub fn seconds(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e3).round() / 1e3
}
