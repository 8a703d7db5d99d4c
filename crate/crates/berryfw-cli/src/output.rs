use std::fs;
use std::path::Path;

use anyhow::Context;
use berryfw::CMat;
use serde::Serialize;

use crate::config::SCHEMA_VERSION;

/// Row-major real and imaginary parts.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let rows = |part: &dyn Fn(usize, usize) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| part(i, j)).collect())
                .collect()
        };
        MatrixJson {
            re: rows(&|i, j| m[(i, j)].re),
            im: rows(&|i, j| m[(i, j)].im),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, command: &str, body: &T) -> anyhow::Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        body,
    };
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(&env)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn csv_writer(dir: &Path, name: &str) -> anyhow::Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
