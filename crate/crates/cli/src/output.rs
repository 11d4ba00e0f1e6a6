use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Cell of a CSV row.
pub enum Cell {
    F(f64),
    I(u64),
    /// Written as an empty field.
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::F)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::I(v as u64)
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(hash: &str, extra: &[String], columns: &[&str]) -> Self {
        let mut text = format!("# memsx {VERSION} config_hash={hash}\n");
        for line in extra {
            let _ = writeln!(text, "# {line}");
        }
        text += &columns.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = Cell>) {
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => format!("{v:.16e}"),
                Cell::I(v) => v.to_string(),
                Cell::Missing => String::new(),
            })
            .collect();
        self.text += &fields.join(",");
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> io::Result<PathBuf> {
        write_file(dir, name, self.text.as_bytes())
    }
}

#[derive(Serialize)]
pub struct Meta<'a> {
    pub version: &'a str,
    pub config_hash: &'a str,
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    meta: Meta<'a>,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, body: &T, hash: &str) -> io::Result<PathBuf> {
    let doc = WithMeta {
        body,
        meta: Meta {
            version: VERSION,
            config_hash: hash,
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_cells() {
        let mut c = Csv::new("abc", &[], &["a", "b", "c"]);
        c.row([Cell::F(0.1), Cell::I(3), Cell::Missing]);
        let last = c.text.lines().last().unwrap();
        assert_eq!(last, "1.0000000000000001e-1,3,");
        assert!(c.text.starts_with("# memsx "));
        let v: f64 = last.split(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
    }
}
