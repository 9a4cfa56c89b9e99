use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// An output directory whose files appear only once fully written: each file
/// goes to a temporary sibling first and is renamed into place.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let root = root.canonicalize().with_context(|| format!("resolving {}", root.display()))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Hands `fill` a temporary path to write, then moves it to `name`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        let tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(&self.root)?
            .into_temp_path();
        fill(&tmp)?;
        let dest = self.root.join(name);
        tmp.persist(&dest).with_context(|| format!("writing {}", dest.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write_with(name, |p| {
            let mut f = fs::File::create(p)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            Ok(())
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Rows serialized with a header taken from the field names.
    pub fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        self.write_with(name, |p| {
            let mut w = csv::Writer::from_path(p)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_land_under_their_name_without_leftovers() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&dir.path().join("nested/run")).unwrap();
        out.write_bytes("a.txt", b"hello").unwrap();
        #[derive(Serialize)]
        struct Row {
            k: usize,
            v: f64,
        }
        out.write_rows("r.csv", &[Row { k: 0, v: 0.5 }, Row { k: 1, v: -2.0 }]).unwrap();
        assert_eq!(fs::read_to_string(out.root().join("a.txt")).unwrap(), "hello");
        assert_eq!(fs::read_to_string(out.root().join("r.csv")).unwrap(), "k,v\n0,0.5\n1,-2.0\n");
        let names: Vec<_> = fs::read_dir(out.root()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
        assert_eq!(out.written(), ["a.txt", "r.csv"]);
    }
}
