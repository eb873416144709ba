use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

/// All writes go through this handle, which refuses paths escaping its root.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    pub csv: bool,
    pub svg: bool,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>, csv: bool, svg: bool) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, csv, svg })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Resolves a relative path inside the root.
    pub fn resolve(&self, name: &str) -> io::Result<PathBuf> {
        let rel = Path::new(name);
        let ok = !name.is_empty() && rel.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
        if !ok {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("`{name}` must be a relative path inside the output directory"),
            ));
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> io::Result<PathBuf> {
        let path = self.resolve(name)?;
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn csv_writer(&self, name: &str) -> io::Result<csv::Writer<fs::File>> {
        let path = self.resolve(name)?;
        Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
    }
}

/// Shortest round-tripping decimal; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Left-aligned text table.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_escaping_paths() {
        let dir = std::env::temp_dir().join("dspstab_outdir_test");
        let out = OutDir::create(&dir, true, true).unwrap();
        assert!(out.resolve("../x.csv").is_err());
        assert!(out.resolve("/tmp/x.csv").is_err());
        assert!(out.resolve("").is_err());
        assert_eq!(out.resolve("sub/x.csv").unwrap(), dir.join("sub/x.csv"));
    }

    #[test]
    fn numbers_and_tables() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        let t = render_table(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\n---  --\nxyz  1\n");
    }
}
