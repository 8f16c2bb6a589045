//! Deterministic CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use blowup_core::LabError;
use serde::Serialize;

/// Fixed 17-significant-digit float formatting.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// RFC-4180 CSV with CRLF line ends.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, LabError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io = |e: csv::Error| LabError::Format(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| LabError::Format(e.to_string()))
}

pub fn float_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>, LabError> {
    csv_bytes(header, rows.into_iter().map(|r| r.into_iter().map(fmt).collect::<Vec<_>>()))
}

/// Pretty JSON with lexicographically sorted object keys.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, LabError> {
    let v = serde_json::to_value(value).map_err(|e| LabError::Format(e.to_string()))?;
    let mut out = serde_json::to_vec_pretty(&v).map_err(|e| LabError::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// In-memory bundle; files are written in name order by one writer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn write(&self, dir: &Path) -> Result<(), LabError> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, LabError> {
        let mut files = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                let name = entry.file_name().to_string_lossy().into_owned();
                files.insert(name, fs::read(entry.path())?);
            }
        }
        if !files.contains_key("manifest.json") {
            return Err(LabError::Format(format!("{} holds no manifest.json", dir.display())));
        }
        Ok(Bundle { files })
    }

    pub fn get(&self, name: &str) -> Result<&[u8], LabError> {
        self.files
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| LabError::Format(format!("bundle has no {name}")))
    }
}

/// Reads a numeric CSV written by [`float_rows`].
pub fn read_float_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>), LabError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r
        .headers()
        .map_err(|e| LabError::Format(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| LabError::Format(e.to_string()))?;
        rows.push(
            rec.iter()
                .map(|v| v.parse::<f64>().map_err(|_| LabError::Format(format!("bad number `{v}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let xs = vec![vec![0.1, -1e-300, std::f64::consts::PI], vec![1.0 / 3.0, 2e10, 0.0]];
        let bytes = float_rows(&["a", "b", "c"], xs.clone()).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("a,b,c\r\n"));
        let (h, rows) = read_float_csv(&bytes).unwrap();
        assert_eq!(h, vec!["a", "b", "c"]);
        assert_eq!(rows, xs);
    }

    #[test]
    fn json_keys_are_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let text = String::from_utf8(json_bytes(&S { zeta: 1, alpha: 2 }).unwrap()).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let b = csv_bytes(&["name"], vec![vec!["a,\"b\"".to_string()]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "name\r\n\"a,\"\"b\"\"\"\r\n");
    }
}
