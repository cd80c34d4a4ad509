//! Feature CSV files.
//!
//! ```text
//! # funque features v1
//! frame,wd_essim,vif_scale1,vif_scale2,dlm,motion
//! 0,0.0123,0.97,0.95,0.99,0
//! ```
//!
//! The key column is `frame` for per-frame files and `video_id` for
//! per-video (aggregated) files. Values are written in shortest
//! round-trip form, so reading a file back is bit-exact.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const FEATURES_CSV_VERSION: &str = "funque features v1";

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    /// `frame` or `video_id`.
    pub key_column: String,
    pub names: Vec<String>,
    pub keys: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn per_frame(names: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Self {
            key_column: "frame".into(),
            names,
            keys: (0..rows.len()).map(|i| i.to_string()).collect(),
            rows,
        }
    }

    pub fn per_video(names: Vec<String>, keys: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Self {
            key_column: "video_id".into(),
            names,
            keys,
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn write_features_csv<W: Write>(out: W, table: &FeatureTable) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {FEATURES_CSV_VERSION}").map_err(|e| Error::io("<features csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![table.key_column.clone()];
    header.extend(table.names.iter().cloned());
    w.write_record(&header)?;
    for (key, row) in table.keys.iter().zip(&table.rows) {
        let mut rec = vec![key.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<features csv>", e))?;
    Ok(())
}

/// Parses a feature CSV; a version line other than the current one is
/// rejected, a missing one is accepted.
pub fn read_features_csv<R: Read>(input: R) -> Result<FeatureTable> {
    let mut text = String::new();
    let mut input = input;
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<features csv>", e))?;
    if let Some(first) = text.lines().find(|l| !l.trim().is_empty()) {
        if let Some(tag) = first.trim().strip_prefix('#') {
            let tag = tag.trim();
            if tag.starts_with("funque features") && tag != FEATURES_CSV_VERSION {
                return Err(Error::VersionMismatch {
                    expected: FEATURES_CSV_VERSION.into(),
                    found: tag.into(),
                });
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let key_column = header.get(0).unwrap_or("").to_string();
    if key_column != "frame" && key_column != "video_id" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("first column must be 'frame' or 'video_id', got '{key_column}'"),
        });
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let (mut keys, mut rows) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != names.len() + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} columns, found {}", names.len() + 1, rec.len()),
            });
        }
        keys.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(v, n)| {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("column '{n}': '{v}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(FeatureTable {
        key_column,
        names,
        keys,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let t = FeatureTable::per_frame(
            vec!["dlm".into(), "motion".into()],
            vec![vec![0.1 + 0.2, 1.0 / 3.0], vec![f64::MIN_POSITIVE, 0.0]],
        );
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# funque features v1\nframe,dlm,motion\n"));
        assert_eq!(read_features_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn diagnostics() {
        assert!(matches!(
            read_features_csv("# funque features v2\nframe,a\n0,1\n".as_bytes()),
            Err(Error::VersionMismatch { .. })
        ));
        let e = read_features_csv("video_id,a,b\nx,1,zz\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("'b'"));
        assert!(read_features_csv("id,a\n".as_bytes()).is_err());
        assert!(read_features_csv("frame,a\n0,1,2\n".as_bytes()).is_err());
    }
}
