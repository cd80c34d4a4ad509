//! Labelled per-video feature rows.
//!
//! A dataset is built from feature CSVs (see [`crate::features`]) joined
//! with a MOS table:
//!
//! ```text
//! video_id,mos,content_id
//! foo_crf23,72.4,foo
//! ```
//!
//! Per-frame feature files are averaged into one row named after the file
//! stem; per-video files contribute one row per `video_id`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{read_features_csv, FeatureTable};
use crate::fusion::aggregate_rows;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub video_id: String,
    pub features: Vec<f64>,
    pub mos: f64,
    pub content_id: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub schema: Vec<String>,
    pub rows: Vec<DatasetRow>,
}

/// One MOS table entry.
#[derive(Clone, Debug, PartialEq)]
pub struct MosEntry {
    pub mos: f64,
    pub content_id: String,
}

pub fn read_mos_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, MosEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("{}: missing column '{name}'", path.display()),
            })
    };
    let (vi, mi) = (col("video_id")?, col("mos")?);
    let ci = header.iter().position(|h| h == "content_id");
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(vi).unwrap_or("").to_string();
        let mos_text = rec.get(mi).unwrap_or("");
        let mos = mos_text.parse::<f64>().map_err(|_| Error::Parse {
            line,
            msg: format!("{}: mos '{mos_text}' is not a number", path.display()),
        })?;
        let content_id = ci.and_then(|i| rec.get(i)).unwrap_or(&id).to_string();
        if out
            .insert(id.clone(), MosEntry { mos, content_id })
            .is_some()
        {
            return Err(Error::Parse {
                line,
                msg: format!("{}: duplicate video_id '{id}'", path.display()),
            });
        }
    }
    Ok(out)
}

impl Dataset {
    /// Joins feature tables with MOS entries on `video_id`. Every feature
    /// row must have a MOS entry.
    pub fn from_tables(
        name: impl Into<String>,
        tables: &[(String, FeatureTable)],
        mos: &BTreeMap<String, MosEntry>,
    ) -> Result<Self> {
        let mut schema: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (stem, table) in tables {
            match &schema {
                None => schema = Some(table.names.clone()),
                Some(s) if *s != table.names => {
                    return Err(Error::SchemaMismatch {
                        expected: s.join(","),
                        actual: table.names.join(","),
                    })
                }
                _ => {}
            }
            let videos: Vec<(String, Vec<f64>)> = if table.key_column == "frame" {
                vec![(stem.clone(), aggregate_rows(&table.rows)?)]
            } else {
                table
                    .keys
                    .iter()
                    .cloned()
                    .zip(table.rows.iter().cloned())
                    .collect()
            };
            for (video_id, features) in videos {
                let entry = mos.get(&video_id).ok_or_else(|| {
                    Error::InvalidArgument(format!("no MOS entry for video '{video_id}'"))
                })?;
                rows.push(DatasetRow {
                    video_id,
                    features,
                    mos: entry.mos,
                    content_id: entry.content_id.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            schema: schema.unwrap_or_default(),
            rows,
        })
    }

    /// Loads feature CSV files and a MOS CSV.
    pub fn load(
        name: impl Into<String>,
        feature_files: &[impl AsRef<Path>],
        mos_csv: impl AsRef<Path>,
    ) -> Result<Self> {
        let mos = read_mos_csv(mos_csv)?;
        let tables = feature_files
            .iter()
            .map(|p| {
                let p = p.as_ref();
                let f = File::open(p).map_err(|e| Error::io(p, e))?;
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let table = read_features_csv(f).map_err(|e| match e {
                    Error::Parse { line, msg } => Error::Parse {
                        line,
                        msg: format!("{}: {msg}", p.display()),
                    },
                    other => other,
                })?;
                Ok((stem, table))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_tables(name, &tables, &mos)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn mos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mos).collect()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    /// Distinct content ids in sorted order.
    pub fn contents(&self) -> Vec<String> {
        let mut c: Vec<String> = self.rows.iter().map(|r| r.content_id.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.schema
                    .iter()
                    .position(|s| s == n)
                    .ok_or_else(|| Error::UnknownFeature {
                        name: n.clone(),
                        valid: self.schema.join(", "),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            name: self.name.clone(),
            schema: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| DatasetRow {
                    features: idx.iter().map(|&i| r.features[i]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    /// Rows whose content id is in `keep`.
    pub fn subset_by_content(&self, keep: &dyn Fn(&str) -> bool) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| keep(&r.content_id))
                .cloned()
                .collect(),
        }
    }

    /// Writes the per-video table as `video_id,mos,content_id,<features>`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["video_id".to_string(), "mos".into(), "content_id".into()];
        header.extend(self.schema.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.video_id.clone(), r.mos.to_string(), r.content_id.clone()];
            rec.extend(r.features.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<dataset csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn joins_per_frame_and_per_video_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mos_path = dir.path().join("mos.csv");
        std::fs::write(
            &mos_path,
            "video_id,mos,content_id\na,3.5,c1\nb,2,c1\nc,4,c2\n",
        )
        .unwrap();
        let a = dir.path().join("a.csv");
        let mut f = File::create(&a).unwrap();
        write!(f, "# funque features v1\nframe,x,y\n0,1,2\n1,3,4\n").unwrap();
        let bc = dir.path().join("bc.csv");
        std::fs::write(&bc, "video_id,x,y\nb,0,0\nc,5,5\n").unwrap();
        let d = Dataset::load("t", &[&a, &bc], &mos_path).unwrap();
        assert_eq!(d.schema, vec!["x", "y"]);
        assert_eq!(d.rows[0].features, vec![2.0, 3.0]);
        assert_eq!(d.rows[0].mos, 3.5);
        assert_eq!(d.rows[2].content_id, "c2");
        assert_eq!(d.contents(), vec!["c1", "c2"]);
        let s = d.select(&["y".to_string()]).unwrap();
        assert_eq!(s.rows[2].features, vec![5.0]);
        assert!(d.select(&["z".to_string()]).is_err());
    }

    #[test]
    fn missing_mos_and_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let mos_path = dir.path().join("mos.csv");
        std::fs::write(&mos_path, "video_id,mos\na,x\n").unwrap();
        let e = read_mos_csv(&mos_path).unwrap_err();
        assert!(e.to_string().contains("line 2"));
        std::fs::write(&mos_path, "video_id,mos\na,1\n").unwrap();
        let m = read_mos_csv(&mos_path).unwrap();
        assert_eq!(m["a"].content_id, "a");
        let t = FeatureTable::per_video(vec!["x".into()], vec!["zz".into()], vec![vec![1.0]]);
        assert!(Dataset::from_tables("t", &[("f".into(), t)], &m).is_err());
    }
}
