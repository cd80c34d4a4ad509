//! Plain-text model files.
//!
//! ```text
//! funque-svr 1
//! schema wd_essim,vif_scale1,vif_scale2,dlm,motion
//! schema_sha256 <hex>
//! kernel rbf
//! gamma 0.2
//! c 4
//! nu 0.9
//! bias -0.5
//! score_range 1.2 4.8
//! range wd_essim 0.001 0.2
//! ...
//! support_vectors 37
//! sv <coef> <x1> ... <xn>
//! ...
//! end
//! ```
//!
//! Numbers use shortest round-trip formatting, so loading is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::svr::SvrModel;
use super::Schema;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: &str = "1";
const MAGIC: &str = "funque-svr";

fn render(model: &SvrModel) -> String {
    let mut s = String::new();
    let mut line = |l: String| {
        s.push_str(&l);
        s.push('\n');
    };
    line(format!("{MAGIC} {MODEL_FORMAT_VERSION}"));
    line(format!("schema {}", model.schema));
    line(format!("schema_sha256 {}", model.schema.hash()));
    line(format!("kernel {}", model.kernel));
    line(format!("gamma {}", model.gamma));
    line(format!("c {}", model.c));
    line(format!("nu {}", model.nu));
    line(format!("bias {}", model.bias));
    line(format!(
        "score_range {} {}",
        model.score_range.0, model.score_range.1
    ));
    for (name, (lo, hi)) in model.schema.names().iter().zip(&model.feature_ranges) {
        line(format!("range {name} {lo} {hi}"));
    }
    line(format!("support_vectors {}", model.support_vectors.len()));
    for (sv, a) in model.support_vectors.iter().zip(&model.dual_coefs) {
        let xs: Vec<String> = sv.iter().map(|v| v.to_string()).collect();
        line(format!("sv {a} {}", xs.join(" ")));
    }
    line("end".into());
    s
}

/// Writes `model` to `path` via a temporary file and rename. Models
/// without support vectors are refused.
pub fn save_model(model: &SvrModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if model.support_vectors.is_empty() {
        return Err(Error::InvalidArgument(
            "refusing to save a model with no support vectors".into(),
        ));
    }
    model.validate()?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(render(model).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvrModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.last,
            msg: msg.into(),
        }
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (n, l) = self.inner.next().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of model file, expected '{key}'"),
        })?;
        self.last = n + 1;
        let mut f = l.split_whitespace();
        match f.next() {
            Some(k) if k == key => Ok(f.collect()),
            other => Err(self.err(format!("expected '{key}', found '{}'", other.unwrap_or("")))),
        }
    }

    fn num(&self, s: &str) -> Result<f64> {
        s.parse()
            .map_err(|_| self.err(format!("'{s}' is not a number")))
    }

    fn one_num(&mut self, key: &str) -> Result<f64> {
        let f = self.expect(key)?;
        match f.as_slice() {
            [v] => self.num(v),
            _ => Err(self.err(format!("'{key}' takes one value"))),
        }
    }
}

pub fn parse_model(text: &str) -> Result<SvrModel> {
    let mut it = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let version = it.expect(MAGIC)?;
    let found = version.first().copied().unwrap_or("");
    if found != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: MODEL_FORMAT_VERSION.into(),
            found: found.into(),
        });
    }
    let names = it.expect("schema")?;
    let schema = Schema::from_names(
        names
            .first()
            .map(|s| s.split(',').map(str::to_string).collect())
            .unwrap_or_default(),
    );
    let stored = it
        .expect("schema_sha256")?
        .first()
        .copied()
        .unwrap_or("")
        .to_string();
    if stored != schema.hash() {
        return Err(Error::SchemaHashMismatch {
            stored,
            computed: schema.hash(),
        });
    }
    let kernel = it
        .expect("kernel")?
        .first()
        .copied()
        .unwrap_or("")
        .parse()?;
    let gamma = it.one_num("gamma")?;
    let c = it.one_num("c")?;
    let nu = it.one_num("nu")?;
    let bias = it.one_num("bias")?;
    let sr = it.expect("score_range")?;
    let score_range = match sr.as_slice() {
        [lo, hi] => (it.num(lo)?, it.num(hi)?),
        _ => return Err(it.err("'score_range' takes two values")),
    };
    let mut feature_ranges = Vec::new();
    for name in schema.names() {
        let f = it.expect("range")?;
        match f.as_slice() {
            [n, lo, hi] if n == name => feature_ranges.push((it.num(lo)?, it.num(hi)?)),
            _ => return Err(it.err(format!("expected 'range {name} <min> <max>'"))),
        }
    }
    let count = it.one_num("support_vectors")?;
    if count.fract() != 0.0 || count < 0.0 {
        return Err(it.err("support vector count must be a whole number"));
    }
    let (mut support_vectors, mut dual_coefs) = (Vec::new(), Vec::new());
    for _ in 0..count as usize {
        let f = it.expect("sv")?;
        if f.len() != schema.len() + 1 {
            return Err(it.err(format!("support vector needs {} numbers", schema.len() + 1)));
        }
        dual_coefs.push(it.num(f[0])?);
        support_vectors.push(
            f[1..]
                .iter()
                .map(|v| it.num(v))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    it.expect("end")?;
    let model = SvrModel {
        kernel,
        gamma,
        c,
        nu,
        schema,
        feature_ranges,
        support_vectors,
        dual_coefs,
        bias,
        score_range,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, DatasetRow};
    use crate::fusion::{svr_predict_values, svr_train, SvrHyper};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> SvrModel {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = (0..30)
            .map(|i| {
                let f: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
                DatasetRow {
                    video_id: format!("v{i}"),
                    mos: f.iter().sum::<f64>() + 0.1 * f[0] * f[1],
                    features: f,
                    content_id: format!("c{i}"),
                }
            })
            .collect();
        let d = Dataset {
            name: "t".into(),
            schema: crate::fusion::DEFAULT_SCHEMA
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
        };
        svr_train(&d, &SvrHyper::default()).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let f: Vec<f64> = (0..5).map(|_| rng.random_range(-0.2..1.2)).collect();
            assert_eq!(
                svr_predict_values(&m, &f).unwrap().to_bits(),
                svr_predict_values(&back, &f).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn truncated_file_is_an_error() {
        let text = render(&model());
        let cut: String = text.lines().take(14).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_model(&cut), Err(Error::Parse { .. })));
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(parse_model(no_end).is_err());
    }

    #[test]
    fn version_and_hash_checked() {
        let text = render(&model());
        assert!(matches!(
            parse_model(&text.replacen("funque-svr 1", "funque-svr 2", 1)),
            Err(Error::VersionMismatch { .. })
        ));
        assert!(matches!(
            parse_model(&text.replacen("schema wd_essim", "schema wd_ssim", 1)),
            Err(Error::SchemaHashMismatch { .. })
        ));
    }

    #[test]
    fn empty_support_set_not_saved() {
        let mut m = model();
        m.support_vectors.clear();
        m.dual_coefs.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(save_model(&m, dir.path().join("m.txt")).is_err());
        assert!(!dir.path().join("m.txt").exists());
    }
}
