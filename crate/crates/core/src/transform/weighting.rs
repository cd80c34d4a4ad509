//! Subband weighting: applying the CSF as one scalar per wavelet subband.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::csf::csf;
use super::wavelet::WaveletPyramid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Checked-in Watson table (levels 1-4).
pub const WATSON_CDF97_ASSET: &str = include_str!("../../assets/watson_cdf97.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SwScheme {
    Li,
    Watson,
}

impl fmt::Display for SwScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwScheme::Li => "li_sw",
            SwScheme::Watson => "watson_sw",
        })
    }
}

/// Per-level `[H, V, D]` weights; index 0 is level 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandWeights {
    levels: Vec<[f64; 3]>,
}

const BAND_NAMES: [&str; 3] = ["H", "V", "D"];

impl SubbandWeights {
    pub fn from_levels(levels: Vec<[f64; 3]>) -> Self {
        Self { levels }
    }

    pub fn uniform(levels: usize, weight: f64) -> Self {
        Self {
            levels: vec![[weight; 3]; levels],
        }
    }

    /// Li weighting: the CSF evaluated at each level's center frequency
    /// `ppd * 2^-(k+1)` cycles/degree, scaled by sqrt(2) for the diagonal
    /// band.
    pub fn li(ppd: f64, levels: usize) -> Self {
        let levels = (1..=levels)
            .map(|k| {
                let f = ppd * 0.5f64.powi(k as i32 + 1);
                let hv = csf(f);
                [hv, hv, csf(f * std::f64::consts::SQRT_2)]
            })
            .collect();
        Self { levels }
    }

    /// The bundled Watson CDF-9/7 table.
    pub fn watson() -> Self {
        Self::parse(WATSON_CDF97_ASSET).expect("bundled Watson table parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `level band weight` lines; `#` starts a comment. Every band
    /// of every level from 1 to the highest listed must be present.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<[Option<f64>; 3]> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                line: n + 1,
                msg: format!("{msg}: '{raw}'"),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(bad("expected 'level band weight'"));
            }
            let level: usize = fields[0].parse().map_err(|_| bad("bad level"))?;
            if level == 0 {
                return Err(bad("levels start at 1"));
            }
            let band = BAND_NAMES
                .iter()
                .position(|b| b.eq_ignore_ascii_case(fields[1]))
                .ok_or_else(|| bad("band must be H, V or D"))?;
            let weight: f64 = fields[2].parse().map_err(|_| bad("bad weight"))?;
            if entries.len() < level {
                entries.resize(level, [None; 3]);
            }
            entries[level - 1][band] = Some(weight);
        }
        let levels = entries
            .into_iter()
            .enumerate()
            .map(|(k, e)| match e {
                [Some(h), Some(v), Some(d)] => Ok([h, v, d]),
                _ => Err(Error::MissingWeight { level: k + 1 }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }

    pub fn for_scheme(scheme: SwScheme, ppd: f64, levels: usize) -> Self {
        match scheme {
            SwScheme::Li => Self::li(ppd, levels),
            SwScheme::Watson => Self::watson(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Weight of `band` (0 = H, 1 = V, 2 = D) at `level` (1-based).
    pub fn weight(&self, level: usize, band: usize) -> Result<f64> {
        self.levels
            .get(level.wrapping_sub(1))
            .map(|w| w[band])
            .ok_or(Error::MissingWeight { level })
    }

    pub(crate) fn covers(&self, levels: usize) -> Result<()> {
        if levels > self.levels.len() {
            return Err(Error::MissingWeight {
                level: self.levels.len() + 1,
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# level band weight\n");
        for (k, w) in self.levels.iter().enumerate() {
            for (b, name) in BAND_NAMES.iter().enumerate() {
                s.push_str(&format!("{} {} {}\n", k + 1, name, w[b]));
            }
        }
        s
    }
}

impl FromStr for SwScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "li_sw" | "li" => Ok(SwScheme::Li),
            "watson_sw" | "watson" => Ok(SwScheme::Watson),
            other => Err(Error::Config(format!("unknown weighting scheme '{other}'"))),
        }
    }
}

/// Multiplies every detail subband by its scalar weight.
pub fn subband_weighting<T: Real>(
    pyr: &WaveletPyramid<T>,
    weights: &SubbandWeights,
) -> Result<WaveletPyramid<T>> {
    weights.covers(pyr.levels())?;
    Ok(pyr.scale_details(|level, band| T::lit(weights.levels[level - 1][band])))
}
