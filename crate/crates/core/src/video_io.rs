//! Raw planar YUV ingestion.
//!
//! Frames are stored back to back, each as a row-major Y plane followed by
//! the U and V planes. Sample containers are one byte for 8-bit video and
//! two little-endian bytes for 10/12-bit video. Only the Y plane is ever
//! decoded; luma is normalized to the 8-bit range on ingestion.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PixelFormat {
    Yuv420p,
    Yuv422p,
    Yuv444p,
}

impl PixelFormat {
    /// Dimensions of one chroma plane for a `width`x`height` frame.
    pub fn chroma_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            PixelFormat::Yuv420p => (width.div_ceil(2), height.div_ceil(2)),
            PixelFormat::Yuv422p => (width.div_ceil(2), height),
            PixelFormat::Yuv444p => (width, height),
        }
    }
}

impl FromStr for PixelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yuv420p" | "420" => Ok(PixelFormat::Yuv420p),
            "yuv422p" | "422" => Ok(PixelFormat::Yuv422p),
            "yuv444p" | "444" => Ok(PixelFormat::Yuv444p),
            other => Err(Error::UnsupportedFormat(format!("pixel format '{other}'"))),
        }
    }
}

impl fmt::Display for PixelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PixelFormat::Yuv420p => "yuv420p",
            PixelFormat::Yuv422p => "yuv422p",
            PixelFormat::Yuv444p => "yuv444p",
        })
    }
}

/// Geometry and sample layout of a raw YUV file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VideoSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_format: PixelFormat,
    pub bit_depth: u8,
}

impl VideoSpec {
    pub fn new(
        width: usize,
        height: usize,
        pixel_format: PixelFormat,
        bit_depth: u8,
    ) -> Result<Self> {
        let spec = Self {
            width,
            height,
            pixel_format,
            bit_depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !matches!(self.bit_depth, 8 | 10 | 12) {
            return Err(Error::UnsupportedFormat(format!(
                "bit depth {} (expected 8, 10 or 12)",
                self.bit_depth
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    pub fn luma_bytes(&self) -> usize {
        self.width * self.height * self.bytes_per_sample()
    }

    pub fn frame_bytes(&self) -> usize {
        let (cw, ch) = self.pixel_format.chroma_dims(self.width, self.height);
        self.luma_bytes() + 2 * cw * ch * self.bytes_per_sample()
    }

    /// Divisor mapping native sample values onto the 8-bit scale.
    pub fn normalization(&self) -> f64 {
        f64::from(1u32 << (self.bit_depth - 8))
    }
}

/// Sequential reader over the frames of one raw YUV file.
#[derive(Debug)]
pub struct FrameSource {
    file: File,
    path: PathBuf,
    spec: VideoSpec,
    frame_count: usize,
    buf: Vec<u8>,
}

/// Opens `path` as a raw YUV sequence described by `spec`.
pub fn open_sequence(path: impl AsRef<Path>, spec: VideoSpec) -> Result<FrameSource> {
    FrameSource::open(path, spec)
}

impl FrameSource {
    pub fn open(path: impl AsRef<Path>, spec: VideoSpec) -> Result<Self> {
        spec.validate()?;
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let size = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        let frame_bytes = spec.frame_bytes() as u64;
        if size % frame_bytes != 0 {
            return Err(Error::SizeMismatch {
                actual: size,
                frame_bytes,
            });
        }
        Ok(Self {
            file,
            path,
            spec,
            frame_count: (size / frame_bytes) as usize,
            buf: vec![0; spec.luma_bytes()],
        })
    }

    pub fn spec(&self) -> &VideoSpec {
        &self.spec
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Reads the Y plane of frame `index`, normalized to `[0, 255]`.
    pub fn read_luma<T: Real>(&mut self, index: usize) -> Result<Plane<T>> {
        if index >= self.frame_count {
            return Err(Error::FrameOutOfRange {
                index,
                count: self.frame_count,
            });
        }
        let offset = (index * self.spec.frame_bytes()) as u64;
        self.file
            .seek(SeekFrom::Start(offset))
            .map_err(|e| Error::io(&self.path, e))?;
        self.file
            .read_exact(&mut self.buf)
            .map_err(|e| Error::io(&self.path, e))?;

        let (w, h) = (self.spec.width, self.spec.height);
        let samples: Vec<T> = if self.spec.bit_depth == 8 {
            self.buf.iter().map(|&b| T::lit(f64::from(b))).collect()
        } else {
            let scale = 1.0 / self.spec.normalization();
            self.buf
                .chunks_exact(2)
                .map(|b| T::lit(f64::from(u16::from_le_bytes([b[0], b[1]])) * scale))
                .collect()
        };
        Plane::from_vec(w, h, samples)
    }
}

/// Writes raw YUV frames; used for synthetic clips and round-trip checks.
pub struct YuvWriter<W: Write> {
    out: W,
    spec: VideoSpec,
}

impl YuvWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, spec: VideoSpec) -> Result<Self> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        YuvWriter::new(BufWriter::new(file), spec)
    }
}

impl<W: Write> YuvWriter<W> {
    pub fn new(out: W, spec: VideoSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { out, spec })
    }

    /// Writes one frame. Luma values are given on the 8-bit scale and are
    /// rounded and clamped to the native range; both chroma planes are
    /// filled with `chroma` (a native-range sample value).
    pub fn write_frame<T: Real>(&mut self, luma: &Plane<T>, chroma: u16) -> Result<()> {
        if luma.dims() != (self.spec.width, self.spec.height) {
            return Err(Error::DimensionMismatch(format!(
                "luma plane {}x{} for a {}x{} video",
                luma.width(),
                luma.height(),
                self.spec.width,
                self.spec.height
            )));
        }
        let max = f64::from((1u32 << self.spec.bit_depth) - 1);
        let scale = self.spec.normalization();
        let mut bytes = Vec::with_capacity(self.spec.frame_bytes());
        for &v in luma.as_slice() {
            let native = (v.as_f64() * scale).round().clamp(0.0, max) as u16;
            self.push_sample(&mut bytes, native);
        }
        let (cw, ch) = self
            .spec
            .pixel_format
            .chroma_dims(self.spec.width, self.spec.height);
        for _ in 0..2 * cw * ch {
            self.push_sample(&mut bytes, chroma);
        }
        self.out
            .write_all(&bytes)
            .map_err(|e| Error::io("<yuv output>", e))
    }

    fn push_sample(&self, bytes: &mut Vec<u8>, v: u16) {
        if self.spec.bit_depth == 8 {
            bytes.push(v as u8);
        } else {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("<yuv output>", e))?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_bytes(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f.flush().unwrap();
        f
    }

    /// Byte-level decoder written independently of `FrameSource`.
    fn oracle_luma(bytes: &[u8], spec: &VideoSpec, index: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let start = index * spec.frame_bytes();
        for i in 0..spec.width * spec.height {
            let v = if spec.bit_depth == 8 {
                bytes[start + i] as f64
            } else {
                let lo = bytes[start + 2 * i] as u32;
                let hi = bytes[start + 2 * i + 1] as u32;
                ((hi << 8) | lo) as f64 / (1u32 << (spec.bit_depth - 8)) as f64
            };
            out.push(v);
        }
        out
    }

    #[test]
    fn cif_420_frame_count() {
        let spec = VideoSpec::new(352, 288, PixelFormat::Yuv420p, 8).unwrap();
        assert_eq!(spec.frame_bytes(), 152064);
        let f = write_bytes(&vec![0u8; 152064]);
        let src = open_sequence(f.path(), spec).unwrap();
        assert_eq!(src.frame_count(), 1);
    }

    #[test]
    fn wrong_depth_is_size_mismatch() {
        let spec = VideoSpec::new(352, 288, PixelFormat::Yuv420p, 10).unwrap();
        let f = write_bytes(&vec![0u8; 152064]);
        assert!(matches!(
            open_sequence(f.path(), spec),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn three_frames_444() {
        let spec = VideoSpec::new(64, 64, PixelFormat::Yuv444p, 8).unwrap();
        let f = write_bytes(&vec![7u8; 36864]);
        assert_eq!(open_sequence(f.path(), spec).unwrap().frame_count(), 3);
    }

    #[test]
    fn missing_file_and_bad_depth() {
        let spec = VideoSpec::new(4, 4, PixelFormat::Yuv420p, 8).unwrap();
        assert!(matches!(
            open_sequence("/nonexistent/clip.yuv", spec),
            Err(Error::Io { .. })
        ));
        assert!(VideoSpec::new(4, 4, PixelFormat::Yuv420p, 9).is_err());
        assert!(VideoSpec::new(0, 4, PixelFormat::Yuv420p, 8).is_err());
        assert!("nv12".parse::<PixelFormat>().is_err());
    }

    #[test]
    fn zero_frame_reads_zero() {
        let spec = VideoSpec::new(8, 6, PixelFormat::Yuv420p, 8).unwrap();
        let f = write_bytes(&vec![0u8; spec.frame_bytes()]);
        let mut src = open_sequence(f.path(), spec).unwrap();
        let p: Plane<f64> = src.read_luma(0).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(
            src.read_luma::<f64>(1),
            Err(Error::FrameOutOfRange { index: 1, count: 1 })
        ));
    }

    #[test]
    fn ten_bit_normalization() {
        let spec = VideoSpec::new(2, 2, PixelFormat::Yuv444p, 10).unwrap();
        let mut bytes = Vec::new();
        for _ in 0..12 {
            bytes.extend_from_slice(&1020u16.to_le_bytes());
        }
        let f = write_bytes(&bytes);
        let p: Plane<f64> = open_sequence(f.path(), spec).unwrap().read_luma(0).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 255.0));
    }

    #[test]
    fn ramp_matches_oracle_and_skips_chroma() {
        for (fmt, depth) in [
            (PixelFormat::Yuv420p, 8),
            (PixelFormat::Yuv422p, 10),
            (PixelFormat::Yuv444p, 12),
        ] {
            let spec = VideoSpec::new(13, 7, fmt, depth).unwrap();
            let max = (1u32 << depth) - 1;
            let (cw, ch) = fmt.chroma_dims(13, 7);
            let mut bytes = Vec::new();
            for frame in 0..2u32 {
                for i in 0..13 * 7u32 {
                    let v = ((i * 37 + frame * 11) % (max + 1)) as u16;
                    if depth == 8 {
                        bytes.push(v as u8);
                    } else {
                        bytes.extend_from_slice(&v.to_le_bytes());
                    }
                }
                // sentinel chroma: maximal values that would be obvious in luma
                for _ in 0..2 * cw * ch {
                    if depth == 8 {
                        bytes.push(0xFF);
                    } else {
                        bytes.extend_from_slice(&(max as u16).to_le_bytes());
                    }
                }
            }
            let f = write_bytes(&bytes);
            let mut src = open_sequence(f.path(), spec).unwrap();
            assert_eq!(src.frame_count(), 2);
            for idx in [1, 0] {
                let got: Plane<f64> = src.read_luma(idx).unwrap();
                assert_eq!(got.as_slice(), oracle_luma(&bytes, &spec, idx).as_slice());
            }
        }
    }

    #[test]
    fn eight_bit_round_trip_is_exact() {
        let spec = VideoSpec::new(17, 9, PixelFormat::Yuv420p, 8).unwrap();
        let plane = Plane::from_fn(17, 9, |r, c| ((r * 31 + c * 7) % 256) as f64);
        let mut w = YuvWriter::new(Vec::new(), spec).unwrap();
        w.write_frame(&plane, 128).unwrap();
        let f = write_bytes(&w.finish().unwrap());
        let back: Plane<f64> = open_sequence(f.path(), spec).unwrap().read_luma(0).unwrap();
        assert_eq!(back, plane);
    }

    #[test]
    fn truncated_after_open_is_an_error() {
        let spec = VideoSpec::new(4, 4, PixelFormat::Yuv444p, 8).unwrap();
        let f = write_bytes(&vec![1u8; 2 * spec.frame_bytes()]);
        let mut src = open_sequence(f.path(), spec).unwrap();
        f.as_file().set_len(spec.frame_bytes() as u64 + 3).unwrap();
        assert!(matches!(src.read_luma::<f32>(1), Err(Error::Io { .. })));
    }
}
