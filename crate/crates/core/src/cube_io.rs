//! Binary cube persistence.
//!
//! Format (little-endian throughout):
//!
//! ```text
//! bytes 0..4    magic "SPC1"
//! bytes 4..16   u32 M (receivers), u32 N (sources), u32 F (frequencies)
//! then          F × f64 frequencies in hertz
//! then          M·N·F complex values as interleaved (re, im) f64 pairs,
//!               flat order: receiver innermost, source middle, frequency
//!               outermost
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::synth::SpectralCube;

pub const CUBE_MAGIC: [u8; 4] = *b"SPC1";

/// A cube as stored on disk: dimensions, band and payload, without the
/// geometry fields (spacing, references, sound speed) that live in the
/// scenario config.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCube {
    pub receivers: usize,
    pub sources: usize,
    pub frequencies_hz: Vec<f64>,
    pub data: Vec<Complex64>,
}

impl RawCube {
    /// Attach a geometry, checking that dimensions and band agree.
    pub fn into_cube(self, geom: &ArrayGeometry) -> Result<SpectralCube> {
        if self.receivers != geom.num_receivers()
            || self.sources != geom.num_sources()
            || self.frequencies_hz.len() != geom.num_freqs()
        {
            return Err(Error::DimensionMismatch(format!(
                "cube is {}×{}×{}, geometry wants {}×{}×{}",
                self.receivers,
                self.sources,
                self.frequencies_hz.len(),
                geom.num_receivers(),
                geom.num_sources(),
                geom.num_freqs(),
            )));
        }
        for (i, (a, b)) in self
            .frequencies_hz
            .iter()
            .zip(geom.frequencies_hz())
            .enumerate()
        {
            if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
                return Err(Error::DimensionMismatch(format!(
                    "cube frequency {i} is {a} Hz, geometry wants {b} Hz"
                )));
            }
        }
        SpectralCube::new(geom.clone(), self.data)
    }
}

pub fn save_cube(path: impl AsRef<Path>, cube: &SpectralCube) -> Result<()> {
    let path = path.as_ref();
    let geom = cube.geometry();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf: Vec<u8> = Vec::with_capacity(16 + 8 * geom.num_freqs() + 16 * cube.data().len());
    buf.extend_from_slice(&CUBE_MAGIC);
    buf.extend_from_slice(&(geom.num_receivers() as u32).to_le_bytes());
    buf.extend_from_slice(&(geom.num_sources() as u32).to_le_bytes());
    buf.extend_from_slice(&(geom.num_freqs() as u32).to_le_bytes());
    for &nu in geom.frequencies_hz() {
        buf.extend_from_slice(&nu.to_le_bytes());
    }
    for z in cube.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::CubeFormat {
                path: self.path.to_path_buf(),
                offset: self.offset as u64,
                message: format!(
                    "truncated while reading {what}: need {n} bytes, {} remain",
                    self.bytes.len() - self.offset
                ),
            });
        }
        let out = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<RawCube> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cur = Cursor {
        bytes: &bytes,
        offset: 0,
        path,
    };
    let magic = cur.take(4, "magic")?;
    if magic != CUBE_MAGIC {
        return Err(Error::CubeFormat {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("bad magic {magic:02x?}, expected {CUBE_MAGIC:02x?} (\"SPC1\")"),
        });
    }
    let m = cur.u32("receiver count")? as usize;
    let n = cur.u32("source count")? as usize;
    let f = cur.u32("frequency count")? as usize;
    if m == 0 || n == 0 || f == 0 {
        return Err(Error::CubeFormat {
            path: path.to_path_buf(),
            offset: 4,
            message: format!("degenerate dimensions {m}×{n}×{f}"),
        });
    }
    let expected = 16 + 8 * f + 16 * m * n * f;
    if bytes.len() != expected {
        return Err(Error::CubeFormat {
            path: path.to_path_buf(),
            offset: cur.offset as u64,
            message: format!(
                "size mismatch: header {m}×{n}×{f} implies {expected} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    let mut frequencies_hz = Vec::with_capacity(f);
    for i in 0..f {
        let nu = cur.f64(&format!("frequency {i}"))?;
        if !nu.is_finite() {
            return Err(Error::CubeFormat {
                path: path.to_path_buf(),
                offset: (cur.offset - 8) as u64,
                message: format!("non-finite frequency {i}: {nu}"),
            });
        }
        frequencies_hz.push(nu);
    }
    let count = m * n * f;
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let re = cur.f64("value")?;
        let im = cur.f64("value")?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::CubeFormat {
                path: path.to_path_buf(),
                offset: (cur.offset - 16) as u64,
                message: format!("non-finite value at flat index {i}"),
            });
        }
        data.push(Complex64::new(re, im));
    }
    Ok(RawCube {
        receivers: m,
        sources: n,
        frequencies_hz,
        data,
    })
}

/// Convenience used by tests and the CLI: path of a sibling file with a new
/// extension-like suffix.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RaypathParams;
    use crate::synth::{synthesize, NoiseSpec};

    fn cube() -> SpectralCube {
        let geom = ArrayGeometry::new(3, 2, 2.5, 1500.0, vec![100.0, 200.0, 350.0]).unwrap();
        synthesize(
            &geom,
            &[RaypathParams::new(1.0, 3.0, -2.0, 0.2).unwrap()],
            Some(&NoiseSpec::white(10.0, 5)),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.spc");
        let c = cube();
        save_cube(&path, &c).unwrap();
        let raw = load_cube(&path).unwrap();
        assert_eq!(raw.receivers, 3);
        assert_eq!(raw.sources, 2);
        assert_eq!(raw.frequencies_hz, c.geometry().frequencies_hz());
        assert_eq!(raw.data, c.data());
        let restored = raw.into_cube(c.geometry()).unwrap();
        assert_eq!(restored.data(), c.data());

        // Byte-level determinism of the writer.
        let path2 = dir.path().join("cube2.spc");
        save_cube(&path2, &c).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.spc");
        std::fs::write(&path, b"NOPE0000000000000000").unwrap();
        let err = load_cube(&path).unwrap_err();
        assert!(matches!(err, Error::CubeFormat { offset: 0, .. }), "{err}");
    }

    #[test]
    fn truncated_payload_names_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.spc");
        let c = cube();
        save_cube(&path, &c).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 24);
        std::fs::write(&path, &bytes).unwrap();
        let err = load_cube(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("size mismatch"), "{msg}");
        assert!(msg.contains(&format!("{}", bytes.len())), "{msg}");
    }

    #[test]
    fn non_finite_value_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.spc");
        let c = cube();
        save_cube(&path, &c).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let tail = bytes.len() - 16;
        bytes[tail..tail + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        let err = load_cube(&path).unwrap_err();
        assert!(err.to_string().contains("non-finite value"), "{err}");
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.spc");
        let c = cube();
        save_cube(&path, &c).unwrap();
        let raw = load_cube(&path).unwrap();
        let other = ArrayGeometry::new(4, 2, 2.5, 1500.0, vec![100.0, 200.0, 350.0]).unwrap();
        assert!(raw.clone().into_cube(&other).is_err());
        let shifted =
            ArrayGeometry::new(3, 2, 2.5, 1500.0, vec![100.0, 200.0, 350.5]).unwrap();
        assert!(raw.into_cube(&shifted).is_err());
    }
}
