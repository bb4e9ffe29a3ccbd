//! Binary file formats.
//!
//! All integers are little-endian `u32`, all samples little-endian IEEE-754
//! `f32`.
//!
//! | file        | magic  | header             | payload                          |
//! |-------------|--------|--------------------|----------------------------------|
//! | cube        | `HSC1` | `M, N, L`          | `M*N*L` f32, band-major order    |
//! | aperture    | `APT1` | `M, N`             | `M*N` bytes in {0,1}, row-major  |
//! | measurement | `MSR1` | `m, K, order tag`  | `m` f32 in solver layout         |
//!
//! The order tag is 0 for standard and 1 for higher-order CASSI. Cube values
//! are narrowed to `f32` on write.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cube::{CodedAperture, HyperCube, MeasurementVector};
use crate::error::{Error, Result};
use crate::operator::Order;

pub const CUBE_MAGIC: [u8; 4] = *b"HSC1";
pub const APERTURE_MAGIC: [u8; 4] = *b"APT1";
pub const MEASUREMENT_MAGIC: [u8; 4] = *b"MSR1";

/// Contents of a measurement file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFile {
    pub shots: u32,
    pub order: Order,
    pub values: MeasurementVector,
}

struct Reader<'a> {
    bytes: &'a [u8],
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn magic(&self, expected: [u8; 4]) -> Result<()> {
        self.require(4)?;
        let found: [u8; 4] = self.bytes[..4].try_into().unwrap();
        if found != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                found,
            });
        }
        Ok(())
    }

    fn require(&self, len: u64) -> Result<()> {
        let actual = self.bytes.len() as u64;
        if actual < len {
            return Err(Error::ShortFile {
                path: self.path.to_path_buf(),
                expected: len,
                actual,
            });
        }
        Ok(())
    }

    /// Exact total length check, after the header is known.
    fn exact(&self, len: u64) -> Result<()> {
        self.require(len)?;
        let actual = self.bytes.len() as u64;
        if actual > len {
            return Err(Error::TrailingData {
                path: self.path.to_path_buf(),
                expected: len,
                actual,
            });
        }
        Ok(())
    }

    fn u32_at(&self, offset: usize) -> u32 {
        u32::from_le_bytes(self.bytes[offset..offset + 4].try_into().unwrap())
    }

    fn f32s(&self, offset: usize, count: usize) -> Vec<f64> {
        self.bytes[offset..offset + 4 * count]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    }

    fn overflow(&self) -> Error {
        Error::DimensionOverflow {
            path: self.path.to_path_buf(),
        }
    }
}

fn payload_len(header: u64, dims: &[u32], elem: u64) -> Option<u64> {
    dims.iter()
        .try_fold(elem, |acc, &d| acc.checked_mul(d as u64))
        .and_then(|p| p.checked_add(header))
        .filter(|total| usize::try_from(*total).is_ok())
}

fn push_f32s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
}

fn u32_dim(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Size(format!("{what} {value} does not fit in u32")))
}

pub fn encode_cube(cube: &HyperCube) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * cube.len());
    out.extend_from_slice(&CUBE_MAGIC);
    for (d, what) in [
        (cube.m_rows(), "rows"),
        (cube.n_cols(), "cols"),
        (cube.bands(), "bands"),
    ] {
        out.extend_from_slice(&u32_dim(d, what)?.to_le_bytes());
    }
    push_f32s(&mut out, cube.values());
    Ok(out)
}

pub fn decode_cube(bytes: &[u8], path: &Path) -> Result<HyperCube> {
    let r = Reader { bytes, path };
    r.magic(CUBE_MAGIC)?;
    r.require(16)?;
    let (m, n, l) = (r.u32_at(4), r.u32_at(8), r.u32_at(12));
    let total = payload_len(16, &[m, n, l], 4).ok_or_else(|| r.overflow())?;
    r.exact(total)?;
    let count = (m as usize) * (n as usize) * (l as usize);
    HyperCube::new(m as usize, n as usize, l as usize, r.f32s(16, count))
}

pub fn encode_aperture(aperture: &CodedAperture) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + aperture.mask().len());
    out.extend_from_slice(&APERTURE_MAGIC);
    out.extend_from_slice(&u32_dim(aperture.m_rows(), "rows")?.to_le_bytes());
    out.extend_from_slice(&u32_dim(aperture.n_cols(), "cols")?.to_le_bytes());
    out.extend_from_slice(aperture.mask());
    Ok(out)
}

pub fn decode_aperture(bytes: &[u8], path: &Path) -> Result<CodedAperture> {
    let r = Reader { bytes, path };
    r.magic(APERTURE_MAGIC)?;
    r.require(12)?;
    let (m, n) = (r.u32_at(4), r.u32_at(8));
    let total = payload_len(12, &[m, n], 1).ok_or_else(|| r.overflow())?;
    r.exact(total)?;
    let mask = &bytes[12..];
    if let Some(offset) = mask.iter().position(|&b| b > 1) {
        return Err(Error::InvalidApertureByte {
            path: path.to_path_buf(),
            offset: 12 + offset,
            value: mask[offset],
        });
    }
    CodedAperture::new(m as usize, n as usize, mask.to_vec())
}

pub fn encode_measurements(file: &MeasurementFile) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * file.values.len());
    out.extend_from_slice(&MEASUREMENT_MAGIC);
    out.extend_from_slice(&u32_dim(file.values.len(), "measurement count")?.to_le_bytes());
    out.extend_from_slice(&file.shots.to_le_bytes());
    out.extend_from_slice(&file.order.tag().to_le_bytes());
    push_f32s(&mut out, file.values.values());
    Ok(out)
}

pub fn decode_measurements(bytes: &[u8], path: &Path) -> Result<MeasurementFile> {
    let r = Reader { bytes, path };
    r.magic(MEASUREMENT_MAGIC)?;
    r.require(16)?;
    let (m, shots, tag) = (r.u32_at(4), r.u32_at(8), r.u32_at(12));
    let total = payload_len(16, &[m], 4).ok_or_else(|| r.overflow())?;
    r.exact(total)?;
    let order = Order::from_tag(tag)
        .ok_or_else(|| Error::Validation(format!("{}: unknown order tag {tag}", path.display())))?;
    if shots == 0 || m == 0 {
        return Err(Error::Validation(format!(
            "{}: measurement file declares {m} values over {shots} shots",
            path.display()
        )));
    }
    let values = r.f32s(16, m as usize);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "{}: non-finite measurement value",
            path.display()
        )));
    }
    Ok(MeasurementFile {
        shots,
        order,
        values: MeasurementVector::new(values),
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let path = path.as_ref();
    decode_cube(&read_bytes(path)?, path)
}

pub fn write_cube(path: impl AsRef<Path>, cube: &HyperCube) -> Result<()> {
    write_bytes(path.as_ref(), &encode_cube(cube)?)
}

pub fn read_aperture(path: impl AsRef<Path>) -> Result<CodedAperture> {
    let path = path.as_ref();
    decode_aperture(&read_bytes(path)?, path)
}

pub fn write_aperture(path: impl AsRef<Path>, aperture: &CodedAperture) -> Result<()> {
    write_bytes(path.as_ref(), &encode_aperture(aperture)?)
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<MeasurementFile> {
    let path = path.as_ref();
    decode_measurements(&read_bytes(path)?, path)
}

pub fn write_measurements(path: impl AsRef<Path>, file: &MeasurementFile) -> Result<()> {
    write_bytes(path.as_ref(), &encode_measurements(file)?)
}

/// Write one band as an 8-bit grayscale PNG, linearly mapping the band's
/// minimum to 0 and maximum to 255. A constant band maps to 0.
pub fn write_band_png(cube: &HyperCube, band: usize, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    if band >= cube.bands() {
        return Err(Error::Domain(format!(
            "band {band} out of range for a cube with {} bands",
            cube.bands()
        )));
    }
    let (m, n) = (cube.m_rows(), cube.n_cols());
    let plane = cube.band(band);
    let (lo, hi) = plane
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    // image rows are x, image columns are y
    let mut pixels = vec![0u8; m * n];
    for x in 0..m {
        for y in 0..n {
            let v = plane[y * m + x];
            pixels[x * n + y] = if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            };
        }
    }
    let width = u32_dim(n, "cols")?;
    let height = u32_dim(m, "rows")?;
    image::save_buffer(path, &pixels, width, height, image::ExtendedColorType::L8)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn cube_layout_is_exact() {
        let cube = HyperCube::new(1, 2, 1, vec![1.0, -2.0]).unwrap();
        let bytes = encode_cube(&cube).unwrap();
        let mut expected = b"HSC1".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(decode_cube(&bytes, p()).unwrap(), cube);
    }

    #[test]
    fn cube_round_trip_bytes() {
        let mut rng = SeededStream::new(1);
        let values = (0..8 * 8 * 4)
            .map(|_| rng.standard_normal() as f32 as f64)
            .collect();
        let cube = HyperCube::new(8, 8, 4, values).unwrap();
        let bytes = encode_cube(&cube).unwrap();
        assert_eq!(bytes.len(), 16 + 4 * 256);
        let back = decode_cube(&bytes, p()).unwrap();
        assert_eq!(back, cube);
        assert_eq!(encode_cube(&back).unwrap(), bytes);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_cube(&HyperCube::zeros(2, 2, 1)).unwrap();
        bytes[3] = b'2';
        let err = decode_cube(&bytes, p()).unwrap_err();
        assert!(matches!(err, Error::BadMagic { found, .. } if &found == b"HSC2"));
        assert_eq!(err.exit_code(), 10);
        assert!(matches!(
            decode_aperture(b"HSC1", p()),
            Err(Error::BadMagic { .. })
        ));
        assert!(matches!(
            decode_measurements(b"xx", p()),
            Err(Error::ShortFile { .. })
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_cube(&HyperCube::zeros(2, 2, 2)).unwrap();
        let err = decode_cube(&bytes[..bytes.len() - 3], p()).unwrap_err();
        match err {
            Error::ShortFile {
                expected, actual, ..
            } => {
                assert_eq!(expected, 48);
                assert_eq!(actual, 45);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string_names_lengths(&bytes[..20]));
    }

    fn err_string_names_lengths(bytes: &[u8]) -> bool {
        let msg = decode_cube(bytes, p()).unwrap_err().to_string();
        msg.contains("48") && msg.contains("20")
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = encode_cube(&HyperCube::zeros(2, 2, 1)).unwrap();
        bytes.push(0);
        assert!(matches!(
            decode_cube(&bytes, p()),
            Err(Error::TrailingData { .. })
        ));
    }

    #[test]
    fn dimension_overflow() {
        let mut bytes = b"HSC1".to_vec();
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        assert!(matches!(
            decode_cube(&bytes, p()),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn non_finite_cube_rejected() {
        let mut bytes = encode_cube(&HyperCube::zeros(1, 1, 1)).unwrap();
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_cube(&bytes, p()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn aperture_round_trip_and_invalid_byte() {
        let a = CodedAperture::new(2, 3, vec![1, 0, 0, 1, 1, 0]).unwrap();
        let bytes = encode_aperture(&a).unwrap();
        assert_eq!(&bytes[12..], a.mask());
        assert_eq!(decode_aperture(&bytes, p()).unwrap(), a);
        let mut bad = bytes.clone();
        bad[14] = 7;
        assert!(matches!(
            decode_aperture(&bad, p()),
            Err(Error::InvalidApertureByte {
                offset: 14,
                value: 7,
                ..
            })
        ));
    }

    #[test]
    fn measurement_round_trip() {
        let file = MeasurementFile {
            shots: 2,
            order: Order::HigherOrder,
            values: MeasurementVector::new(vec![0.5, 1.25, -3.0, 8.0]),
        };
        let bytes = encode_measurements(&file).unwrap();
        assert_eq!(&bytes[4..16], &[4, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(decode_measurements(&bytes, p()).unwrap(), file);
        let mut bad_tag = bytes.clone();
        bad_tag[12] = 9;
        assert!(matches!(
            decode_measurements(&bad_tag, p()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cube = HyperCube::new(2, 2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let path = dir.path().join("c.hsc");
        write_cube(&path, &cube).unwrap();
        assert_eq!(read_cube(&path).unwrap(), cube);
        assert!(matches!(
            read_cube(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));

        let png = write_band_png(&cube, 0, dir.path().join("b0.png")).unwrap();
        let img = image::open(png).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (2, 2));
        // (x=0,y=0)=0.0, (x=1,y=0)=0.25, (x=0,y=1)=0.5, (x=1,y=1)=1.0
        assert_eq!(img.get_pixel(0, 0).0[0], 0);
        assert_eq!(img.get_pixel(1, 0).0[0], 128);
        assert_eq!(img.get_pixel(0, 1).0[0], 64);
        assert_eq!(img.get_pixel(1, 1).0[0], 255);
    }
}
