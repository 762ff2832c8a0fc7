//! `FFST` probability-map files (statistic maps and forecasts).
//!
//! ```text
//! magic "FFST" | version u16 | H u32 | W u32 | T u32 | T*H*W f32
//! ```
//!
//! Values are stored as 32-bit floats, so a map read back equals the
//! original rounded to `f32`.

use std::fs;
use std::path::Path;

use super::{format_err, Reader};
use crate::ensemble::MicroStatMap;
use crate::error::Result;
use crate::forecast::ForecastMap;

pub const MAGIC: &[u8; 4] = b"FFST";
pub const VERSION: u16 = 1;
pub const EXTENSION: &str = "ffst";

#[derive(Debug, Clone, PartialEq)]
pub struct StatFile {
    pub t_len: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl From<&MicroStatMap> for StatFile {
    fn from(m: &MicroStatMap) -> Self {
        StatFile { t_len: m.t_len, height: m.height, width: m.width, values: m.values.clone() }
    }
}

impl From<&ForecastMap> for StatFile {
    fn from(m: &ForecastMap) -> Self {
        StatFile { t_len: m.t_len, height: m.height, width: m.width, values: m.values.clone() }
    }
}

impl From<StatFile> for MicroStatMap {
    fn from(f: StatFile) -> Self {
        MicroStatMap { t_len: f.t_len, height: f.height, width: f.width, values: f.values }
    }
}

pub fn encode(file: &StatFile) -> Vec<u8> {
    let mut out = Vec::with_capacity(18 + 4 * file.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [file.height, file.width, file.t_len] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for &v in &file.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<StatFile> {
    let mut r = Reader::new(bytes, path);
    r.expect_magic(MAGIC)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(format_err(path, format!("unsupported FFST version {version}")));
    }
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let t_len = r.u32()? as usize;
    let n = t_len * height * width;
    let raw = r.take(4 * n)?;
    r.finish()?;
    let values: Vec<f64> =
        raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))).collect();
    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format_err(path, format!("value {bad} outside [0, 1]")));
    }
    Ok(StatFile { t_len, height, width, values })
}

pub fn write(path: &Path, file: &StatFile) -> Result<()> {
    fs::write(path, encode(file))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<StatFile> {
    decode(&fs::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_at_f32_precision(t in 1usize..4, h in 1usize..5, w in 1usize..5, seed in any::<u64>()) {
            let values: Vec<f64> = (0..t * h * w).map(|i| ((seed.wrapping_mul(i as u64 + 1) >> 11) as f64) / (1u64 << 53) as f64).collect();
            let file = StatFile { t_len: t, height: h, width: w, values };
            let bytes = encode(&file);
            let back = decode(&bytes, Path::new("mem")).unwrap();
            prop_assert_eq!(back.t_len, t);
            for (a, b) in back.values.iter().zip(&file.values) {
                prop_assert_eq!(*a, f64::from(*b as f32));
            }
            prop_assert_eq!(encode(&back), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&StatFile { t_len: 2, height: 1, width: 3, values: vec![0.5; 6] });
        assert_eq!(&bytes[..4], b"FFST");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[1, 0, 0, 0]);
        assert_eq!(&bytes[10..14], &[3, 0, 0, 0]);
        assert_eq!(&bytes[14..18], &[2, 0, 0, 0]);
        assert_eq!(&bytes[18..22], &0.5f32.to_le_bytes());
        assert_eq!(bytes.len(), 18 + 24);
    }

    #[test]
    fn rejects_bad_files() {
        let mut bytes = encode(&StatFile { t_len: 1, height: 1, width: 1, values: vec![0.25] });
        assert!(decode(&bytes[..bytes.len() - 2], Path::new("x.ffst")).is_err());
        bytes[18..22].copy_from_slice(&2.0f32.to_le_bytes());
        assert!(decode(&bytes, Path::new("x.ffst")).is_err());
        bytes[0] = 0;
        let err = decode(&bytes, Path::new("x.ffst")).unwrap_err();
        assert!(err.to_string().contains("x.ffst"));
    }
}
