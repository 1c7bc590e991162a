//! Binary PGM (P5, maxval 255) emission for rasters and saliency maps.

use std::io::Write;

use crate::error::Result;
use crate::haar::Raster;

/// Writes a raster as binary PGM, clamping values to `[0,1]` before the
/// 8-bit quantization.
pub fn write_pgm<W: Write>(mut writer: W, raster: &Raster) -> Result<()> {
    write!(writer, "P5\n{} {}\n255\n", raster.cols, raster.rows)?;
    let bytes: Vec<u8> = raster
        .pixels
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    writer.write_all(&bytes)?;
    Ok(())
}

/// Writes arbitrary grid values as PGM after min-max normalization to
/// `[0,255]`; a flat grid maps to zero.
pub fn write_pgm_normalized<W: Write>(
    writer: W,
    rows: usize,
    cols: usize,
    values: &[f64],
) -> Result<()> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let raster = Raster {
        rows,
        cols,
        pixels: values.iter().map(|v| (v - lo) / span).collect(),
    };
    write_pgm(writer, &raster)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_payload() {
        let raster = Raster {
            rows: 2,
            cols: 3,
            pixels: vec![0.0, 0.5, 1.0, 2.0, -1.0, 0.25],
        };
        let mut buf = Vec::new();
        write_pgm(&mut buf, &raster).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        let payload = &buf[buf.len() - 6..];
        assert_eq!(payload, &[0, 128, 255, 255, 0, 64]);
    }

    #[test]
    fn normalization_spans_full_range() {
        let mut buf = Vec::new();
        write_pgm_normalized(&mut buf, 1, 3, &[0.25, 0.75, 0.5]).unwrap();
        let payload = &buf[buf.len() - 3..];
        assert_eq!(payload, &[0, 255, 128]);
    }
}
