//! Baseline JPEG encode/decode for grayscale images.

use alloc::format;
use alloc::vec::Vec;
use jpeg_encoder::{ColorType, Encoder};
use zune_core::colorspace::ColorSpace;
use zune_core::options::DecoderOptions;
use zune_jpeg::JpegDecoder;

use crate::{Error, Image, Result};

/// Encodes an 8-bit quantized copy of `img` as a baseline grayscale JPEG.
pub fn encode(img: &Image, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::Parameter(format!(
            "JPEG quality must be in 1..=100, got {quality}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::Codec(format!("{w}x{h} exceeds the JPEG size limit")));
    }
    let mut out = Vec::new();
    Encoder::new(&mut out, quality)
        .encode(&img.to_luma8(), w as u16, h as u16, ColorType::Luma)
        .map_err(|e| Error::Codec(format!("encode failed: {e:?}")))?;
    Ok(out)
}

/// Decodes any baseline JPEG stream to luminance.
pub fn decode(bytes: &[u8]) -> Result<Image> {
    let options = DecoderOptions::default().jpeg_set_out_colorspace(ColorSpace::Luma);
    let mut decoder = JpegDecoder::new_with_options(bytes, options);
    let pixels = decoder
        .decode()
        .map_err(|e| Error::Codec(format!("decode failed: {e:?}")))?;
    let (w, h) = decoder
        .dimensions()
        .ok_or_else(|| Error::Codec("decoder reported no dimensions".into()))?;
    Image::from_luma8(w, h, &pixels)
}

/// Compresses and decompresses `img` at the given quality factor.
pub fn jpeg_roundtrip(img: &Image, quality: u8) -> Result<Image> {
    let decoded = decode(&encode(img, quality)?)?;
    if (decoded.width(), decoded.height()) != (img.width(), img.height()) {
        return Err(Error::Codec(format!(
            "round trip changed size {}x{} -> {}x{}",
            img.width(),
            img.height(),
            decoded.width(),
            decoded.height()
        )));
    }
    Ok(decoded)
}
