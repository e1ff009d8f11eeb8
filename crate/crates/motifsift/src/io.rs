//! PNG and baseline JPEG files to and from grayscale [`Image`]s.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use motifsift_core::image::to_grayscale;
use motifsift_core::Image;

use crate::{Error, Result};

/// Quality used when an output path ends in `.jpg` or `.jpeg`.
pub const JPEG_WRITE_QUALITY: u8 = 95;

/// Reads a PNG or JPEG file. Colour input is reduced with the
/// `0.299 R + 0.587 G + 0.114 B` weights.
pub fn read_image(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|e| Error::input(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let img = match decoded {
        DynamicImage::ImageLuma8(g) => Image::from_luma8(w, h, g.as_raw()),
        other => {
            let rgb = other.to_rgb8();
            let channel = |c: usize| {
                let bytes: Vec<u8> = rgb.pixels().map(|p| p.0[c]).collect();
                Image::from_luma8(w, h, &bytes)
            };
            to_grayscale(&channel(0)?, &channel(1)?, &channel(2)?)
        }
    };
    img.map_err(|e| Error::input(path, e))
}

/// Writes 8-bit grayscale; the format follows the extension (PNG unless `.jpg`/`.jpeg`).
/// Creates the directory that will hold `path`, if any.
pub(crate) fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::input(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    create_parent(path)?;
    let bytes = img.to_luma8();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Png);
    let file = File::create(path).map_err(|e| Error::input(path, e))?;
    let mut out = BufWriter::new(file);
    let written = match format {
        ImageFormat::Jpeg => JpegEncoder::new_with_quality(&mut out, JPEG_WRITE_QUALITY)
            .write_image(&bytes, w, h, ExtendedColorType::L8),
        _ => image::codecs::png::PngEncoder::new(&mut out).write_image(
            &bytes,
            w,
            h,
            ExtendedColorType::L8,
        ),
    };
    written.map_err(|e| Error::input(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_at_8_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let img = Image::from_fn(37, 21, |x, y| ((x * 7 + y * 3) % 256) as f64 / 255.0).unwrap();
        write_image(&path, &img).unwrap();
        assert_eq!(read_image(&path).unwrap(), img);
    }

    #[test]
    fn rgb_png_is_reduced_to_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let rgb = image::RgbImage::from_fn(4, 3, |_, _| image::Rgb([255, 0, 0]));
        rgb.save(&path).unwrap();
        let img = read_image(&path).unwrap();
        assert!(img.samples().iter().all(|&v| (v - 0.299).abs() < 1e-12));
    }

    #[test]
    fn jpeg_write_and_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.jpg");
        let img = Image::filled(32, 24, 0.5).unwrap();
        write_image(&path, &img).unwrap();
        let back = read_image(&path).unwrap();
        assert_eq!((back.width(), back.height()), (32, 24));
        assert!(back.max_abs_diff(&img) <= 3.0 / 255.0);
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let err = read_image(Path::new("/nonexistent/x.png")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
