//! Grayscale images and the pixel-level primitives every other module uses.
//!
//! Coordinates follow the pixel-centre convention: sample `(x, y)` sits at the
//! centre of pixel column `x` and row `y`, so the image covers
//! `[-0.5, width - 0.5] x [-0.5, height - 0.5]`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Owned grid of luminance samples in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    /// Black image of the given size.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            samples: vec![clamp01(value); width * height],
        })
    }

    /// Builds an image from row-major samples, clamping each one into `[0, 1]`.
    pub fn from_samples(width: usize, height: usize, mut samples: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if samples.len() != width * height {
            return Err(Error::Dimension(alloc::format!(
                "expected {} samples for {}x{}, got {}",
                width * height,
                width,
                height,
                samples.len()
            )));
        }
        for s in &mut samples {
            *s = clamp01(*s);
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(clamp01(f(x, y)));
            }
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// 8-bit luminance buffer, as read from PNG or JPEG.
    pub fn from_luma8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_samples(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    /// Quantizes to 8 bits with round-to-nearest.
    pub fn to_luma8(&self) -> Vec<u8> {
        self.samples
            .iter()
            .map(|&v| (v * 255.0).round() as u8)
            .collect()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.samples[y * self.width + x] = clamp01(value);
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Applies `f` to every sample, clamping the result.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| clamp01(f(v))).collect(),
        }
    }

    /// Largest absolute per-sample difference. Panics on mismatched sizes.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "image sizes differ"
        );
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Bilinear sample where anything outside `[0, w-1] x [0, h-1]` is black.
    pub(crate) fn sample_zero(&self, sx: f64, sy: f64) -> f64 {
        const SNAP: f64 = 1e-9;
        let (w, h) = (self.width as f64, self.height as f64);
        if !(sx >= -SNAP && sy >= -SNAP && sx <= w - 1.0 + SNAP && sy <= h - 1.0 + SNAP) {
            return 0.0;
        }
        let sx = sx.clamp(0.0, w - 1.0);
        let sy = sy.clamp(0.0, h - 1.0);
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let (x0, y0) = (x0 as usize, y0 as usize);
        let fetch = |x: usize, y: usize| {
            if x < self.width && y < self.height {
                self.samples[y * self.width + x]
            } else {
                0.0
            }
        };
        let top = lerp(fetch(x0, y0), fetch(x0 + 1, y0), fx);
        let bottom = lerp(fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1), fx);
        lerp(top, bottom, fy)
    }
}

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(alloc::format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Rec.601 luminance of three channel planes.
pub fn to_grayscale(r: &Image, g: &Image, b: &Image) -> Result<Image> {
    if (r.width, r.height) != (g.width, g.height) || (r.width, r.height) != (b.width, b.height) {
        return Err(Error::Dimension(alloc::format!(
            "channel sizes differ: r {}x{}, g {}x{}, b {}x{}",
            r.width,
            r.height,
            g.width,
            g.height,
            b.width,
            b.height
        )));
    }
    let samples = r
        .samples
        .iter()
        .zip(&g.samples)
        .zip(&b.samples)
        .map(|((&r, &g), &b)| (299.0 * r + 587.0 * g + 114.0 * b) / 1000.0)
        .collect();
    Image::from_samples(r.width, r.height, samples)
}

/// Source coordinates and blend weights for one output axis of a bilinear resize.
fn resize_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor();
            let i0u = i0 as usize;
            (i0u, (i0u + 1).min(src - 1), s - i0)
        })
        .collect()
}

/// Bilinear resize with pixel-centre alignment and clamped borders.
pub fn resize_bilinear(img: &Image, new_width: usize, new_height: usize) -> Result<Image> {
    check_dims(new_width, new_height)?;
    if (new_width, new_height) == (img.width, img.height) {
        return Ok(img.clone());
    }
    let xs = resize_taps(img.width, new_width);
    let ys = resize_taps(img.height, new_height);
    let mut samples = Vec::with_capacity(new_width * new_height);
    for &(y0, y1, fy) in &ys {
        let r0 = img.row(y0);
        let r1 = img.row(y1);
        for &(x0, x1, fx) in &xs {
            let top = lerp(r0[x0], r0[x1], fx);
            let bottom = lerp(r1[x0], r1[x1], fx);
            samples.push(clamp01(lerp(top, bottom, fy)));
        }
    }
    Ok(Image {
        width: new_width,
        height: new_height,
        samples,
    })
}

/// Normalized 1-D Gaussian truncated at `ceil(3 sigma)` taps either side.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable convolution of a raw plane with an odd-length kernel, edge-clamped.
pub(crate) fn convolve_separable(
    src: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut tmp = vec![0.0; width * height];
    let mut padded = vec![0.0; width + 2 * r];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        padded[..r].fill(row[0]);
        padded[r..r + width].copy_from_slice(row);
        padded[r + width..].fill(row[width - 1]);
        let out = &mut tmp[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            let win = &padded[x..x + kernel.len()];
            *o = win.iter().zip(kernel).map(|(a, b)| a * b).sum();
        }
    }
    let mut dst = vec![0.0; width * height];
    for y in 0..height {
        let out = &mut dst[y * width..(y + 1) * width];
        for (k, &wk) in kernel.iter().enumerate() {
            let sy = (y + k).saturating_sub(r).min(height - 1);
            let row = &tmp[sy * width..(sy + 1) * width];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += wk * v;
            }
        }
    }
    dst
}

/// Separable Gaussian blur (kernel truncated at `3 sigma`, edge-clamped borders).
/// `sigma == 0` returns the input unchanged.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "blur sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let mut samples = convolve_separable(&img.samples, img.width, img.height, &kernel);
    for s in &mut samples {
        *s = clamp01(*s);
    }
    Ok(Image {
        width: img.width,
        height: img.height,
        samples,
    })
}

/// Projective map of the image plane, stored row-major and scaled so `h[8] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "[f64; 9]", into = "[f64; 9]"))]
pub struct Homography {
    h: [f64; 9],
}

const SINGULAR_DET: f64 = 1e-12;

impl Homography {
    pub const IDENTITY: Homography = Homography {
        h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    };

    /// Validates invertibility and normalizes so the last coefficient is 1.
    pub fn new(mut h: [f64; 9]) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("homography has non-finite entries".into()));
        }
        if h[8].abs() > 1e-300 {
            let s = h[8];
            for v in &mut h {
                *v /= s;
            }
            h[8] = 1.0;
        }
        let out = Homography { h };
        let det = out.determinant();
        if !(det.abs() > SINGULAR_DET) {
            return Err(Error::Geometry(alloc::format!(
                "homography is singular (det = {det:e})"
            )));
        }
        Ok(out)
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Pure translation by `(dx, dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Homography {
            h: [1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0],
        }
    }

    /// Rotation by `angle` radians (x towards y) about `(cx, cy)`.
    pub fn rotation_about(angle: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = Homography {
            h: [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0],
        };
        Self::translation(cx, cy)
            .compose(&r)
            .compose(&Self::translation(-cx, -cy))
    }

    #[inline]
    pub fn coefficients(&self) -> &[f64; 9] {
        &self.h
    }

    pub fn determinant(&self) -> f64 {
        let h = &self.h;
        h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6])
    }

    pub fn is_identity(&self) -> bool {
        self.h == Self::IDENTITY.h
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Homography {
        let (a, b) = (&self.h, &other.h);
        let mut m = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
            }
        }
        if m[8].abs() > 1e-300 {
            let s = m[8];
            for v in &mut m {
                *v /= s;
            }
            m[8] = 1.0;
        }
        Homography { h: m }
    }

    pub fn inverse(&self) -> Result<Homography> {
        let h = &self.h;
        let det = self.determinant();
        if !(det.abs() > SINGULAR_DET) {
            return Err(Error::Geometry(alloc::format!(
                "homography is singular (det = {det:e})"
            )));
        }
        let adj = [
            h[4] * h[8] - h[5] * h[7],
            h[2] * h[7] - h[1] * h[8],
            h[1] * h[5] - h[2] * h[4],
            h[5] * h[6] - h[3] * h[8],
            h[0] * h[8] - h[2] * h[6],
            h[2] * h[3] - h[0] * h[5],
            h[3] * h[7] - h[4] * h[6],
            h[1] * h[6] - h[0] * h[7],
            h[0] * h[4] - h[1] * h[3],
        ];
        Homography::new(adj.map(|v| v / det))
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let h = &self.h;
        let w = h[6] * x + h[7] * y + h[8];
        if w.abs() < 1e-12 {
            return None;
        }
        Some((
            (h[0] * x + h[1] * y + h[2]) / w,
            (h[3] * x + h[4] * y + h[5]) / w,
        ))
    }
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.h
    }
}

impl TryFrom<[f64; 9]> for Homography {
    type Error = Error;

    fn try_from(h: [f64; 9]) -> Result<Self> {
        Homography::new(h)
    }
}

/// Resamples `img` so that output pixel `p` shows source point `H⁻¹ p`.
/// Samples landing outside the source are black.
pub fn warp_homography(img: &Image, h: &Homography) -> Result<Image> {
    if h.is_identity() {
        return Ok(img.clone());
    }
    let inv = h.inverse()?;
    let m = inv.h;
    let mut samples = Vec::with_capacity(img.width * img.height);
    for y in 0..img.height {
        let yf = y as f64;
        for x in 0..img.width {
            let xf = x as f64;
            let w = m[6] * xf + m[7] * yf + m[8];
            let v = if w > 1e-12 {
                let sx = (m[0] * xf + m[1] * yf + m[2]) / w;
                let sy = (m[3] * xf + m[4] * yf + m[5]) / w;
                img.sample_zero(sx, sy)
            } else {
                0.0
            };
            samples.push(clamp01(v));
        }
    }
    Ok(Image {
        width: img.width,
        height: img.height,
        samples,
    })
}
