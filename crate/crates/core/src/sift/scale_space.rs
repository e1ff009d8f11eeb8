use alloc::vec::Vec;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use super::SiftParams;
use crate::image::{gaussian_blur, resize_bilinear};
use crate::{Error, Image, Result};

/// Octaves stop once the base image would be smaller than this in either dimension.
pub const MIN_OCTAVE_SIZE: usize = 16;

/// Unclamped real-valued grid (DoG layers and gradient fields).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone)]
pub struct Octave {
    /// `intervals + 3` progressively blurred images.
    pub gaussians: Vec<Image>,
    /// Blur of each Gaussian layer, in this octave's pixel units.
    pub sigmas: Vec<f64>,
    /// `intervals + 2` differences of adjacent Gaussian layers.
    pub dog: Vec<Plane>,
    pub(crate) gradients: Vec<Option<GradientField>>,
}

impl Octave {
    pub fn width(&self) -> usize {
        self.gaussians[0].width()
    }

    pub fn height(&self) -> usize {
        self.gaussians[0].height()
    }
}

/// Precomputed central-difference gradients of one Gaussian layer.
/// Border pixels carry zero magnitude.
#[derive(Debug, Clone)]
pub(crate) struct GradientField {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    /// `atan2(dy, dx)` in `(-π, π]`.
    pub angle: Vec<f64>,
}

impl GradientField {
    fn new(img: &Image) -> Self {
        let (w, h) = (img.width(), img.height());
        let mut magnitude = alloc::vec![0.0; w * h];
        let mut angle = alloc::vec![0.0; w * h];
        let s = img.samples();
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let i = y * w + x;
                let dx = s[i + 1] - s[i - 1];
                let dy = s[i + w] - s[i - w];
                magnitude[i] = (dx * dx + dy * dy).sqrt();
                angle[i] = dy.atan2(dx);
            }
        }
        Self {
            width: w,
            height: h,
            magnitude,
            angle,
        }
    }
}

/// Gaussian and difference-of-Gaussians pyramid of one image.
#[derive(Debug, Clone)]
pub struct ScaleSpace {
    pub octaves: Vec<Octave>,
    intervals: usize,
    base_sigma: f64,
    upsampled: bool,
    image_width: usize,
    image_height: usize,
}

impl ScaleSpace {
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.image_width, self.image_height)
    }

    /// Size of one pixel of octave `o`, in original-image pixels.
    pub fn pixel_step(&self, octave: usize) -> f64 {
        let e = octave as i32 - i32::from(self.upsampled);
        2f64.powi(e)
    }

    fn origin_shift(&self) -> f64 {
        // The 2x upsampled grid is offset by a quarter pixel under the
        // pixel-centre convention: upsampled u sits at u/2 - 1/4.
        if self.upsampled {
            -0.25
        } else {
            0.0
        }
    }

    /// Absolute blur (original-image pixels) of fractional layer `layer` in octave `o`.
    pub fn absolute_sigma(&self, octave: usize, layer: f64) -> f64 {
        self.pixel_step(octave) * self.base_sigma * 2f64.powf(layer / self.intervals as f64)
    }

    /// Octave-local coordinates to original-image coordinates.
    pub fn to_image(&self, octave: usize, x: f64, y: f64) -> (f64, f64) {
        let step = self.pixel_step(octave);
        let shift = self.origin_shift();
        (x * step + shift, y * step + shift)
    }

    /// Original-image coordinates to octave-local coordinates.
    pub fn to_octave(&self, octave: usize, x: f64, y: f64) -> (f64, f64) {
        let step = self.pixel_step(octave);
        let shift = self.origin_shift();
        ((x - shift) / step, (y - shift) / step)
    }

    pub(crate) fn gradients(&self, octave: usize, layer: usize) -> Option<&GradientField> {
        self.octaves.get(octave)?.gradients.get(layer)?.as_ref()
    }
}

fn downsample(img: &Image) -> Image {
    let (w, h) = (img.width() / 2, img.height() / 2);
    Image::from_fn(w, h, |x, y| img.get(2 * x, 2 * y)).expect("octave dims are non-zero")
}

fn dog(a: &Image, b: &Image) -> Plane {
    Plane {
        width: a.width(),
        height: a.height(),
        data: b
            .samples()
            .iter()
            .zip(a.samples())
            .map(|(hi, lo)| hi - lo)
            .collect(),
    }
}

/// Builds the Gaussian pyramid with `intervals + 3` layers per octave and the
/// matching DoG layers. Octave `o + 1` starts from layer `intervals` of
/// octave `o`, decimated by two.
pub fn build_scale_space(img: &Image, params: &SiftParams) -> Result<ScaleSpace> {
    params.validate()?;
    if img.width().min(img.height()) < MIN_OCTAVE_SIZE {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_OCTAVE_SIZE,
        });
    }
    let s = params.intervals_per_octave;
    let sigma0 = params.base_sigma;
    let (mut base, current) = if params.upsample_first_octave {
        (
            resize_bilinear(img, img.width() * 2, img.height() * 2)?,
            2.0 * params.assumed_camera_sigma,
        )
    } else {
        (img.clone(), params.assumed_camera_sigma)
    };
    if sigma0 > current {
        base = gaussian_blur(&base, (sigma0 * sigma0 - current * current).sqrt())?;
    }

    let sigmas: Vec<f64> = (0..s + 3)
        .map(|i| sigma0 * 2f64.powf(i as f64 / s as f64))
        .collect();
    let increments: Vec<f64> = (1..s + 3)
        .map(|i| (sigmas[i] * sigmas[i] - sigmas[i - 1] * sigmas[i - 1]).sqrt())
        .collect();

    let mut octaves = Vec::new();
    loop {
        let mut gaussians = Vec::with_capacity(s + 3);
        gaussians.push(base);
        for inc in &increments {
            let next = gaussian_blur(gaussians.last().unwrap(), *inc)?;
            gaussians.push(next);
        }
        let dogs = gaussians.windows(2).map(|w| dog(&w[0], &w[1])).collect();
        let gradients = (0..s + 3)
            .map(|i| {
                (1..=s)
                    .contains(&i)
                    .then(|| GradientField::new(&gaussians[i]))
            })
            .collect();
        let next_base = downsample(&gaussians[s]);
        octaves.push(Octave {
            gaussians,
            sigmas: sigmas.clone(),
            dog: dogs,
            gradients,
        });
        if next_base.width().min(next_base.height()) < MIN_OCTAVE_SIZE {
            break;
        }
        base = next_base;
    }

    Ok(ScaleSpace {
        octaves,
        intervals: s,
        base_sigma: sigma0,
        upsampled: params.upsample_first_octave,
        image_width: img.width(),
        image_height: img.height(),
    })
}
