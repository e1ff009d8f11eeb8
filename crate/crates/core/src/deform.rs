//! The five deformation families and their five-level intensity schedules.
//!
//! Level 1 is always the identity; level 5 is the most intense setting.
//! Photometric families (blur, compression, light) keep the pixel grid, so
//! their ground truth is the identity. Geometric families (zoom + rotation,
//! viewpoint) are exact homographies about the image centre.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::image::{gaussian_blur, warp_homography};
use crate::jpeg::jpeg_roundtrip;
use crate::{Error, Homography, Image, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DeformationKind {
    Blur,
    Compression,
    Light,
    #[cfg_attr(feature = "serde", serde(alias = "Zoom_Rotation"))]
    ZoomRotation,
    Viewpoint,
}

impl DeformationKind {
    pub const ALL: [DeformationKind; 5] = [
        DeformationKind::Blur,
        DeformationKind::Compression,
        DeformationKind::Light,
        DeformationKind::ZoomRotation,
        DeformationKind::Viewpoint,
    ];

    /// Row label used in reports, e.g. `Zoom_Rotation` in `Zoom_Rotation-2_sift 0.8`.
    pub fn label(self) -> &'static str {
        match self {
            DeformationKind::Blur => "Blur",
            DeformationKind::Compression => "Compression",
            DeformationKind::Light => "Light",
            DeformationKind::ZoomRotation => "Zoom_Rotation",
            DeformationKind::Viewpoint => "Viewpoint",
        }
    }

    /// Lower-case name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            DeformationKind::Blur => "blur",
            DeformationKind::Compression => "compression",
            DeformationKind::Light => "light",
            DeformationKind::ZoomRotation => "zoom_rotation",
            DeformationKind::Viewpoint => "viewpoint",
        }
    }

    pub fn is_geometric(self) -> bool {
        matches!(
            self,
            DeformationKind::ZoomRotation | DeformationKind::Viewpoint
        )
    }
}

impl fmt::Display for DeformationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DeformationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | '+' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "blur" => Ok(DeformationKind::Blur),
            "compression" | "jpeg" => Ok(DeformationKind::Compression),
            "light" | "illumination" => Ok(DeformationKind::Light),
            "zoomrotation" => Ok(DeformationKind::ZoomRotation),
            "viewpoint" => Ok(DeformationKind::Viewpoint),
            _ => Err(Error::Parameter(alloc::format!(
                "unknown deformation kind `{s}`"
            ))),
        }
    }
}

/// Concrete parameters of one deformation level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum DeformationParams {
    Blur { sigma: f64 },
    Compression { quality: u8 },
    Light { gain: f64 },
    ZoomRotation { angle: f64, scale: f64 },
    Viewpoint { tilt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeformationSpec {
    pub kind: DeformationKind,
    pub level: u8,
    pub params: DeformationParams,
}

pub const LEVELS: core::ops::RangeInclusive<u8> = 1..=5;

const BLUR_SIGMA: [f64; 5] = [0.0, 2.0, 4.0, 6.0, 8.0];
const JPEG_QUALITY: [u8; 5] = [100, 94, 88, 81, 75];
const LIGHT_GAIN: [f64; 5] = [1.0, 0.825, 0.65, 0.475, 0.3];
const ZOOM_ROTATION: [(f64, f64); 5] = [
    (0.0, 1.0),
    (11.25, 0.875),
    (22.5, 0.75),
    (33.75, 0.625),
    (45.0, 0.5),
];
const VIEWPOINT_TILT: [f64; 5] = [0.0, 15.0, 30.0, 45.0, 60.0];

/// Resolves `(kind, level)` to its fixed schedule entry.
pub fn schedule(kind: DeformationKind, level: u8) -> Result<DeformationSpec> {
    if !LEVELS.contains(&level) {
        return Err(Error::Parameter(alloc::format!(
            "deformation level must be in 1..=5, got {level}"
        )));
    }
    let i = usize::from(level - 1);
    let params = match kind {
        DeformationKind::Blur => DeformationParams::Blur {
            sigma: BLUR_SIGMA[i],
        },
        DeformationKind::Compression => DeformationParams::Compression {
            quality: JPEG_QUALITY[i],
        },
        DeformationKind::Light => DeformationParams::Light {
            gain: LIGHT_GAIN[i],
        },
        DeformationKind::ZoomRotation => DeformationParams::ZoomRotation {
            angle: ZOOM_ROTATION[i].0,
            scale: ZOOM_ROTATION[i].1,
        },
        DeformationKind::Viewpoint => DeformationParams::Viewpoint {
            tilt: VIEWPOINT_TILT[i],
        },
    };
    Ok(DeformationSpec {
        kind,
        level,
        params,
    })
}

/// A deformed query image with the transform that maps template pixels onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformedImage {
    pub image: Image,
    pub ground_truth: Homography,
    pub spec: DeformationSpec,
}

fn centre(width: usize, height: usize) -> (f64, f64) {
    ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0)
}

/// Rotation by `angle_deg` combined with isotropic `scale`, both about the image centre.
pub fn zoom_rotation_homography(
    angle_deg: f64,
    scale: f64,
    width: usize,
    height: usize,
) -> Result<Homography> {
    if !(scale > 0.0) {
        return Err(Error::Parameter(alloc::format!(
            "scale must be > 0, got {scale}"
        )));
    }
    let (cx, cy) = centre(width, height);
    let (s, c) = angle_deg.to_radians().sin_cos();
    let core = Homography::new([
        c * scale,
        -s * scale,
        0.0,
        s * scale,
        c * scale,
        0.0,
        0.0,
        0.0,
        1.0,
    ])?;
    Ok(Homography::translation(cx, cy)
        .compose(&core)
        .compose(&Homography::translation(-cx, -cy)))
}

/// The plane rotated by `tilt_deg` about its vertical centre line, seen by a
/// pinhole camera with focal length and distance both `2 * width`.
///
/// In centred coordinates `(x, y)` maps to
/// `(f x cos t / (d + x sin t), f y / (d + x sin t))`.
pub fn ground_truth_viewpoint(tilt_deg: f64, width: usize, height: usize) -> Result<Homography> {
    if !(0.0..90.0).contains(&tilt_deg) {
        return Err(Error::Parameter(alloc::format!(
            "viewpoint tilt must be in [0, 90) degrees, got {tilt_deg}"
        )));
    }
    let (s, c) = tilt_deg.to_radians().sin_cos();
    let d = 2.0 * width as f64;
    let f = d;
    let (cx, cy) = centre(width, height);
    let centred = Homography::new([f * c, 0.0, 0.0, 0.0, f, 0.0, s, 0.0, d])?;
    Ok(Homography::translation(cx, cy)
        .compose(&centred)
        .compose(&Homography::translation(-cx, -cy)))
}

/// Applies one deformation level to a template image.
pub fn apply(img: &Image, spec: &DeformationSpec) -> Result<DeformedImage> {
    let (w, h) = (img.width(), img.height());
    let expected = schedule(spec.kind, spec.level)?;
    if core::mem::discriminant(&expected.params) != core::mem::discriminant(&spec.params) {
        return Err(Error::Parameter(alloc::format!(
            "parameters {:?} do not belong to kind {}",
            spec.params,
            spec.kind
        )));
    }
    let (image, ground_truth) = match spec.params {
        DeformationParams::Blur { sigma } => (gaussian_blur(img, sigma)?, Homography::IDENTITY),
        DeformationParams::Compression { quality } => {
            (jpeg_roundtrip(img, quality)?, Homography::IDENTITY)
        }
        DeformationParams::Light { gain } => {
            if !(gain >= 0.0) {
                return Err(Error::Parameter(alloc::format!(
                    "gain must be >= 0, got {gain}"
                )));
            }
            (img.map(|v| v * gain), Homography::IDENTITY)
        }
        DeformationParams::ZoomRotation { angle, scale } => {
            let hm = zoom_rotation_homography(angle, scale, w, h)?;
            (warp_homography(img, &hm)?, hm)
        }
        DeformationParams::Viewpoint { tilt } => {
            let hm = ground_truth_viewpoint(tilt, w, h)?;
            (warp_homography(img, &hm)?, hm)
        }
    };
    Ok(DeformedImage {
        image,
        ground_truth,
        spec: *spec,
    })
}
