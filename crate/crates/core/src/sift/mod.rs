//! Scale-invariant feature transform.
//!
//! The pipeline is the usual four stages:
//!
//! 1. [`build_scale_space`]: Gaussian pyramid (optionally from a 2x upsampled
//!    base) and difference-of-Gaussians layers.
//! 2. [`detect_keypoints`]: 3x3x3 DoG extrema, refined to sub-pixel and
//!    sub-scale accuracy with a quadratic fit, then filtered by contrast and by
//!    the principal-curvature ratio.
//! 3. [`assign_orientations`]: dominant gradient directions from a 36-bin
//!    histogram; secondary peaks within 80% of the maximum spawn extra keypoints.
//! 4. [`compute_descriptor`]: 4x4 spatial cells of 8-bin orientation histograms
//!    in a window rotated to the keypoint orientation, normalized, clipped at
//!    0.2 and renormalized.
//!
//! All positions and scales on [`Keypoint`] are in original-image pixels.

mod descriptor;
mod detect;
mod orientation;
mod scale_space;

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Image, Result};

pub use descriptor::{compute_descriptor, descriptor_stages, DescriptorStages};
pub use detect::detect_keypoints;
#[doc(hidden)]
pub use detect::detect_keypoints_with_edge_test;
pub use orientation::assign_orientations;
pub use scale_space::{build_scale_space, Octave, Plane, ScaleSpace, MIN_OCTAVE_SIZE};

/// Tunable constants of the detector and descriptor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, rename_all = "camelCase"))]
pub struct SiftParams {
    pub intervals_per_octave: usize,
    pub base_sigma: f64,
    pub assumed_camera_sigma: f64,
    pub upsample_first_octave: bool,
    pub contrast_threshold: f64,
    pub edge_ratio_threshold: f64,
    pub orientation_bins: usize,
    pub orientation_peak_ratio: f64,
    pub descriptor_grid_width: usize,
    pub descriptor_orientation_bins: usize,
    pub descriptor_clip: f64,
    pub max_refine_iterations: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            intervals_per_octave: 3,
            base_sigma: 1.6,
            assumed_camera_sigma: 0.5,
            upsample_first_octave: true,
            contrast_threshold: 0.03,
            edge_ratio_threshold: 10.0,
            orientation_bins: 36,
            orientation_peak_ratio: 0.8,
            descriptor_grid_width: 4,
            descriptor_orientation_bins: 8,
            descriptor_clip: 0.2,
            max_refine_iterations: 5,
        }
    }
}

impl SiftParams {
    pub fn descriptor_len(&self) -> usize {
        self.descriptor_grid_width * self.descriptor_grid_width * self.descriptor_orientation_bins
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("intervalsPerOctave", self.intervals_per_octave),
            ("orientationBins", self.orientation_bins),
            ("descriptorGridWidth", self.descriptor_grid_width),
            (
                "descriptorOrientationBins",
                self.descriptor_orientation_bins,
            ),
            ("maxRefineIterations", self.max_refine_iterations),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Parameter(alloc::format!("{name} must be >= 1")));
            }
        }
        let positive = [
            ("baseSigma", self.base_sigma),
            ("contrastThreshold", self.contrast_threshold),
            ("edgeRatioThreshold", self.edge_ratio_threshold),
            ("descriptorClip", self.descriptor_clip),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Parameter(alloc::format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.assumed_camera_sigma >= 0.0) {
            return Err(Error::Parameter("assumedCameraSigma must be >= 0".into()));
        }
        if !(self.orientation_peak_ratio > 0.0 && self.orientation_peak_ratio <= 1.0) {
            return Err(Error::Parameter(
                "orientationPeakRatio must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A detected interest point. Position and `sigma` are in original-image pixels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    /// Radians in `[0, 2π)`, measured from +x towards +y (image rows grow downwards).
    pub orientation: f64,
    /// Interpolated DoG value at the refined extremum.
    pub response: f64,
    pub octave: usize,
    pub layer: usize,
}

/// An oriented keypoint with its unit-length descriptor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Feature {
    pub keypoint: Keypoint,
    pub descriptor: Vec<f64>,
}

pub(crate) fn keypoint_order(a: &Keypoint, b: &Keypoint) -> Ordering {
    a.octave
        .cmp(&b.octave)
        .then(a.layer.cmp(&b.layer))
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
        .then(a.orientation.total_cmp(&b.orientation))
}

/// Runs the full pipeline. Output is sorted by octave, layer, y, x, orientation.
pub fn extract(img: &Image, params: &SiftParams) -> Result<Vec<Feature>> {
    let ss = build_scale_space(img, params)?;
    Ok(extract_from(&ss, params))
}

/// Orientation assignment and description for every keypoint of a prebuilt scale space.
pub fn extract_from(ss: &ScaleSpace, params: &SiftParams) -> Vec<Feature> {
    let mut features: Vec<Feature> = detect_keypoints(ss, params)
        .iter()
        .flat_map(|kp| assign_orientations(kp, ss, params))
        .filter_map(|kp| compute_descriptor(&kp, ss, params))
        .collect();
    features.sort_by(|a, b| keypoint_order(&a.keypoint, &b.keypoint));
    features
}
