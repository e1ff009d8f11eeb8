//! JSON shapes for features, matches and deformation sidecars.

use std::fs;
use std::path::Path;

use motifsift_core::deform::{DeformationKind, DeformationParams, DeformedImage};
use motifsift_core::matching::{Match, VerifiedMatches};
use motifsift_core::{Feature, Keypoint, SiftParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::input(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    crate::io::create_parent(path)?;
    fs::write(path, text + "\n").map_err(|e| Error::input(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub orientation: f64,
    pub response: f64,
    pub descriptor: Vec<f64>,
}

/// `{ "params": {...}, "features": [ {x, y, sigma, orientation, response, descriptor} ] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFile {
    pub params: SiftParams,
    pub features: Vec<FeatureRow>,
}

impl FeatureFile {
    pub fn new(params: &SiftParams, features: &[Feature]) -> Self {
        let features = features
            .iter()
            .map(|f| FeatureRow {
                x: f.keypoint.x,
                y: f.keypoint.y,
                sigma: f.keypoint.sigma,
                orientation: f.keypoint.orientation,
                response: f.keypoint.response,
                descriptor: f.descriptor.clone(),
            })
            .collect();
        FeatureFile {
            params: params.clone(),
            features,
        }
    }

    /// Features with octave and layer zeroed, since the file does not keep them.
    pub fn to_features(&self) -> Vec<Feature> {
        self.features
            .iter()
            .map(|r| Feature {
                keypoint: Keypoint {
                    x: r.x,
                    y: r.y,
                    sigma: r.sigma,
                    orientation: r.orientation,
                    response: r.response,
                    octave: 0,
                    layer: 0,
                },
                descriptor: r.descriptor.clone(),
            })
            .collect()
    }
}

/// Match rows `{src, dst, dist}`; a verified run adds `H`, inlier row indices and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchFile {
    pub threshold: f64,
    pub matches: Vec<Match>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub homography: Option<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inliers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MatchFile {
    pub fn new(threshold: f64, matches: &[Match], verified: Option<&VerifiedMatches>) -> Self {
        let mut file = MatchFile {
            threshold,
            matches: matches.to_vec(),
            homography: None,
            inliers: None,
            seed: None,
        };
        if let Some(v) = verified {
            file.homography = Some(*v.homography.coefficients());
            file.inliers = Some(
                v.inliers
                    .iter()
                    .filter_map(|m| matches.iter().position(|n| n == m))
                    .collect(),
            );
            file.seed = Some(v.seed);
        }
        file
    }
}

/// `{kind, level, params, H}` written next to a deformed image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformSidecar {
    pub kind: DeformationKind,
    pub level: u8,
    pub params: DeformationParams,
    #[serde(rename = "H")]
    pub homography: [f64; 9],
}

impl From<&DeformedImage> for DeformSidecar {
    fn from(d: &DeformedImage) -> Self {
        DeformSidecar {
            kind: d.spec.kind,
            level: d.spec.level,
            params: d.spec.params,
            homography: *d.ground_truth.coefficients(),
        }
    }
}
