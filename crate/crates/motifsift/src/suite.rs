//! Suite configuration and the class × kind × level × threshold runner.

use std::fs;
use std::path::{Path, PathBuf};

use motifsift_core::bench::{cell_seed, evaluate_cell, render_matches, BenchmarkRecord};
use motifsift_core::deform::{schedule, DeformationKind};
use motifsift_core::matching::PROTOCOL_THRESHOLDS;
use motifsift_core::sift::extract;
use motifsift_core::synth::{default_classes, generate_motif, MotifSpec};
use motifsift_core::{Feature, Image, Keypoint, SiftParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{read_image, write_image};
use crate::{Error, Result};

/// Where a class template comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSource {
    /// PNG or JPEG file; relative paths resolve against the config file.
    Path {
        path: PathBuf,
    },
    Motif {
        motif: MotifSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    #[serde(flatten)]
    pub source: ClassSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub enabled: bool,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            enabled: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markdown: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deformed_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub viz_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteConfig {
    pub classes: Vec<ClassEntry>,
    pub kinds: Vec<DeformationKind>,
    pub levels: Vec<u8>,
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub sift_params: SiftParams,
    #[serde(default)]
    pub ransac: RansacConfig,
    #[serde(default)]
    pub output_paths: OutputPaths,
}

impl SuiteConfig {
    /// Seven synthetic classes, all five kinds and levels, the four protocol thresholds.
    pub fn default_synth() -> Self {
        SuiteConfig {
            classes: default_classes()
                .into_iter()
                .map(|(name, motif)| ClassEntry {
                    name,
                    source: ClassSource::Motif { motif },
                })
                .collect(),
            kinds: DeformationKind::ALL.to_vec(),
            levels: vec![1, 2, 3, 4, 5],
            thresholds: PROTOCOL_THRESHOLDS.to_vec(),
            sift_params: SiftParams::default(),
            ransac: RansacConfig::default(),
            output_paths: OutputPaths::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: SuiteConfig = crate::formats::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Data(format!("invalid suite config: {m}")));
        if self.classes.is_empty()
            || self.kinds.is_empty()
            || self.levels.is_empty()
            || self.thresholds.is_empty()
        {
            return bad("classes, kinds, levels and thresholds must all be non-empty");
        }
        if self.levels.iter().any(|l| !(1..=5).contains(l)) {
            return bad("levels must lie in 1..=5");
        }
        if self.thresholds.windows(2).any(|w| !(w[0] < w[1]))
            || self.thresholds.iter().any(|t| !(*t >= 0.0))
        {
            return bad("thresholds must be non-negative and strictly ascending");
        }
        let mut names: Vec<&str> = self.classes.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("class names must be unique");
        }
        if names
            .iter()
            .any(|n| n.is_empty() || n.contains(['/', '\\']))
        {
            return bad("class names must be non-empty and free of path separators");
        }
        self.sift_params.validate().map_err(Error::Core)
    }
}

/// Knobs of a single run that are not part of the experiment definition.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
    /// Base directory for relative class paths.
    pub base_dir: Option<PathBuf>,
    pub deformed_dir: Option<PathBuf>,
    pub viz_dir: Option<PathBuf>,
}

/// A (class, kind, level) cell that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub class_name: String,
    pub kind: DeformationKind,
    pub level: u8,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    /// Ordered by class (config order), kind, level, threshold.
    pub records: Vec<BenchmarkRecord>,
    /// Number of deformed query images produced.
    pub deformed_images: usize,
    pub failures: Vec<CellFailure>,
}

/// `<class>_<Kind>-<level>`, the stem shared by deformed images and visualisations.
pub fn cell_stem(class_name: &str, kind: DeformationKind, level: u8) -> String {
    format!("{class_name}_{}-{level}", kind.label())
}

/// `<class>_<Kind>-<level>_t<threshold>.png`
pub fn viz_file_name(class_name: &str, kind: DeformationKind, level: u8, threshold: f64) -> String {
    format!("{}_t{threshold}.png", cell_stem(class_name, kind, level))
}

fn load_template(entry: &ClassEntry, base_dir: Option<&Path>) -> Result<Image> {
    match &entry.source {
        ClassSource::Motif { motif } => {
            generate_motif(motif).map_err(|e| Error::Data(format!("class `{}`: {e}", entry.name)))
        }
        ClassSource::Path { path } => {
            let full = match base_dir {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            read_image(&full).map_err(|e| Error::Data(format!("class `{}`: {e}", entry.name)))
        }
    }
}

struct Template {
    image: Image,
    features: Vec<Feature>,
    keypoints: Vec<Keypoint>,
}

pub fn run_suite(cfg: &SuiteConfig, opts: &RunOptions) -> Result<SuiteOutcome> {
    cfg.validate()?;
    for dir in [&opts.deformed_dir, &opts.viz_dir].into_iter().flatten() {
        fs::create_dir_all(dir).map_err(|e| Error::input(dir, e))?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Data(e.to_string()))?;
    pool.install(|| run_in_pool(cfg, opts))
}

fn run_in_pool(cfg: &SuiteConfig, opts: &RunOptions) -> Result<SuiteOutcome> {
    let p = &cfg.sift_params;
    let templates: Vec<Template> = cfg
        .classes
        .par_iter()
        .map(|entry| {
            let image = load_template(entry, opts.base_dir.as_deref())?;
            let features = extract(&image, p)
                .map_err(|e| Error::Data(format!("class `{}`: {e}", entry.name)))?;
            let keypoints = features.iter().map(|f| f.keypoint.clone()).collect();
            Ok(Template {
                image,
                features,
                keypoints,
            })
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, DeformationKind, u8)> = (0..cfg.classes.len())
        .flat_map(|c| {
            cfg.kinds
                .iter()
                .flat_map(move |&k| cfg.levels.iter().map(move |&l| (c, k, l)))
        })
        .collect();

    let results: Vec<Result<std::result::Result<Vec<BenchmarkRecord>, CellFailure>>> = cells
        .par_iter()
        .map(|&(c, kind, level)| {
            let name = &cfg.classes[c].name;
            let t = &templates[c];
            let seed = cell_seed(cfg.ransac.seed, name, kind, level);
            let spec = schedule(kind, level)?;
            let eval = match evaluate_cell(
                &t.image,
                &t.features,
                name,
                &spec,
                &cfg.thresholds,
                p,
                cfg.ransac.enabled.then_some(seed),
            ) {
                Ok(e) => e,
                Err(e) => {
                    return Ok(Err(CellFailure {
                        class_name: name.clone(),
                        kind,
                        level,
                        message: e.to_string(),
                    }))
                }
            };
            if let Some(dir) = &opts.deformed_dir {
                write_image(
                    &dir.join(format!("{}.png", cell_stem(name, kind, level))),
                    &eval.deformed.image,
                )?;
            }
            if let Some(dir) = &opts.viz_dir {
                let query_kps: Vec<Keypoint> = eval
                    .query_features
                    .iter()
                    .map(|f| f.keypoint.clone())
                    .collect();
                for (&threshold, matches) in cfg.thresholds.iter().zip(&eval.matches) {
                    let viz = render_matches(
                        &t.image,
                        &eval.deformed.image,
                        matches,
                        &t.keypoints,
                        &query_kps,
                    )?;
                    write_image(&dir.join(viz_file_name(name, kind, level, threshold)), &viz)?;
                }
            }
            Ok(Ok(eval.records))
        })
        .collect();

    let mut outcome = SuiteOutcome {
        records: Vec::new(),
        deformed_images: 0,
        failures: Vec::new(),
    };
    for r in results {
        match r? {
            Ok(records) => {
                outcome.deformed_images += 1;
                outcome.records.extend(records);
            }
            Err(f) => outcome.failures.push(f),
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use motifsift_core::synth::MotifFamily;

    fn tiny(kinds: Vec<DeformationKind>, levels: Vec<u8>, thresholds: Vec<f64>) -> SuiteConfig {
        SuiteConfig {
            classes: vec![ClassEntry {
                name: "tile".into(),
                source: ClassSource::Motif {
                    motif: MotifSpec {
                        width: 128,
                        height: 96,
                        ..MotifSpec::new(MotifFamily::RepetitiveTile, 16, 3)
                    },
                },
            }],
            kinds,
            levels,
            thresholds,
            ..SuiteConfig::default_synth()
        }
    }

    #[test]
    fn single_cell_cardinality() {
        let cfg = tiny(vec![DeformationKind::Blur], vec![1], vec![0.8]);
        let out = run_suite(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.deformed_images, 1);
        assert_eq!(out.records[0].retained_pct, 100.0);
    }

    #[test]
    fn ordering_and_determinism() {
        let cfg = tiny(
            vec![DeformationKind::Light, DeformationKind::Blur],
            vec![2, 1],
            vec![0.4, 0.8],
        );
        let a = run_suite(
            &cfg,
            &RunOptions {
                jobs: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        let b = run_suite(
            &cfg,
            &RunOptions {
                jobs: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        let order: Vec<_> = a
            .records
            .iter()
            .map(|r| (r.kind, r.level, r.threshold))
            .collect();
        assert_eq!(
            order,
            [
                (DeformationKind::Light, 2, 0.4),
                (DeformationKind::Light, 2, 0.8),
                (DeformationKind::Light, 1, 0.4),
                (DeformationKind::Light, 1, 0.8),
                (DeformationKind::Blur, 2, 0.4),
                (DeformationKind::Blur, 2, 0.8),
                (DeformationKind::Blur, 1, 0.4),
                (DeformationKind::Blur, 1, 0.8),
            ]
        );
        assert!(a
            .records
            .iter()
            .all(|r| r.ransac_inliers.unwrap() <= r.positive_matches));
    }

    #[test]
    fn validation() {
        let mut cfg = tiny(vec![DeformationKind::Blur], vec![1], vec![0.8, 0.4]);
        assert!(cfg.validate().is_err());
        cfg.thresholds = vec![0.4, 0.8];
        cfg.levels = vec![6];
        assert!(cfg.validate().is_err());
        cfg.levels = vec![];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unreadable_class_names_the_entry() {
        let mut cfg = tiny(vec![DeformationKind::Blur], vec![1], vec![0.8]);
        cfg.classes[0].source = ClassSource::Path {
            path: "/nonexistent/mat.png".into(),
        };
        let err = run_suite(&cfg, &RunOptions::default()).unwrap_err();
        assert!(err.to_string().contains("`tile`"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn flat_class_is_recorded_as_failure() {
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat.png");
        write_image(&flat, &Image::filled(64, 64, 0.5).unwrap()).unwrap();
        let mut cfg = tiny(
            vec![DeformationKind::Blur, DeformationKind::Light],
            vec![1, 2],
            vec![0.8],
        );
        cfg.classes.push(ClassEntry {
            name: "flat".into(),
            source: ClassSource::Path {
                path: "flat.png".into(),
            },
        });
        let out = run_suite(
            &cfg,
            &RunOptions {
                base_dir: Some(dir.path().to_path_buf()),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.failures.len(), 4);
        assert!(out.failures.iter().all(|f| f.class_name == "flat"));
    }

    #[test]
    fn config_json_shape() {
        let json = r#"{
            "classes": [
                {"name": "a", "path": "a.png"},
                {"name": "b", "motif": {"family": "Chevron", "width": 128, "height": 96, "period": 16,
                                         "contrast": 0.8, "borderRows": 1, "seed": 4}}
            ],
            "kinds": ["Blur", "Zoom_Rotation"],
            "levels": [1, 5],
            "thresholds": [0.2, 0.8],
            "ransac": {"enabled": false, "seed": 9}
        }"#;
        let cfg: SuiteConfig = serde_json::from_str(json).unwrap();
        assert_eq!(
            cfg.classes[0].source,
            ClassSource::Path {
                path: "a.png".into()
            }
        );
        assert!(matches!(cfg.classes[1].source, ClassSource::Motif { .. }));
        assert_eq!(cfg.kinds[1], DeformationKind::ZoomRotation);
        assert_eq!(cfg.sift_params, SiftParams::default());
        assert!(!cfg.ransac.enabled);
        cfg.validate().unwrap();
    }

    #[test]
    fn outputs_follow_naming_convention() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(vec![DeformationKind::ZoomRotation], vec![2], vec![0.2, 0.8]);
        let opts = RunOptions {
            deformed_dir: Some(dir.path().join("deformed")),
            viz_dir: Some(dir.path().join("viz")),
            ..Default::default()
        };
        run_suite(&cfg, &opts).unwrap();
        assert!(dir
            .path()
            .join("deformed/tile_Zoom_Rotation-2.png")
            .exists());
        assert!(dir
            .path()
            .join("viz/tile_Zoom_Rotation-2_t0.2.png")
            .exists());
        assert!(dir
            .path()
            .join("viz/tile_Zoom_Rotation-2_t0.8.png")
            .exists());
        let viz = read_image(&dir.path().join("viz/tile_Zoom_Rotation-2_t0.8.png")).unwrap();
        assert_eq!((viz.width(), viz.height()), (256, 96));
    }
}
