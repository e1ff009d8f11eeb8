//! Benchmark cells: deform a template, match it against its query and
//! report the share of template features that found a partner.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::deform::{apply, DeformationKind, DeformationSpec, DeformedImage};
use crate::matching::{matches_below, nearest_neighbors, ransac_homography, Match, RansacParams};
use crate::sift::{extract, Feature, Keypoint, SiftParams};
use crate::{Error, Image, Result};

/// One class × deformation × level × threshold evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkRecord {
    pub class_name: String,
    pub kind: DeformationKind,
    pub level: u8,
    pub threshold: f64,
    pub template_features: usize,
    pub query_features: usize,
    pub positive_matches: usize,
    pub retained_pct: f64,
    pub ransac_inliers: Option<usize>,
    pub seed: u64,
}

impl BenchmarkRecord {
    /// Report label such as `Blur-2_sift 0.2`.
    pub fn row_label(&self) -> String {
        row_label(self.kind, self.level, self.threshold)
    }
}

pub fn row_label(kind: DeformationKind, level: u8, threshold: f64) -> String {
    format!("{}-{}_sift {}", kind.label(), level, threshold)
}

/// `100 · positive / template`.
pub fn retained_pct(positive_matches: usize, template_features: usize) -> f64 {
    100.0 * positive_matches as f64 / template_features as f64
}

/// Deterministic per-cell seed from the suite seed and the cell coordinates.
pub fn cell_seed(suite_seed: u64, class_name: &str, kind: DeformationKind, level: u8) -> u64 {
    // FNV-1a over the coordinates, then a splitmix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(&suite_seed.to_le_bytes());
    eat(class_name.as_bytes());
    eat(kind.slug().as_bytes());
    eat(&[level]);
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything produced while evaluating one deformed query at several thresholds.
#[derive(Debug, Clone)]
pub struct CellEvaluation {
    pub deformed: DeformedImage,
    pub query_features: Vec<Feature>,
    /// One record per threshold, in the order given.
    pub records: Vec<BenchmarkRecord>,
    /// Positive matches per threshold, parallel to `records`.
    pub matches: Vec<Vec<Match>>,
}

/// Evaluates one (class, kind, level) query against precomputed template
/// features for every threshold.
///
/// With `ransac_seed` set, each threshold's matches are verified by RANSAC;
/// fewer than four matches or degenerate geometry count as zero inliers.
pub fn evaluate_cell(
    template: &Image,
    template_features: &[Feature],
    class_name: &str,
    spec: &DeformationSpec,
    thresholds: &[f64],
    params: &SiftParams,
    ransac_seed: Option<u64>,
) -> Result<CellEvaluation> {
    if template_features.is_empty() {
        return Err(Error::DegenerateCell {
            class: class_name.into(),
        });
    }
    if thresholds.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Parameter("thresholds must be >= 0".into()));
    }
    let deformed = apply(template, spec)?;
    let query_features = extract(&deformed.image, params)?;
    let widest = thresholds.iter().copied().fold(0.0, f64::max);
    let nn = nearest_neighbors(template_features, &query_features, widest);
    let template_kps: Vec<Keypoint> = template_features
        .iter()
        .map(|f| f.keypoint.clone())
        .collect();
    let query_kps: Vec<Keypoint> = query_features.iter().map(|f| f.keypoint.clone()).collect();

    let mut records = Vec::with_capacity(thresholds.len());
    let mut all_matches = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let matches = matches_below(&nn, threshold);
        let ransac_inliers = ransac_seed.map(|seed| {
            let rp = RansacParams {
                seed,
                ..RansacParams::default()
            };
            ransac_homography(&matches, &template_kps, &query_kps, &rp)
                .map(|v| v.inliers.len())
                .unwrap_or(0)
        });
        records.push(BenchmarkRecord {
            class_name: class_name.into(),
            kind: spec.kind,
            level: spec.level,
            threshold,
            template_features: template_features.len(),
            query_features: query_features.len(),
            positive_matches: matches.len(),
            retained_pct: retained_pct(matches.len(), template_features.len()),
            ransac_inliers,
            seed: ransac_seed.unwrap_or(0),
        });
        all_matches.push(matches);
    }
    Ok(CellEvaluation {
        deformed,
        query_features,
        records,
        matches: all_matches,
    })
}

/// A single cell evaluated from scratch.
pub fn run_cell(
    template: &Image,
    class_name: &str,
    spec: &DeformationSpec,
    threshold: f64,
    params: &SiftParams,
    ransac_seed: Option<u64>,
) -> Result<BenchmarkRecord> {
    let template_features = extract(template, params)?;
    let mut eval = evaluate_cell(
        template,
        &template_features,
        class_name,
        spec,
        &[threshold],
        params,
        ransac_seed,
    )?;
    Ok(eval.records.remove(0))
}

/// Mean retained percentage over the records of one (kind, level, threshold).
pub fn aggregate(
    records: &[BenchmarkRecord],
    kind: DeformationKind,
    threshold: f64,
    level: u8,
) -> Result<f64> {
    let (sum, n) = records
        .iter()
        .filter(|r| r.kind == kind && r.level == level && (r.threshold - threshold).abs() < 1e-12)
        .fold((0.0, 0usize), |(s, n), r| (s + r.retained_pct, n + 1));
    if n == 0 {
        return Err(Error::EmptySelection(format!(
            "no records for {}-{level} at threshold {threshold}",
            kind.label()
        )));
    }
    Ok(sum / n as f64)
}

/// Circle radius per unit of keypoint sigma in match visualisations.
pub const CIRCLE_RADIUS_PER_SIGMA: f64 = 2.0;

const MARK: f64 = 1.0;

/// Template and query side by side, matched keypoints circled and joined by lines.
pub fn render_matches(
    template: &Image,
    query: &Image,
    matches: &[Match],
    template_kps: &[Keypoint],
    query_kps: &[Keypoint],
) -> Result<Image> {
    let (w1, h1) = (template.width(), template.height());
    let (w2, h2) = (query.width(), query.height());
    let mut out = Image::from_fn(w1 + w2, h1.max(h2), |x, y| {
        if x < w1 {
            if y < h1 {
                template.get(x, y)
            } else {
                0.0
            }
        } else if y < h2 {
            query.get(x - w1, y)
        } else {
            0.0
        }
    })?;
    let offset = w1 as f64;
    for m in matches {
        let (Some(a), Some(b)) = (
            template_kps.get(m.source_index),
            query_kps.get(m.target_index),
        ) else {
            return Err(Error::Parameter(format!(
                "match ({}, {}) refers to a missing keypoint",
                m.source_index, m.target_index
            )));
        };
        draw_circle(&mut out, a.x, a.y, CIRCLE_RADIUS_PER_SIGMA * a.sigma);
        draw_circle(
            &mut out,
            b.x + offset,
            b.y,
            CIRCLE_RADIUS_PER_SIGMA * b.sigma,
        );
        draw_line(&mut out, a.x, a.y, b.x + offset, b.y);
    }
    Ok(out)
}

fn plot(img: &mut Image, x: f64, y: f64) {
    let (px, py) = (x.round(), y.round());
    if px >= 0.0 && py >= 0.0 && (px as usize) < img.width() && (py as usize) < img.height() {
        img.set(px as usize, py as usize, MARK);
    }
}

fn draw_line(img: &mut Image, x0: f64, y0: f64, x1: f64, y1: f64) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        plot(img, x0 + (x1 - x0) * t, y0 + (y1 - y0) * t);
    }
}

fn draw_circle(img: &mut Image, cx: f64, cy: f64, r: f64) {
    let r = r.max(1.0);
    let n = (core::f64::consts::TAU * r).ceil() as usize + 8;
    for i in 0..n {
        let (s, c) = (core::f64::consts::TAU * i as f64 / n as f64).sin_cos();
        plot(img, cx + r * c, cy + r * s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::schedule;
    use crate::synth::{generate_motif, MotifFamily, MotifSpec};
    use alloc::vec;

    fn record(pct: f64) -> BenchmarkRecord {
        BenchmarkRecord {
            class_name: "c".into(),
            kind: DeformationKind::Blur,
            level: 5,
            threshold: 0.8,
            template_features: 100,
            query_features: 10,
            positive_matches: pct as usize,
            retained_pct: pct,
            ransac_inliers: None,
            seed: 0,
        }
    }

    fn motif() -> Image {
        let spec = MotifSpec {
            width: 192,
            height: 128,
            ..MotifSpec::new(MotifFamily::SymmetricDiamond, 24, 1)
        };
        generate_motif(&spec).unwrap()
    }

    #[test]
    fn labels_follow_table_grammar() {
        assert_eq!(row_label(DeformationKind::Blur, 2, 0.2), "Blur-2_sift 0.2");
        assert_eq!(
            row_label(DeformationKind::ZoomRotation, 5, 0.8),
            "Zoom_Rotation-5_sift 0.8"
        );
    }

    #[test]
    fn retained_arithmetic() {
        assert!((retained_pct(308, 10000) - 3.08).abs() < 1e-9);
        assert_eq!(retained_pct(7, 7), 100.0);
    }

    #[test]
    fn aggregate_means() {
        let rs = vec![record(2.0), record(4.0), record(6.0)];
        assert!((aggregate(&rs, DeformationKind::Blur, 0.8, 5).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(
            aggregate(&rs[..1], DeformationKind::Blur, 0.8, 5).unwrap(),
            2.0
        );
        assert!(matches!(
            aggregate(&rs, DeformationKind::Light, 0.8, 5),
            Err(Error::EmptySelection(_))
        ));
        assert!(aggregate(&rs, DeformationKind::Blur, 0.4, 5).is_err());
    }

    #[test]
    fn cell_seed_is_stable_and_sensitive() {
        let s = cell_seed(7, "chevron", DeformationKind::Blur, 2);
        assert_eq!(s, cell_seed(7, "chevron", DeformationKind::Blur, 2));
        assert_ne!(s, cell_seed(8, "chevron", DeformationKind::Blur, 2));
        assert_ne!(s, cell_seed(7, "chevron", DeformationKind::Blur, 3));
        assert_ne!(s, cell_seed(7, "chevron", DeformationKind::Light, 2));
        assert_ne!(s, cell_seed(7, "chevrons", DeformationKind::Blur, 2));
    }

    #[test]
    fn identity_cell_retains_everything() {
        let img = motif();
        let p = SiftParams::default();
        for t in [0.2, 0.8] {
            let r = run_cell(
                &img,
                "d",
                &schedule(DeformationKind::Blur, 1).unwrap(),
                t,
                &p,
                Some(3),
            )
            .unwrap();
            assert!(r.template_features > 0);
            assert_eq!(r.retained_pct, 100.0);
            assert_eq!(r.positive_matches, r.template_features);
            assert!(r.ransac_inliers.unwrap() <= r.positive_matches);
        }
    }

    #[test]
    fn thresholds_are_monotone_within_a_cell() {
        let img = motif();
        let p = SiftParams::default();
        let feats = extract(&img, &p).unwrap();
        let spec = schedule(DeformationKind::ZoomRotation, 3).unwrap();
        let eval =
            evaluate_cell(&img, &feats, "d", &spec, &[0.2, 0.4, 0.6, 0.8], &p, None).unwrap();
        for pair in eval.records.windows(2) {
            assert!(pair[0].retained_pct <= pair[1].retained_pct);
        }
        assert!(eval
            .records
            .iter()
            .all(|r| r.positive_matches <= r.template_features));
        assert_eq!(eval.matches.len(), 4);
    }

    #[test]
    fn blank_template_is_degenerate() {
        let img = Image::filled(64, 64, 0.5).unwrap();
        let err = run_cell(
            &img,
            "flat",
            &schedule(DeformationKind::Light, 2).unwrap(),
            0.8,
            &SiftParams::default(),
            None,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::DegenerateCell {
                class: "flat".into()
            }
        );
    }

    fn kp(x: f64, y: f64) -> Keypoint {
        Keypoint {
            x,
            y,
            sigma: 1.0,
            orientation: 0.0,
            response: 0.1,
            octave: 0,
            layer: 1,
        }
    }

    #[test]
    fn composite_layout() {
        let a = Image::filled(80, 35, 0.3).unwrap();
        let b = Image::filled(80, 50, 0.3).unwrap();
        let out = render_matches(&a, &b, &[], &[], &[]).unwrap();
        assert_eq!((out.width(), out.height()), (160, 50));
        // Nothing drawn; the only change is the black gap under the shorter image.
        for y in 0..50 {
            for x in 0..160 {
                let want = if x < 80 && y >= 35 { 0.0 } else { 0.3 };
                assert_eq!(out.get(x, y), want);
            }
        }
    }

    #[test]
    fn match_line_endpoints() {
        let a = Image::filled(64, 64, 0.0).unwrap();
        let b = Image::filled(64, 64, 0.0).unwrap();
        let m = Match {
            source_index: 0,
            target_index: 0,
            distance: 0.1,
        };
        let plain = render_matches(&a, &b, &[m], &[kp(10.0, 10.0)], &[kp(20.0, 20.0)]).unwrap();
        assert_eq!(plain.get(10, 10), MARK);
        assert_eq!(plain.get(64 + 20, 20), MARK);
        // Midpoint of the segment is lit.
        assert_eq!(plain.get(47, 15), MARK);
        assert!(render_matches(&a, &b, &[m], &[], &[kp(1.0, 1.0)]).is_err());
    }
}
