use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use super::orientation::wrap_angle;
use super::scale_space::ScaleSpace;
use super::{Feature, Keypoint, SiftParams};

/// Width of one spatial descriptor cell, in units of keypoint scale.
const CELL_SCALE: f64 = 3.0;

/// The descriptor at each normalization stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorStages {
    /// Accumulated histogram before any normalization.
    pub raw: Vec<f64>,
    /// Unit-normalized then clipped, before the final renormalization.
    pub clipped: Vec<f64>,
    /// Final unit-length descriptor.
    pub normalized: Vec<f64>,
}

/// Builds the gradient histogram descriptor of an oriented keypoint.
///
/// Samples are taken from the Gaussian layer the keypoint was detected in,
/// over a square window rotated to `kp.orientation`. Each gradient is
/// weighted by a Gaussian with sigma equal to half the grid width and spread
/// trilinearly over (row, column, orientation) bins. Returns `None` when no
/// sample lands inside the image.
pub fn descriptor_stages(
    kp: &Keypoint,
    ss: &ScaleSpace,
    params: &SiftParams,
) -> Option<DescriptorStages> {
    let grad = ss.gradients(kp.octave, kp.layer)?;
    let d = params.descriptor_grid_width;
    let n = params.descriptor_orientation_bins;
    let df = d as f64;
    let (lx, ly) = ss.to_octave(kp.octave, kp.x, kp.y);
    let local_sigma = kp.sigma / ss.pixel_step(kp.octave);
    let cell = CELL_SCALE * local_sigma;
    let (w, h) = (grad.width as i64, grad.height as i64);
    let max_radius = ((w * w + h * h) as f64).sqrt();
    let radius = (cell * SQRT_2 * (df + 1.0) * 0.5).round().min(max_radius) as i64;
    let (sin_o, cos_o) = kp.orientation.sin_cos();
    let (cos_t, sin_t) = (cos_o / cell, sin_o / cell);
    let (cx, cy) = (lx.round() as i64, ly.round() as i64);
    // Rotation preserves the radius, so the window weight only depends on
    // the pixel offset: exp(-(c² + r²) / (2 (d/2)²)) with c, r in cell units.
    let weight_scale = -1.0 / (0.5 * df * df * cell * cell);
    let bins_per_rad = n as f64 / TAU;

    // (d + 2) x (d + 2) spatial cells so interpolation spill needs no bounds checks.
    let stride_r = (d + 2) * n;
    let mut hist = vec![0.0; (d + 2) * stride_r];
    let mut any = false;

    for i in -radius..=radius {
        let py = cy + i;
        if py < 1 || py >= h - 1 {
            continue;
        }
        for j in -radius..=radius {
            let px = cx + j;
            if px < 1 || px >= w - 1 {
                continue;
            }
            let (jf, if_) = (j as f64, i as f64);
            let c_rot = jf * cos_t + if_ * sin_t;
            let r_rot = -jf * sin_t + if_ * cos_t;
            let rbin = r_rot + df / 2.0 - 0.5;
            let cbin = c_rot + df / 2.0 - 0.5;
            if !(rbin > -1.0 && rbin < df && cbin > -1.0 && cbin < df) {
                continue;
            }
            let idx = (py * w + px) as usize;
            let mag = grad.magnitude[idx];
            if mag == 0.0 {
                continue;
            }
            any = true;
            let obin = wrap_angle(grad.angle[idx] - kp.orientation) * bins_per_rad;
            let weight = ((i * i + j * j) as f64 * weight_scale).exp();
            let v = mag * weight;

            let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            let r0 = (r0 as i64 + 1) as usize;
            let c0 = (c0 as i64 + 1) as usize;
            let o0 = o0 as usize % n;
            let o1 = (o0 + 1) % n;
            for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
                    let base = (r0 + dr) * stride_r + (c0 + dc) * n;
                    let vrc = v * wr * wc;
                    hist[base + o0] += vrc * (1.0 - fo);
                    hist[base + o1] += vrc * fo;
                }
            }
        }
    }
    if !any {
        return None;
    }

    let mut raw = Vec::with_capacity(d * d * n);
    for r in 1..=d {
        for c in 1..=d {
            let base = r * stride_r + c * n;
            raw.extend_from_slice(&hist[base..base + n]);
        }
    }
    let norm = l2(&raw);
    if !(norm > 0.0) {
        return None;
    }
    let clipped: Vec<f64> = raw
        .iter()
        .map(|v| (v / norm).min(params.descriptor_clip))
        .collect();
    let cnorm = l2(&clipped);
    let normalized = clipped.iter().map(|v| v / cnorm).collect();
    Some(DescriptorStages {
        raw,
        clipped,
        normalized,
    })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Descriptor of an oriented keypoint; `None` when the window misses the image.
pub fn compute_descriptor(kp: &Keypoint, ss: &ScaleSpace, params: &SiftParams) -> Option<Feature> {
    descriptor_stages(kp, ss, params).map(|s| Feature {
        keypoint: kp.clone(),
        descriptor: s.normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sift::{assign_orientations, build_scale_space, detect_keypoints};
    use crate::Image;

    fn checker(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let v = ((x / 7) + (y / 5)) % 3;
            0.2 + 0.3 * v as f64
        })
        .unwrap()
    }

    fn oriented(img: &Image, p: &SiftParams) -> (ScaleSpace, Vec<Keypoint>) {
        let ss = build_scale_space(img, p).unwrap();
        let kps = detect_keypoints(&ss, p)
            .iter()
            .flat_map(|k| assign_orientations(k, &ss, p))
            .collect();
        (ss, kps)
    }

    #[test]
    fn descriptor_norm_and_clip() {
        let p = SiftParams::default();
        let (ss, kps) = oriented(&checker(80, 64), &p);
        assert!(!kps.is_empty());
        for kp in &kps {
            let Some(st) = descriptor_stages(kp, &ss, &p) else {
                continue;
            };
            assert_eq!(st.normalized.len(), 128);
            assert!((l2(&st.normalized) - 1.0).abs() < 1e-6);
            assert!(st.clipped.iter().all(|&v| v <= p.descriptor_clip + 1e-9));
            assert!(st.normalized.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn deterministic() {
        let p = SiftParams::default();
        let (ss, kps) = oriented(&checker(64, 64), &p);
        let a = compute_descriptor(&kps[0], &ss, &p).unwrap();
        let b = compute_descriptor(&kps[0], &ss, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gain_leaves_descriptor_unchanged() {
        let p = SiftParams::default();
        let img = checker(96, 64);
        let dark = img.map(|v| v * 0.6);
        let (ss, kps) = oriented(&img, &p);
        let ss_dark = build_scale_space(&dark, &p).unwrap();
        let mut compared = 0;
        for kp in &kps {
            let (Some(a), Some(b)) = (
                compute_descriptor(kp, &ss, &p),
                compute_descriptor(kp, &ss_dark, &p),
            ) else {
                continue;
            };
            // Oracle: gradients scale by the gain, so the unit-normalized raw
            // histograms agree, and so does everything derived from them.
            let ra = descriptor_stages(kp, &ss, &p).unwrap().raw;
            let rb = descriptor_stages(kp, &ss_dark, &p).unwrap().raw;
            for (x, y) in ra.iter().zip(&rb) {
                assert!((x * 0.6 - y).abs() < 1e-9);
            }
            let dist = a
                .descriptor
                .iter()
                .zip(&b.descriptor)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!(dist < 0.05);
            compared += 1;
        }
        assert!(compared > 0);
    }

    #[test]
    fn window_outside_is_rejected() {
        let p = SiftParams::default();
        let (ss, kps) = oriented(&checker(64, 64), &p);
        let far = Keypoint {
            x: 5000.0,
            y: 5000.0,
            ..kps[0].clone()
        };
        assert!(compute_descriptor(&far, &ss, &p).is_none());
    }
}
