use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use super::scale_space::ScaleSpace;
use super::{Keypoint, SiftParams};

/// Gaussian window of the orientation histogram, relative to keypoint scale.
const WINDOW_FACTOR: f64 = 1.5;

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut r = a % TAU;
    if r < 0.0 {
        r += TAU;
    }
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Gradient-orientation histogram around `kp`, smoothed with a `[1 4 6 4 1] / 16` kernel.
pub(crate) fn orientation_histogram(
    kp: &Keypoint,
    ss: &ScaleSpace,
    params: &SiftParams,
) -> Vec<f64> {
    let bins = params.orientation_bins;
    let mut hist = vec![0.0; bins];
    let Some(grad) = ss.gradients(kp.octave, kp.layer) else {
        return hist;
    };
    let (lx, ly) = ss.to_octave(kp.octave, kp.x, kp.y);
    let local_sigma = kp.sigma / ss.pixel_step(kp.octave);
    let sigma_w = WINDOW_FACTOR * local_sigma;
    let radius = (3.0 * sigma_w).round() as i64;
    let denom = 2.0 * sigma_w * sigma_w;
    let (cx, cy) = (lx.round() as i64, ly.round() as i64);
    let (w, h) = (grad.width as i64, grad.height as i64);
    let per_bin = bins as f64 / TAU;

    for dy in -radius..=radius {
        let py = cy + dy;
        if py < 1 || py >= h - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let px = cx + dx;
            if px < 1 || px >= w - 1 {
                continue;
            }
            let i = (py * w + px) as usize;
            let weight = (-((dx * dx + dy * dy) as f64) / denom).exp();
            let bin = (wrap_angle(grad.angle[i]) * per_bin).round() as usize % bins;
            hist[bin] += weight * grad.magnitude[i];
        }
    }

    let n = bins as isize;
    let at = |i: isize| hist[i.rem_euclid(n) as usize];
    (0..n)
        .map(|i| {
            (at(i - 2) + at(i + 2)) / 16.0
                + (at(i - 1) + at(i + 1)) * (4.0 / 16.0)
                + at(i) * (6.0 / 16.0)
        })
        .collect()
}

/// Copies `kp` once per dominant gradient direction: the global histogram
/// peak plus every local peak reaching `orientation_peak_ratio` of it.
/// Peak positions are refined with a parabola through the three nearest bins.
pub fn assign_orientations(kp: &Keypoint, ss: &ScaleSpace, params: &SiftParams) -> Vec<Keypoint> {
    let hist = orientation_histogram(kp, ss, params);
    let n = hist.len();
    let max = hist.iter().copied().fold(0.0, f64::max);
    let oriented = |bin: f64| Keypoint {
        orientation: wrap_angle(bin * TAU / n as f64),
        ..kp.clone()
    };
    if !(max > 0.0) {
        return vec![oriented(0.0)];
    }
    let threshold = params.orientation_peak_ratio * max;
    let mut out = Vec::new();
    for i in 0..n {
        let (l, c, r) = (hist[(i + n - 1) % n], hist[i], hist[(i + 1) % n]);
        if c > l && c > r && c >= threshold {
            let shift = 0.5 * (l - r) / (l - 2.0 * c + r);
            out.push(oriented(i as f64 + shift));
        }
    }
    if out.is_empty() {
        // Flat-topped maximum; fall back to the first bin holding it.
        let i = hist.iter().position(|&v| v == max).unwrap_or(0);
        out.push(oriented(i as f64));
    }
    out
}
