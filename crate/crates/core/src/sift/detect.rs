use alloc::collections::BTreeSet;
use alloc::vec::Vec;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use super::scale_space::{Plane, ScaleSpace};
use super::{Keypoint, SiftParams};
use crate::linalg::solve;

/// Pixels this close to an octave border are never candidates.
const BORDER: usize = 5;

/// Scale-space extrema with sub-pixel refinement, contrast and edge rejection.
/// Keypoints come back unoriented (`orientation == 0`).
pub fn detect_keypoints(ss: &ScaleSpace, params: &SiftParams) -> Vec<Keypoint> {
    detect_keypoints_with_edge_test(ss, params, true)
}

/// [`detect_keypoints`] with the principal-curvature test optionally disabled.
pub fn detect_keypoints_with_edge_test(
    ss: &ScaleSpace,
    params: &SiftParams,
    edge_test: bool,
) -> Vec<Keypoint> {
    let s = ss.intervals();
    let precheck = 0.5 * params.contrast_threshold;
    let (img_w, img_h) = ss.image_size();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();

    for (o, octave) in ss.octaves.iter().enumerate() {
        let (w, h) = (octave.width(), octave.height());
        if w <= 2 * BORDER || h <= 2 * BORDER {
            continue;
        }
        for l in 1..=s {
            let (below, cur, above) = (&octave.dog[l - 1], &octave.dog[l], &octave.dog[l + 1]);
            for y in BORDER..h - BORDER {
                for x in BORDER..w - BORDER {
                    let v = cur.get(x, y);
                    if v.abs() <= precheck || !is_extremum(v, x, y, below, cur, above) {
                        continue;
                    }
                    let Some(r) = refine(&octave.dog, x, y, l, s, params) else {
                        continue;
                    };
                    if edge_test && !passes_edge_test(&octave.dog[r.layer], r.x, r.y, params) {
                        continue;
                    }
                    if !seen.insert((o, r.layer, r.x, r.y)) {
                        continue;
                    }
                    let (kx, ky) =
                        ss.to_image(o, r.x as f64 + r.offset[0], r.y as f64 + r.offset[1]);
                    if !(kx >= 0.0 && ky >= 0.0 && kx < img_w as f64 && ky < img_h as f64) {
                        continue;
                    }
                    out.push(Keypoint {
                        x: kx,
                        y: ky,
                        sigma: ss.absolute_sigma(o, r.layer as f64 + r.offset[2]),
                        orientation: 0.0,
                        response: r.response,
                        octave: o,
                        layer: r.layer,
                    });
                }
            }
        }
    }
    out
}

#[inline]
fn is_extremum(v: f64, x: usize, y: usize, below: &Plane, cur: &Plane, above: &Plane) -> bool {
    let w = cur.width;
    let i = y * w + x;
    let offsets = [
        i - w - 1,
        i - w,
        i - w + 1,
        i - 1,
        i,
        i + 1,
        i + w - 1,
        i + w,
        i + w + 1,
    ];
    if v > 0.0 {
        offsets
            .iter()
            .all(|&j| v >= below.data[j] && v >= above.data[j] && (j == i || v >= cur.data[j]))
    } else {
        offsets
            .iter()
            .all(|&j| v <= below.data[j] && v <= above.data[j] && (j == i || v <= cur.data[j]))
    }
}

struct Refined {
    x: usize,
    y: usize,
    layer: usize,
    offset: [f64; 3],
    response: f64,
}

fn derivatives(dog: &[Plane], x: usize, y: usize, l: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let (p, c, n) = (&dog[l - 1], &dog[l], &dog[l + 1]);
    let v = c.get(x, y);
    let dx = 0.5 * (c.get(x + 1, y) - c.get(x - 1, y));
    let dy = 0.5 * (c.get(x, y + 1) - c.get(x, y - 1));
    let ds = 0.5 * (n.get(x, y) - p.get(x, y));
    let dxx = c.get(x + 1, y) + c.get(x - 1, y) - 2.0 * v;
    let dyy = c.get(x, y + 1) + c.get(x, y - 1) - 2.0 * v;
    let dss = n.get(x, y) + p.get(x, y) - 2.0 * v;
    let dxy = 0.25
        * (c.get(x + 1, y + 1) - c.get(x - 1, y + 1) - c.get(x + 1, y - 1) + c.get(x - 1, y - 1));
    let dxs = 0.25 * (n.get(x + 1, y) - n.get(x - 1, y) - p.get(x + 1, y) + p.get(x - 1, y));
    let dys = 0.25 * (n.get(x, y + 1) - n.get(x, y - 1) - p.get(x, y + 1) + p.get(x, y - 1));
    (
        [dx, dy, ds],
        [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]],
    )
}

/// Quadratic fit around `(x, y, l)`, re-anchoring while any offset exceeds half a sample.
fn refine(
    dog: &[Plane],
    mut x: usize,
    mut y: usize,
    mut l: usize,
    s: usize,
    params: &SiftParams,
) -> Option<Refined> {
    let (w, h) = (dog[0].width, dog[0].height);
    for _ in 0..params.max_refine_iterations {
        let (g, hess) = derivatives(dog, x, y, l);
        let off = solve(hess, [-g[0], -g[1], -g[2]])?;
        if off.iter().all(|v| v.abs() < 0.5) {
            let response = dog[l].get(x, y) + 0.5 * (g[0] * off[0] + g[1] * off[1] + g[2] * off[2]);
            if response.abs() < params.contrast_threshold {
                return None;
            }
            return Some(Refined {
                x,
                y,
                layer: l,
                offset: off,
                response,
            });
        }
        if off.iter().any(|v| v.abs() > (w.max(h) as f64)) {
            return None;
        }
        let nx = x as i64 + off[0].round() as i64;
        let ny = y as i64 + off[1].round() as i64;
        let nl = l as i64 + off[2].round() as i64;
        if nl < 1
            || nl > s as i64
            || nx < BORDER as i64
            || ny < BORDER as i64
            || nx >= (w - BORDER) as i64
            || ny >= (h - BORDER) as i64
        {
            return None;
        }
        (x, y, l) = (nx as usize, ny as usize, nl as usize);
    }
    None
}

/// Principal-curvature ratio test: `tr² / det < (r + 1)² / r`.
fn passes_edge_test(dog: &Plane, x: usize, y: usize, params: &SiftParams) -> bool {
    let v = dog.get(x, y);
    let dxx = dog.get(x + 1, y) + dog.get(x - 1, y) - 2.0 * v;
    let dyy = dog.get(x, y + 1) + dog.get(x, y - 1) - 2.0 * v;
    let dxy = 0.25
        * (dog.get(x + 1, y + 1) - dog.get(x - 1, y + 1) - dog.get(x + 1, y - 1)
            + dog.get(x - 1, y - 1));
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = params.edge_ratio_threshold;
    det > 0.0 && tr * tr * r < (r + 1.0) * (r + 1.0) * det
}
