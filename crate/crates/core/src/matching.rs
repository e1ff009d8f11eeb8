//! Nearest-neighbour descriptor matching under an absolute distance threshold,
//! and RANSAC homography verification of the resulting matches.

use alloc::vec::Vec;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::solve;
use crate::{Error, Feature, Homography, Keypoint, Result};

/// Threshold schedule of the evaluation protocol.
pub const PROTOCOL_THRESHOLDS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// A source feature paired with its nearest target feature.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Match {
    #[cfg_attr(feature = "serde", serde(rename = "src"))]
    pub source_index: usize,
    #[cfg_attr(feature = "serde", serde(rename = "dst"))]
    pub target_index: usize,
    /// Euclidean descriptor distance.
    #[cfg_attr(feature = "serde", serde(rename = "dist"))]
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Emit a match only when the nearest distance is strictly below this.
    pub threshold: f64,
    /// Optional nearest / second-nearest ratio test. Off in the protocol.
    pub ratio: Option<f64>,
}

impl MatchOptions {
    pub fn threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ratio: None,
        }
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "match threshold must be a positive finite distance, got {t}"
        )));
    }
    Ok(())
}

/// Descriptors packed contiguously for the inner distance loop.
struct Packed {
    dim: usize,
    data: Vec<f64>,
}

impl Packed {
    fn new(features: &[Feature]) -> Self {
        let dim = features.first().map_or(0, |f| f.descriptor.len());
        let mut data = Vec::with_capacity(dim * features.len());
        for f in features {
            assert_eq!(f.descriptor.len(), dim, "descriptor lengths differ");
            data.extend_from_slice(&f.descriptor);
        }
        Self { dim, data }
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Squared distance, giving up once the running sum reaches `bound`.
#[inline]
fn bounded_sq_dist(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut sum = 0.0;
    let (ca, cb) = (a.chunks_exact(16), b.chunks_exact(16));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (xa, xb) in ca.zip(cb) {
        // Four independent lanes so the loop vectorises.
        let mut lanes = [0.0f64; 4];
        for k in 0..16 {
            let d = xa[k] - xb[k];
            lanes[k % 4] += d * d;
        }
        sum += (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
        if sum >= bound {
            return f64::INFINITY;
        }
    }
    sum + ra
        .iter()
        .zip(rb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
}

/// Component sum over `sqrt(dim)`: the projection onto the unit diagonal.
/// Two descriptors are at least as far apart as their projections.
fn projection(d: &[f64]) -> f64 {
    d.iter().sum::<f64>() / (d.len().max(1) as f64).sqrt()
}

/// For every source feature, its nearest target (lowest index wins ties)
/// provided that distance is below `max_distance`.
///
/// Targets are visited outwards from the source's diagonal projection and
/// partial distances are abandoned early, so the result equals an exhaustive
/// search filtered to `distance < max_distance`.
pub fn nearest_neighbors(
    source: &[Feature],
    target: &[Feature],
    max_distance: f64,
) -> Vec<Option<(usize, f64)>> {
    if target.is_empty() {
        return alloc::vec![None; source.len()];
    }
    let packed = Packed::new(target);
    let rows: Vec<&[f64]> = packed.rows().collect();
    let mut order: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(j, r)| (projection(r), j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Slack so the abandonment never disagrees with the final `d < max` test.
    let cap = max_distance * max_distance * (1.0 + 1e-9);
    // Projection gaps beyond this cannot hold a candidate within squared distance `b`.
    let reach = |b: f64| b.sqrt() * (1.0 + 1e-9) + 1e-12;
    source
        .iter()
        .map(|f| {
            let key = projection(&f.descriptor);
            let mut best = (usize::MAX, cap);
            let mut hi = order.partition_point(|&(k, _)| k < key);
            let mut lo = hi;
            loop {
                let gap_lo = if lo > 0 {
                    key - order[lo - 1].0
                } else {
                    f64::INFINITY
                };
                let gap_hi = if hi < order.len() {
                    order[hi].0 - key
                } else {
                    f64::INFINITY
                };
                let (gap, j) = if gap_lo <= gap_hi {
                    if gap_lo == f64::INFINITY {
                        break;
                    }
                    lo -= 1;
                    (gap_lo, order[lo].1)
                } else {
                    hi += 1;
                    (gap_hi, order[hi - 1].1)
                };
                if gap > reach(best.1) {
                    break;
                }
                // Equal distances must survive when they would win the tie.
                let bound = if j < best.0 { best.1.next_up() } else { best.1 };
                let d = bounded_sq_dist(&f.descriptor, rows[j], bound);
                if d < best.1 || (d == best.1 && j < best.0) {
                    best = (j, d);
                }
            }
            let dist = best.1.sqrt();
            (best.0 != usize::MAX && dist < max_distance).then_some((best.0, dist))
        })
        .collect()
}

/// Matches below `threshold`, from a nearest-neighbour table.
pub fn matches_below(neighbors: &[Option<(usize, f64)>], threshold: f64) -> Vec<Match> {
    neighbors
        .iter()
        .enumerate()
        .filter_map(|(i, nn)| {
            nn.filter(|&(_, d)| d < threshold).map(|(j, d)| Match {
                source_index: i,
                target_index: j,
                distance: d,
            })
        })
        .collect()
}

/// Nearest-neighbour matching with an absolute distance threshold.
/// Several sources may share a target.
pub fn match_features(
    source: &[Feature],
    target: &[Feature],
    threshold: f64,
) -> Result<Vec<Match>> {
    match_features_with(source, target, &MatchOptions::threshold(threshold))
}

pub fn match_features_with(
    source: &[Feature],
    target: &[Feature],
    opts: &MatchOptions,
) -> Result<Vec<Match>> {
    check_threshold(opts.threshold)?;
    let Some(ratio) = opts.ratio else {
        return Ok(matches_below(
            &nearest_neighbors(source, target, opts.threshold),
            opts.threshold,
        ));
    };
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Parameter(alloc::format!(
            "ratio must lie in (0, 1], got {ratio}"
        )));
    }
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let packed = Packed::new(target);
    let mut out = Vec::new();
    for (i, f) in source.iter().enumerate() {
        let mut first = (usize::MAX, f64::INFINITY);
        let mut second = f64::INFINITY;
        for (j, row) in packed.rows().enumerate() {
            let d = bounded_sq_dist(&f.descriptor, row, f64::INFINITY);
            if d < first.1 {
                second = first.1;
                first = (j, d);
            } else if d < second {
                second = d;
            }
        }
        let (d1, d2) = (first.1.sqrt(), second.sqrt());
        if d1 < opts.threshold && (second.is_infinite() || d1 < ratio * d2) {
            out.push(Match {
                source_index: i,
                target_index: first.0,
                distance: d1,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RansacParams {
    pub iterations: usize,
    /// Reprojection tolerance in target-image pixels.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_threshold: 3.0,
            seed: 0,
        }
    }
}

/// Outcome of geometric verification.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedMatches {
    pub homography: Homography,
    pub inliers: Vec<Match>,
    pub inlier_threshold: f64,
    pub seed: u64,
}

type Pt = (f64, f64);

/// Similarity moving `pts` to zero mean and RMS distance √2, as a row-major 3x3.
fn normalizer(pts: &[Pt]) -> [f64; 9] {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let rms = (pts
        .iter()
        .map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let s = if rms > 0.0 { SQRT2 / rms } else { 1.0 };
    [s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0]
}

const SQRT2: f64 = core::f64::consts::SQRT_2;

fn apply3(m: &[f64; 9], p: Pt) -> Pt {
    (
        m[0] * p.0 + m[1] * p.1 + m[2],
        m[3] * p.0 + m[4] * p.1 + m[5],
    )
}

/// Normalized direct linear transform with `h33 = 1`, least squares for more than four pairs.
pub(crate) fn fit_homography(src: &[Pt], dst: &[Pt]) -> Option<Homography> {
    if src.len() < 4 || src.len() != dst.len() {
        return None;
    }
    let ts = normalizer(src);
    let td = normalizer(dst);
    let mut ata = [[0.0; 8]; 8];
    let mut atb = [0.0; 8];
    for (&p, &q) in src.iter().zip(dst) {
        let (x, y) = apply3(&ts, p);
        let (u, v) = apply3(&td, q);
        let rows = [
            ([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y], u),
            ([0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y], v),
        ];
        for (a, b) in rows {
            for r in 0..8 {
                atb[r] += a[r] * b;
                for c in 0..8 {
                    ata[r][c] += a[r] * a[c];
                }
            }
        }
    }
    let h = solve(ata, atb)?;
    let hn = Homography::new([h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0]).ok()?;
    let td_inv = Homography::new(td).ok()?.inverse().ok()?;
    let out = td_inv.compose(&hn).compose(&Homography::new(ts).ok()?);
    Homography::new(*out.coefficients()).ok()
}

fn collinear(a: Pt, b: Pt, c: Pt) -> bool {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let scale =
        ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).max((c.0 - a.0).powi(2) + (c.1 - a.1).powi(2));
    cross.abs() <= 1e-9 * scale.max(1e-12)
}

fn degenerate(p: &[Pt; 4]) -> bool {
    [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        .iter()
        .any(|&(a, b, c)| collinear(p[a], p[b], p[c]))
}

fn reprojection_error(h: &Homography, p: Pt, q: Pt) -> f64 {
    match h.apply(p.0, p.1) {
        Some((x, y)) => ((x - q.0).powi(2) + (y - q.1).powi(2)).sqrt(),
        None => f64::INFINITY,
    }
}

fn inlier_indices(h: &Homography, src: &[Pt], dst: &[Pt], tol: f64) -> Vec<usize> {
    (0..src.len())
        .filter(|&i| reprojection_error(h, src[i], dst[i]) <= tol)
        .collect()
}

/// Random-sample consensus over four-point homographies, followed by a
/// least-squares refit on the consensus set. Deterministic for a given seed.
pub fn ransac_homography(
    matches: &[Match],
    source: &[Keypoint],
    target: &[Keypoint],
    params: &RansacParams,
) -> Result<VerifiedMatches> {
    if matches.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: matches.len(),
        });
    }
    if !(params.inlier_threshold > 0.0) {
        return Err(Error::Parameter("inlier threshold must be > 0".into()));
    }
    let lookup = |kps: &[Keypoint], i: usize| -> Result<Pt> {
        kps.get(i)
            .map(|k| (k.x, k.y))
            .ok_or_else(|| Error::Parameter(alloc::format!("keypoint index {i} out of range")))
    };
    let src: Vec<Pt> = matches
        .iter()
        .map(|m| lookup(source, m.source_index))
        .collect::<Result<_>>()?;
    let dst: Vec<Pt> = matches
        .iter()
        .map(|m| lookup(target, m.target_index))
        .collect::<Result<_>>()?;

    let n = matches.len();
    let tol = params.inlier_threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Homography, Vec<usize>)> = None;
    for _ in 0..params.iterations {
        let mut pick = [0usize; 4];
        for k in 0..4 {
            pick[k] = loop {
                let c = rng.gen_range(0..n);
                if !pick[..k].contains(&c) {
                    break c;
                }
            };
        }
        let s = pick.map(|i| src[i]);
        let d = pick.map(|i| dst[i]);
        if degenerate(&s) || degenerate(&d) {
            continue;
        }
        let Some(h) = fit_homography(&s, &d) else {
            continue;
        };
        let inl = inlier_indices(&h, &src, &dst, tol);
        if best.as_ref().is_none_or(|(_, b)| inl.len() > b.len()) {
            let done = inl.len() == n;
            best = Some((h, inl));
            if done {
                break;
            }
        }
    }
    let Some((mut h, mut inl)) = best else {
        return Err(Error::DegenerateGeometry(
            "every sampled quadruple was collinear or singular".into(),
        ));
    };

    for _ in 0..10 {
        if inl.len() < 4 {
            break;
        }
        let s: Vec<Pt> = inl.iter().map(|&i| src[i]).collect();
        let d: Vec<Pt> = inl.iter().map(|&i| dst[i]).collect();
        let Some(refit) = fit_homography(&s, &d) else {
            break;
        };
        let refit_inl = inlier_indices(&refit, &src, &dst, tol);
        if refit_inl.len() < inl.len() {
            break;
        }
        let stable = refit_inl == inl;
        h = refit;
        inl = refit_inl;
        if stable {
            break;
        }
    }

    Ok(VerifiedMatches {
        homography: h,
        inliers: inl.iter().map(|&i| matches[i]).collect(),
        inlier_threshold: tol,
        seed: params.seed,
    })
}
