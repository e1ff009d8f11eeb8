//! Procedural two-tone motif imagery.
//!
//! Patterns are drawn on a grid of square blocks a quarter period wide,
//! mimicking plaited strips, and framed by rows of twill.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Image, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MotifFamily {
    Chevron,
    DiagonalTwill,
    SymmetricDiamond,
    RepetitiveTile,
    NonGeometric,
}

impl MotifFamily {
    pub const ALL: [MotifFamily; 5] = [
        MotifFamily::Chevron,
        MotifFamily::DiagonalTwill,
        MotifFamily::SymmetricDiamond,
        MotifFamily::RepetitiveTile,
        MotifFamily::NonGeometric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotifFamily::Chevron => "Chevron",
            MotifFamily::DiagonalTwill => "DiagonalTwill",
            MotifFamily::SymmetricDiamond => "SymmetricDiamond",
            MotifFamily::RepetitiveTile => "RepetitiveTile",
            MotifFamily::NonGeometric => "NonGeometric",
        }
    }
}

impl fmt::Display for MotifFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotifFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        MotifFamily::ALL
            .into_iter()
            .find(|f| f.name().to_lowercase() == key)
            .ok_or_else(|| Error::Parameter(alloc::format!("unknown motif family `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub struct MotifSpec {
    pub family: MotifFamily,
    pub width: usize,
    pub height: usize,
    pub period: usize,
    pub contrast: f64,
    pub border_rows: usize,
    pub seed: u64,
    /// Apply a `[1 2 1] / 4` smoothing pass after rendering.
    #[cfg_attr(feature = "serde", serde(default))]
    pub smooth: bool,
}

impl MotifSpec {
    /// 800×355 canvas, contrast 0.8, two border rows.
    pub fn new(family: MotifFamily, period: usize, seed: u64) -> Self {
        MotifSpec {
            family,
            width: 800,
            height: 355,
            period,
            contrast: 0.8,
            border_rows: 2,
            seed,
            smooth: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::Parameter(alloc::format!(
                "motif must be at least 64x64, got {}x{}",
                self.width,
                self.height
            )));
        }
        if self.period < 4 {
            return Err(Error::Parameter(alloc::format!(
                "period must be >= 4 px, got {}",
                self.period
            )));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::Parameter(alloc::format!(
                "contrast must be in (0, 1], got {}",
                self.contrast
            )));
        }
        let frame = self.border_rows * self.cell();
        if 2 * frame >= self.width.min(self.height) {
            return Err(Error::Parameter(alloc::format!(
                "{} border rows leave no room for the pattern",
                self.border_rows
            )));
        }
        Ok(())
    }

    /// Block size of the plaited grid.
    pub fn cell(&self) -> usize {
        (self.period / 4).max(1)
    }

    /// Frame thickness in pixels.
    pub fn frame(&self) -> usize {
        self.border_rows * self.cell()
    }

    pub fn tones(&self) -> (f64, f64) {
        (0.5 - self.contrast / 2.0, 0.5 + self.contrast / 2.0)
    }
}

/// The seven default benchmark classes.
pub fn default_classes() -> Vec<(String, MotifSpec)> {
    let class = |name: &str, spec: MotifSpec| (String::from(name), spec);
    vec![
        class("chevron", MotifSpec::new(MotifFamily::Chevron, 32, 1)),
        class(
            "diagonal_twill",
            MotifSpec::new(MotifFamily::DiagonalTwill, 32, 1),
        ),
        class(
            "symmetric_diamond",
            MotifSpec::new(MotifFamily::SymmetricDiamond, 32, 1),
        ),
        class(
            "repetitive_tile_a",
            MotifSpec::new(MotifFamily::RepetitiveTile, 32, 1),
        ),
        class(
            "repetitive_tile_b",
            MotifSpec::new(MotifFamily::RepetitiveTile, 32, 2),
        ),
        class(
            "non_geometric_a",
            MotifSpec::new(MotifFamily::NonGeometric, 32, 1),
        ),
        class(
            "non_geometric_b",
            MotifSpec::new(MotifFamily::NonGeometric, 32, 2),
        ),
    ]
}

/// Renders `spec` deterministically.
pub fn generate_motif(spec: &MotifSpec) -> Result<Image> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let c = spec.cell();
    let frame = spec.frame();
    let (lo, hi) = spec.tones();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let pattern: Vec<bool> = match spec.family {
        MotifFamily::Chevron => render(w, h, |x, y| {
            // Two blocks across per block down, so the bands are shallower than a twill.
            let u = mirrored(x, w);
            (u / c + 2 * (y / c)) % 8 < 4
        }),
        MotifFamily::DiagonalTwill => render(w, h, |x, y| (x / c + y / c) % 8 < 4),
        MotifFamily::SymmetricDiamond => render(w, h, |x, y| {
            let (u, v) = (mirrored(x, w), mirrored(y, h));
            (u / c + v / c) % 4 < 2
        }),
        MotifFamily::RepetitiveTile => {
            let outer = weave_cell(&mut rng);
            let inner = weave_cell(&mut rng);
            let tile = 4 * c;
            let (x0, x1) = (w / 4, w - w / 4);
            let (y0, y1) = (h / 4, h - h / 4);
            render(w, h, |x, y| {
                let cellbits = if (x0..x1).contains(&x) && (y0..y1).contains(&y) {
                    &inner
                } else {
                    &outer
                };
                cellbits[(y % tile) / c][(x % tile) / c]
            })
        }
        MotifFamily::NonGeometric => {
            // Blobs show as regions where the twill phase flips, as in
            // two-colour plaiting.
            let coarse = ValueNoise::new(&mut rng, w, h, spec.period as f64 * 2.0);
            let fine = ValueNoise::new(&mut rng, w, h, spec.period as f64);
            render(w, h, |x, y| {
                let (fx, fy) = (x as f64, y as f64);
                let blob = 0.65 * coarse.at(fx, fy) + 0.35 * fine.at(fx, fy) > 0.5;
                blob ^ ((x / c + y / c) % 4 < 2)
            })
        }
    };

    let mut samples: Vec<f64> = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let on = if x < frame || y < frame || x >= w - frame || y >= h - frame {
                border_twill(x, y, c, frame, w, h)
            } else {
                pattern[y * w + x]
            };
            samples.push(if on { hi } else { lo });
        }
    }
    let img = Image::from_samples(w, h, samples)?;
    Ok(if spec.smooth { smooth121(&img) } else { img })
}

fn render(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| f(x, y))
        .collect()
}

/// Distance from the vertical mirror axis, equal for `x` and `n - 1 - x`.
fn mirrored(x: usize, n: usize) -> usize {
    let m = n - 1 - x;
    // Both halves count outwards from the centre column (or the central pair).
    (x.max(m) - x.min(m)) / 2
}

/// Transposed twill: diagonal steps that reverse direction on each side of the frame.
fn border_twill(x: usize, y: usize, c: usize, frame: usize, w: usize, h: usize) -> bool {
    let horizontal = y < frame || y >= h - frame;
    let (along, across) = if horizontal { (x, y) } else { (y, x) };
    let extent = if horizontal { h } else { w };
    let across = if across >= frame {
        across - (extent - frame)
    } else {
        across
    };
    (along / c + across / c).is_multiple_of(2)
}

/// A 4×4 two-tone block cell with both tones present in every row and column.
fn weave_cell(rng: &mut ChaCha8Rng) -> [[bool; 4]; 4] {
    loop {
        let mut cell = [[false; 4]; 4];
        for row in cell.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen::<bool>();
            }
        }
        let rows_ok = cell
            .iter()
            .all(|r| r.iter().any(|&v| v) && r.iter().any(|&v| !v));
        let cols_ok = (0..4).all(|j| (0..4).any(|i| cell[i][j]) && (0..4).any(|i| !cell[i][j]));
        if rows_ok && cols_ok {
            return cell;
        }
    }
}

struct ValueNoise {
    spacing: f64,
    cols: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, w: usize, h: usize, spacing: f64) -> Self {
        let cols = (w as f64 / spacing).ceil() as usize + 2;
        let rows = (h as f64 / spacing).ceil() as usize + 2;
        let values = (0..cols * rows).map(|_| rng.gen::<f64>()).collect();
        ValueNoise {
            spacing,
            cols,
            values,
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.spacing, y / self.spacing);
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let fade = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (fade(gx - ix as f64), fade(gy - iy as f64));
        let v = |i: usize, j: usize| self.values[j * self.cols + i];
        let top = v(ix, iy) + (v(ix + 1, iy) - v(ix, iy)) * tx;
        let bottom = v(ix, iy + 1) + (v(ix + 1, iy + 1) - v(ix, iy + 1)) * tx;
        top + (bottom - top) * ty
    }
}

fn smooth121(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let tap = |a: f64, b: f64, c: f64| 0.25 * a + 0.5 * b + 0.25 * c;
    let horizontal = Image::from_fn(w, h, |x, y| {
        tap(
            img.get(x.saturating_sub(1), y),
            img.get(x, y),
            img.get((x + 1).min(w - 1), y),
        )
    })
    .expect("same size");
    Image::from_fn(w, h, |x, y| {
        tap(
            horizontal.get(x, y.saturating_sub(1)),
            horizontal.get(x, y),
            horizontal.get(x, (y + 1).min(h - 1)),
        )
    })
    .expect("same size")
}

#[cfg(test)]
mod tests {
    use super::{default_classes, generate_motif, MotifFamily, MotifSpec};
    use proptest::prelude::*;

    fn small(family: MotifFamily, period: usize, seed: u64) -> MotifSpec {
        MotifSpec {
            width: 160,
            height: 96,
            ..MotifSpec::new(family, period, seed)
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for family in MotifFamily::ALL {
            let spec = small(family, 16, 7);
            assert_eq!(
                generate_motif(&spec).unwrap(),
                generate_motif(&spec).unwrap()
            );
        }
        let a = generate_motif(&small(MotifFamily::NonGeometric, 16, 1)).unwrap();
        let b = generate_motif(&small(MotifFamily::NonGeometric, 16, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn symmetric_diamond_mirrors_exactly() {
        for (w, h) in [(160, 96), (161, 97), (800, 355)] {
            let spec = MotifSpec {
                width: w,
                height: h,
                ..MotifSpec::new(MotifFamily::SymmetricDiamond, 24, 3)
            };
            let img = generate_motif(&spec).unwrap();
            let f = spec.frame();
            for y in f..h - f {
                for x in f..w - f {
                    assert_eq!(img.get(x, y), img.get(w - 1 - x, y));
                    assert_eq!(img.get(x, y), img.get(x, h - 1 - y));
                }
            }
        }
    }

    #[test]
    fn twill_diagonal_autocorrelation_peaks_at_period() {
        let spec = MotifSpec {
            width: 200,
            height: 160,
            ..MotifSpec::new(MotifFamily::DiagonalTwill, 16, 0)
        };
        let img = generate_motif(&spec).unwrap();
        let f = spec.frame();
        let mean = {
            let mut s = 0.0;
            let mut n = 0.0;
            for y in f..160 - f {
                for x in f..200 - f {
                    s += img.get(x, y);
                    n += 1.0;
                }
            }
            s / n
        };
        // Brute-force normalised autocorrelation over the interior for lags 2..=24.
        let corr = |lag: usize| {
            let (mut num, mut den) = (0.0, 0.0);
            for y in f..160 - f - lag {
                for x in f..200 - f - lag {
                    let a = img.get(x, y) - mean;
                    let b = img.get(x + lag, y + lag) - mean;
                    num += a * b;
                    den += a * a;
                }
            }
            num / den
        };
        let best = (2..=24)
            .max_by(|&a, &b| corr(a).total_cmp(&corr(b)))
            .unwrap();
        assert!((15..=17).contains(&best), "peak at {best}");
    }

    #[test]
    fn rejects_invalid_specs() {
        let ok = small(MotifFamily::Chevron, 16, 0);
        assert!(generate_motif(&MotifSpec {
            width: 63,
            ..ok.clone()
        })
        .is_err());
        assert!(generate_motif(&MotifSpec {
            period: 3,
            ..ok.clone()
        })
        .is_err());
        assert!(generate_motif(&MotifSpec {
            contrast: 0.0,
            ..ok.clone()
        })
        .is_err());
        assert!(generate_motif(&MotifSpec {
            contrast: 1.5,
            ..ok.clone()
        })
        .is_err());
        assert!(generate_motif(&MotifSpec {
            border_rows: 40,
            ..ok
        })
        .is_err());
    }

    #[test]
    fn default_classes_cover_families() {
        let classes = default_classes();
        assert_eq!(classes.len(), 7);
        for family in MotifFamily::ALL {
            assert!(classes.iter().any(|(_, s)| s.family == family));
        }
        assert!(classes
            .iter()
            .all(|(_, s)| (s.width, s.height) == (800, 355)));
    }

    #[test]
    fn family_parsing() {
        assert_eq!(
            "diagonal-twill".parse::<MotifFamily>().unwrap(),
            MotifFamily::DiagonalTwill
        );
        assert_eq!(
            "nongeometric".parse::<MotifFamily>().unwrap(),
            MotifFamily::NonGeometric
        );
        assert!("paisley".parse::<MotifFamily>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn samples_are_two_tone(
            fi in 0usize..5,
            period in 4usize..40,
            contrast in 0.05f64..=1.0,
            seed in any::<u64>(),
            smooth in any::<bool>(),
        ) {
            let spec = MotifSpec {
                width: 96,
                height: 72,
                period,
                contrast,
                border_rows: 1,
                seed,
                smooth,
                family: MotifFamily::ALL[fi],
            };
            let img = generate_motif(&spec).unwrap();
            let (lo, hi) = spec.tones();
            for &v in img.samples() {
                if smooth {
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                } else {
                    prop_assert!(v == lo || v == hi);
                }
            }
        }
    }
}
