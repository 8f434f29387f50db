//! Mask-restricted crack filling: outer-to-inner trimmed-mean passes and
//! explicit anisotropic diffusion. Both run per channel and leave every
//! unmasked pixel untouched.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_dims, BinaryMask, RasterImage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    /// Time step; the explicit 4-neighbor scheme is stable for `0 < lambda <= 0.25`.
    pub lambda: f64,
    /// Gradient sensitivity of the edge-stopping conductivity.
    pub kappa: f64,
    pub iterations: usize,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self { lambda: 0.25, kappa: 127.0, iterations: 20 }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 0.25) {
            return Err(Error::InvalidParameter(format!("lambda must be in (0, 0.25], got {}", self.lambda)));
        }
        if !self.kappa.is_finite() || self.kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMethod {
    /// Modified trimmed mean, outer-to-inner.
    Mtm,
    /// Anisotropic diffusion.
    #[default]
    Ad,
}

impl std::str::FromStr for FillMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtm" => Ok(FillMethod::Mtm),
            "ad" => Ok(FillMethod::Ad),
            other => Err(Error::Config(format!("unknown inpaint method '{other}'"))),
        }
    }
}

impl std::fmt::Display for FillMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FillMethod::Mtm => "mtm",
            FillMethod::Ad => "ad",
        })
    }
}

const NEIGHBORS_8: [(isize, isize); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Outer-to-inner trimmed-mean fill.
///
/// Each pass assigns every pending crack pixel that touches at least one
/// known 8-neighbor the rounded mean of those neighbors, reading only the
/// state from the start of the pass. Filled pixels become known for the next
/// pass. Fails with [`Error::NoBoundary`] when the mask covers the image.
pub fn mtm_fill(image: &RasterImage, mask: &BinaryMask) -> Result<RasterImage> {
    let (w, h) = image.dimensions();
    check_dims(w, h, mask.width(), mask.height())?;
    if mask.is_empty() {
        return Ok(image.clone());
    }
    if mask.data().iter().all(|&b| b) {
        return Err(Error::NoBoundary);
    }
    let c = image.channels();
    let mut out = image.clone();
    let mut pending = mask.data().to_vec();
    let mut frontier: Vec<usize> = pending.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i).collect();
    let (wi, hi) = (w as isize, h as isize);
    let mut sums = vec![0u32; c];
    let mut updates: Vec<(usize, [u8; 3])> = Vec::new();

    while !frontier.is_empty() {
        updates.clear();
        for &i in &frontier {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            sums.iter_mut().for_each(|s| *s = 0);
            let mut count = 0u32;
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= wi || ny >= hi {
                    continue;
                }
                let j = (ny * wi + nx) as usize;
                if pending[j] {
                    continue;
                }
                count += 1;
                for (ch, s) in sums.iter_mut().enumerate() {
                    *s += out.data()[j * c + ch] as u32;
                }
            }
            if count > 0 {
                let mut px = [0u8; 3];
                for ch in 0..c {
                    px[ch] = ((sums[ch] * 2 + count) / (2 * count)) as u8;
                }
                updates.push((i, px));
            }
        }
        // A non-full mask always has a boundary pixel, so every pass makes progress.
        debug_assert!(!updates.is_empty());
        let data = out.data_mut();
        for &(i, px) in &updates {
            data[i * c..(i + 1) * c].copy_from_slice(&px[..c]);
            pending[i] = false;
        }
        frontier.retain(|&i| pending[i]);
    }
    Ok(out)
}

/// Conductivity of the edge-stopping function for a directional difference.
#[inline]
pub fn conductivity(diff: f64, kappa: f64) -> f64 {
    let r = diff / kappa;
    1.0 / (1.0 + r * r)
}

/// Runs the explicit diffusion scheme on one float plane, updating only
/// masked pixels. Out-of-image neighbors contribute no flux.
pub fn diffuse_plane(plane: &mut [f64], width: usize, mask: &[bool], cfg: &DiffusionConfig) {
    let height = plane.len() / width;
    let active: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    let mut next = vec![0.0f64; active.len()];
    for _ in 0..cfg.iterations {
        for (slot, &i) in next.iter_mut().zip(&active) {
            let (x, y) = (i % width, i / width);
            let center = plane[i];
            let mut flux = 0.0;
            let mut add = |j: usize| {
                let d = plane[j] - center;
                flux += conductivity(d, cfg.kappa) * d;
            };
            if y > 0 {
                add(i - width);
            }
            if y + 1 < height {
                add(i + width);
            }
            if x + 1 < width {
                add(i + 1);
            }
            if x > 0 {
                add(i - 1);
            }
            *slot = center + cfg.lambda * flux;
        }
        for (&v, &i) in next.iter().zip(&active) {
            plane[i] = v;
        }
    }
}

fn round_clip(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Anisotropic-diffusion fill. State is kept in floating point across
/// iterations and rounded (half up) and clipped once at the end.
pub fn ad_fill(image: &RasterImage, mask: &BinaryMask, cfg: &DiffusionConfig) -> Result<RasterImage> {
    let (w, h) = image.dimensions();
    check_dims(w, h, mask.width(), mask.height())?;
    cfg.validate()?;
    if mask.is_empty() || cfg.iterations == 0 {
        return Ok(image.clone());
    }
    let c = image.channels();
    let mut out = image.clone();
    for ch in 0..c {
        let mut plane: Vec<f64> = image.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        diffuse_plane(&mut plane, w, mask.data(), cfg);
        let data = out.data_mut();
        for (i, &m) in mask.data().iter().enumerate() {
            if m {
                data[i * c + ch] = round_clip(plane[i]);
            }
        }
    }
    Ok(out)
}

/// Fills masked pixels with the chosen method, channel by channel.
pub fn fill(
    image: &RasterImage,
    mask: &BinaryMask,
    method: FillMethod,
    cfg: &DiffusionConfig,
) -> Result<RasterImage> {
    match method {
        FillMethod::Mtm => mtm_fill(image, mask),
        FillMethod::Ad => ad_fill(image, mask, cfg),
    }
}

/// Runs [`fill`] and reports the wall-clock time in seconds alongside.
pub fn time_fill(
    image: &RasterImage,
    mask: &BinaryMask,
    method: FillMethod,
    cfg: &DiffusionConfig,
) -> Result<(RasterImage, f64)> {
    let start = Instant::now();
    let out = fill(image, mask, method, cfg)?;
    let secs = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok((out, secs))
}
