//! Grayscale morphology, top-hat crack detection and size filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{label_components, to_grayscale, BinaryMask, RasterImage};

/// Named structuring element shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeKind {
    Square3,
    Disk2,
    Custom,
}

/// Binary footprint with odd dimensions and a set center cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    kind: SeKind,
    width: usize,
    height: usize,
    footprint: Vec<bool>,
    // (dx, dy) of every set cell relative to the center.
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    /// All-true 3x3 square.
    pub fn square3() -> Self {
        Self::build(SeKind::Square3, 3, 3, vec![true; 9])
    }

    /// 5x5 discrete disk: `(i-2)^2 + (j-2)^2 <= 4`, 13 cells.
    pub fn disk2() -> Self {
        Self::disk(2).with_kind(SeKind::Disk2)
    }

    /// Discrete disk of integer radius `r`.
    pub fn disk(r: usize) -> Self {
        let n = 2 * r + 1;
        let r2 = (r * r) as isize;
        let footprint = (0..n * n)
            .map(|k| {
                let (i, j) = ((k / n) as isize - r as isize, (k % n) as isize - r as isize);
                i * i + j * j <= r2
            })
            .collect();
        Self::build(SeKind::Custom, n, n, footprint)
    }

    /// Arbitrary footprint; dimensions must be odd and the center set.
    pub fn custom(width: usize, height: usize, footprint: Vec<bool>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "structuring element dimensions must be odd, got {width}x{height}"
            )));
        }
        if footprint.len() != width * height {
            return Err(Error::InvalidParameter("structuring element footprint length mismatch".into()));
        }
        if !footprint[(height / 2) * width + width / 2] {
            return Err(Error::InvalidParameter("structuring element center must be set".into()));
        }
        Ok(Self::build(SeKind::Custom, width, height, footprint))
    }

    fn build(kind: SeKind, width: usize, height: usize, footprint: Vec<bool>) -> Self {
        let (cx, cy) = ((width / 2) as isize, (height / 2) as isize);
        let offsets = footprint
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(k, _)| ((k % width) as isize - cx, (k / width) as isize - cy))
            .collect();
        Self { kind, width, height, footprint, offsets }
    }

    fn with_kind(mut self, kind: SeKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> SeKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn footprint(&self) -> &[bool] {
        &self.footprint
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn cell_count(&self) -> usize {
        self.offsets.len()
    }

    fn reflected_offsets(&self) -> Vec<(isize, isize)> {
        self.offsets.iter().map(|&(dx, dy)| (-dx, -dy)).collect()
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::disk2()
    }
}

/// Which top-hat responses the detector thresholds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Dark cracks on lighter paint.
    #[default]
    Black,
    /// Bright cracks on darker paint.
    White,
    /// Union of both thresholded masks.
    Both,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "black" => Ok(Variant::Black),
            "white" => Ok(Variant::White),
            "both" => Ok(Variant::Both),
            other => Err(Error::Config(format!("unknown detector variant '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    pub variant: Variant,
    pub se: StructuringElement,
    /// A pixel is a crack candidate when its response is strictly greater.
    pub threshold: u8,
    /// Binary dilations of the thresholded mask, using `se`.
    pub dilation_iters: usize,
    /// Components with fewer pixels are discarded.
    pub min_component: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Black,
            se: StructuringElement::disk2(),
            threshold: 180,
            dilation_iters: 1,
            min_component: 5,
        }
    }
}

fn require_gray(img: &RasterImage) -> Result<()> {
    if img.is_gray() {
        Ok(())
    } else {
        Err(Error::NotGrayscale(img.channels()))
    }
}

// Replicate padding: out-of-range coordinates clamp to the nearest edge.
fn rank_filter(
    img: &RasterImage,
    offsets: &[(isize, isize)],
    init: u8,
    pick: impl Fn(u8, u8) -> u8,
) -> RasterImage {
    let (w, h) = img.dimensions();
    let src = img.data();
    let mut out = vec![init; w * h];
    let (wi, hi) = (w as isize, h as isize);
    for y in 0..hi {
        for x in 0..wi {
            let mut acc = init;
            for &(dx, dy) in offsets {
                let sx = (x + dx).clamp(0, wi - 1) as usize;
                let sy = (y + dy).clamp(0, hi - 1) as usize;
                acc = pick(acc, src[sy * w + sx]);
            }
            out[(y * wi + x) as usize] = acc;
        }
    }
    RasterImage::new(w, h, 1, out).expect("dimensions preserved")
}

/// Grayscale erosion: minimum over the footprint.
pub fn erode(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    require_gray(img)?;
    Ok(rank_filter(img, se.offsets(), u8::MAX, u8::min))
}

/// Grayscale dilation: maximum over the reflected footprint (identical to the
/// footprint itself for the symmetric built-in elements).
pub fn dilate(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    require_gray(img)?;
    Ok(rank_filter(img, &se.reflected_offsets(), u8::MIN, u8::max))
}

/// Dilation followed by erosion.
pub fn closing(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    erode(&dilate(img, se)?, se)
}

/// Erosion followed by dilation.
pub fn opening(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    dilate(&erode(img, se)?, se)
}

fn difference(a: &RasterImage, b: &RasterImage) -> RasterImage {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x.saturating_sub(y)).collect();
    RasterImage::new(a.width(), a.height(), 1, data).expect("dimensions preserved")
}

/// `closing(img) - img`: highlights dark structures narrower than the element.
pub fn black_top_hat(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    Ok(difference(&closing(img, se)?, img))
}

/// `img - opening(img)`: highlights bright structures narrower than the element.
pub fn white_top_hat(img: &RasterImage, se: &StructuringElement) -> Result<RasterImage> {
    Ok(difference(img, &opening(img, se)?))
}

/// Binary dilation of a mask by `se` (replicate borders, reflected footprint).
pub fn dilate_mask(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let (wi, hi) = (w as isize, h as isize);
    let offsets = se.reflected_offsets();
    let mut out = vec![false; w * h];
    for y in 0..hi {
        for x in 0..wi {
            out[(y * wi + x) as usize] = offsets.iter().any(|&(dx, dy)| {
                let sx = (x + dx).clamp(0, wi - 1) as usize;
                let sy = (y + dy).clamp(0, hi - 1) as usize;
                mask.get(sx, sy)
            });
        }
    }
    BinaryMask::new(w, h, out).expect("dimensions preserved")
}

fn threshold_response(response: &RasterImage, threshold: u8) -> BinaryMask {
    let data = response.data().iter().map(|&v| v > threshold).collect();
    BinaryMask::new(response.width(), response.height(), data).expect("dimensions preserved")
}

/// Removes 8-connected components with fewer than `min_component` pixels.
pub fn size_filter(mask: &BinaryMask, min_component: usize) -> BinaryMask {
    if min_component <= 1 {
        return mask.clone();
    }
    let labels = label_components(mask);
    let areas = labels.areas();
    let data = labels.labels().iter().map(|&l| l != 0 && areas[l as usize] >= min_component).collect();
    BinaryMask::new(mask.width(), mask.height(), data).expect("dimensions preserved")
}

/// Detector output before and after size filtering.
#[derive(Clone, Debug)]
pub struct Detection {
    pub unfiltered: BinaryMask,
    pub mask: BinaryMask,
}

/// Runs the full detector and keeps the pre-filter mask.
pub fn detect_stages(img: &RasterImage, cfg: &DetectorConfig) -> Result<Detection> {
    let gray = to_grayscale(img);
    let black =
        || -> Result<BinaryMask> { Ok(threshold_response(&black_top_hat(&gray, &cfg.se)?, cfg.threshold)) };
    let white =
        || -> Result<BinaryMask> { Ok(threshold_response(&white_top_hat(&gray, &cfg.se)?, cfg.threshold)) };
    let mut mask = match cfg.variant {
        Variant::Black => black()?,
        Variant::White => white()?,
        Variant::Both => black()?.union(&white()?)?,
    };
    for _ in 0..cfg.dilation_iters {
        mask = dilate_mask(&mask, &cfg.se);
    }
    let filtered = size_filter(&mask, cfg.min_component);
    Ok(Detection { unfiltered: mask, mask: filtered })
}

/// Candidate crack mask for an RGB or grayscale image.
pub fn detect(img: &RasterImage, cfg: &DetectorConfig) -> Result<BinaryMask> {
    detect_stages(img, cfg).map(|d| d.mask)
}

/// Shannon entropy (bits) of the 256-bin intensity histogram.
pub fn global_entropy(img: &RasterImage) -> Result<f64> {
    require_gray(img)?;
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total = img.data().len() as f64;
    Ok(hist
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.log2()
        })
        .sum())
}
