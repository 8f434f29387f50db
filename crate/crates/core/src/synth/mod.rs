//! Synthetic craquelure: stochastic cubic Bézier crack networks with tapered
//! width and branching, rasterized into a mask that is eroded, blurred and
//! re-thresholded before being burnt into a clean image.
//!
//! Every random draw comes from one seeded [`ChaCha8Rng`] per triplet, in
//! this order:
//!
//! 1. curve count, uniform over `curve_count`;
//! 2. the per-image branch probability, uniform over `branch_prob`;
//! 3. for each primary curve, [`sample_curve`] (`p0.x, p0.y, p3.x, p3.y`,
//!    then the Gaussian offsets of `p1` and `p2`, x before y), then
//!    [`rasterize_crack`] (one radius per sample point), then the branch
//!    attempt: `t_split`, followed by the draws of [`spawn_branch`]
//!    (acceptance, angle, sign, scale, control offsets). An accepted branch
//!    is rasterized and may itself branch, depth first, up to
//!    `branch_depth` levels.

mod dataset;
mod painting;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_dims, resize_area, resize_bilinear, BinaryMask, RasterImage};

pub use dataset::{
    derive_seed, procedural_triplets, read_manifest, write_dataset, write_procedural_dataset, DatasetEntry,
    Manifest,
};
pub use painting::procedural_painting;

/// Closed interval `[low, high]`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct Interval<T: Copy> {
    pub low: T,
    pub high: T,
}

impl<T: Copy> Interval<T> {
    pub const fn new(low: T, high: T) -> Self {
        Self { low, high }
    }
}

impl<T: Copy> From<[T; 2]> for Interval<T> {
    fn from(v: [T; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl<T: Copy> From<Interval<T>> for [T; 2] {
    fn from(i: Interval<T>) -> Self {
        [i.low, i.high]
    }
}

impl Interval<f64> {
    /// One uniform draw; always consumes exactly one value from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.low + (self.high - self.low) * rng.random::<f64>()
    }
}

impl Interval<u32> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.random_range(self.low..=self.high)
    }
}

/// Parameters of one synthetic crack network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrackSpec {
    pub curve_count: Interval<u32>,
    /// Bounds on the number of stamped points per curve.
    pub samples: Interval<u32>,
    /// Std-dev (px) of the interior control point offsets.
    pub control_sigma: f64,
    /// Peak mean stamp radius (px), reached at the curve midpoint.
    pub taper_alpha: f64,
    /// Std-dev (px) of the stamp radius.
    pub radius_sigma: f64,
    /// Range of the per-image branch probability.
    pub branch_prob: Interval<f64>,
    /// Branch rotation magnitude in degrees; the sign is a fair coin.
    pub branch_angle_deg: Interval<f64>,
    /// Branch chord length relative to the parent tangent.
    pub branch_scale: Interval<f64>,
    pub branch_depth: u32,
    pub crack_gray: u8,
    /// Blurred mask values strictly above this become crack pixels.
    pub mask_threshold: u8,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub erosion_kernel: usize,
    /// Output `[width, height]`.
    pub target_size: [usize; 2],
    pub seed: u64,
}

impl Default for CrackSpec {
    fn default() -> Self {
        Self {
            curve_count: Interval::new(80, 150),
            samples: Interval::new(80, 180),
            control_sigma: 8.0,
            taper_alpha: 2.0,
            radius_sigma: 0.5,
            branch_prob: Interval::new(0.3, 0.5),
            branch_angle_deg: Interval::new(20.0, 60.0),
            branch_scale: Interval::new(0.4, 0.7),
            branch_depth: 2,
            crack_gray: 40,
            mask_threshold: 50,
            blur_kernel: 5,
            blur_sigma: 2.0,
            erosion_kernel: 2,
            target_size: [598, 375],
            seed: 0,
        }
    }
}

impl CrackSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.curve_count.low > self.curve_count.high {
            return bad("curve_count range is empty".into());
        }
        if self.samples.low > self.samples.high || self.samples.low == 0 {
            return bad("samples range must be nonempty and positive".into());
        }
        let bp = self.branch_prob;
        if !(0.0..=1.0).contains(&bp.low) || !(0.0..=1.0).contains(&bp.high) || bp.low > bp.high {
            return bad(format!("branch_prob must lie in [0, 1], got [{}, {}]", bp.low, bp.high));
        }
        for (name, r) in [("branch_angle_deg", self.branch_angle_deg), ("branch_scale", self.branch_scale)] {
            if r.low > r.high || !r.low.is_finite() || !r.high.is_finite() {
                return bad(format!("{name} range is empty"));
            }
        }
        if self.taper_alpha.is_nan() || self.taper_alpha <= 0.0 {
            return bad(format!("taper_alpha must be positive, got {}", self.taper_alpha));
        }
        if [self.radius_sigma, self.control_sigma].iter().any(|v| v.is_nan() || *v < 0.0) {
            return bad("sigmas must be non-negative".into());
        }
        if self.blur_kernel.is_multiple_of(2) || self.blur_sigma.is_nan() || self.blur_sigma <= 0.0 {
            return bad("blur kernel must be odd and sigma positive".into());
        }
        if self.erosion_kernel == 0 {
            return bad("erosion kernel must be at least 1".into());
        }
        if self.target_size[0] == 0 || self.target_size[1] == 0 {
            return bad("target size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Cubic Bézier curve in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BezierCurve {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl BezierCurve {
    pub fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Result<Self> {
        let c = Self { p0, p1, p2, p3 };
        if [p0, p1, p2, p3].iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidParameter("control points must be finite".into()));
        }
        Ok(c)
    }

    /// Point at parameter `t`; `t` must lie in `[0, 1]`.
    pub fn eval(&self, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t must be in [0, 1], got {t}")));
        }
        Ok(self.point_at(t))
    }

    fn point_at(&self, t: f64) -> Point {
        let s = 1.0 - t;
        let (b0, b1, b2, b3) = (s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t);
        Point::new(
            b0 * self.p0.x + b1 * self.p1.x + b2 * self.p2.x + b3 * self.p3.x,
            b0 * self.p0.y + b1 * self.p1.y + b2 * self.p2.y + b3 * self.p3.y,
        )
    }

    /// First derivative `dB/dt`.
    pub fn tangent(&self, t: f64) -> Point {
        let s = 1.0 - t;
        let d0 = self.p1.sub(self.p0).scale(3.0 * s * s);
        let d1 = self.p2.sub(self.p1).scale(6.0 * s * t);
        let d2 = self.p3.sub(self.p2).scale(3.0 * t * t);
        d0.add(d1).add(d2)
    }

    /// Distance between the endpoints.
    pub fn chord_length(&self) -> f64 {
        self.p3.sub(self.p0).norm()
    }
}

/// Free-function form of [`BezierCurve::eval`].
pub fn bezier_eval(curve: &BezierCurve, t: f64) -> Result<Point> {
    curve.eval(t)
}

fn gaussian_offset<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Point {
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    Point::new(dx * sigma, dy * sigma)
}

/// Curve from `start` along `chord` with interior control points at the
/// 1/3 and 2/3 chord positions plus isotropic Gaussian noise.
fn perturbed_curve<R: Rng + ?Sized>(start: Point, end: Point, sigma: f64, rng: &mut R) -> BezierCurve {
    let p1 = start.lerp(end, 1.0 / 3.0).add(gaussian_offset(rng, sigma));
    let p2 = start.lerp(end, 2.0 / 3.0).add(gaussian_offset(rng, sigma));
    BezierCurve { p0: start, p1, p2, p3: end }
}

/// Draws a primary crack curve with endpoints uniform over the image.
pub fn sample_curve<R: Rng + ?Sized>(
    rng: &mut R,
    width: usize,
    height: usize,
    spec: &CrackSpec,
) -> BezierCurve {
    let (w, h) = (width as f64, height as f64);
    let p0 = Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
    let p3 = Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h);
    perturbed_curve(p0, p3, spec.control_sigma, rng)
}

/// Mean stamp radius at parameter `t`: `alpha * (1 - |t - 0.5|)`.
pub fn mean_radius(t: f64, taper_alpha: f64) -> f64 {
    taper_alpha * (1.0 - (t - 0.5).abs())
}

/// Number of stamped points: chord length in px, clamped to `spec.samples`.
pub fn sample_count(curve: &BezierCurve, spec: &CrackSpec) -> usize {
    let n = curve.chord_length().round() as u64;
    n.clamp(spec.samples.low as u64, spec.samples.high as u64) as usize
}

/// Stamps a filled disk: every pixel whose center lies within `radius`,
/// plus the pixel containing the center.
pub fn stamp_disk(canvas: &mut BinaryMask, center: Point, radius: f64) {
    let (w, h) = canvas.dimensions();
    let r = radius.max(0.0);
    let (wi, hi) = (w as i64, h as i64);
    let x0 = (center.x - r).floor() as i64 - 1;
    let x1 = (center.x + r).ceil() as i64 + 1;
    let y0 = (center.y - r).floor() as i64 - 1;
    let y1 = (center.y + r).ceil() as i64 + 1;
    if x1 < 0 || y1 < 0 || x0 >= wi || y0 >= hi {
        return;
    }
    let r2 = r * r;
    for y in y0.max(0)..=y1.min(hi - 1) {
        for x in x0.max(0)..=x1.min(wi - 1) {
            let dx = x as f64 - center.x;
            let dy = y as f64 - center.y;
            if dx * dx + dy * dy <= r2 {
                canvas.set(x as usize, y as usize, true);
            }
        }
    }
    let (cx, cy) = (center.x.round() as i64, center.y.round() as i64);
    if (0..wi).contains(&cx) && (0..hi).contains(&cy) {
        canvas.set(cx as usize, cy as usize, true);
    }
}

/// Stamps disks at evenly spaced parameters `t_i = i / (n - 1)` with radius
/// drawn from `N(alpha (1 - |t_i - 0.5|), sigma_r^2)`, clamped at zero.
pub fn rasterize_crack<R: Rng + ?Sized>(
    curve: &BezierCurve,
    spec: &CrackSpec,
    rng: &mut R,
    canvas: &mut BinaryMask,
) {
    let n = sample_count(curve, spec);
    for i in 0..n {
        let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
        let z: f64 = rng.sample(StandardNormal);
        let radius = (mean_radius(t, spec.taper_alpha) + spec.radius_sigma * z).max(0.0);
        stamp_disk(canvas, curve.point_at(t), radius);
    }
}

/// With probability `branch_prob`, spawns a child crack at `parent(t_split)`.
/// Its chord is the parent tangent rotated by `±branch_angle_deg` and scaled
/// by `branch_scale`; interior control points are perturbed as in
/// [`sample_curve`].
pub fn spawn_branch<R: Rng + ?Sized>(
    parent: &BezierCurve,
    t_split: f64,
    branch_prob: f64,
    spec: &CrackSpec,
    rng: &mut R,
) -> Result<Option<BezierCurve>> {
    if !(t_split > 0.0 && t_split < 1.0) {
        return Err(Error::InvalidParameter(format!("t_split must be in (0, 1), got {t_split}")));
    }
    if rng.random::<f64>() >= branch_prob {
        return Ok(None);
    }
    let angle = spec.branch_angle_deg.sample(rng).to_radians();
    let signed = if rng.random::<bool>() { angle } else { -angle };
    let scale = spec.branch_scale.sample(rng);
    let tangent = parent.tangent(t_split);
    let (sin, cos) = signed.sin_cos();
    let chord = Point::new(tangent.x * cos - tangent.y * sin, tangent.x * sin + tangent.y * cos).scale(scale);
    let start = parent.point_at(t_split);
    Ok(Some(perturbed_curve(start, start.add(chord), spec.control_sigma, rng)))
}

/// A rasterized network along with every curve drawn and its branch depth.
#[derive(Clone, Debug)]
pub struct CrackNetwork {
    pub raw: BinaryMask,
    pub curves: Vec<(BezierCurve, u32)>,
    pub branch_prob: f64,
}

fn grow<R: Rng + ?Sized>(
    curve: BezierCurve,
    depth: u32,
    branch_prob: f64,
    spec: &CrackSpec,
    rng: &mut R,
    net: &mut CrackNetwork,
) -> Result<()> {
    rasterize_crack(&curve, spec, rng, &mut net.raw);
    net.curves.push((curve, depth));
    if depth < spec.branch_depth {
        let t_split = 0.1 + 0.8 * rng.random::<f64>();
        if let Some(child) = spawn_branch(&curve, t_split, branch_prob, spec, rng)? {
            grow(child, depth + 1, branch_prob, spec, rng, net)?;
        }
    }
    Ok(())
}

/// Draws and rasterizes a full crack network on a `width x height` canvas.
pub fn rasterize_network<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    spec: &CrackSpec,
    rng: &mut R,
) -> Result<CrackNetwork> {
    spec.validate()?;
    let count = spec.curve_count.sample(rng);
    let branch_prob = spec.branch_prob.sample(rng);
    let mut net = CrackNetwork { raw: BinaryMask::empty(width, height)?, curves: Vec::new(), branch_prob };
    for _ in 0..count {
        let curve = sample_curve(rng, width, height, spec);
        grow(curve, 0, branch_prob, spec, rng, &mut net)?;
    }
    Ok(net)
}

/// Binary erosion by a `k x k` square anchored at `(k/2, k/2)`, so a 2x2
/// element covers the pixel and its up/left neighbors. Replicate borders.
pub fn erode_square(mask: &BinaryMask, k: usize) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let anchor = (k / 2) as i64;
    let (wi, hi) = (w as i64, h as i64);
    let mut out = vec![false; w * h];
    for y in 0..hi {
        for x in 0..wi {
            let mut keep = true;
            'win: for dy in 0..k as i64 {
                for dx in 0..k as i64 {
                    let sx = (x + dx - anchor).clamp(0, wi - 1) as usize;
                    let sy = (y + dy - anchor).clamp(0, hi - 1) as usize;
                    if !mask.get(sx, sy) {
                        keep = false;
                        break 'win;
                    }
                }
            }
            out[(y * wi + x) as usize] = keep;
        }
    }
    BinaryMask::new(w, h, out).expect("dimensions preserved")
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur of a single-channel image with replicate
/// padding; output is rounded half up to 8 bits.
pub fn gaussian_blur(img: &RasterImage, size: usize, sigma: f64) -> Result<RasterImage> {
    if !img.is_gray() {
        return Err(Error::NotGrayscale(img.channels()));
    }
    let (w, h) = img.dimensions();
    let kernel = gaussian_kernel(size, sigma);
    let half = (size / 2) as i64;
    let (wi, hi) = (w as i64, h as i64);
    let src = img.data();
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..wi {
            tmp[y * w + x as usize] = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * src[y * w + (x + k as i64 - half).clamp(0, wi - 1) as usize] as f64)
                .sum();
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..hi {
        for x in 0..w {
            let v: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * tmp[(y + k as i64 - half).clamp(0, hi - 1) as usize * w + x])
                .sum();
            out[y as usize * w + x] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
        }
    }
    RasterImage::new(w, h, 1, out)
}

/// Erodes a raw crack mask and blurs it as a 0/255 raster, giving the soft
/// mask before thresholding.
pub fn soften_mask(raw: &BinaryMask, spec: &CrackSpec) -> Result<RasterImage> {
    let eroded = erode_square(raw, spec.erosion_kernel);
    if eroded.is_empty() {
        return Ok(eroded.to_gray());
    }
    gaussian_blur(&eroded.to_gray(), spec.blur_kernel, spec.blur_sigma)
}

fn threshold_soft(soft: &RasterImage, level: u8) -> Result<BinaryMask> {
    let data = soft.data().iter().map(|&v| v > level).collect();
    BinaryMask::new(soft.width(), soft.height(), data)
}

/// Erodes, renders to 0/255, blurs and re-thresholds a raw crack mask.
pub fn refine_mask(raw: &BinaryMask, spec: &CrackSpec) -> Result<BinaryMask> {
    threshold_soft(&soften_mask(raw, spec)?, spec.mask_threshold)
}

/// Sets every masked pixel, all channels, to `crack_gray`.
pub fn apply_damage(clean: &RasterImage, mask: &BinaryMask, spec: &CrackSpec) -> Result<RasterImage> {
    check_dims(clean.width(), clean.height(), mask.width(), mask.height())?;
    let c = clean.channels();
    let mut out = clean.clone();
    let data = out.data_mut();
    for (i, &m) in mask.data().iter().enumerate() {
        if m {
            data[i * c..(i + 1) * c].fill(spec.crack_gray);
        }
    }
    Ok(out)
}

/// Aligned clean image, crack mask and damaged image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub clean: RasterImage,
    pub mask: BinaryMask,
    pub damaged: RasterImage,
}

/// Burns a fresh crack network, seeded by `spec.seed`, into `clean_source`
/// resized to the target size.
///
/// The network is drawn, eroded and blurred on the source grid, so crack
/// geometry is in source pixels. The soft mask is then area-resampled to
/// the target and thresholded; the clean image is resized bilinearly.
/// When the source already has the target size this reduces to
/// [`refine_mask`] on a network drawn at that size.
pub fn generate_triplet(clean_source: &RasterImage, spec: &CrackSpec) -> Result<Triplet> {
    spec.validate()?;
    let [w, h] = spec.target_size;
    let (sw, sh) = clean_source.dimensions();
    let clean = resize_bilinear(&clean_source.to_rgb(), w, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let net = rasterize_network(sw, sh, spec, &mut rng)?;
    let soft = resize_area(&soften_mask(&net.raw, spec)?, w, h)?;
    let mask = threshold_soft(&soft, spec.mask_threshold)?;
    let damaged = apply_damage(&clean, &mask, spec)?;
    Ok(Triplet { clean, mask, damaged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn curve(p: [(f64, f64); 4]) -> BezierCurve {
        let q: Vec<Point> = p.iter().map(|&(x, y)| Point::new(x, y)).collect();
        BezierCurve::new(q[0], q[1], q[2], q[3]).unwrap()
    }

    #[test]
    fn bezier_endpoints_and_midpoint() {
        let c = curve([(0.0, 0.0), (3.0, 9.0), (7.0, -2.0), (10.0, 4.0)]);
        assert_eq!(c.eval(0.0).unwrap(), c.p0);
        assert_eq!(c.eval(1.0).unwrap(), c.p3);
        let m = c.eval(0.5).unwrap();
        assert!((m.x - (0.0 + 9.0 + 21.0 + 10.0) / 8.0).abs() < 1e-12);
        assert!((m.y - (0.0 + 27.0 - 6.0 + 4.0) / 8.0).abs() < 1e-12);
        assert!(c.eval(1.5).is_err());
        assert!(c.eval(-0.1).is_err());
    }

    #[test]
    fn non_finite_control_points_rejected() {
        let p = Point::new(0.0, 0.0);
        assert!(BezierCurve::new(p, Point::new(f64::NAN, 0.0), p, p).is_err());
    }

    #[test]
    fn zero_sigma_gives_straight_curve() {
        let spec = CrackSpec { control_sigma: 0.0, ..Default::default() };
        let c = sample_curve(&mut rng(3), 100, 60, &spec);
        let third = c.p0.lerp(c.p3, 1.0 / 3.0);
        assert!((c.p1.x - third.x).abs() < 1e-12 && (c.p1.y - third.y).abs() < 1e-12);
        let two = c.p0.lerp(c.p3, 2.0 / 3.0);
        assert!((c.p2.x - two.x).abs() < 1e-12 && (c.p2.y - two.y).abs() < 1e-12);
    }

    #[test]
    fn sample_curve_deterministic_and_in_bounds() {
        let spec = CrackSpec::default();
        let a = sample_curve(&mut rng(9), 50, 40, &spec);
        let b = sample_curve(&mut rng(9), 50, 40, &spec);
        assert_eq!(a, b);
        for p in [a.p0, a.p3] {
            assert!((0.0..50.0).contains(&p.x) && (0.0..40.0).contains(&p.y));
        }
    }

    #[test]
    fn control_offsets_are_centered() {
        let spec = CrackSpec::default();
        let mut r = rng(2024);
        let n = 10_000;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let c = sample_curve(&mut r, 200, 100, &spec);
            let anchor = c.p0.lerp(c.p3, 1.0 / 3.0);
            sx += c.p1.x - anchor.x;
            sy += c.p1.y - anchor.y;
        }
        let bound = 3.0 * spec.control_sigma / (n as f64).sqrt();
        assert!((sx / n as f64).abs() < bound);
        assert!((sy / n as f64).abs() < bound);
    }

    #[test]
    fn taper_means() {
        assert_eq!(mean_radius(0.5, 2.0), 2.0);
        assert_eq!(mean_radius(0.0, 2.0), 1.0);
        assert_eq!(mean_radius(1.0, 2.0), 1.0);
    }

    #[test]
    fn sample_count_is_clamped_chord_length() {
        let spec = CrackSpec::default();
        assert_eq!(sample_count(&curve([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]), &spec), 80);
        assert_eq!(sample_count(&curve([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (120.4, 0.0)]), &spec), 120);
        assert_eq!(sample_count(&curve([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (500.0, 0.0)]), &spec), 180);
    }

    #[test]
    fn stamps_outside_canvas_are_clipped() {
        let mut m = BinaryMask::empty(10, 10).unwrap();
        stamp_disk(&mut m, Point::new(-20.0, 4.0), 2.0);
        stamp_disk(&mut m, Point::new(4.0, 40.0), 2.0);
        assert!(m.is_empty());
        stamp_disk(&mut m, Point::new(-1.0, 4.0), 2.0);
        assert!(m.get(0, 4) && m.get(1, 4) && !m.get(2, 4));
    }

    #[test]
    fn straight_crack_thickness_is_symmetric_and_tapered() {
        let spec = CrackSpec { radius_sigma: 0.0, ..Default::default() };
        // centered between pixel rows so radius changes show up in row counts
        let c = curve([(10.0, 20.5), (130.0 / 3.0, 20.5), (230.0 / 3.0, 20.5), (110.0, 20.5)]);
        let mut m = BinaryMask::empty(120, 40).unwrap();
        rasterize_crack(&c, &spec, &mut rng(0), &mut m);
        let thickness: Vec<usize> = (0..120).map(|x| (0..40).filter(|&y| m.get(x, y)).count()).collect();
        // midpoint column is x = 60
        for d in 0..=52 {
            assert_eq!(thickness[60 - d], thickness[60 + d], "asymmetric at offset {d}");
        }
        for x in 60..119 {
            assert!(thickness[x + 1] <= thickness[x], "thickness grows at column {x}");
        }
        assert_eq!(thickness[60], 4);
        assert_eq!(thickness[10], 2);
    }

    #[test]
    fn no_branch_when_probability_zero() {
        let spec = CrackSpec::default();
        let parent = curve([(0.0, 0.0), (10.0, 5.0), (20.0, -5.0), (30.0, 0.0)]);
        let mut r = rng(1);
        for _ in 0..500 {
            assert!(spawn_branch(&parent, 0.4, 0.0, &spec, &mut r).unwrap().is_none());
        }
        assert!(spawn_branch(&parent, 0.0, 1.0, &spec, &mut r).is_err());
        assert!(spawn_branch(&parent, 1.0, 1.0, &spec, &mut r).is_err());
    }

    #[test]
    fn identity_branch_follows_tangent() {
        let spec = CrackSpec {
            branch_angle_deg: Interval::new(0.0, 0.0),
            branch_scale: Interval::new(1.0, 1.0),
            control_sigma: 0.0,
            ..Default::default()
        };
        let parent = curve([(0.0, 0.0), (10.0, 15.0), (25.0, -5.0), (40.0, 8.0)]);
        let child = spawn_branch(&parent, 0.3, 1.0, &spec, &mut rng(4)).unwrap().unwrap();
        let tangent = parent.tangent(0.3);
        let chord = child.p3.sub(child.p0);
        assert!((chord.x - tangent.x).abs() < 1e-9 && (chord.y - tangent.y).abs() < 1e-9);
        let start = parent.eval(0.3).unwrap();
        assert!((child.p0.x - start.x).abs() < 1e-12 && (child.p0.y - start.y).abs() < 1e-12);
    }

    #[test]
    fn branch_geometry_within_configured_ranges() {
        let spec = CrackSpec::default();
        let parent = curve([(0.0, 0.0), (30.0, 0.0), (60.0, 0.0), (90.0, 0.0)]);
        let mut r = rng(77);
        for _ in 0..200 {
            let child = spawn_branch(&parent, 0.5, 1.0, &spec, &mut r).unwrap().unwrap();
            let chord = child.p3.sub(child.p0);
            let ratio = chord.norm() / 90.0;
            assert!((0.4 - 1e-9..=0.7 + 1e-9).contains(&ratio), "{ratio}");
            let angle = chord.y.atan2(chord.x).abs().to_degrees();
            assert!((20.0 - 1e-9..=60.0 + 1e-9).contains(&angle), "{angle}");
        }
    }

    #[test]
    fn refine_examples() {
        let spec = CrackSpec::default();
        let empty = BinaryMask::empty(12, 12).unwrap();
        assert!(refine_mask(&empty, &spec).unwrap().is_empty());
        let full = BinaryMask::full(12, 12).unwrap();
        assert_eq!(refine_mask(&full, &spec).unwrap(), full);
        let mut dot = BinaryMask::empty(12, 12).unwrap();
        dot.set(6, 6, true);
        assert!(erode_square(&dot, 2).is_empty());
        assert!(refine_mask(&dot, &spec).unwrap().is_empty());
    }

    #[test]
    fn two_by_two_erosion_anchor() {
        let mut m = BinaryMask::empty(6, 6).unwrap();
        for y in 1..4 {
            for x in 1..4 {
                m.set(x, y, true);
            }
        }
        let e = erode_square(&m, 2);
        // a 3x3 block shrinks to its lower-right 2x2
        assert_eq!(e.count(), 4);
        for (x, y) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            assert!(e.get(x, y));
        }
    }

    #[test]
    fn blur_kernel_normalized() {
        let k = gaussian_kernel(5, 2.0);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(k[2] > k[1] && k[1] > k[0] && (k[0] - k[4]).abs() < 1e-15);
        let c = RasterImage::filled(7, 7, 1, 255).unwrap();
        assert_eq!(gaussian_blur(&c, 5, 2.0).unwrap(), c);
    }

    #[test]
    fn damage_examples() {
        let spec = CrackSpec::default();
        let clean = RasterImage::new(2, 2, 3, (0..12).map(|v| v * 20).collect()).unwrap();
        let empty = BinaryMask::empty(2, 2).unwrap();
        assert_eq!(apply_damage(&clean, &empty, &spec).unwrap(), clean);
        let full = BinaryMask::full(2, 2).unwrap();
        assert!(apply_damage(&clean, &full, &spec).unwrap().data().iter().all(|&v| v == 40));
        let checker = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        let out = apply_damage(&clean, &checker, &spec).unwrap();
        for i in 0..4 {
            let expected: Vec<u8> =
                if checker.data()[i] { vec![40; 3] } else { clean.data()[i * 3..i * 3 + 3].to_vec() };
            assert_eq!(&out.data()[i * 3..i * 3 + 3], &expected[..]);
        }
        assert!(apply_damage(&clean, &BinaryMask::empty(3, 2).unwrap(), &spec).is_err());
    }

    #[test]
    fn zero_curves_leave_image_clean() {
        let spec =
            CrackSpec { curve_count: Interval::new(0, 0), target_size: [40, 30], ..Default::default() };
        let src = procedural_painting(80, 60, 1).unwrap();
        let t = generate_triplet(&src, &spec).unwrap();
        assert!(t.mask.is_empty());
        assert_eq!(t.damaged, t.clean);
        assert_eq!(t.clean, resize_bilinear(&src, 40, 30).unwrap());
    }

    #[test]
    fn same_size_source_matches_refined_network() {
        let spec = CrackSpec {
            curve_count: Interval::new(3, 6),
            target_size: [120, 90],
            seed: 77,
            ..Default::default()
        };
        let src = procedural_painting(120, 90, 2).unwrap();
        let t = generate_triplet(&src, &spec).unwrap();
        let net = rasterize_network(120, 90, &spec, &mut rng(77)).unwrap();
        assert_eq!(t.mask, refine_mask(&net.raw, &spec).unwrap());
        assert_eq!(t.clean, src);
        for (i, &m) in t.mask.data().iter().enumerate() {
            let px = &t.damaged.data()[i * 3..i * 3 + 3];
            if m {
                assert_eq!(px, &[40, 40, 40]);
            } else {
                assert_eq!(px, &t.clean.data()[i * 3..i * 3 + 3]);
            }
        }
    }

    #[test]
    fn triplet_is_deterministic_and_target_sized() {
        let spec = CrackSpec { target_size: [60, 40], seed: 5, ..Default::default() };
        let src = procedural_painting(180, 120, 9).unwrap();
        let a = generate_triplet(&src, &spec).unwrap();
        assert_eq!(a, generate_triplet(&src, &spec).unwrap());
        assert_eq!(a.mask.dimensions(), (60, 40));
        assert_eq!(a.damaged.dimensions(), (60, 40));
        let other = generate_triplet(&src, &CrackSpec { seed: 6, ..spec }).unwrap();
        assert_ne!(a.mask, other.mask);
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = [
            CrackSpec { curve_count: Interval::new(5, 4), ..Default::default() },
            CrackSpec { branch_prob: Interval::new(0.2, 1.5), ..Default::default() },
            CrackSpec { taper_alpha: 0.0, ..Default::default() },
            CrackSpec { taper_alpha: f64::NAN, ..Default::default() },
            CrackSpec { radius_sigma: -1.0, ..Default::default() },
            CrackSpec { blur_kernel: 4, ..Default::default() },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
        assert!(CrackSpec::default().validate().is_ok());
    }
}
