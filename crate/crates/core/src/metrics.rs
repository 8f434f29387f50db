//! Detection metrics over binary masks and restoration metrics over image
//! pairs, plus the per-image / mean report written by `evaluate`.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::{check_dims, to_grayscale, BinaryMask, RasterImage};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

/// SSIM window side.
pub const SSIM_WINDOW: usize = 8;

const SSIM_C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const SSIM_C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Pixel counts with crack as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }
}

pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts> {
    check_dims(truth.width(), truth.height(), pred.width(), pred.height())?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Detection scores as fractions (accuracy, f1, iou, dice in [0,1], mcc in [-1,1]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub iou: f64,
    pub dice: f64,
    pub mcc: f64,
}

/// Standard pixel-level scores. When both masks are empty, f1, iou and dice
/// are 1; mcc is 0 whenever a marginal count vanishes.
pub fn detection_metrics(c: &ConfusionCounts) -> Result<DetectionMetrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::InvalidParameter("confusion counts are all zero".into()));
    }
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let accuracy = (tp + tn) / total as f64;
    let (f1, iou) = if c.tp + c.fp + c.fn_ == 0 {
        (1.0, 1.0)
    } else {
        (2.0 * tp / (2.0 * tp + fp + fn_), tp / (tp + fp + fn_))
    };
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / denom.sqrt() };
    Ok(DetectionMetrics { accuracy, f1, iou, dice: f1, mcc })
}

fn luma_f64(img: &RasterImage) -> Vec<f64> {
    to_grayscale(img).data().iter().map(|&v| v as f64).collect()
}

fn check_pair(a: &RasterImage, b: &RasterImage) -> Result<()> {
    check_dims(a.width(), a.height(), b.width(), b.height())
}

/// Mean SSIM over all 8x8 uniform windows (stride 1) of the luma planes,
/// as a fraction in [-1, 1]. Images narrower than 8 px use a window
/// clamped to the image size.
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_pair(a, b)?;
    let (w, h) = a.dimensions();
    let x = luma_f64(a);
    let y = luma_f64(b);
    let (ww, wh) = (SSIM_WINDOW.min(w), SSIM_WINDOW.min(h));

    // Summed-area tables of x, y, x^2, y^2, xy with a zero top row/column.
    let stride = w + 1;
    let mut tables = vec![[0.0f64; 5]; stride * (h + 1)];
    for r in 0..h {
        let mut row = [0.0f64; 5];
        for col in 0..w {
            let (p, q) = (x[r * w + col], y[r * w + col]);
            let vals = [p, q, p * p, q * q, p * q];
            for k in 0..5 {
                row[k] += vals[k];
                tables[(r + 1) * stride + col + 1][k] = tables[r * stride + col + 1][k] + row[k];
            }
        }
    }
    let n = (ww * wh) as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    for r in 0..=h - wh {
        for col in 0..=w - ww {
            let s = |k: usize| {
                tables[(r + wh) * stride + col + ww][k]
                    - tables[r * stride + col + ww][k]
                    - tables[(r + wh) * stride + col][k]
                    + tables[r * stride + col][k]
            };
            let mx = s(0) / n;
            let my = s(1) / n;
            let vx = (s(2) / n - mx * mx).max(0.0);
            let vy = (s(3) / n - my * my).max(0.0);
            let cov = s(4) / n - mx * my;
            let num = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2);
            acc += num / den;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

fn mse(a: &RasterImage, b: &RasterImage) -> f64 {
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum();
    sum / a.data().len() as f64
}

/// Peak signal-to-noise ratio over all channels, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_pair(a, b)?;
    if a.channels() != b.channels() {
        return Err(Error::InvalidParameter("channel count mismatch".into()));
    }
    let m = mse(a, b);
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (255.0f64 * 255.0 / m).log10()).min(PSNR_CAP_DB))
}

/// Mean absolute error over all samples, in intensity units.
pub fn mae(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_pair(a, b)?;
    if a.channels() != b.channels() {
        return Err(Error::InvalidParameter("channel count mismatch".into()));
    }
    let sum: u64 = a.data().iter().zip(b.data()).map(|(&p, &q)| p.abs_diff(q) as u64).sum();
    Ok(sum as f64 / a.data().len() as f64)
}

fn two_decimals<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 100.0).round() / 100.0)
}

/// Detection scores on the percent scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    #[serde(serialize_with = "two_decimals")]
    pub accuracy: f64,
    #[serde(serialize_with = "two_decimals")]
    pub f1: f64,
    #[serde(serialize_with = "two_decimals")]
    pub iou: f64,
    #[serde(serialize_with = "two_decimals")]
    pub dice: f64,
    #[serde(serialize_with = "two_decimals")]
    pub mcc: f64,
}

impl From<DetectionMetrics> for DetectionScores {
    fn from(m: DetectionMetrics) -> Self {
        Self {
            accuracy: m.accuracy * 100.0,
            f1: m.f1 * 100.0,
            iou: m.iou * 100.0,
            dice: m.dice * 100.0,
            mcc: m.mcc * 100.0,
        }
    }
}

/// Restoration scores; SSIM on the percent scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestorationScores {
    #[serde(serialize_with = "two_decimals")]
    pub ssim: f64,
    pub psnr_db: f64,
    pub mae: f64,
}

impl RestorationScores {
    pub fn compute(restored: &RasterImage, clean: &RasterImage) -> Result<Self> {
        Ok(Self {
            ssim: ssim(restored, clean)? * 100.0,
            psnr_db: psnr(restored, clean)?,
            mae: mae(restored, clean)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub image_id: String,
    pub config_hash: String,
    pub timestamp: String,
    /// Restoration metrics are computed over the whole image, not only crack pixels.
    #[serde(default = "default_scope")]
    pub scope: String,
}

fn default_scope() -> String {
    "global".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detection: Option<DetectionScores>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub restoration: Option<RestorationScores>,
    pub meta: ReportMeta,
}

impl MetricsReport {
    pub fn new(image_id: impl Into<String>) -> Self {
        Self {
            detection: None,
            restoration: None,
            meta: ReportMeta { image_id: image_id.into(), scope: default_scope(), ..Default::default() },
        }
    }
}

fn mean_of<T: Copy>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).sum::<f64>() / items.len() as f64
}

/// Arithmetic mean of every metric across reports. Sections missing from
/// some reports are averaged over the reports that have them.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot aggregate an empty report list".into()))?;
    let det: Vec<DetectionScores> = reports.iter().filter_map(|r| r.detection).collect();
    let res: Vec<RestorationScores> = reports.iter().filter_map(|r| r.restoration).collect();
    let detection = (!det.is_empty()).then(|| DetectionScores {
        accuracy: mean_of(&det, |d| d.accuracy),
        f1: mean_of(&det, |d| d.f1),
        iou: mean_of(&det, |d| d.iou),
        dice: mean_of(&det, |d| d.dice),
        mcc: mean_of(&det, |d| d.mcc),
    });
    let restoration = (!res.is_empty()).then(|| RestorationScores {
        ssim: mean_of(&res, |r| r.ssim),
        psnr_db: mean_of(&res, |r| r.psnr_db),
        mae: mean_of(&res, |r| r.mae),
    });
    Ok(MetricsReport {
        detection,
        restoration,
        meta: ReportMeta {
            image_id: "MEAN".into(),
            config_hash: first.meta.config_hash.clone(),
            timestamp: first.meta.timestamp.clone(),
            scope: first.meta.scope.clone(),
        },
    })
}

/// Fixed-width table with one row per report.
pub fn format_table(rows: &[MetricsReport]) -> String {
    let mut out = format!(
        "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} | {:>7} {:>8} {:>7}\n",
        "image", "Acc", "F1", "IoU", "Dice", "MCC", "SSIM", "PSNR", "MAE"
    );
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    for r in rows {
        let d = r.detection;
        let s = r.restoration;
        out.push_str(&format!(
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7} | {:>7} {:>8} {:>7}\n",
            r.meta.image_id,
            cell(d.map(|d| d.accuracy)),
            cell(d.map(|d| d.f1)),
            cell(d.map(|d| d.iou)),
            cell(d.map(|d| d.dice)),
            cell(d.map(|d| d.mcc)),
            cell(s.map(|s| s.ssim)),
            cell(s.map(|s| s.psnr_db)),
            cell(s.map(|s| s.mae)),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_examples() {
        let truth = BinaryMask::new(3, 1, vec![true, true, false]).unwrap();
        assert_eq!(confusion(&truth, &truth).unwrap(), counts(2, 0, 0, 1));
        let empty = BinaryMask::empty(3, 1).unwrap();
        assert_eq!(confusion(&empty, &truth).unwrap().fn_, 2);
        // 3x3 enumeration
        let p =
            BinaryMask::new(3, 3, vec![true, true, false, false, true, false, false, false, true]).unwrap();
        let t =
            BinaryMask::new(3, 3, vec![true, false, false, true, true, false, false, false, false]).unwrap();
        assert_eq!(confusion(&p, &t).unwrap(), counts(2, 2, 1, 4));
        let wrong = BinaryMask::empty(2, 2).unwrap();
        assert!(confusion(&wrong, &t).is_err());
    }

    #[test]
    fn perfect_and_disjoint() {
        let m = detection_metrics(&counts(5, 0, 0, 20)).unwrap();
        assert_eq!((m.accuracy, m.f1, m.iou, m.dice, m.mcc), (1.0, 1.0, 1.0, 1.0, 1.0));
        let d = detection_metrics(&counts(0, 3, 4, 10)).unwrap();
        assert_eq!((d.f1, d.iou), (0.0, 0.0));
    }

    #[test]
    fn worked_example() {
        let m = detection_metrics(&counts(1, 1, 1, 6)).unwrap();
        assert!((m.f1 - 0.5).abs() < 1e-12);
        assert!((m.iou - 1.0 / 3.0).abs() < 1e-12);
        // (6 - 1) / sqrt(2 * 2 * 7 * 7) = 5 / 14
        assert!((m.mcc - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn empty_vs_empty_is_perfect() {
        let m = detection_metrics(&counts(0, 0, 0, 9)).unwrap();
        assert_eq!((m.f1, m.iou, m.dice), (1.0, 1.0, 1.0));
        assert_eq!(m.mcc, 0.0);
        assert!(detection_metrics(&counts(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn ssim_identity_and_constants() {
        let img = RasterImage::new(10, 9, 1, (0..90).map(|v| (v * 2) as u8).collect()).unwrap();
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        let c = RasterImage::filled(12, 12, 3, 60).unwrap();
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        let small = RasterImage::filled(4, 3, 1, 10).unwrap();
        assert!((ssim(&small, &small).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&img, &c).is_err());
    }

    #[test]
    fn ssim_decreases_with_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let base: Vec<u8> = (0..32 * 32).map(|i| (60 + (i % 32) * 4) as u8).collect();
        let a = RasterImage::new(32, 32, 1, base.clone()).unwrap();
        let noise: Vec<f64> = (0..base.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noisy = |amp: f64| {
            let d = base
                .iter()
                .zip(&noise)
                .map(|(&v, &n)| (v as f64 + amp * n).round().clamp(0.0, 255.0) as u8)
                .collect();
            RasterImage::new(32, 32, 1, d).unwrap()
        };
        let s: Vec<f64> = [10.0, 40.0, 90.0].iter().map(|&a_| ssim(&a, &noisy(a_)).unwrap()).collect();
        assert!(s[0] < 1.0 && s[0] > s[1] && s[1] > s[2], "{s:?}");
        let b = noisy(40.0);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn psnr_mae_examples() {
        let a = RasterImage::filled(10, 10, 1, 0).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let b = RasterImage::filled(10, 10, 1, 255).unwrap();
        assert_eq!(mae(&a, &b).unwrap(), 255.0);
        assert!(psnr(&a, &b).unwrap().abs() < 1e-12);
        let mut c = RasterImage::filled(10, 10, 1, 100).unwrap();
        let d = c.clone();
        c.set(3, 4, 0, 110);
        assert!((mae(&c, &d).unwrap() - 0.1).abs() < 1e-12);
        assert!((psnr(&c, &d).unwrap() - 10.0 * (255.0f64 * 255.0).log10()).abs() < 1e-9);
    }

    fn report_with_accuracy(acc: f64) -> MetricsReport {
        let mut r = MetricsReport::new("x");
        r.detection = Some(DetectionScores { accuracy: acc, f1: acc, iou: 0.0, dice: 0.0, mcc: 0.0 });
        r
    }

    #[test]
    fn aggregate_examples() {
        let one = report_with_accuracy(40.0);
        let mean = aggregate(std::slice::from_ref(&one)).unwrap();
        assert_eq!(mean.detection, one.detection);
        let two = aggregate(&[report_with_accuracy(40.0), report_with_accuracy(60.0)]).unwrap();
        assert_eq!(two.detection.unwrap().f1, 50.0);
        assert_eq!(two.meta.image_id, "MEAN");
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn report_json_keys() {
        let mut r = report_with_accuracy(85.1925);
        r.restoration = Some(RestorationScores { ssim: 64.871, psnr_db: 30.0, mae: 1.234 });
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["detection"]["accuracy"], 85.19);
        for k in ["accuracy", "f1", "iou", "dice", "mcc"] {
            assert!(v["detection"].get(k).is_some());
        }
        for k in ["ssim", "psnr_db", "mae"] {
            assert!(v["restoration"].get(k).is_some());
        }
        assert_eq!(v["restoration"]["ssim"], 64.87);
        assert_eq!(v["meta"]["scope"], "global");
    }
}
