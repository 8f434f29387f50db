use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::image::RasterImage;

/// Renders a deterministic stand-in for a scanned light-toned painting:
/// a pale ground with smooth color washes, oriented brushstrokes, a few
/// darker accents and fine grain. Used when no source scans are available.
pub fn procedural_painting(width: usize, height: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let ground: [f64; 3] =
        [rng.random_range(238.0..250.0), rng.random_range(234.0..248.0), rng.random_range(222.0..242.0)];

    struct Wash {
        cx: f64,
        cy: f64,
        inv_two_s2: f64,
        tint: [f64; 3],
    }
    let washes: Vec<Wash> = (0..6)
        .map(|_| {
            let s = rng.random_range(0.15..0.45) * w.max(h);
            Wash {
                cx: rng.random::<f64>() * w,
                cy: rng.random::<f64>() * h,
                inv_two_s2: 1.0 / (2.0 * s * s),
                tint: [
                    rng.random_range(-10.0..6.0),
                    rng.random_range(-10.0..6.0),
                    rng.random_range(-14.0..6.0),
                ],
            }
        })
        .collect();

    let mut plane = vec![[0.0f64; 3]; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut px = ground;
            for wash in &washes {
                let dx = x as f64 - wash.cx;
                let dy = y as f64 - wash.cy;
                let g = (-(dx * dx + dy * dy) * wash.inv_two_s2).exp();
                for (v, t) in px.iter_mut().zip(wash.tint) {
                    *v += g * t;
                }
            }
            plane[y * width + x] = px;
        }
    }

    // Strokes follow one of two dominant directions, like a hatching hand.
    let dominant = [rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..std::f64::consts::PI)];
    let stroke_count = (width * height) / 60;
    for k in 0..stroke_count {
        let theta = dominant[k % 2] + rng.random_range(-0.3..0.3);
        let len: f64 = rng.random_range(6.0..22.0);
        let half_w: f64 = rng.random_range(0.6..1.8);
        let cx = rng.random::<f64>() * w;
        let cy = rng.random::<f64>() * h;
        let accent = rng.random::<f64>() < 0.04;
        let shift: f64 = if accent { -rng.random_range(25.0..55.0) } else { rng.random_range(-9.0..9.0) };
        let tint: [f64; 3] = [
            shift + rng.random_range(-3.0..3.0),
            shift + rng.random_range(-3.0..3.0),
            shift + rng.random_range(-3.0..3.0),
        ];
        let (s, c) = theta.sin_cos();
        let reach = (len / 2.0 + half_w).ceil() as i64;
        let (x0, y0) = (cx as i64, cy as i64);
        for py in (y0 - reach).max(0)..=(y0 + reach).min(height as i64 - 1) {
            for px in (x0 - reach).max(0)..=(x0 + reach).min(width as i64 - 1) {
                let dx = px as f64 - cx;
                let dy = py as f64 - cy;
                let along = dx * c + dy * s;
                let across = -dx * s + dy * c;
                if along.abs() > len / 2.0 || across.abs() > half_w {
                    continue;
                }
                // soft falloff across the stroke
                let wgt = 1.0 - (across.abs() / half_w).powi(2) * 0.5;
                let p = &mut plane[py as usize * width + px as usize];
                for ch in 0..3 {
                    p[ch] += tint[ch] * wgt;
                }
            }
        }
    }

    let mut data = Vec::with_capacity(width * height * 3);
    for px in &plane {
        let grain: f64 = rng.sample::<f64, _>(StandardNormal) * 1.5;
        for &v in px {
            data.push((v + grain).round().clamp(0.0, 255.0) as u8);
        }
    }
    RasterImage::new(width, height, 3, data)
}
