//! Raster image and mask types, 8-bit PNG I/O, luma conversion and
//! 8-connected component labeling.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit image with 1 (gray) or 3 (RGB) interleaved channels, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("dimensions must be positive, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("channel count must be 1 or 3, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// Samples of pixel `(x, y)`, one per channel.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Extracts channel `c` as a single-channel image.
    pub fn channel(&self, c: usize) -> RasterImage {
        assert!(c < self.channels, "channel index out of range");
        let data = self.data.chunks_exact(self.channels).map(|px| px[c]).collect();
        RasterImage { width: self.width, height: self.height, channels: 1, data }
    }

    /// Interleaves single-channel planes back into one image.
    pub fn from_planes(planes: &[RasterImage]) -> Result<RasterImage> {
        let first = planes.first().ok_or_else(|| Error::InvalidImage("no planes given".into()))?;
        let (w, h) = first.dimensions();
        for p in planes {
            if !p.is_gray() {
                return Err(Error::NotGrayscale(p.channels));
            }
            check_dims(w, h, p.width, p.height)?;
        }
        let n = planes.len();
        let mut data = vec![0u8; w * h * n];
        for (c, p) in planes.iter().enumerate() {
            for (i, &v) in p.data.iter().enumerate() {
                data[i * n + c] = v;
            }
        }
        RasterImage::new(w, h, n, data)
    }

    /// Replicates a gray image into three channels; RGB input is cloned.
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage { width: self.width, height: self.height, channels: 3, data }
    }
}

/// Boolean crack map, row-major, `true` = crack.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("dimensions must be positive, got {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// All-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Mask of every pixel where `image` (single channel) is nonzero.
    pub fn from_gray(image: &RasterImage) -> Result<Self> {
        if !image.is_gray() {
            return Err(Error::NotGrayscale(image.channels()));
        }
        Self::new(image.width(), image.height(), image.data().iter().map(|&v| v != 0).collect())
    }

    /// Renders as a single-channel 0/255 image.
    pub fn to_gray(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Fraction of pixels marked as crack.
    pub fn density(&self) -> f64 {
        self.count() as f64 / self.data.len() as f64
    }

    /// Pixelwise OR. Dimensions must match.
    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        check_dims(self.width, self.height, other.width, other.height)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a || b).collect();
        BinaryMask::new(self.width, self.height, data)
    }

    /// True when every crack pixel of `self` is also a crack pixel of `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dimensions() == other.dimensions() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Connected-component labels for a [`BinaryMask`]; 0 is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    component_count: u32,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn component_count(&self) -> u32 {
        self.component_count
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel area of each component; index 0 holds the background count.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.component_count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }
}

pub(crate) fn check_dims(ew: usize, eh: usize, aw: usize, ah: usize) -> Result<()> {
    if ew != aw || eh != ah {
        return Err(Error::DimensionMismatch { expected_w: ew, expected_h: eh, actual_w: aw, actual_h: ah });
    }
    Ok(())
}

/// Loads an 8-bit grayscale or RGB PNG. Alpha channels are dropped with a
/// warning; palette and 16-bit images are rejected.
pub fn load_png(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err =
        |e: png::DecodingError| Error::Decode { path: path.to_path_buf(), reason: e.to_string() };
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("bit depth {depth:?}, only 8-bit is supported"),
        });
    }
    let (src_channels, keep) = match color {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: "palette images are not supported".into(),
            })
        }
    };
    if src_channels != keep {
        log::warn!("{}: dropping alpha channel", path.display());
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Decode { path: path.to_path_buf(), reason: "image too large".into() })?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let line = frame.line_size;
    let mut data = Vec::with_capacity(w * h * keep);
    for row in buf.chunks_exact(line).take(h) {
        for px in row[..w * src_channels].chunks_exact(src_channels) {
            data.extend_from_slice(&px[..keep]);
        }
    }
    RasterImage::new(w, h, keep, data)
}

/// Writes an image as an 8-bit grayscale or RGB PNG.
pub fn save_png(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = if image.is_gray() { png::ColorType::Grayscale } else { png::ColorType::Rgb };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let enc_err = |e: png::EncodingError| Error::Encode { path: path.to_path_buf(), reason: e.to_string() };
    let mut encoder = png::Encoder::new(BufWriter::new(file), image.width() as u32, image.height() as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(enc_err)?;
    writer.write_image_data(image.data()).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

/// Writes a mask as a single-channel PNG with 255 = crack.
pub fn save_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    save_png(&mask.to_gray(), path)
}

/// Loads a mask PNG; any nonzero luma sample counts as crack.
pub fn load_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_png(path)?;
    BinaryMask::from_gray(&to_grayscale(&img))
}

/// Rec.601 luma, `round(0.299 R + 0.587 G + 0.114 B)` with halves rounded up.
/// Single-channel input is returned unchanged.
pub fn to_grayscale(image: &RasterImage) -> RasterImage {
    if image.is_gray() {
        return image.clone();
    }
    let data = image
        .data()
        .chunks_exact(3)
        .map(|p| {
            let weighted = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((weighted + 500) / 1000) as u8
        })
        .collect();
    RasterImage { width: image.width, height: image.height, channels: 1, data }
}

/// Bilinear resize with pixel-center alignment and edge clamping.
pub fn resize_bilinear(image: &RasterImage, width: usize, height: usize) -> Result<RasterImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!("resize target must be positive, got {width}x{height}")));
    }
    if image.dimensions() == (width, height) {
        return Ok(image.clone());
    }
    let c = image.channels();
    let sx = image.width() as f64 / width as f64;
    let sy = image.height() as f64 / height as f64;
    let axis = |dst: usize, scale: f64, src_len: usize| {
        let pos = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
        let i0 = (pos.floor() as usize).min(src_len - 1);
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, pos - i0 as f64)
    };
    let cols: Vec<_> = (0..width).map(|x| axis(x, sx, image.width())).collect();
    let mut data = Vec::with_capacity(width * height * c);
    for y in 0..height {
        let (y0, y1, fy) = axis(y, sy, image.height());
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                let top = image.get(x0, y0, ch) as f64 * (1.0 - fx) + image.get(x1, y0, ch) as f64 * fx;
                let bot = image.get(x0, y1, ch) as f64 * (1.0 - fx) + image.get(x1, y1, ch) as f64 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(width, height, c, data)
}

/// Area-averaging resize: each output pixel is the coverage-weighted mean
/// of the source pixels under its footprint. Suited to downscaling soft
/// masks, where bilinear point sampling would drop thin structures.
pub fn resize_area(image: &RasterImage, width: usize, height: usize) -> Result<RasterImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!("resize target must be positive, got {width}x{height}")));
    }
    if image.dimensions() == (width, height) {
        return Ok(image.clone());
    }
    let (sw, sh) = image.dimensions();
    let c = image.channels();
    // Per output coordinate: list of (source index, overlap length).
    let spans = |dst_len: usize, src_len: usize| -> Vec<Vec<(usize, f64)>> {
        let scale = src_len as f64 / dst_len as f64;
        (0..dst_len)
            .map(|d| {
                let (a, b) = (d as f64 * scale, (d + 1) as f64 * scale);
                let last = (b.ceil() as usize).min(src_len);
                (a.floor() as usize..last)
                    .map(|s| (s, (b.min(s as f64 + 1.0) - a.max(s as f64)).max(0.0)))
                    .filter(|&(_, o)| o > 0.0)
                    .collect()
            })
            .collect()
    };
    let xs = spans(width, sw);
    let ys = spans(height, sh);
    let mut data = Vec::with_capacity(width * height * c);
    let mut acc = vec![0.0f64; c];
    for yspan in &ys {
        for xspan in &xs {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut total = 0.0;
            for &(sy, oy) in yspan {
                for &(sx, ox) in xspan {
                    let wgt = ox * oy;
                    total += wgt;
                    for (ch, a) in acc.iter_mut().enumerate() {
                        *a += wgt * image.get(sx, sy, ch) as f64;
                    }
                }
            }
            data.extend(acc.iter().map(|&a| (a / total + 0.5).floor().clamp(0.0, 255.0) as u8));
        }
    }
    RasterImage::new(width, height, c, data)
}

/// Labels 8-connected components. Labels are dense and assigned in
/// raster-scan order of each component's first pixel.
pub fn label_components(mask: &BinaryMask) -> LabelMap {
    let (w, h) = mask.dimensions();
    let mut provisional = vec![0u32; w * h];
    // parent[0] is unused so provisional labels can index directly.
    let mut parent: Vec<u32> = vec![0];

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            let next = parent[x as usize];
            parent[x as usize] = parent[next as usize];
            x = next;
        }
        x
    }

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            // Already-visited neighbors: W, NW, N, NE.
            let mut neighbors = [0u32; 4];
            let mut n = 0;
            if x > 0 && provisional[y * w + x - 1] != 0 {
                neighbors[n] = provisional[y * w + x - 1];
                n += 1;
            }
            if y > 0 {
                let row = (y - 1) * w;
                if x > 0 && provisional[row + x - 1] != 0 {
                    neighbors[n] = provisional[row + x - 1];
                    n += 1;
                }
                if provisional[row + x] != 0 {
                    neighbors[n] = provisional[row + x];
                    n += 1;
                }
                if x + 1 < w && provisional[row + x + 1] != 0 {
                    neighbors[n] = provisional[row + x + 1];
                    n += 1;
                }
            }
            if n == 0 {
                let label = parent.len() as u32;
                parent.push(label);
                provisional[y * w + x] = label;
                continue;
            }
            let mut root = find(&mut parent, neighbors[0]);
            for &other in &neighbors[1..n] {
                let r = find(&mut parent, other);
                if r != root {
                    let (lo, hi) = if r < root { (r, root) } else { (root, r) };
                    parent[hi as usize] = lo;
                    root = lo;
                }
            }
            provisional[y * w + x] = root;
        }
    }

    let mut final_label = vec![0u32; parent.len()];
    let mut next = 0u32;
    let mut labels = vec![0u32; w * h];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p) as usize;
        if final_label[root] == 0 {
            next += 1;
            final_label[root] = next;
        }
        labels[i] = final_label[root];
    }

    LabelMap { width: w, height: h, labels, component_count: next }
}
