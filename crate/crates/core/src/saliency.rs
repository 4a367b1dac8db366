//! Saliency maps and the measurements taken from them.
//!
//! A map comes either from the built-in spectral-residual detector or from a
//! directory of maps exported by an external model (see [`SaliencyBackend`]).
//! From each map we take the saliency-weighted centroid, a binary mask of
//! pixels above `mean + k·std`, and the area and bounding box of that mask.

use std::cell::RefCell;
use std::path::PathBuf;

use realfft::RealFftPlanner;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::frame::{CropRect, Frame};
use crate::io::maps;

/// Per-pixel attention weights in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("saliency map dimensions must be positive"));
        }
        if values.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "saliency map has {} values, expected {}",
                values.len(),
                width as usize * height as usize
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("saliency value {v} outside [0, 1]")));
        }
        Ok(SaliencyMap {
            width,
            height,
            values,
        })
    }

    /// Divide by the maximum so the peak becomes 1. An all-zero input stays zero.
    pub fn max_normalized(width: u32, height: u32, mut values: Vec<f64>) -> Result<Self> {
        let max = values.iter().copied().fold(0.0_f64, f64::max);
        if max > 0.0 && max.is_finite() {
            values.iter_mut().for_each(|v| *v = (*v / max).max(0.0));
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        SaliencyMap::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Saliency-weighted centre of a map, in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
}

/// Row-major mask of salient pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "mask has {} bits, expected {}",
                bits.len(),
                width as usize * height as usize
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

/// Area and tight bounding box of a mask's true pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionStats {
    pub area: u64,
    pub bbox: Option<CropRect>,
}

/// Which map the centroid is taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CentroidSource {
    #[default]
    Raw,
    /// Only pixels above the `mean + k·std` threshold contribute.
    Thresholded,
}

/// Where saliency maps come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SaliencyBackend {
    /// Built-in spectral-residual detector followed by a box blur.
    SpectralResidual { blur_radius: u32 },
    /// Maps exported by an external model, laid out as
    /// `<dir>/<video_id>/<frame_index>.png` (8-bit grayscale) or `.csv`.
    FileStore { dir: PathBuf },
}

impl Default for SaliencyBackend {
    fn default() -> Self {
        SaliencyBackend::SpectralResidual {
            blur_radius: DEFAULT_BLUR_RADIUS,
        }
    }
}

pub const DEFAULT_BLUR_RADIUS: u32 = 4;

impl SaliencyBackend {
    /// Saliency of `frame`, which is frame `frame_index` of `video_id`.
    pub fn compute(&self, frame: &Frame, video_id: &str, frame_index: usize) -> Result<SaliencyMap> {
        match self {
            SaliencyBackend::SpectralResidual { blur_radius } => {
                Ok(spectral_residual_saliency(frame, *blur_radius))
            }
            SaliencyBackend::FileStore { dir } => {
                let map = maps::load_stored_map(dir, video_id, frame_index)?;
                if map.dims() != frame.dims() {
                    return Err(Error::DimensionMismatch {
                        expected: frame.dims(),
                        found: map.dims(),
                    });
                }
                Ok(map)
            }
        }
    }
}

/// Longest side of the grid the spectrum is analysed on.
pub const SPECTRAL_GRID_SIDE: u32 = 64;

/// Spectral-residual saliency of the frame's luma.
///
/// Larger frames are block-averaged by an integer factor until the longest
/// side is at most [`SPECTRAL_GRID_SIDE`]. On that grid the log-amplitude
/// spectrum minus its 3×3 local average is recombined with the original phase
/// and transformed back; the squared result is upsampled bilinearly to the
/// frame, box-blurred with `blur_radius` and max-normalized. Frequency bins
/// with no energy carry no phase and contribute nothing, so a featureless
/// frame maps to all zeros.
pub fn spectral_residual_saliency(frame: &Frame, blur_radius: u32) -> SaliencyMap {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    if w * h == 1 {
        return SaliencyMap::new(1, 1, vec![0.0]).expect("1x1 map");
    }
    let factor = w.max(h).div_ceil(SPECTRAL_GRID_SIDE as usize);
    let luma = frame.luma();
    let energy = if factor == 1 {
        residual_energy(luma, w, h)
    } else {
        let (small, gw, gh) = block_mean(&luma, w, h, factor);
        upsample(&residual_energy(small, gw, gh), gw, gh, factor, w, h)
    };
    let blurred = box_blur(&energy, w, h, blur_radius as usize);
    SaliencyMap::max_normalized(frame.width(), frame.height(), blurred).expect("valid dims")
}

/// Squared magnitude of the spectral residual of a `w×h` signal.
fn residual_energy(luma: Vec<f64>, w: usize, h: usize) -> Vec<f64> {
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    let mut real: Vec<f64> = luma.into_iter().map(|v| v - mean).collect();

    // The input is real, so only columns 0..=w/2 of the spectrum are kept
    // (column-major); the rest follow by conjugate symmetry.
    let mut spec = PLANS.with(|p| p.borrow_mut().forward(&mut real, w, h));

    // Amplitudes below this are round-off from exactly cancelling sums.
    let floor = 1e-9 * (w * h) as f64;
    let amp: Vec<f64> = spec.iter().map(|c| c.norm_sqr().sqrt()).collect();
    let live: Vec<bool> = amp.iter().map(|&a| a > floor).collect();
    let log_amp: Vec<f64> = amp.iter().map(|&a| (1.0 + a).ln()).collect();
    let avg = half_box_mean(&log_amp, &live, w, h);
    // Unit phase times exp(log amplitude − local average).
    for (i, c) in spec.iter_mut().enumerate() {
        *c = if live[i] {
            *c * ((1.0 + amp[i]) * (-avg[i]).exp() / amp[i])
        } else {
            Complex::new(0.0, 0.0)
        };
    }

    let back = PLANS.with(|p| p.borrow_mut().inverse(&mut spec, w, h));
    let scale = 1.0 / (w * h) as f64;
    back.iter().map(|v| (v * scale) * (v * scale)).collect()
}

/// Mean over `f×f` blocks; blocks cut by the frame edge average what they cover.
fn block_mean(v: &[f64], w: usize, h: usize, f: usize) -> (Vec<f64>, usize, usize) {
    let (gw, gh) = (w.div_ceil(f), h.div_ceil(f));
    let mut sum = vec![0.0; gw * gh];
    let mut count = vec![0.0; gw * gh];
    for y in 0..h {
        let row = (y / f) * gw;
        for x in 0..w {
            sum[row + x / f] += v[y * w + x];
            count[row + x / f] += 1.0;
        }
    }
    let mean = sum.iter().zip(&count).map(|(s, n)| s / n).collect();
    (mean, gw, gh)
}

/// Bilinear upsampling of a block grid back to `w×h`, aligning block centres.
fn upsample(g: &[f64], gw: usize, gh: usize, f: usize, w: usize, h: usize) -> Vec<f64> {
    let taps = |i: usize, n: usize| {
        let s = ((i as f64 + 0.5) / f as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s as usize;
        (i0, (i0 + 1).min(n - 1), s - i0 as f64)
    };
    let cols: Vec<_> = (0..w).map(|x| taps(x, gw)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (r0, r1, fy) = taps(y, gh);
        let (top, bottom) = (&g[r0 * gw..(r0 + 1) * gw], &g[r1 * gw..(r1 + 1) * gw]);
        for &(c0, c1, fx) in &cols {
            let t = top[c0] + (top[c1] - top[c0]) * fx;
            let b = bottom[c0] + (bottom[c1] - bottom[c0]) * fx;
            out.push(t + (b - t) * fy);
        }
    }
    out
}

struct Plans {
    real: RealFftPlanner<f64>,
    complex: FftPlanner<f64>,
}

thread_local! {
    // Plans are cached per thread so repeated frames of one size reuse them.
    static PLANS: RefCell<Plans> = RefCell::new(Plans {
        real: RealFftPlanner::new(),
        complex: FftPlanner::new(),
    });
}

impl Plans {
    /// Row-major real `w×h` input to the column-major half spectrum
    /// (`w/2 + 1` columns of `h` bins).
    fn forward(&mut self, data: &mut [f64], w: usize, h: usize) -> Vec<Complex<f64>> {
        let hw = w / 2 + 1;
        let r2c = self.real.plan_fft_forward(w);
        let mut rows = vec![Complex::new(0.0, 0.0); hw * h];
        for (src, dst) in data.chunks_exact_mut(w).zip(rows.chunks_exact_mut(hw)) {
            r2c.process(src, dst).expect("row buffers sized by the plan");
        }
        let mut cols = vec![Complex::new(0.0, 0.0); hw * h];
        for y in 0..h {
            for x in 0..hw {
                cols[x * h + y] = rows[y * hw + x];
            }
        }
        self.complex.plan_fft_forward(h).process(&mut cols);
        cols
    }

    /// Inverse of [`Plans::forward`], unnormalized.
    fn inverse(&mut self, cols: &mut [Complex<f64>], w: usize, h: usize) -> Vec<f64> {
        let hw = w / 2 + 1;
        self.complex.plan_fft_inverse(h).process(cols);
        let mut rows = vec![Complex::new(0.0, 0.0); hw * h];
        for x in 0..hw {
            for y in 0..h {
                rows[y * hw + x] = cols[x * h + y];
            }
        }
        let c2r = self.real.plan_fft_inverse(w);
        let mut out = vec![0.0; w * h];
        for (src, dst) in rows.chunks_exact_mut(hw).zip(out.chunks_exact_mut(w)) {
            // Self-conjugate bins are real up to round-off.
            src[0].im = 0.0;
            if w.is_multiple_of(2) {
                src[hw - 1].im = 0.0;
            }
            c2r.process(src, dst).expect("row buffers sized by the plan");
        }
        out
    }
}

/// 3×3 mean over live bins of the full periodic spectrum, evaluated on the
/// column-major half spectrum. Amplitudes are symmetric under `k → −k`, which
/// supplies the neighbours outside the stored half.
fn half_box_mean(v: &[f64], live: &[bool], w: usize, h: usize) -> Vec<f64> {
    let hw = w / 2 + 1;
    let index = |kx: usize, ky: usize| {
        if kx < hw {
            kx * h + ky
        } else {
            (w - kx) * h + (h - ky) % h
        }
    };
    // Sum over the three neighbouring frequency columns, then over rows.
    let mut col_sum = vec![0.0; hw * h];
    let mut col_count = vec![0.0; hw * h];
    for x in 0..hw {
        for kx in [(x + w - 1) % w, x, (x + 1) % w] {
            for y in 0..h {
                let i = index(kx, y);
                if live[i] {
                    col_sum[x * h + y] += v[i];
                    col_count[x * h + y] += 1.0;
                }
            }
        }
    }
    let mut out = vec![0.0; hw * h];
    for x in 0..hw {
        let (s, n) = (&col_sum[x * h..(x + 1) * h], &col_count[x * h..(x + 1) * h]);
        for y in 0..h {
            let (up, down) = ((y + h - 1) % h, (y + 1) % h);
            let count = n[up] + n[y] + n[down];
            if count > 0.5 {
                out[x * h + y] = (s[up] + s[y] + s[down]) / count;
            }
        }
    }
    out
}

/// Separable box blur with edge clamping.
fn box_blur(v: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return v.to_vec();
    }
    let mut tmp = vec![0.0; v.len()];
    for (src, dst) in v.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        blur_line(src, dst, r);
    }
    let mut col = vec![0.0; h];
    let mut blurred = vec![0.0; h];
    let mut out = vec![0.0; v.len()];
    for x in 0..w {
        for y in 0..h {
            col[y] = tmp[y * w + x];
        }
        blur_line(&col, &mut blurred, r);
        for y in 0..h {
            out[y * w + x] = blurred[y];
        }
    }
    out
}

/// Running-sum mean over `[i − r, i + r]` with indices clamped to the line.
fn blur_line(src: &[f64], dst: &mut [f64], r: usize) {
    let n = src.len();
    let at = |i: isize| src[i.clamp(0, n as isize - 1) as usize];
    let r = r as isize;
    let mut sum: f64 = (-r..=r).map(at).sum();
    let norm = 1.0 / (2 * r + 1) as f64;
    for (i, d) in dst.iter_mut().enumerate() {
        *d = sum * norm;
        let i = i as isize;
        sum += at(i + r + 1) - at(i - r);
    }
}

/// Saliency-weighted centre: `x = Σ col·S / Σ S`, `y = Σ row·S / Σ S`.
///
/// A map with zero total weight yields the geometric frame centre.
pub fn saliency_centroid(map: &SaliencyMap) -> Centroid {
    let w = map.width as usize;
    let (mut sum, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (row, line) in map.values.chunks_exact(w).enumerate() {
        let mut row_sum = 0.0;
        for (col, &s) in line.iter().enumerate() {
            row_sum += s;
            sx += col as f64 * s;
        }
        sum += row_sum;
        sy += row as f64 * row_sum;
    }
    if sum <= 0.0 {
        return Centroid {
            x: (map.width as f64 - 1.0) / 2.0,
            y: (map.height as f64 - 1.0) / 2.0,
        };
    }
    Centroid {
        x: (sx / sum).clamp(0.0, map.width as f64 - 1.0),
        y: (sy / sum).clamp(0.0, map.height as f64 - 1.0),
    }
}

/// Centroid of the map restricted to the pixels of `binarize(map, k)`.
pub fn thresholded_centroid(map: &SaliencyMap, k: f64) -> Centroid {
    let mask = binarize(map, k);
    let values = map
        .values
        .iter()
        .zip(&mask.bits)
        .map(|(&v, &b)| if b { v } else { 0.0 })
        .collect();
    saliency_centroid(&SaliencyMap {
        width: map.width,
        height: map.height,
        values,
    })
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mask of pixels strictly above `mean + k·std` (population std).
pub fn binarize(map: &SaliencyMap, k: f64) -> BinaryMask {
    let (mean, std) = mean_std(&map.values);
    let threshold = mean + k * std;
    BinaryMask {
        width: map.width,
        height: map.height,
        bits: map.values.iter().map(|&v| v > threshold).collect(),
    }
}

pub fn region_stats(mask: &BinaryMask) -> RegionStats {
    let w = mask.width as usize;
    let mut area = 0u64;
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for (i, _) in mask.bits.iter().enumerate().filter(|(_, b)| **b) {
        let (x, y) = (i % w, i / w);
        area += 1;
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let bbox = (area > 0).then(|| {
        CropRect::new(
            x0 as i64,
            y0 as i64,
            (x1 - x0 + 1) as i64,
            (y1 - y0 + 1) as i64,
        )
    });
    RegionStats { area, bbox }
}

/// Thresholded salient area of each map, `a₀ … aₙ`.
pub fn area_series(maps: &[SaliencyMap], k: f64) -> Result<Vec<f64>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("area series needs at least one map"))?;
    if let Some(bad) = maps.iter().find(|m| m.dims() != first.dims()) {
        return Err(Error::DimensionMismatch {
            expected: first.dims(),
            found: bad.dims(),
        });
    }
    Ok(maps
        .iter()
        .map(|m| region_stats(&binarize(m, k)).area as f64)
        .collect())
}
