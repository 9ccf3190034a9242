//! Flow-consistent data augmentation. Every transform acts on the input
//! image, the background and the matte together so that the compositing
//! relation between them is preserved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::flow::FlowField;
use crate::matte::{composite_refractive, Matte};
use crate::raster::ImageBuffer;

pub const COLOR_LIMIT: f64 = 0.2;
pub const SCALE_RANGE: std::ops::RangeInclusive<f64> = 0.875..=1.05;
pub const NOISE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub scene_id: String,
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: ImageBuffer,
    pub background: ImageBuffer,
    pub matte: Matte,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn new(
        input: ImageBuffer,
        background: ImageBuffer,
        matte: Matte,
        meta: SampleMeta,
    ) -> Result<Self> {
        let s = Self {
            input,
            background,
            matte,
            meta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.input.dims()
    }

    pub fn validate(&self) -> Result<()> {
        self.input.same_shape(&self.background)?;
        check_dims(self.input.dims(), self.matte.dims())?;
        self.matte.validate()
    }

    fn map_images(&self, f: impl Fn(&ImageBuffer) -> ImageBuffer, matte: Matte) -> Sample {
        Sample {
            input: f(&self.input),
            background: f(&self.background),
            matte,
            meta: self.meta.clone(),
        }
    }
}

pub fn flip_horizontal(sample: &Sample) -> Sample {
    sample.map_images(ImageBuffer::flip_horizontal, sample.matte.flip_horizontal())
}

pub fn flip_vertical(sample: &Sample) -> Sample {
    sample.map_images(ImageBuffer::flip_vertical, sample.matte.flip_vertical())
}

/// Brightness, contrast and saturation offsets, each in `[-0.2, 0.2]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ColorJitter {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl ColorJitter {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
        ] {
            if v.is_nan() || v.abs() > COLOR_LIMIT {
                return Err(Error::invalid(format!(
                    "{name} delta {v} outside [-{COLOR_LIMIT}, {COLOR_LIMIT}]"
                )));
            }
        }
        Ok(())
    }

    /// `x + b`, then `(x - 0.5)(1 + c) + 0.5`, then a lerp away from the
    /// pixel's luma by `1 + s`; the result is clamped once at the end.
    pub fn apply(&self, image: &ImageBuffer) -> ImageBuffer {
        let mut out = image.clone();
        let ch = image.channels();
        for px in out.data_mut().chunks_mut(ch) {
            let mut v = [0.0f64; 3];
            for (c, p) in px.iter().enumerate() {
                let x = *p as f64 + self.brightness;
                v[c] = (x - 0.5) * (1.0 + self.contrast) + 0.5;
            }
            if ch == 3 {
                let luma = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
                for x in &mut v {
                    *x = luma + (*x - luma) * (1.0 + self.saturation);
                }
            }
            for (c, p) in px.iter_mut().enumerate() {
                *p = v[c].clamp(0.0, 1.0) as f32;
            }
        }
        out
    }
}

/// Applies the same color transform to the input and the background.
pub fn jitter_color(sample: &Sample, jitter: &ColorJitter) -> Result<Sample> {
    jitter.validate()?;
    if *jitter == ColorJitter::default() {
        return Ok(sample.clone());
    }
    Ok(sample.map_images(|i| jitter.apply(i), sample.matte.clone()))
}

/// Adds i.i.d. uniform noise in `[-amplitude, amplitude]` to the input.
pub fn add_noise(sample: &Sample, amplitude: f64, seed: u64) -> Result<Sample> {
    if !(0.0..=NOISE_LIMIT).contains(&amplitude) {
        return Err(Error::invalid(format!(
            "noise amplitude {amplitude} outside [0, {NOISE_LIMIT}]"
        )));
    }
    let mut out = sample.clone();
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.input.data_mut() {
        let n: f64 = rng.random_range(-amplitude..=amplitude);
        *v = (*v as f64 + n).clamp(0.0, 1.0) as f32;
    }
    Ok(out)
}

/// Rescales the sample by `factor`. Output sides are rounded to the
/// nearest integer and must stay at least `min_side`; flow offsets scale
/// by the realized per-axis ratio.
pub fn scale_sample(sample: &Sample, factor: f64, min_side: usize) -> Result<Sample> {
    if !SCALE_RANGE.contains(&factor) {
        return Err(Error::invalid(format!(
            "scale factor {factor} outside [{}, {}]",
            SCALE_RANGE.start(),
            SCALE_RANGE.end()
        )));
    }
    let (w, h) = sample.dims();
    let nw = (w as f64 * factor).round() as usize;
    let nh = (h as f64 * factor).round() as usize;
    if nw < min_side || nh < min_side {
        return Err(Error::invalid(format!(
            "scaling {w}x{h} by {factor} gives {nw}x{nh}, smaller than {min_side}"
        )));
    }
    if (nw, nh) == (w, h) {
        return Ok(sample.clone());
    }
    let resize = |i: &ImageBuffer| {
        let mut r = i.resize_bilinear(nw, nh);
        r.clamp01();
        r
    };
    let matte = Matte {
        mask: resize(&sample.matte.mask),
        attenuation: resize(&sample.matte.attenuation),
        flow: resize_flow(&sample.matte.flow, nw, nh),
    };
    Ok(sample.map_images(resize, matte))
}

/// Center-aligned flow resampling. Bilinear where all four neighbours are
/// valid, nearest neighbour otherwise.
fn resize_flow(flow: &FlowField, nw: usize, nh: usize) -> FlowField {
    let (w, h) = flow.dims();
    let sx = w as f64 / nw as f64;
    let sy = h as f64 / nh as f64;
    let mut out = FlowField::zeros(nw, nh);
    for y in 0..nh {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        for x in 0..nw {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let y0 = fy.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
            let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
            let source = if corners.iter().all(|&(cx, cy)| flow.is_valid(cx, cy)) {
                let wts = [
                    (1.0 - ax) * (1.0 - ay),
                    ax * (1.0 - ay),
                    (1.0 - ax) * ay,
                    ax * ay,
                ];
                let mut d = [0.0f64; 2];
                for (&(cx, cy), wt) in corners.iter().zip(wts) {
                    let o = flow.offset(cx, cy);
                    d[0] += wt * o[0] as f64;
                    d[1] += wt * o[1] as f64;
                }
                Some(d)
            } else {
                let (nx, ny) = (fx.round() as usize, fy.round() as usize);
                flow.get(nx, ny).map(|o| [o[0] as f64, o[1] as f64])
            };
            match source {
                Some([dx, dy]) => {
                    let dx = ((dx / sx) as f32).clamp(-(nw as f32), nw as f32);
                    let dy = ((dy / sy) as f32).clamp(-(nh as f32), nh as f32);
                    out.set(x, y, [dx, dy]);
                }
                None => out.set_invalid(x, y),
            }
        }
    }
    out
}

/// Softens the mask with a Gaussian (sigma = radius / 2) inside a band of
/// `ceil(radius)` pixels around mask transitions, then re-composites the
/// input with the softened matte. Newly covered pixels borrow attenuation
/// and flow from the nearest object pixel.
pub fn blur_boundary(sample: &Sample, radius: f64) -> Result<Sample> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("blur radius {radius} must be >= 0")));
    }
    let reach = radius.ceil() as isize;
    if reach == 0 {
        return Ok(sample.clone());
    }
    let old = &sample.matte;
    let (w, h) = old.dims();
    let m = |x: isize, y: isize| {
        old.mask.get(
            x.clamp(0, w as isize - 1) as usize,
            y.clamp(0, h as isize - 1) as usize,
            0,
        )
    };

    let mut transition = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let v = m(x, y);
            transition[y as usize * w + x as usize] = (-1..=1)
                .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
                .any(|(dx, dy)| m(x + dx, y + dy) != v);
        }
    }
    let mut band = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            if !transition[y as usize * w + x as usize] {
                continue;
            }
            for by in (y - reach).max(0)..=(y + reach).min(h as isize - 1) {
                for bx in (x - reach).max(0)..=(x + reach).min(w as isize - 1) {
                    band[by as usize * w + bx as usize] = true;
                }
            }
        }
    }
    if !band.contains(&true) {
        return Ok(sample.clone());
    }

    let sigma = radius / 2.0;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum::<f64>().powi(2);

    let mut matte = old.clone();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            if !band[i] {
                continue;
            }
            let mut acc = 0.0;
            for (ky, wy) in (-reach..=reach).zip(&kernel) {
                for (kx, wx) in (-reach..=reach).zip(&kernel) {
                    acc += wy * wx * m(x + kx, y + ky) as f64;
                }
            }
            let v = (acc / norm).clamp(0.0, 1.0) as f32;
            matte.mask.set(x as usize, y as usize, 0, v);
            if m(x, y) == 0.0 && v > 0.0 {
                if let Some((sx, sy)) = nearest_covered(old, x, y, reach) {
                    let a = old.attenuation.get(sx, sy, 0);
                    matte.attenuation.set(x as usize, y as usize, 0, a);
                    match old.flow.get(sx, sy) {
                        Some(o) => matte.flow.set(x as usize, y as usize, o),
                        None => matte.flow.set_invalid(x as usize, y as usize),
                    }
                }
            }
        }
    }

    let before = composite_refractive(old, &sample.background)?;
    let after = composite_refractive(&matte, &sample.background)?;
    let mut input = sample.input.clone();
    for ((v, a), b) in input
        .data_mut()
        .iter_mut()
        .zip(after.data())
        .zip(before.data())
    {
        *v = (*v + a - b).clamp(0.0, 1.0);
    }
    Ok(Sample {
        input,
        background: sample.background.clone(),
        matte,
        meta: sample.meta.clone(),
    })
}

fn nearest_covered(matte: &Matte, x: isize, y: isize, reach: isize) -> Option<(usize, usize)> {
    let (w, h) = matte.dims();
    let mut best: Option<(isize, (usize, usize))> = None;
    for sy in (y - reach).max(0)..=(y + reach).min(h as isize - 1) {
        for sx in (x - reach).max(0)..=(x + reach).min(w as isize - 1) {
            if matte.mask.get(sx as usize, sy as usize, 0) <= 0.0 {
                continue;
            }
            let d = (sx - x).pow(2) + (sy - y).pow(2);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, (sx as usize, sy as usize)));
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Cuts the same `size x size` window, placed by `seed`, from every member.
pub fn random_crop(sample: &Sample, size: usize, seed: u64) -> Result<Sample> {
    let (w, h) = sample.dims();
    if size == 0 || size > w || size > h {
        return Err(Error::invalid(format!(
            "crop size {size} does not fit a {w}x{h} sample"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = rng.random_range(0..=w - size);
    let y0 = rng.random_range(0..=h - size);
    Ok(Sample {
        input: sample.input.crop(x0, y0, size, size)?,
        background: sample.background.crop(x0, y0, size, size)?,
        matte: sample.matte.crop(x0, y0, size, size)?,
        meta: sample.meta.clone(),
    })
}

/// Augmentation settings. Ranges are symmetric half-widths or
/// `[min, max]` pairs and must lie inside the supported ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enabled: bool,
    pub color: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub noise: f64,
    pub flip_horizontal: f64,
    pub flip_vertical: f64,
    /// Side of the square output crop; 0 disables cropping.
    pub crop: usize,
    pub blur: bool,
    pub blur_radius: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            color: COLOR_LIMIT,
            scale_min: *SCALE_RANGE.start(),
            scale_max: *SCALE_RANGE.end(),
            noise: NOISE_LIMIT,
            flip_horizontal: 0.5,
            flip_vertical: 0.5,
            crop: 448,
            blur: true,
            blur_radius: 1.5,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Everything off: `augment` returns its input unchanged.
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..=COLOR_LIMIT).contains(&self.color) {
            return bad(format!("color {} outside [0, {COLOR_LIMIT}]", self.color));
        }
        if !(SCALE_RANGE.contains(&self.scale_min)
            && SCALE_RANGE.contains(&self.scale_max)
            && self.scale_min <= self.scale_max)
        {
            return bad(format!(
                "scale range [{}, {}] not inside [{}, {}]",
                self.scale_min,
                self.scale_max,
                SCALE_RANGE.start(),
                SCALE_RANGE.end()
            ));
        }
        if !(0.0..=NOISE_LIMIT).contains(&self.noise) {
            return bad(format!("noise {} outside [0, {NOISE_LIMIT}]", self.noise));
        }
        for p in [self.flip_horizontal, self.flip_vertical] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("flip probability {p} outside [0, 1]"));
            }
        }
        if !(self.blur_radius >= 0.0 && self.blur_radius.is_finite()) {
            return bad(format!("blur radius {} must be >= 0", self.blur_radius));
        }
        Ok(())
    }
}

/// Full pipeline in the order color, scale, noise, flips, boundary blur,
/// crop. Randomness comes from `config.seed` combined with the sample's
/// own seed, so a fixed pair always gives the same output.
pub fn augment(sample: &Sample, config: &AugmentConfig) -> Result<Sample> {
    config.validate()?;
    if !config.enabled {
        return Ok(sample.clone());
    }
    let (w, h) = sample.dims();
    if config.crop > w.min(h) {
        return Err(Error::invalid(format!(
            "crop size {} larger than the {w}x{h} sample",
            config.crop
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ sample.meta.seed.rotate_left(32));
    let mut sym = |a: f64| {
        if a > 0.0 {
            rng.random_range(-a..=a)
        } else {
            0.0
        }
    };
    let jitter = ColorJitter {
        brightness: sym(config.color),
        contrast: sym(config.color),
        saturation: sym(config.color),
    };
    let mut s = jitter_color(sample, &jitter)?;

    // smallest factor whose rounded size still fits the crop
    let side = w.min(h) as f64;
    let lo = config
        .scale_min
        .max((config.crop as f64 - 0.5 + 1e-9) / side);
    if lo > config.scale_max {
        return Err(Error::invalid(format!(
            "no scale in [{}, {}] keeps a {w}x{h} sample at least {} wide",
            config.scale_min, config.scale_max, config.crop
        )));
    }
    let factor = if config.scale_max > lo {
        rng.random_range(lo..=config.scale_max)
    } else {
        lo
    };
    s = scale_sample(&s, factor, config.crop)?;
    s = add_noise(&s, config.noise, rng.random())?;
    if rng.random_bool(config.flip_horizontal) {
        s = flip_horizontal(&s);
    }
    if rng.random_bool(config.flip_vertical) {
        s = flip_vertical(&s);
    }
    if config.blur {
        s = blur_boundary(&s, config.blur_radius)?;
    }
    if config.crop > 0 {
        s = random_crop(&s, config.crop, rng.random())?;
    }
    Ok(s)
}
