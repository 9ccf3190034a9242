//! The refractive matte and the compositing operators built on it.

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::flow::FlowField;
use crate::raster::ImageBuffer;

/// Object mask, attenuation and refractive flow for one view.
///
/// The mask is stored as a real value in `[0, 1]`; binary mattes are the
/// special case. Background pixels conventionally carry mask 0,
/// attenuation 1 and zero flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Matte {
    pub mask: ImageBuffer,
    pub attenuation: ImageBuffer,
    pub flow: FlowField,
}

impl Matte {
    pub fn new(mask: ImageBuffer, attenuation: ImageBuffer, flow: FlowField) -> Result<Self> {
        if mask.channels() != 1 || attenuation.channels() != 1 {
            return Err(Error::invalid(
                "mask and attenuation must be single-channel",
            ));
        }
        check_dims(mask.dims(), attenuation.dims())?;
        check_dims(mask.dims(), flow.dims())?;
        Ok(Self {
            mask,
            attenuation,
            flow,
        })
    }

    /// A matte with no object: mask 0, attenuation 1, zero flow.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            mask: ImageBuffer::new(width, height, 1),
            attenuation: ImageBuffer::filled(width, height, 1, 1.0),
            flow: FlowField::zeros(width, height),
        }
    }

    /// Whole frame as object, no attenuation, no flow. Composites to the
    /// background exactly.
    pub fn identity(width: usize, height: usize) -> Self {
        Self {
            mask: ImageBuffer::filled(width, height, 1, 1.0),
            attenuation: ImageBuffer::filled(width, height, 1, 1.0),
            flow: FlowField::zeros(width, height),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.mask.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.mask.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    /// Checks every structural and range invariant of the matte.
    pub fn validate(&self) -> Result<()> {
        if self.mask.channels() != 1 || self.attenuation.channels() != 1 {
            return Err(Error::Validation(
                "mask and attenuation must be single-channel".into(),
            ));
        }
        check_dims(self.mask.dims(), self.attenuation.dims())?;
        check_dims(self.mask.dims(), self.flow.dims())?;
        for (name, plane) in [("mask", &self.mask), ("attenuation", &self.attenuation)] {
            if let Some(v) = plane.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Validation(format!(
                    "{name} value {v} outside [0, 1]"
                )));
            }
        }
        self.flow.validate()
    }

    pub fn flip_horizontal(&self) -> Matte {
        Matte {
            mask: self.mask.flip_horizontal(),
            attenuation: self.attenuation.flip_horizontal(),
            flow: self.flow.flip_horizontal(),
        }
    }

    pub fn flip_vertical(&self) -> Matte {
        Matte {
            mask: self.mask.flip_vertical(),
            attenuation: self.attenuation.flip_vertical(),
            flow: self.flow.flip_vertical(),
        }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Matte> {
        Ok(Matte {
            mask: self.mask.crop(x0, y0, w, h)?,
            attenuation: self.attenuation.crop(x0, y0, w, h)?,
            flow: self.flow.crop(x0, y0, w, h)?,
        })
    }
}

/// Side information from [`composite_refractive_with_summary`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompositeSummary {
    /// Pixels with `mask > 0` whose flow is flagged invalid; these were
    /// composited as if their flow were zero.
    pub invalid_flow_pixels: usize,
}

/// Refractive compositing:
/// `C(p) = (1 - m(p)) B(p) + m(p) rho(p) B(p + flow(p))`
/// with bilinear, border-clamped sampling of `B`.
pub fn composite_refractive(matte: &Matte, background: &ImageBuffer) -> Result<ImageBuffer> {
    composite_refractive_with_summary(matte, background).map(|(img, _)| img)
}

pub fn composite_refractive_with_summary(
    matte: &Matte,
    background: &ImageBuffer,
) -> Result<(ImageBuffer, CompositeSummary)> {
    check_dims(matte.dims(), background.dims())?;
    let (w, _) = matte.dims();
    let ch = background.channels();
    let mut out = background.clone();
    if out.is_empty() {
        return Ok((out, CompositeSummary::default()));
    }

    let invalid = out
        .data_mut()
        .par_chunks_mut(w * ch)
        .enumerate()
        .map(|(y, row)| {
            let mut invalid = 0usize;
            let mut sampled = [0.0f64; 3];
            for x in 0..w {
                let m = matte.mask.get(x, y, 0) as f64;
                if m == 0.0 {
                    continue;
                }
                let rho = matte.attenuation.get(x, y, 0) as f64;
                let (sx, sy) = match matte.flow.get(x, y) {
                    Some([dx, dy]) => (x as f64 + dx as f64, y as f64 + dy as f64),
                    None => {
                        invalid += 1;
                        (x as f64, y as f64)
                    }
                };
                background.sample_into(sx, sy, &mut sampled);
                let px = &mut row[x * ch..(x + 1) * ch];
                for (c, v) in px.iter_mut().enumerate() {
                    let b = *v as f64;
                    *v = ((1.0 - m) * b + m * rho * sampled[c]).clamp(0.0, 1.0) as f32;
                }
            }
            invalid
        })
        .sum();

    Ok((
        out,
        CompositeSummary {
            invalid_flow_pixels: invalid,
        },
    ))
}

/// Classic matting equation `C = F + (1 - alpha) B`, clamped to `[0, 1]`.
///
/// `foreground` is premultiplied; `alpha` is a single-channel plane.
pub fn composite_alpha(
    foreground: &ImageBuffer,
    background: &ImageBuffer,
    alpha: &ImageBuffer,
) -> Result<ImageBuffer> {
    foreground.same_shape(background)?;
    check_dims(foreground.dims(), alpha.dims())?;
    if alpha.channels() != 1 {
        return Err(Error::invalid("alpha must be single-channel"));
    }
    let ch = foreground.channels();
    let data = foreground
        .data()
        .iter()
        .zip(background.data())
        .enumerate()
        .map(|(i, (&f, &b))| {
            let a = alpha.data()[i / ch] as f64;
            (f as f64 + (1.0 - a) * b as f64).clamp(0.0, 1.0) as f32
        })
        .collect();
    ImageBuffer::from_vec(foreground.width(), foreground.height(), ch, data)
}
