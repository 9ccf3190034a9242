//! Gray-code structured light: pattern generation and per-pixel decoding of
//! a transparent object's refractive flow, mask and attenuation.
//!
//! Patterns use the reflected binary code, most significant bit first,
//! all column (x) planes before the row (y) planes. With complements on,
//! each plane is immediately followed by its inversion.

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::matte::{composite_refractive, Matte};
use crate::raster::ImageBuffer;
use crate::render::{LightTransport, Scene};

/// Reflected binary Gray code of `n`.
#[inline]
pub fn gray_encode(n: u32) -> u32 {
    n ^ (n >> 1)
}

/// Inverse of [`gray_encode`].
#[inline]
pub fn gray_decode(g: u32) -> u32 {
    let mut n = g;
    let mut shift = 1;
    while shift < u32::BITS {
        n ^= n >> shift;
        shift <<= 1;
    }
    n
}

/// Number of bits needed to index `n` positions (`ceil(log2 n)`).
pub fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Identity of one pattern in a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternRole {
    pub axis: Axis,
    /// Bit plane, 0 = most significant.
    pub bit: usize,
    pub complement: bool,
}

/// Ordered pattern layout for a `width x height` background.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackLayout {
    pub width: usize,
    pub height: usize,
    pub bits_x: usize,
    pub bits_y: usize,
    pub with_complements: bool,
}

impl StackLayout {
    pub fn new(width: usize, height: usize, with_complements: bool) -> Self {
        Self {
            width,
            height,
            bits_x: bits_for(width),
            bits_y: bits_for(height),
            with_complements,
        }
    }

    pub fn len(&self) -> usize {
        (self.bits_x + self.bits_y) * if self.with_complements { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn roles(&self) -> Vec<PatternRole> {
        let planes = (0..self.bits_x)
            .map(|bit| (Axis::X, bit))
            .chain((0..self.bits_y).map(|bit| (Axis::Y, bit)));
        let mut roles = Vec::with_capacity(self.len());
        for (axis, bit) in planes {
            roles.push(PatternRole {
                axis,
                bit,
                complement: false,
            });
            if self.with_complements {
                roles.push(PatternRole {
                    axis,
                    bit,
                    complement: true,
                });
            }
        }
        roles
    }

    /// Stack position of a role.
    pub fn index_of(&self, role: PatternRole) -> usize {
        let plane = match role.axis {
            Axis::X => role.bit,
            Axis::Y => self.bits_x + role.bit,
        };
        if self.with_complements {
            2 * plane + role.complement as usize
        } else {
            plane
        }
    }

    fn bits(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.bits_x,
            Axis::Y => self.bits_y,
        }
    }
}

/// Binary Gray-code patterns, one single-channel image per role.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternStack {
    pub layout: StackLayout,
    pub patterns: Vec<ImageBuffer>,
}

impl PatternStack {
    pub fn roles(&self) -> Vec<PatternRole> {
        self.layout.roles()
    }
}

/// Builds the full pattern stack for a `width x height` background.
pub fn generate_pattern_stack(
    width: usize,
    height: usize,
    with_complements: bool,
) -> Result<PatternStack> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(format!(
            "pattern size must be at least 2x2, got {width}x{height}"
        )));
    }
    let layout = StackLayout::new(width, height, with_complements);
    let patterns = layout
        .roles()
        .into_iter()
        .map(|role| {
            let bits = layout.bits(role.axis);
            let shift = bits - 1 - role.bit;
            ImageBuffer::from_fn(width, height, 1, |x, y, _| {
                let coord = match role.axis {
                    Axis::X => x,
                    Axis::Y => y,
                } as u32;
                let on = (gray_encode(coord) >> shift) & 1 == 1;
                if on != role.complement {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(PatternStack { layout, patterns })
}

/// Images of one scene in front of a black background (object rendered
/// white), a white background, and every pattern of a stack.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStack {
    /// Size of the displayed pattern images; decoded coordinates index it.
    pub layout: StackLayout,
    pub black: ImageBuffer,
    pub white: ImageBuffer,
    pub patterns: Vec<ImageBuffer>,
}

impl CaptureStack {
    pub fn new(
        layout: StackLayout,
        black: ImageBuffer,
        white: ImageBuffer,
        patterns: Vec<ImageBuffer>,
    ) -> Result<Self> {
        let stack = Self {
            layout,
            black: black.to_gray(),
            white: white.to_gray(),
            patterns: patterns.iter().map(ImageBuffer::to_gray).collect(),
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.black.dims();
        check_dims(dims, self.white.dims())?;
        for p in &self.patterns {
            check_dims(dims, p.dims())?;
        }
        if self.patterns.len() != self.layout.len() {
            return Err(Error::invalid(format!(
                "{} pattern captures, but a {}x{} stack needs {}",
                self.patterns.len(),
                self.layout.width,
                self.layout.height,
                self.layout.len()
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        self.black.dims()
    }

    /// Captures synthesized from a known matte by compositing it over each
    /// pattern (and over black/white references).
    pub fn from_matte(matte: &Matte, patterns: &PatternStack) -> Result<Self> {
        check_dims(
            matte.dims(),
            (patterns.layout.width, patterns.layout.height),
        )?;
        let (w, h) = matte.dims();
        let white = composite_refractive(matte, &ImageBuffer::filled(w, h, 1, 1.0))?;
        let captures = patterns
            .patterns
            .par_iter()
            .map(|p| composite_refractive(matte, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(patterns.layout, matte.mask.clone(), white, captures)
    }

    /// Renders `scene` in front of every pattern with the analytic tracer.
    pub fn render(scene: &Scene, with_complements: bool) -> Result<Self> {
        let transport = LightTransport::trace(scene)?;
        let (w, h) = (scene.camera.width, scene.camera.height);
        let patterns = generate_pattern_stack(w, h, with_complements)?;
        let white = transport.render(&ImageBuffer::filled(w, h, 1, 1.0))?;
        let captures = patterns
            .patterns
            .iter()
            .map(|p| transport.render(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(patterns.layout, transport.coverage(), white, captures)
    }

    pub fn scaled(&self, s: f32) -> Self {
        let scale = |img: &ImageBuffer| {
            let mut out = img.clone();
            out.data_mut().iter_mut().for_each(|v| *v *= s);
            out
        };
        Self {
            layout: self.layout,
            black: scale(&self.black),
            white: scale(&self.white),
            patterns: self.patterns.iter().map(scale).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Black-background capture level above which a pixel is object.
    pub mask_threshold: f32,
    /// A bit is ambiguous when `|obs - ref| <= ambiguity * (obs + ref)`.
    pub ambiguity: f32,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            mask_threshold: 0.5,
            ambiguity: 0.01,
        }
    }
}

/// Per-pixel decoded background coordinates, `None` where undecodable.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondences {
    pub width: usize,
    pub height: usize,
    pub coords: Vec<Option<[u32; 2]>>,
}

impl Correspondences {
    pub fn get(&self, x: usize, y: usize) -> Option<[u32; 2]> {
        self.coords[y * self.width + x]
    }
}

/// Decodes every pixel's Gray codes to a background coordinate.
///
/// Bits are read against the complement capture when present, otherwise
/// against half the white-background capture (the midpoint between the
/// object seen over black, which is dark, and over white).
pub fn decode_correspondences(
    stack: &CaptureStack,
    config: &DecodeConfig,
) -> Result<Correspondences> {
    stack.validate()?;
    let (w, h) = stack.dims();
    let layout = stack.layout;
    let coords = (0..w * h)
        .into_par_iter()
        .map(|i| decode_pixel(stack, &layout, i, config))
        .collect();
    Ok(Correspondences {
        width: w,
        height: h,
        coords,
    })
}

fn decode_pixel(
    stack: &CaptureStack,
    layout: &StackLayout,
    i: usize,
    config: &DecodeConfig,
) -> Option<[u32; 2]> {
    let white = stack.white.data()[i];
    let decode_axis = |axis: Axis| -> Option<u32> {
        let bits = layout.bits(axis);
        let mut code = 0u32;
        for bit in 0..bits {
            let obs = stack.patterns[layout.index_of(PatternRole {
                axis,
                bit,
                complement: false,
            })]
            .data()[i];
            let reference = if layout.with_complements {
                stack.patterns[layout.index_of(PatternRole {
                    axis,
                    bit,
                    complement: true,
                })]
                .data()[i]
            } else {
                0.5 * white
            };
            let contrast = (obs - reference).abs();
            let threshold = config.ambiguity * (obs.abs() + reference.abs());
            if contrast.is_nan() || contrast <= threshold {
                return None;
            }
            code = (code << 1) | (obs > reference) as u32;
        }
        Some(gray_decode(code))
    };
    let cx = decode_axis(Axis::X)?.min(layout.width as u32 - 1);
    let cy = decode_axis(Axis::Y)?.min(layout.height as u32 - 1);
    Some([cx, cy])
}

/// Recovers a matte from a capture stack: mask from the black-background
/// capture, attenuation from the white-background capture, flow from the
/// decoded codes. Flow is integer-valued (stripe resolution).
pub fn extract_matte(stack: &CaptureStack, config: &DecodeConfig) -> Result<Matte> {
    let corr = decode_correspondences(stack, config)?;
    let (w, h) = stack.dims();
    let mut matte = Matte::empty(w, h);
    for y in 0..h {
        for x in 0..w {
            if stack.black.get(x, y, 0) <= config.mask_threshold {
                continue;
            }
            matte.mask.set(x, y, 0, 1.0);
            matte
                .attenuation
                .set(x, y, 0, stack.white.get(x, y, 0).clamp(0.0, 1.0));
            match corr.get(x, y) {
                Some([cx, cy]) => {
                    let dx = (cx as f32 - x as f32).clamp(-(w as f32), w as f32);
                    let dy = (cy as f32 - y as f32).clamp(-(h as f32), h as f32);
                    matte.flow.set(x, y, [dx, dy]);
                }
                None => matte.flow.set_invalid(x, y),
            }
        }
    }
    Ok(matte)
}
