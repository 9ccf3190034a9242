//! Floating-point rasters and bilinear sampling.

use crate::error::{check_dims, Error, Result};

/// Row-major, channel-interleaved raster with samples nominally in `[0, 1]`.
///
/// Pixel centers sit on integer coordinates: pixel `(x, y)` covers
/// `[x - 0.5, x + 0.5) x [y - 0.5, y + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(
            channels == 1 || channels == 3,
            "channels must be 1 or 3, got {channels}"
        );
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "buffer of {} samples does not hold {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a raster by evaluating `f(x, y, c)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Self::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let i = (y * width + x) * channels + c;
                    img.data[i] = f(x, y, c);
                }
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f32> {
        self.data.chunks(self.width * self.channels)
    }

    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Collapses channels to a single plane by averaging.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| (px.iter().map(|&v| v as f64).sum::<f64>() / self.channels as f64) as f32)
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Repeats a single plane into three channels.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> Result<()> {
        check_dims(self.dims(), other.dims())?;
        if self.channels != other.channels {
            return Err(Error::invalid(format!(
                "channel count mismatch: {} vs {}",
                self.channels, other.channels
            )));
        }
        Ok(())
    }

    /// Bilinear sample into `out` (one slot per channel), clamping the
    /// coordinate to the pixel-center rectangle `[0, W-1] x [0, H-1]`.
    ///
    /// Callers guarantee finite coordinates and a non-empty raster.
    #[inline]
    pub fn sample_into(&self, x: f64, y: f64, out: &mut [f64]) {
        debug_assert!(!self.data.is_empty());
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let w00 = (1.0 - fx) * (1.0 - fy);
        let w10 = fx * (1.0 - fy);
        let w01 = (1.0 - fx) * fy;
        let w11 = fx * fy;
        let ch = self.channels;
        let row0 = y0 * self.width;
        let row1 = y1 * self.width;
        for (c, o) in out.iter_mut().enumerate().take(ch) {
            let p00 = self.data[(row0 + x0) * ch + c] as f64;
            let p10 = self.data[(row0 + x1) * ch + c] as f64;
            let p01 = self.data[(row1 + x0) * ch + c] as f64;
            let p11 = self.data[(row1 + x1) * ch + c] as f64;
            *o = w00 * p00 + w10 * p10 + w01 * p01 + w11 * p11;
        }
    }

    /// Resamples to `new_width x new_height` with center-aligned bilinear
    /// interpolation. Identity when the size is unchanged.
    pub fn resize_bilinear(&self, new_width: usize, new_height: usize) -> ImageBuffer {
        let sx = self.width as f64 / new_width as f64;
        let sy = self.height as f64 / new_height as f64;
        let mut out = ImageBuffer::new(new_width, new_height, self.channels);
        let mut px = [0.0f64; 3];
        for y in 0..new_height {
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            for x in 0..new_width {
                let src_x = (x as f64 + 0.5) * sx - 0.5;
                self.sample_into(src_x, src_y, &mut px);
                for (c, v) in out.pixel_mut(x, y).iter_mut().enumerate() {
                    *v = px[c] as f32;
                }
            }
        }
        out
    }

    pub fn flip_horizontal(&self) -> ImageBuffer {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.pixel_mut(self.width - 1 - x, y)
                    .copy_from_slice(self.pixel(x, y));
            }
        }
        out
    }

    pub fn flip_vertical(&self) -> ImageBuffer {
        let mut out = self.clone();
        let stride = self.width * self.channels;
        for y in 0..self.height {
            let dst = (self.height - 1 - y) * stride;
            out.data[dst..dst + stride].copy_from_slice(&self.data[y * stride..(y + 1) * stride]);
        }
        out
    }

    /// Copies the `w x h` window whose top-left pixel is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageBuffer> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Ok(ImageBuffer {
            width: w,
            height: h,
            channels: self.channels,
            data,
        })
    }
}

/// Bilinear interpolation of `image` at the real pixel coordinate `(x, y)`.
///
/// Coordinates outside `[0, W-1] x [0, H-1]` are clamped to the border.
pub fn bilinear_sample(image: &ImageBuffer, x: f64, y: f64) -> Result<Vec<f64>> {
    if image.is_empty() {
        return Err(Error::invalid("cannot sample an empty image"));
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite sample coordinate ({x}, {y})"
        )));
    }
    let mut out = vec![0.0; image.channels()];
    image.sample_into(x, y, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> ImageBuffer {
        ImageBuffer::from_vec(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn integer_coordinate_returns_pixel() {
        assert_eq!(bilinear_sample(&two_by_two(), 0.0, 0.0).unwrap(), vec![0.0]);
        assert_eq!(bilinear_sample(&two_by_two(), 1.0, 1.0).unwrap(), vec![3.0]);
    }

    #[test]
    fn midpoint_is_mean_of_four() {
        assert_eq!(bilinear_sample(&two_by_two(), 0.5, 0.5).unwrap(), vec![1.5]);
    }

    #[test]
    fn linear_along_top_row() {
        assert_eq!(
            bilinear_sample(&two_by_two(), 0.25, 0.0).unwrap(),
            vec![0.25]
        );
    }

    #[test]
    fn clamps_outside_border() {
        let img = two_by_two();
        assert_eq!(bilinear_sample(&img, -4.0, -1.0).unwrap(), vec![0.0]);
        assert_eq!(bilinear_sample(&img, 7.0, 0.0).unwrap(), vec![1.0]);
        assert_eq!(bilinear_sample(&img, 0.5, 9.0).unwrap(), vec![2.5]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(bilinear_sample(&two_by_two(), f64::NAN, 0.0).is_err());
        assert!(bilinear_sample(&two_by_two(), 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn rejects_empty() {
        let img = ImageBuffer::new(0, 0, 1);
        assert!(bilinear_sample(&img, 0.0, 0.0).is_err());
    }

    #[test]
    fn resize_same_size_is_identity() {
        let img = ImageBuffer::from_fn(5, 4, 3, |x, y, c| ((x * 7 + y * 3 + c) % 11) as f32 / 10.0);
        assert_eq!(img.resize_bilinear(5, 4), img);
    }

    #[test]
    fn flips_are_involutions() {
        let img = ImageBuffer::from_fn(5, 3, 3, |x, y, c| (x + 10 * y + 100 * c) as f32);
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
        assert_eq!(img.flip_vertical().flip_vertical(), img);
        assert_eq!(img.flip_horizontal().get(0, 1, 2), img.get(4, 1, 2));
    }

    #[test]
    fn crop_window() {
        let img = ImageBuffer::from_fn(4, 4, 1, |x, y, _| (x + 4 * y) as f32);
        let c = img.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.data(), &[9.0, 10.0, 13.0, 14.0]);
        assert!(img.crop(3, 3, 2, 2).is_err());
    }
}
