use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer as Img, Luma, RgbImage};

use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(image_err(path))
}

fn q8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn q16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Writes an 8-bit RGB PNG; single-channel images are replicated.
pub fn write_rgb8(path: &Path, image: &ImageBuffer) -> Result<()> {
    let rgb = image.to_rgb();
    let data = rgb.data().iter().map(|&v| q8(v)).collect();
    let img = RgbImage::from_raw(rgb.width() as u32, rgb.height() as u32, data)
        .expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

/// Writes an 8-bit grayscale PNG of the first channel.
pub fn write_gray8(path: &Path, image: &ImageBuffer) -> Result<()> {
    let gray = image.to_gray();
    let data = gray.data().iter().map(|&v| q8(v)).collect();
    let img = GrayImage::from_raw(gray.width() as u32, gray.height() as u32, data)
        .expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

pub fn write_gray16(path: &Path, image: &ImageBuffer) -> Result<()> {
    let gray = image.to_gray();
    let data = gray.data().iter().map(|&v| q16(v)).collect();
    let img: Img<Luma<u16>, Vec<u16>> =
        Img::from_raw(gray.width() as u32, gray.height() as u32, data)
            .expect("buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

/// Reads any PNG as 3-channel values `k / 255`.
pub fn read_rgb8(path: &Path) -> Result<ImageBuffer> {
    let img = open(path)?.into_rgb8();
    let data = img.as_raw().iter().map(|&k| k as f32 / 255.0).collect();
    ImageBuffer::from_vec(img.width() as usize, img.height() as usize, 3, data)
}

pub fn read_gray8(path: &Path) -> Result<ImageBuffer> {
    let img = open(path)?.into_luma8();
    let data = img.as_raw().iter().map(|&k| k as f32 / 255.0).collect();
    ImageBuffer::from_vec(img.width() as usize, img.height() as usize, 1, data)
}

pub fn read_gray16(path: &Path) -> Result<ImageBuffer> {
    let img = open(path)?.into_luma16();
    let data = img.as_raw().iter().map(|&k| k as f32 / 65535.0).collect();
    ImageBuffer::from_vec(img.width() as usize, img.height() as usize, 1, data)
}

/// Reads a PNG keeping its channel layout: gray files give one channel,
/// everything else three. 16-bit files keep their precision.
pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = !img.color().has_color();
    let wide = img.color().bytes_per_pixel() / img.color().channel_count() > 1;
    match (gray, wide) {
        (true, true) => read_gray16(path),
        (true, false) => read_gray8(path),
        (false, true) => {
            let data = img
                .into_rgb16()
                .as_raw()
                .iter()
                .map(|&k| k as f32 / 65535.0)
                .collect();
            ImageBuffer::from_vec(w, h, 3, data)
        }
        (false, false) => read_rgb8(path),
    }
}
