use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_RADIUS: usize = 5;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Mean squared difference over all samples.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.same_shape(b)?;
    if a.is_empty() {
        return Err(Error::invalid("MSE of empty images is undefined"));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB for images with peak value 1.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub(crate) fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

fn gaussian_window() -> [f64; 2 * SSIM_RADIUS + 1] {
    let mut w = [0.0; 2 * SSIM_RADIUS + 1];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - SSIM_RADIUS as f64;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable "valid" Gaussian filtering of one channel plane.
fn filter_valid(plane: &[f64], width: usize, height: usize, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let ow = width + 1 - n;
    let oh = height + 1 - n;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..ow {
            horiz[y * ow + x] = g.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|k| g[k] * horiz[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity using an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and dynamic range 1. Only windows lying fully
/// inside the image contribute; channels are averaged.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.same_shape(b)?;
    let win = 2 * SSIM_RADIUS + 1;
    let (w, h) = a.dims();
    if w < win || h < win {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {win}x{win}, got {w}x{h}"
        )));
    }
    let g = gaussian_window();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let ch = a.channels();
    let mut total = 0.0;
    for c in 0..ch {
        let pa: Vec<f64> = a
            .data()
            .iter()
            .skip(c)
            .step_by(ch)
            .map(|&v| v as f64)
            .collect();
        let pb: Vec<f64> = b
            .data()
            .iter()
            .skip(c)
            .step_by(ch)
            .map(|&v| v as f64)
            .collect();
        let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            pa.iter().zip(&pb).map(|(&x, &y)| f(x, y)).collect()
        };
        let mu_a = filter_valid(&pa, w, h, &g);
        let mu_b = filter_valid(&pb, w, h, &g);
        let e_aa = filter_valid(&prod(&|x, _| x * x), w, h, &g);
        let e_bb = filter_valid(&prod(&|_, y| y * y), w, h, &g);
        let e_ab = filter_valid(&prod(&|x, y| x * y), w, h, &g);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / ch as f64)
}

/// Intersection over union of two masks binarized at 0.5. Two empty masks
/// score 1.
pub fn mask_iou(pred: &ImageBuffer, gt: &ImageBuffer) -> Result<f64> {
    pred.same_shape(gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (p, g) = (p > 0.5, g > 0.5);
        inter += (p && g) as usize;
        union += (p || g) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_definition_and_cap() {
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-9);
        assert!((psnr_from_mse(1e-4) - 40.0).abs() < 1e-9);
        assert_eq!(psnr_from_mse(0.0), PSNR_CAP_DB);
        let a = ImageBuffer::filled(4, 4, 3, 0.3);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = ImageBuffer::from_fn(20, 16, 3, |x, y, c| {
            ((x * 7 + y * 3 + c) % 11) as f32 / 10.0
        });
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        let (x, y) = (0.2f32, 0.7f32);
        let a = ImageBuffer::filled(16, 16, 1, x);
        let b = ImageBuffer::filled(16, 16, 1, y);
        let (x, y) = (x as f64, y as f64);
        let c1 = 1e-4;
        let expected = (2.0 * x * y + c1) / (x * x + y * y + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_tiny_images() {
        let a = ImageBuffer::filled(8, 8, 1, 0.5);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn iou_cases() {
        let half = ImageBuffer::from_fn(4, 4, 1, |x, _, _| (x < 2) as u8 as f32);
        let full = ImageBuffer::filled(4, 4, 1, 1.0);
        let other = ImageBuffer::from_fn(4, 4, 1, |x, _, _| (x >= 2) as u8 as f32);
        let empty = ImageBuffer::filled(4, 4, 1, 0.0);
        assert_eq!(mask_iou(&half, &half).unwrap(), 1.0);
        assert_eq!(mask_iou(&half, &other).unwrap(), 0.0);
        assert_eq!(mask_iou(&half, &full).unwrap(), 0.5);
        assert_eq!(mask_iou(&empty, &empty).unwrap(), 1.0);
    }
}
