use serde::{Deserialize, Serialize};

use super::losses::{loss_attenuation, loss_flow_epe, loss_reconstruction};
use super::quality::{mask_iou, mse, psnr_from_mse, ssim};
use crate::error::{check_dims, Result};
use crate::matte::{composite_refractive, Matte};
use crate::raster::ImageBuffer;

/// Quality of one predicted matte against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Flow end-point error over the whole frame, pixels.
    pub epe_whole: f64,
    /// Flow end-point error inside the ground-truth object mask.
    pub epe_object: f64,
    pub mask_iou: f64,
    pub attenuation_mse: f64,
    /// Reconstruction error: squared color difference summed over
    /// channels, averaged over pixels.
    pub image_mse: f64,
    pub psnr: f64,
    pub ssim: f64,
    /// Ground-truth object pixels; `epe_object` is 0 when this is 0.
    pub object_pixels: usize,
}

impl EvalReport {
    /// Field-wise mean of several reports; `None` for an empty slice.
    pub fn mean(reports: &[EvalReport]) -> Option<EvalReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(EvalReport {
            epe_whole: avg(|r| r.epe_whole),
            epe_object: avg(|r| r.epe_object),
            mask_iou: avg(|r| r.mask_iou),
            attenuation_mse: avg(|r| r.attenuation_mse),
            image_mse: avg(|r| r.image_mse),
            psnr: avg(|r| r.psnr),
            ssim: avg(|r| r.ssim),
            object_pixels: reports.iter().map(|r| r.object_pixels).sum(),
        })
    }
}

/// Compares `pred` with `gt`. The reconstruction terms composite `pred`
/// over `background` and compare against `input`.
pub fn evaluate_matte(
    pred: &Matte,
    gt: &Matte,
    background: &ImageBuffer,
    input: &ImageBuffer,
) -> Result<EvalReport> {
    pred.validate()?;
    gt.validate()?;
    check_dims(gt.dims(), pred.dims())?;
    check_dims(gt.dims(), input.dims())?;
    let background = match (background.channels(), input.channels()) {
        (1, 3) => background.to_rgb(),
        (3, 1) => background.to_gray(),
        _ => background.clone(),
    };
    let reconstructed = composite_refractive(pred, &background)?;
    let epe_whole = loss_flow_epe(&pred.flow, &gt.flow, None)?;
    let epe_object = loss_flow_epe(&pred.flow, &gt.flow, Some(&gt.mask))?;
    Ok(EvalReport {
        epe_whole: epe_whole.value,
        epe_object: epe_object.value,
        mask_iou: mask_iou(&pred.mask, &gt.mask)?,
        attenuation_mse: loss_attenuation(&pred.attenuation, &gt.attenuation)?,
        image_mse: loss_reconstruction(&reconstructed, input)?,
        psnr: psnr_from_mse(mse(&reconstructed, input)?),
        ssim: ssim(&reconstructed, input)?,
        object_pixels: epe_object.pixels,
    })
}

/// Scores the trivial matte that treats the whole frame as a perfectly
/// clear object (mask 1, attenuation 1, no flow), so the reconstruction is
/// the background itself.
pub fn background_baseline(
    gt: &Matte,
    background: &ImageBuffer,
    input: &ImageBuffer,
) -> Result<EvalReport> {
    let (w, h) = gt.dims();
    evaluate_matte(&Matte::identity(w, h), gt, background, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowField;

    fn gt_matte(w: usize, h: usize) -> Matte {
        let mask = ImageBuffer::from_fn(w, h, 1, |x, y, _| (x < 4 && y < 4) as u8 as f32);
        let attenuation =
            ImageBuffer::from_fn(w, h, 1, |x, y, _| if x < 4 && y < 4 { 0.8 } else { 1.0 });
        let mut flow = FlowField::zeros(w, h);
        for y in 0..4 {
            for x in 0..4 {
                flow.set(x, y, [3.0, 4.0]);
            }
        }
        Matte::new(mask, attenuation, flow).unwrap()
    }

    fn background(w: usize, h: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, 3, |x, y, c| {
            ((x * 5 + y * 3 + c * 2) % 13) as f32 / 12.0
        })
    }

    #[test]
    fn perfect_prediction() {
        let gt = gt_matte(16, 16);
        let bg = background(16, 16);
        let input = composite_refractive(&gt, &bg).unwrap();
        let r = evaluate_matte(&gt, &gt, &bg, &input).unwrap();
        assert_eq!((r.epe_whole, r.epe_object, r.mask_iou), (0.0, 0.0, 1.0));
        assert_eq!((r.attenuation_mse, r.image_mse), (0.0, 0.0));
        assert_eq!(r.psnr, 99.0);
        assert!((r.ssim - 1.0).abs() < 1e-12);
        assert_eq!(r.object_pixels, 16);
    }

    #[test]
    fn baseline_scores() {
        let gt = gt_matte(16, 16);
        let bg = background(16, 16);
        let input = composite_refractive(&gt, &bg).unwrap();
        let r = background_baseline(&gt, &bg, &input).unwrap();
        assert!((r.epe_whole - 5.0 * 16.0 / 256.0).abs() < 1e-12);
        assert_eq!(r.epe_object, 5.0);
        assert!((r.mask_iou - 16.0 / 256.0).abs() < 1e-12);

        let clear = Matte::empty(16, 16);
        let r = background_baseline(&clear, &bg, &bg).unwrap();
        assert_eq!((r.epe_whole, r.image_mse), (0.0, 0.0));
    }

    #[test]
    fn mean_of_reports() {
        let gt = gt_matte(16, 16);
        let bg = background(16, 16);
        let input = composite_refractive(&gt, &bg).unwrap();
        let a = evaluate_matte(&gt, &gt, &bg, &input).unwrap();
        let b = background_baseline(&gt, &bg, &input).unwrap();
        let m = EvalReport::mean(&[a, b]).unwrap();
        assert_eq!(m.epe_object, 2.5);
        assert!(EvalReport::mean(&[]).is_none());
    }
}
