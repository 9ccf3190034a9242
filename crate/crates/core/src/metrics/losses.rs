use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::flow::FlowField;
use crate::raster::ImageBuffer;

/// Probability clamp for the cross-entropy loss.
pub const CE_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseWeights {
    pub mask: f64,
    pub attenuation: f64,
    pub flow: f64,
    pub reconstruction: f64,
}

impl Default for CoarseWeights {
    fn default() -> Self {
        Self {
            mask: 0.1,
            attenuation: 1.0,
            flow: 0.01,
            reconstruction: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineWeights {
    pub attenuation: f64,
    pub flow: f64,
}

impl Default for RefineWeights {
    fn default() -> Self {
        Self {
            attenuation: 1.0,
            flow: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub coarse: CoarseWeights,
    pub refine: RefineWeights,
    /// Per-scale weights `1 / 2^(4 - s)` for scales s = 1..4 (coarsest first).
    pub scales: [f64; 4],
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            coarse: CoarseWeights::default(),
            refine: RefineWeights::default(),
            scales: std::array::from_fn(|i| 1.0 / f64::powi(2.0, 3 - i as i32)),
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let c = &self.coarse;
        let r = &self.refine;
        let all = [
            c.mask,
            c.attenuation,
            c.flow,
            c.reconstruction,
            r.attenuation,
            r.flow,
        ]
        .into_iter()
        .chain(self.scales);
        for w in all {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("loss weight {w} must be positive")));
            }
        }
        Ok(())
    }
}

fn same_plane(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    a.same_shape(b)?;
    if a.is_empty() {
        return Err(Error::invalid("loss of an empty image is undefined"));
    }
    Ok(())
}

/// Binary cross-entropy between a foreground probability map and a
/// ground-truth mask, with probabilities clamped to `[eps, 1 - eps]`.
pub fn loss_mask_ce(probability: &ImageBuffer, gt_mask: &ImageBuffer) -> Result<f64> {
    same_plane(probability, gt_mask)?;
    let sum: f64 = probability
        .data()
        .iter()
        .zip(gt_mask.data())
        .map(|(&p, &m)| {
            let p = (p as f64).clamp(CE_EPSILON, 1.0 - CE_EPSILON);
            let m = m as f64;
            m * p.ln() + (1.0 - m) * (1.0 - p).ln()
        })
        .sum();
    Ok(-sum / probability.data().len() as f64)
}

/// Mean squared attenuation error.
pub fn loss_attenuation(pred: &ImageBuffer, gt: &ImageBuffer) -> Result<f64> {
    same_plane(pred, gt)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum();
    Ok(sum / pred.data().len() as f64)
}

/// Average end-point error over the pixels it was computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epe {
    pub value: f64,
    pub pixels: usize,
}

impl Epe {
    /// No pixel was selected; `value` is then defined as 0.
    pub fn is_empty(&self) -> bool {
        self.pixels == 0
    }
}

/// Mean end-point error, over the whole frame or over pixels where
/// `mask > 0.5`. Invalid flow pixels contribute their zero offset.
pub fn loss_flow_epe(pred: &FlowField, gt: &FlowField, mask: Option<&ImageBuffer>) -> Result<Epe> {
    check_dims(pred.dims(), gt.dims())?;
    if let Some(m) = mask {
        check_dims(pred.dims(), m.dims())?;
    }
    let mut sum = 0.0;
    let mut pixels = 0usize;
    for (i, (p, g)) in pred.offsets().iter().zip(gt.offsets()).enumerate() {
        if let Some(m) = mask {
            if m.data()[i * m.channels()] <= 0.5 {
                continue;
            }
        }
        let dx = p[0] as f64 - g[0] as f64;
        let dy = p[1] as f64 - g[1] as f64;
        sum += (dx * dx + dy * dy).sqrt();
        pixels += 1;
    }
    if pixels == 0 {
        warn!("end-point error over an empty pixel set; reporting 0");
        return Ok(Epe { value: 0.0, pixels });
    }
    Ok(Epe {
        value: sum / pixels as f64,
        pixels,
    })
}

/// Squared L2 norm of the per-pixel color difference, averaged over pixels.
pub fn loss_reconstruction(reconstructed: &ImageBuffer, input: &ImageBuffer) -> Result<f64> {
    same_plane(reconstructed, input)?;
    let sum: f64 = reconstructed
        .data()
        .iter()
        .zip(input.data())
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum();
    Ok(sum / (input.width() * input.height()) as f64)
}

/// The four coarse-stage loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseTerms {
    pub mask: f64,
    pub attenuation: f64,
    pub flow: f64,
    pub reconstruction: f64,
}

fn check_term(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!(
            "loss term {name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

/// Sum of `w * l` with Neumaier compensation, so that e.g. unit terms with
/// the default coarse weights give exactly 2.11.
fn weighted_sum(pairs: &[(f64, f64)]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &(w, l) in pairs {
        let v = w * l;
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn coarse_loss(terms: &CoarseTerms, weights: &CoarseWeights) -> Result<f64> {
    check_term("mask", terms.mask)?;
    check_term("attenuation", terms.attenuation)?;
    check_term("flow", terms.flow)?;
    check_term("reconstruction", terms.reconstruction)?;
    Ok(weighted_sum(&[
        (weights.mask, terms.mask),
        (weights.attenuation, terms.attenuation),
        (weights.flow, terms.flow),
        (weights.reconstruction, terms.reconstruction),
    ]))
}

/// Weighted sum of per-scale losses, coarsest scale first.
pub fn multiscale_loss(per_scale: &[f64; 4], scale_weights: &[f64; 4]) -> Result<f64> {
    for (s, v) in per_scale.iter().enumerate() {
        check_term(&format!("scale {}", s + 1), *v)?;
    }
    let pairs: Vec<(f64, f64)> = scale_weights
        .iter()
        .copied()
        .zip(per_scale.iter().copied())
        .collect();
    Ok(weighted_sum(&pairs))
}

pub fn refine_loss(attenuation: f64, flow: f64, weights: &RefineWeights) -> Result<f64> {
    check_term("attenuation", attenuation)?;
    check_term("flow", flow)?;
    Ok(weighted_sum(&[
        (weights.attenuation, attenuation),
        (weights.flow, flow),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: usize, h: usize, v: f32) -> ImageBuffer {
        ImageBuffer::filled(w, h, 1, v)
    }

    #[test]
    fn ce_at_half_is_ln2() {
        let v = loss_mask_ce(&plane(4, 4, 0.5), &plane(4, 4, 1.0)).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn ce_perfect_prediction_is_epsilon_level() {
        let gt = ImageBuffer::from_fn(4, 4, 1, |x, _, _| (x % 2) as f32);
        let v = loss_mask_ce(&gt, &gt).unwrap();
        assert!(v > 0.0 && v < 1e-6);
    }

    #[test]
    fn ce_scalar_case() {
        let v = loss_mask_ce(&plane(3, 3, 0.9), &plane(3, 3, 1.0)).unwrap();
        // -ln(0.9) evaluated in f64 from the f32-stored probability
        assert!((v - -(0.9f32 as f64).ln()).abs() < 1e-12);
        assert!((v - 0.10536).abs() < 1e-5);
    }

    #[test]
    fn ce_dimension_mismatch() {
        assert!(loss_mask_ce(&plane(3, 3, 0.9), &plane(3, 2, 1.0)).is_err());
    }

    #[test]
    fn attenuation_mse() {
        assert_eq!(
            loss_attenuation(&plane(3, 3, 0.4), &plane(3, 3, 0.4)).unwrap(),
            0.0
        );
        let v = loss_attenuation(&plane(3, 3, 0.5), &plane(3, 3, 0.4)).unwrap();
        assert!((v - 0.01).abs() < 1e-8);
    }

    #[test]
    fn epe_cases() {
        let gt = FlowField::zeros(4, 4);
        assert_eq!(loss_flow_epe(&gt, &gt, None).unwrap().value, 0.0);
        let pred = FlowField::uniform(4, 4, 3.0, 4.0);
        assert_eq!(loss_flow_epe(&pred, &gt, None).unwrap().value, 5.0);

        let mut half = FlowField::zeros(4, 4);
        let mut mask = plane(4, 4, 0.0);
        for y in 0..2 {
            for x in 0..4 {
                half.set(x, y, [0.0, 2.0]);
                mask.set(x, y, 0, 1.0);
            }
        }
        let e = loss_flow_epe(&half, &gt, Some(&mask)).unwrap();
        assert_eq!((e.value, e.pixels), (2.0, 8));
        assert_eq!(loss_flow_epe(&half, &gt, None).unwrap().value, 1.0);
    }

    #[test]
    fn epe_empty_mask_is_zero_and_flagged() {
        let e = loss_flow_epe(
            &FlowField::uniform(2, 2, 1.0, 1.0),
            &FlowField::zeros(2, 2),
            Some(&plane(2, 2, 0.0)),
        )
        .unwrap();
        assert!(e.is_empty());
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn reconstruction_sums_channels() {
        let a = ImageBuffer::filled(4, 4, 3, 0.5);
        let b = ImageBuffer::filled(4, 4, 3, 0.4);
        assert_eq!(loss_reconstruction(&a, &a).unwrap(), 0.0);
        let v = loss_reconstruction(&a, &b).unwrap();
        assert!((v - 0.03).abs() < 1e-7);
    }

    #[test]
    fn weighted_sums() {
        let w = LossWeights::default();
        let ones = CoarseTerms {
            mask: 1.0,
            attenuation: 1.0,
            flow: 1.0,
            reconstruction: 1.0,
        };
        assert_eq!(coarse_loss(&ones, &w.coarse).unwrap(), 2.11);
        let zeros = CoarseTerms {
            mask: 0.0,
            attenuation: 0.0,
            flow: 0.0,
            reconstruction: 0.0,
        };
        assert_eq!(coarse_loss(&zeros, &w.coarse).unwrap(), 0.0);
        let flow_only = CoarseTerms {
            flow: 10.0,
            ..zeros
        };
        assert!((coarse_loss(&flow_only, &w.coarse).unwrap() - 0.1).abs() < 1e-15);
        let negative = CoarseTerms {
            mask: -1.0,
            ..zeros
        };
        assert!(coarse_loss(&negative, &w.coarse).is_err());

        assert_eq!(w.scales, [0.125, 0.25, 0.5, 1.0]);
        assert_eq!(multiscale_loss(&[1.0; 4], &w.scales).unwrap(), 1.875);
        assert_eq!(
            multiscale_loss(&[0.0, 0.0, 0.0, 3.0], &w.scales).unwrap(),
            3.0
        );
        assert_eq!(
            multiscale_loss(&[8.0, 0.0, 0.0, 0.0], &w.scales).unwrap(),
            1.0
        );

        assert_eq!(refine_loss(1.0, 1.0, &w.refine).unwrap(), 2.0);
        assert_eq!(refine_loss(0.0, 0.0, &w.refine).unwrap(), 0.0);
        assert!((refine_loss(0.3, 0.7, &w.refine).unwrap() - 1.0).abs() < 1e-15);
        w.validate().unwrap();
    }
}
