//! Training losses, image-quality metrics and matte evaluation.

mod eval;
mod losses;
mod quality;

pub use eval::{background_baseline, evaluate_matte, EvalReport};
pub use losses::{
    coarse_loss, loss_attenuation, loss_flow_epe, loss_mask_ce, loss_reconstruction,
    multiscale_loss, refine_loss, CoarseTerms, CoarseWeights, Epe, LossWeights, RefineWeights,
    CE_EPSILON,
};
pub use quality::{mask_iou, mse, psnr, ssim, PSNR_CAP_DB};
