use std::collections::BTreeSet;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::generate::with_jobs;
use super::manifest::DatasetManifest;
use crate::error::{check_dims, Error, Result};
use crate::graycode::{extract_matte, CaptureStack, DecodeConfig};
use crate::io;
use crate::matte::{composite_refractive_with_summary, Matte};
use crate::metrics::{background_baseline, evaluate_matte, EvalReport};
use crate::render::{render_ground_truth_matte, Scene};

/// Decodes the capture stack in `capture_dir` and writes the matte files
/// to `out`.
pub fn extract(capture_dir: &Path, out: &Path) -> Result<Matte> {
    let stack = io::read_capture_stack(capture_dir)?;
    let matte = extract_matte(&stack, &DecodeConfig::default())?;
    let invalid = (0..matte.height())
        .flat_map(|y| (0..matte.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| matte.mask.get(x, y, 0) > 0.0 && !matte.flow.is_valid(x, y))
        .count();
    if invalid > 0 {
        warn!("{invalid} object pixels could not be decoded");
    }
    io::write_matte(out, &matte)?;
    Ok(matte)
}

/// Composites the matte in `matte_dir` over `background` and writes the
/// result as an 8-bit PNG. With `resize`, a background of another size is
/// resampled to the matte's size first.
pub fn composite(matte_dir: &Path, background: &Path, out: &Path, resize: bool) -> Result<()> {
    let matte = io::read_matte(matte_dir)?;
    let mut bg = io::read_image(background)?;
    if bg.dims() != matte.dims() {
        if !resize {
            check_dims(matte.dims(), bg.dims())?;
        }
        bg = bg.resize_bilinear(matte.width(), matte.height());
    }
    let (image, summary) = composite_refractive_with_summary(&matte, &bg)?;
    if summary.invalid_flow_pixels > 0 {
        warn!(
            "{} object pixels have invalid flow and were composited without refraction",
            summary.invalid_flow_pixels
        );
    }
    io::write_rgb8(out, &image)
}

/// Renders the capture stack of a scene file into `out`, plus the
/// analytic ground-truth matte under `out/ground_truth`.
pub fn capture(scene_path: &Path, out: &Path, complements: bool) -> Result<()> {
    let scene = Scene::load(scene_path)?;
    let stack = CaptureStack::render(&scene, complements)?;
    io::write_capture_stack(out, &stack)?;
    io::write_matte(
        &out.join("ground_truth"),
        &render_ground_truth_matte(&scene)?,
    )?;
    info!(
        "wrote {} captures to {}",
        stack.patterns.len() + 2,
        out.display()
    );
    Ok(())
}

/// One line of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub sample: String,
    pub method: String,
    pub report: EvalReport,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sample: &'a str,
    method: &'a str,
    epe_whole: f64,
    epe_object: f64,
    mask_iou: f64,
    attenuation_mse: f64,
    image_mse: f64,
    psnr: f64,
    ssim: f64,
    object_pixels: usize,
}

impl<'a> From<&'a EvalRow> for CsvRow<'a> {
    fn from(row: &'a EvalRow) -> Self {
        let r = &row.report;
        CsvRow {
            sample: &row.sample,
            method: &row.method,
            epe_whole: r.epe_whole,
            epe_object: r.epe_object,
            mask_iou: r.mask_iou,
            attenuation_mse: r.attenuation_mse,
            image_mse: r.image_mse,
            psnr: r.psnr,
            ssim: r.ssim,
            object_pixels: r.object_pixels,
        }
    }
}

pub const METHOD_PREDICTION: &str = "prediction";
pub const METHOD_BACKGROUND: &str = "background";

/// Scores the mattes under `pred_root/<sample id>/` against the dataset at
/// `gt_root`, together with the background baseline, and writes a CSV
/// report with per-sample rows followed by one mean row per method.
pub fn evaluate(gt_root: &Path, pred_root: &Path, out: &Path, jobs: usize) -> Result<Vec<EvalRow>> {
    let manifest = DatasetManifest::load(gt_root)?;
    let expected: BTreeSet<&str> = manifest.samples.iter().map(|s| s.id.as_str()).collect();
    let found = prediction_ids(pred_root)?;
    if found.iter().map(String::as_str).collect::<BTreeSet<_>>() != expected {
        let missing: Vec<_> = expected.iter().filter(|id| !found.contains(**id)).collect();
        let extra: Vec<_> = found
            .iter()
            .filter(|id| !expected.contains(id.as_str()))
            .collect();
        return Err(Error::Validation(format!(
            "prediction and ground-truth sample sets differ (missing {missing:?}, unexpected {extra:?})"
        )));
    }

    let per_sample = with_jobs(jobs, || {
        manifest
            .samples
            .par_iter()
            .map(|s| {
                let gt = io::read_matte(&gt_root.join(s.dir()))?;
                let pred = io::read_matte(&pred_root.join(&s.id))?;
                let background = io::read_rgb8(&gt_root.join(&s.background))?;
                let input = io::read_rgb8(&gt_root.join(&s.input))?;
                Ok([
                    evaluate_matte(&pred, &gt, &background, &input)?,
                    background_baseline(&gt, &background, &input)?,
                ])
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut rows = Vec::with_capacity(2 * per_sample.len() + 2);
    for (s, [pred, base]) in manifest.samples.iter().zip(&per_sample) {
        for (method, report) in [(METHOD_PREDICTION, pred), (METHOD_BACKGROUND, base)] {
            rows.push(EvalRow {
                sample: s.id.clone(),
                method: method.into(),
                report: *report,
            });
        }
    }
    for (k, method) in [METHOD_PREDICTION, METHOD_BACKGROUND]
        .into_iter()
        .enumerate()
    {
        let reports: Vec<EvalReport> = per_sample.iter().map(|r| r[k]).collect();
        if let Some(mean) = EvalReport::mean(&reports) {
            rows.push(EvalRow {
                sample: "mean".into(),
                method: method.into(),
                report: mean,
            });
        }
    }
    write_report(out, &rows)?;
    Ok(rows)
}

fn prediction_ids(root: &Path) -> Result<BTreeSet<String>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut ids = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.join(io::MASK_FILE).is_file() {
            if let Some(name) = path.file_name() {
                ids.insert(name.to_string_lossy().into_owned());
            }
        }
    }
    Ok(ids)
}

fn write_report(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::format("report", format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    for row in rows {
        w.serialize(CsvRow::from(row)).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
