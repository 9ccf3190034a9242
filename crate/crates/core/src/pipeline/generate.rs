use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::PipelineConfig;
use super::manifest::{DatasetManifest, SampleRecord};
use crate::augment::{augment, Sample, SampleMeta};
use crate::error::{Error, Result};
use crate::io;
use crate::matte::{composite_refractive, Matte};
use crate::metrics::mse;
use crate::raster::ImageBuffer;
use crate::render::random::{allocate, random_scene, Category};
use crate::render::LightTransport;

/// Largest stored-input vs. composite error accepted for a new sample.
pub const SELF_CHECK_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    pub count: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the number of cores.
    pub jobs: usize,
}

/// Sorted PNG files of a background directory.
pub fn background_pool(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Values as they will read back from an 8-bit PNG.
pub(crate) fn quantize8(image: &ImageBuffer) -> ImageBuffer {
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = (v.clamp(0.0, 1.0) * 255.0).round() / 255.0;
    }
    out
}

pub(crate) fn quantize16(image: &ImageBuffer) -> ImageBuffer {
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = (v.clamp(0.0, 1.0) * 65535.0).round() / 65535.0;
    }
    out
}

/// Renders `options.count` random samples into `out` and writes the
/// dataset manifest. Output depends only on the config, the background
/// files and `options.seed`.
pub fn generate(
    config: &PipelineConfig,
    out: &Path,
    options: &GenerateOptions,
) -> Result<DatasetManifest> {
    config.validate()?;
    let pool = if options.count > 0 {
        let pool = background_pool(&config.dataset.backgrounds)?;
        if pool.is_empty() {
            return Err(Error::EmptyBackgroundPool(
                config.dataset.backgrounds.clone(),
            ));
        }
        pool
    } else {
        Vec::new()
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let allocation = allocate(options.count, &config.categories.pairs());
    let mut categories: Vec<Category> = allocation
        .iter()
        .flat_map(|(c, n)| std::iter::repeat_n(*c, *n))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut seeds: Vec<u64> = Vec::with_capacity(options.count);
    while seeds.len() < options.count {
        let s = rng.random();
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    categories.shuffle(&mut rng);

    let samples = with_jobs(options.jobs, || {
        (0..options.count)
            .into_par_iter()
            .map(|i| generate_sample(config, out, &pool, i, categories[i], seeds[i]))
            .collect::<Result<Vec<_>>>()
    })??;

    let counts: BTreeMap<String, usize> = allocation
        .iter()
        .map(|(c, n)| (c.name().to_string(), *n))
        .collect();
    let mut stored = config.clone();
    stored.dataset.backgrounds =
        PathBuf::from(config.dataset.backgrounds.file_name().unwrap_or_default());
    let manifest = DatasetManifest {
        seed: options.seed,
        count: options.count,
        counts,
        config: stored,
        samples,
    };
    manifest.save(out)?;
    info!("wrote {} samples to {}", options.count, out.display());
    Ok(manifest)
}

fn load_background(path: &Path, width: usize, height: usize) -> Result<ImageBuffer> {
    let image = io::read_image(path)?.to_rgb();
    let image = if image.dims() == (width, height) {
        image
    } else {
        image.resize_bilinear(width, height)
    };
    Ok(quantize8(&image))
}

fn generate_sample(
    config: &PipelineConfig,
    out: &Path,
    pool: &[PathBuf],
    index: usize,
    category: Category,
    seed: u64,
) -> Result<SampleRecord> {
    let (w, h) = (config.dataset.width, config.dataset.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = random_scene(category, w, h, &config.camera, &mut rng);
    scene
        .validate_strict()
        .map_err(|e| Error::Config(format!("camera ranges give an invalid scene: {e}")))?;
    let source = &pool[rng.random_range(0..pool.len())];
    let background = load_background(source, w, h)?;

    let transport = LightTransport::trace(&scene)?;
    let input = quantize8(&transport.render(&background)?);
    let raw = transport.matte();
    let matte = Matte {
        mask: quantize8(&raw.mask),
        attenuation: quantize16(&raw.attenuation),
        flow: raw.flow,
    };
    let self_check = mse(&composite_refractive(&matte, &background)?, &input)?;
    if self_check > SELF_CHECK_TOLERANCE {
        return Err(Error::Validation(format!(
            "sample {index}: composite of the rendered matte differs from the render (MSE {self_check:.3e})"
        )));
    }

    let id = format!("{index:06}");
    let sample = Sample::new(
        input,
        background,
        matte,
        SampleMeta {
            seed,
            scene_id: id.clone(),
        },
    )?;
    let sample = augment(&sample, &config.augment)?;

    let rel = format!("samples/{id}");
    let dir = out.join(&rel);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    scene.save(&dir.join("scene.toml"))?;
    io::write_rgb8(&dir.join("input.png"), &sample.input)?;
    io::write_rgb8(&dir.join("background.png"), &sample.background)?;
    io::write_matte(&dir, &sample.matte)?;
    debug!(
        "sample {id}: {} (self-check MSE {self_check:.2e})",
        category.name()
    );

    Ok(SampleRecord {
        id,
        category: category.name().to_string(),
        seed,
        background_source: source
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        scene: format!("{rel}/scene.toml"),
        input: format!("{rel}/input.png"),
        background: format!("{rel}/background.png"),
        mask: format!("{rel}/{}", io::MASK_FILE),
        attenuation: format!("{rel}/{}", io::ATTENUATION_FILE),
        flow: format!("{rel}/{}", io::FLOW_FILE),
        self_check_mse: self_check,
    })
}
