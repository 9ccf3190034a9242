//! On-disk formats: Middlebury flow files, PNG rasters, matte directories
//! and capture-stack manifests.

mod capture;
mod flo;
mod png;

use std::path::Path;

pub use capture::{read_capture_stack, write_capture_stack, STACK_MANIFEST};
pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_INVALID, FLO_MAGIC};
pub use png::{
    read_gray16, read_gray8, read_image, read_rgb8, write_gray16, write_gray8, write_rgb8,
};

use crate::error::Result;
use crate::matte::Matte;

pub const MASK_FILE: &str = "mask.png";
pub const ATTENUATION_FILE: &str = "attenuation.png";
pub const FLOW_FILE: &str = "flow.flo";

/// Writes `mask.png` (8-bit), `attenuation.png` (16-bit) and `flow.flo`
/// into `dir`, creating it if needed.
pub fn write_matte(dir: &Path, matte: &Matte) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    write_gray8(&dir.join(MASK_FILE), &matte.mask)?;
    write_gray16(&dir.join(ATTENUATION_FILE), &matte.attenuation)?;
    write_flo(&dir.join(FLOW_FILE), &matte.flow)
}

pub fn read_matte(dir: &Path) -> Result<Matte> {
    let mask = read_gray8(&dir.join(MASK_FILE))?;
    let attenuation = read_gray16(&dir.join(ATTENUATION_FILE))?;
    let flow = read_flo(&dir.join(FLOW_FILE))?;
    let matte = Matte::new(mask, attenuation, flow)?;
    matte.validate()?;
    Ok(matte)
}
