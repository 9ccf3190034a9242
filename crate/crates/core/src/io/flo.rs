use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;

pub const FLO_MAGIC: &[u8; 4] = b"PIEH";
/// Value written to both components of an invalid pixel.
pub const FLO_INVALID: f32 = 1e10;
/// Components beyond this magnitude mark a pixel invalid on read.
const INVALID_THRESHOLD: f32 = 1e9;

/// Serializes a flow field in the Middlebury `.flo` layout: magic,
/// little-endian `i32` width and height, then row-major `f32` pairs.
pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(FLO_MAGIC);
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (o, &v) in flow.offsets().iter().zip(flow.valid()) {
        let [dx, dy] = if v { *o } else { [FLO_INVALID; 2] };
        out.extend_from_slice(&dx.to_le_bytes());
        out.extend_from_slice(&dy.to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    let bad = |reason: String| Error::format("flow file", reason);
    if bytes.len() < 12 {
        return Err(bad(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != FLO_MAGIC {
        return Err(bad("missing PIEH magic".into()));
    }
    let read_i32 = |at: usize| i32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let (w, h) = (read_i32(4), read_i32(8));
    if w < 0 || h < 0 {
        return Err(bad(format!("negative size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| bad(format!("size {w}x{h} overflows")))?;
    if bytes.len() != expected {
        return Err(bad(format!(
            "{w}x{h} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut offsets = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for pair in bytes[12..].chunks_exact(8) {
        let dx = f32::from_le_bytes(pair[..4].try_into().unwrap());
        let dy = f32::from_le_bytes(pair[4..].try_into().unwrap());
        if dx.is_nan() || dy.is_nan() {
            return Err(bad("NaN flow component".into()));
        }
        if dx.abs() > INVALID_THRESHOLD || dy.abs() > INVALID_THRESHOLD {
            offsets.push([0.0, 0.0]);
            valid.push(false);
        } else {
            offsets.push([dx, dy]);
            valid.push(true);
        }
    }
    FlowField::from_parts(w, h, offsets, valid)
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    std::fs::write(path, encode_flo(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes)
}
