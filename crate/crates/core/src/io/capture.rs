//! Capture stacks on disk: one image per capture plus a `stack.txt`
//! manifest of `role file` lines.
//!
//! ```text
//! # comments and blank lines are ignored
//! pattern_size 512 512      # optional, defaults to the capture size
//! black black.png
//! white white.png
//! pattern 0 pattern_00.png  # plane index: x planes first, MSB first
//! complement 0 complement_00.png
//! ```
//!
//! Complements are either given for every plane or for none.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::png::{read_image, write_gray16};
use crate::error::{Error, Result};
use crate::graycode::{Axis, CaptureStack, PatternRole, StackLayout};

pub const STACK_MANIFEST: &str = "stack.txt";

fn plane_of(layout: &StackLayout, role: PatternRole) -> usize {
    match role.axis {
        Axis::X => role.bit,
        Axis::Y => layout.bits_x + role.bit,
    }
}

/// Writes every capture as a 16-bit grayscale PNG plus the manifest.
pub fn write_capture_stack(dir: &Path, stack: &CaptureStack) -> Result<()> {
    stack.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let layout = stack.layout;
    let mut manifest = String::new();
    writeln!(manifest, "pattern_size {} {}", layout.width, layout.height).unwrap();
    write_gray16(&dir.join("black.png"), &stack.black)?;
    writeln!(manifest, "black black.png").unwrap();
    write_gray16(&dir.join("white.png"), &stack.white)?;
    writeln!(manifest, "white white.png").unwrap();
    for (role, img) in layout.roles().into_iter().zip(&stack.patterns) {
        let kind = if role.complement {
            "complement"
        } else {
            "pattern"
        };
        let k = plane_of(&layout, role);
        let file = format!("{kind}_{k:02}.png");
        write_gray16(&dir.join(&file), img)?;
        writeln!(manifest, "{kind} {k} {file}").unwrap();
    }
    let path = dir.join(STACK_MANIFEST);
    std::fs::write(&path, manifest).map_err(|e| Error::io(path, e))
}

pub fn read_capture_stack(dir: &Path) -> Result<CaptureStack> {
    let path = dir.join(STACK_MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let bad = |line: usize, reason: String| {
        Error::format("capture manifest", format!("line {}: {reason}", line + 1))
    };

    let mut size = None;
    let mut black = None;
    let mut white = None;
    let mut patterns = BTreeMap::new();
    let mut complements = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["pattern_size", w, h] => {
                let parse = |s: &str| s.parse::<usize>().map_err(|e| bad(n, e.to_string()));
                size = Some((parse(w)?, parse(h)?));
            }
            ["black", file] => black = Some(*file),
            ["white", file] => white = Some(*file),
            [kind @ ("pattern" | "complement"), k, file] => {
                let k: usize = k
                    .parse()
                    .map_err(|_| bad(n, format!("bad plane index {k:?}")))?;
                let map = if *kind == "pattern" {
                    &mut patterns
                } else {
                    &mut complements
                };
                if map.insert(k, *file).is_some() {
                    return Err(bad(n, format!("duplicate {kind} {k}")));
                }
            }
            _ => return Err(bad(n, format!("unrecognized entry {line:?}"))),
        }
    }
    let missing = |what: &str| Error::Validation(format!("capture stack has no {what} image"));
    let black = read_image(&dir.join(black.ok_or_else(|| missing("black"))?))?;
    let white = read_image(&dir.join(white.ok_or_else(|| missing("white"))?))?;
    let (w, h) = size.unwrap_or(black.dims());
    if w < 2 || h < 2 {
        return Err(Error::format(
            "capture manifest",
            format!("pattern size {w}x{h} too small"),
        ));
    }
    let layout = StackLayout::new(w, h, !complements.is_empty());
    let planes = layout.bits_x + layout.bits_y;
    for (kind, map) in [("pattern", &patterns), ("complement", &complements)] {
        if kind == "complement" && map.is_empty() {
            continue;
        }
        if let Some(k) = (0..planes).find(|k| !map.contains_key(k)) {
            return Err(Error::Validation(format!(
                "capture stack is missing {kind} {k} of {planes}"
            )));
        }
        if let Some(k) = map.keys().find(|k| **k >= planes) {
            return Err(Error::Validation(format!(
                "{kind} {k} beyond the {planes} planes of a {w}x{h} stack"
            )));
        }
    }
    let images = layout
        .roles()
        .into_iter()
        .map(|role| {
            let k = plane_of(&layout, role);
            let file = if role.complement {
                complements[&k]
            } else {
                patterns[&k]
            };
            read_image(&dir.join(file))
        })
        .collect::<Result<Vec<_>>>()?;
    CaptureStack::new(layout, black, white, images)
}
