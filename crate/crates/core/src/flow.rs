use crate::error::{Error, Result};

/// Per-pixel refractive flow: absolute offsets in pixels from a foreground
/// pixel to the background location it sees, plus a validity flag.
///
/// Invalid pixels (total internal reflection, rays escaping the background
/// plane, undecodable codes) always carry the offset `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    offsets: Vec<[f32; 2]>,
    valid: Vec<bool>,
}

impl FlowField {
    /// All-zero, all-valid flow.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            offsets: vec![[0.0, 0.0]; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn uniform(width: usize, height: usize, dx: f32, dy: f32) -> Self {
        Self {
            width,
            height,
            offsets: vec![[dx, dy]; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        offsets: Vec<[f32; 2]>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if offsets.len() != n || valid.len() != n {
            return Err(Error::invalid(format!(
                "flow buffers ({}, {}) do not hold {width}x{height}",
                offsets.len(),
                valid.len()
            )));
        }
        let mut flow = Self {
            width,
            height,
            offsets,
            valid,
        };
        for (o, &v) in flow.offsets.iter_mut().zip(&flow.valid) {
            if !v {
                *o = [0.0, 0.0];
            }
        }
        Ok(flow)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn offsets(&self) -> &[[f32; 2]] {
        &self.offsets
    }

    #[inline]
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<[f32; 2]> {
        let i = y * self.width + x;
        self.valid[i].then(|| self.offsets[i])
    }

    /// Raw offset, `(0, 0)` for invalid pixels.
    #[inline]
    pub fn offset(&self, x: usize, y: usize) -> [f32; 2] {
        self.offsets[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, offset: [f32; 2]) {
        let i = y * self.width + x;
        self.offsets[i] = offset;
        self.valid[i] = true;
    }

    #[inline]
    pub fn set_invalid(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        self.offsets[i] = [0.0, 0.0];
        self.valid[i] = false;
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    /// Checks the offset-range and invalid-is-zero invariants.
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width as f32, self.height as f32);
        for (i, (o, &v)) in self.offsets.iter().zip(&self.valid).enumerate() {
            if v {
                if !o[0].is_finite() || !o[1].is_finite() || o[0].abs() > w || o[1].abs() > h {
                    return Err(Error::Validation(format!(
                        "flow ({}, {}) at pixel {i} outside [-{w}, {w}] x [-{h}, {h}]",
                        o[0], o[1]
                    )));
                }
            } else if *o != [0.0, 0.0] {
                return Err(Error::Validation(format!(
                    "invalid flow pixel {i} carries a non-zero offset"
                )));
            }
        }
        Ok(())
    }

    pub fn flip_horizontal(&self) -> FlowField {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let src = y * self.width + x;
                let dst = y * self.width + (self.width - 1 - x);
                let [dx, dy] = self.offsets[src];
                out.offsets[dst] = [-dx, dy];
                out.valid[dst] = self.valid[src];
            }
        }
        out
    }

    pub fn flip_vertical(&self) -> FlowField {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let src = y * self.width + x;
                let dst = (self.height - 1 - y) * self.width + x;
                let [dx, dy] = self.offsets[src];
                out.offsets[dst] = [dx, -dy];
                out.valid[dst] = self.valid[src];
            }
        }
        out
    }

    /// Restriction to a window. Offsets larger than the window itself
    /// become invalid.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<FlowField> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut offsets = Vec::with_capacity(w * h);
        let mut valid = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let start = y * self.width + x0;
            for i in start..start + w {
                let [dx, dy] = self.offsets[i];
                if self.valid[i] && dx.abs() <= w as f32 && dy.abs() <= h as f32 {
                    offsets.push([dx, dy]);
                    valid.push(true);
                } else {
                    offsets.push([0.0, 0.0]);
                    valid.push(false);
                }
            }
        }
        Ok(FlowField {
            width: w,
            height: h,
            offsets,
            valid,
        })
    }
}
