//! Scene description: pinhole camera, one transparent object and a
//! background plane fixed in the camera frame.
//!
//! Scenes serialize to a small TOML document:
//!
//! ```toml
//! background_distance = 10.0
//!
//! [camera]
//! width = 256
//! height = 256
//! focal_length = 300.0
//! principal_point = [127.5, 127.5]
//!
//! [object]
//! refractive_index = 1.45
//!
//! [object.pose]
//! position = [0.0, 0.0, 5.0]
//! rotation = [0.0, 30.0, 0.0]   # degrees about x, y, z
//!
//! [object.shape]
//! kind = "sphere"
//! radius = 1.0
//!
//! # optional nested medium sharing the object's frame
//! [object.fill]
//! refractive_index = 1.33
//! [object.fill.shape]
//! kind = "sor"
//! profile = [[0.0, 0.1], [0.8, 0.1], [0.8, 1.2], [0.0, 1.2]]
//! ```

use std::path::Path;

use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::shapes::Shape;
use crate::error::{Error, Result};

/// Refractive indices accepted for dataset objects.
pub const INDEX_RANGE: std::ops::RangeInclusive<f64> = 1.3..=1.5;

/// Index used for the water fill of "glass with water" objects.
pub const WATER_INDEX: f64 = 1.33;

/// Pinhole camera at the origin looking down +z, image x right, y down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels.
    pub focal_length: f64,
    /// Principal point in pixel coordinates (pixel centers are integers).
    pub principal_point: [f64; 2],
}

impl Camera {
    /// Camera whose principal point is the image center.
    pub fn centered(width: usize, height: usize, focal_length: f64) -> Self {
        Self {
            width,
            height,
            focal_length,
            principal_point: [(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0],
        }
    }
}

/// Rigid transform from object-local to camera coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    /// Euler angles in degrees, applied about x, then y, then z.
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl Pose {
    pub fn at(position: [f64; 3]) -> Self {
        Self {
            position,
            rotation: [0.0; 3],
        }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        let [rx, ry, rz] = self.rotation.map(f64::to_radians);
        let rot = Rotation3::from_euler_angles(rx, ry, rz);
        Isometry3::from_parts(
            Translation3::new(self.position[0], self.position[1], self.position[2]),
            UnitQuaternion::from_rotation_matrix(&rot),
        )
    }
}

/// A nested medium inside the main object, e.g. water in a glass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub shape: Shape,
    pub refractive_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransparentObject {
    pub shape: Shape,
    pub pose: Pose,
    pub refractive_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<Fill>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub camera: Camera,
    /// Depth of the background plane along the optical axis. The plane's
    /// texture maps each point to the pixel it projects to, so without an
    /// object every pixel sees its own background pixel.
    pub background_distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<TransparentObject>,
}

impl Scene {
    pub fn empty(camera: Camera, background_distance: f64) -> Self {
        Self {
            camera,
            background_distance,
            object: None,
        }
    }

    /// Geometric sanity: positive camera and shape parameters, object
    /// strictly between the camera and the background plane.
    pub fn validate(&self) -> Result<()> {
        let cam = &self.camera;
        if cam.width == 0 || cam.height == 0 {
            return Err(Error::invalid("camera image size must be non-zero"));
        }
        if !(cam.focal_length > 0.0 && cam.focal_length.is_finite()) {
            return Err(Error::invalid(format!(
                "focal length must be positive, got {}",
                cam.focal_length
            )));
        }
        if !(self.background_distance > 0.0 && self.background_distance.is_finite()) {
            return Err(Error::invalid(format!(
                "background distance must be positive, got {}",
                self.background_distance
            )));
        }
        let Some(obj) = &self.object else {
            return Ok(());
        };
        obj.shape.validate()?;
        if !(obj.refractive_index > 0.0 && obj.refractive_index.is_finite()) {
            return Err(Error::invalid("refractive index must be positive"));
        }
        if let Some(fill) = &obj.fill {
            fill.shape.validate()?;
            if !(fill.refractive_index > 0.0 && fill.refractive_index.is_finite()) {
                return Err(Error::invalid("fill refractive index must be positive"));
            }
        }
        let z = obj.pose.position[2];
        let r = obj.shape.bounding_radius();
        if z - r <= 0.0 {
            return Err(Error::invalid(format!(
                "object (depth {z}, extent {r}) must lie entirely in front of the camera"
            )));
        }
        if z + r >= self.background_distance {
            return Err(Error::invalid(format!(
                "background plane at {} intersects the object (depth {z}, extent {r})",
                self.background_distance
            )));
        }
        Ok(())
    }

    /// [`Scene::validate`] plus the dataset index range for every medium.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if let Some(obj) = &self.object {
            let mut indices = vec![obj.refractive_index];
            indices.extend(obj.fill.as_ref().map(|f| f.refractive_index));
            if let Some(n) = indices.into_iter().find(|n| !INDEX_RANGE.contains(n)) {
                return Err(Error::invalid(format!(
                    "refractive index {n} outside [{}, {}]",
                    INDEX_RANGE.start(),
                    INDEX_RANGE.end()
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scene: Scene =
            toml::from_str(text).map_err(|e| Error::format("scene file", e.to_string()))?;
        scene.validate_strict()?;
        Ok(scene)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}
