//! Analytic ground-truth renderer.
//!
//! Camera rays are refracted through the object's interfaces by Snell's law
//! and land on a background plane perpendicular to the optical axis. Each
//! pixel's landing point gives its refractive flow; the product of Fresnel
//! transmittances along the path gives its attenuation.

mod optics;
pub mod random;
mod scene;
mod shapes;

use nalgebra::{Isometry3, Point3, Vector3};
use rayon::prelude::*;

pub use optics::{fresnel_transmittance, refract_direction, Refraction};
pub use scene::{Camera, Fill, Pose, Scene, TransparentObject, INDEX_RANGE, WATER_INDEX};
pub use shapes::Shape;

use crate::error::{check_dims, Result};
use crate::matte::Matte;
use crate::raster::ImageBuffer;

/// Upper bound on interfaces crossed by one ray; longer paths are invalid.
const MAX_INTERFACES: usize = 32;
const SURFACE_EPS: f64 = 1e-7;
/// Sub-pixel offsets used at mask boundaries.
const SUBSAMPLES: [[f64; 2]; 4] = [[-0.25, -0.25], [0.25, -0.25], [-0.25, 0.25], [0.25, 0.25]];

/// Result of tracing one camera ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayTrace {
    /// The ray crossed at least one object interface.
    pub hit: bool,
    /// Background-plane landing point in pixel coordinates; `None` after
    /// total internal reflection, an exit that never reaches the plane, or
    /// a flow larger than the frame.
    pub exit: Option<[f64; 2]>,
    /// Product of per-interface Fresnel transmittances; 0 when `exit` is `None`.
    pub transmittance: f64,
    pub interfaces: usize,
}

struct Medium {
    shape: Shape,
    index: f64,
}

/// Scene geometry prepared for repeated tracing.
pub struct Tracer {
    camera: Camera,
    distance: f64,
    object: Option<(Isometry3<f64>, Vec<Medium>)>,
}

impl Tracer {
    pub fn new(scene: &Scene) -> Result<Self> {
        scene.validate()?;
        let object = scene.object.as_ref().map(|obj| {
            // later media take precedence where they overlap
            let mut media = vec![Medium {
                shape: obj.shape.clone(),
                index: obj.refractive_index,
            }];
            if let Some(fill) = &obj.fill {
                media.push(Medium {
                    shape: fill.shape.clone(),
                    index: fill.refractive_index,
                });
            }
            (obj.pose.isometry(), media)
        });
        Ok(Self {
            camera: scene.camera.clone(),
            distance: scene.background_distance,
            object,
        })
    }

    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    fn medium_index(media: &[Medium], p: &Point3<f64>) -> f64 {
        media
            .iter()
            .rev()
            .find(|m| m.shape.contains(p))
            .map_or(1.0, |m| m.index)
    }

    /// Traces the ray through pixel coordinate `(x, y)`.
    pub fn trace(&self, x: f64, y: f64) -> RayTrace {
        let cam = &self.camera;
        let dir = Vector3::new(
            (x - cam.principal_point[0]) / cam.focal_length,
            (y - cam.principal_point[1]) / cam.focal_length,
            1.0,
        )
        .normalize();

        let Some((pose, media)) = &self.object else {
            return self.land(Point3::origin(), dir, x, y, false, 1.0, 0);
        };

        let mut origin = pose.inverse_transform_point(&Point3::origin());
        let mut d = pose.inverse_transform_vector(&dir);
        let mut n_cur = 1.0;
        let mut transmittance = 1.0;
        let mut interfaces = 0;
        let mut crossings = 0;
        loop {
            let hit = media
                .iter()
                .filter_map(|m| m.shape.hit(&origin, &d, SURFACE_EPS))
                .min_by(|a, b| a.t.total_cmp(&b.t));
            let Some(hit) = hit else { break };
            crossings += 1;
            if crossings > MAX_INTERFACES {
                return self.invalid(true, interfaces);
            }
            let p = origin + d * hit.t;
            let n_next = Self::medium_index(media, &(p + d * SURFACE_EPS));
            if n_next != n_cur {
                interfaces += 1;
                transmittance *= optics::fresnel_unchecked(&d, &hit.normal, n_cur, n_next);
                match optics::refract_unchecked(&d, &hit.normal, n_cur, n_next) {
                    Refraction::Transmitted(t) => d = t,
                    Refraction::TotalInternalReflection => return self.invalid(true, interfaces),
                }
                n_cur = n_next;
            }
            origin = p;
        }
        if crossings == 0 {
            return self.land(Point3::origin(), dir, x, y, false, 1.0, 0);
        }
        if n_cur != 1.0 {
            return self.invalid(true, interfaces);
        }
        self.land(
            pose.transform_point(&origin),
            pose.transform_vector(&d),
            x,
            y,
            true,
            transmittance,
            interfaces,
        )
    }

    fn invalid(&self, hit: bool, interfaces: usize) -> RayTrace {
        RayTrace {
            hit,
            exit: None,
            transmittance: 0.0,
            interfaces,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn land(
        &self,
        origin: Point3<f64>,
        dir: Vector3<f64>,
        x: f64,
        y: f64,
        hit: bool,
        transmittance: f64,
        interfaces: usize,
    ) -> RayTrace {
        let cam = &self.camera;
        if dir.z <= 1e-12 {
            return self.invalid(hit, interfaces);
        }
        let t = (self.distance - origin.z) / dir.z;
        if t <= 0.0 {
            return self.invalid(hit, interfaces);
        }
        let q = origin + dir * t;
        let u = cam.focal_length * q.x / self.distance + cam.principal_point[0];
        let v = cam.focal_length * q.y / self.distance + cam.principal_point[1];
        if !hit {
            // straight ray lands on its own pixel; avoid round-off drift
            return RayTrace {
                hit,
                exit: Some([x, y]),
                transmittance,
                interfaces,
            };
        }
        if !u.is_finite()
            || !v.is_finite()
            || (u - x).abs() > cam.width as f64
            || (v - y).abs() > cam.height as f64
        {
            return self.invalid(hit, interfaces);
        }
        RayTrace {
            hit,
            exit: Some([u, v]),
            transmittance,
            interfaces,
        }
    }
}

/// Traces the camera ray through pixel `(x, y)` of `scene`.
pub fn trace_ray(scene: &Scene, x: f64, y: f64) -> Result<RayTrace> {
    let cam = &scene.camera;
    if !(x >= -0.5 && y >= -0.5 && x < cam.width as f64 - 0.5 && y < cam.height as f64 - 0.5) {
        return Err(crate::Error::invalid(format!(
            "pixel ({x}, {y}) outside {}x{} image",
            cam.width, cam.height
        )));
    }
    Ok(Tracer::new(scene)?.trace(x, y))
}

#[derive(Debug, Clone, Copy)]
struct LightPath {
    transmittance: f64,
    /// Background sample location; `None` renders black.
    source: Option<[f64; 2]>,
    hit: bool,
}

/// Per-pixel light paths of a scene: one path for interior pixels, four
/// supersampled paths at mask boundaries.
pub struct LightTransport {
    width: usize,
    height: usize,
    start: Vec<usize>,
    paths: Vec<LightPath>,
}

impl LightTransport {
    pub fn trace(scene: &Scene) -> Result<Self> {
        let tracer = Tracer::new(scene)?;
        let (w, h) = (scene.camera.width, scene.camera.height);

        let centers: Vec<RayTrace> = (0..w * h)
            .into_par_iter()
            .map(|i| tracer.trace((i % w) as f64, (i / w) as f64))
            .collect();

        let per_pixel: Vec<Vec<LightPath>> = (0..w * h)
            .into_par_iter()
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let center = centers[i];
                let boundary = neighbors(x, y, w, h).any(|j| centers[j].hit != center.hit);
                if !boundary {
                    return vec![to_path(&center, x as f64, y as f64)];
                }
                let subs: Vec<LightPath> = SUBSAMPLES
                    .iter()
                    .map(|[ox, oy]| {
                        let (sx, sy) = (x as f64 + ox, y as f64 + oy);
                        to_path(&tracer.trace(sx, sy), sx, sy)
                    })
                    .collect();
                if subs.iter().any(|p| p.hit) {
                    subs
                } else {
                    vec![to_path(&center, x as f64, y as f64)]
                }
            })
            .collect();

        let mut start = Vec::with_capacity(w * h + 1);
        let mut paths = Vec::with_capacity(w * h);
        for p in per_pixel {
            start.push(paths.len());
            paths.extend(p);
        }
        start.push(paths.len());
        Ok(Self {
            width: w,
            height: h,
            start,
            paths,
        })
    }

    fn pixel_paths(&self, i: usize) -> &[LightPath] {
        &self.paths[self.start[i]..self.start[i + 1]]
    }

    /// Pixels rendered with boundary supersampling.
    pub fn supersampled(&self) -> Vec<bool> {
        (0..self.width * self.height)
            .map(|i| self.pixel_paths(i).len() > 1)
            .collect()
    }

    /// Renders the scene in front of `background` by following the paths.
    pub fn render(&self, background: &ImageBuffer) -> Result<ImageBuffer> {
        check_dims((self.width, self.height), background.dims())?;
        let ch = background.channels();
        let w = self.width;
        let mut out = ImageBuffer::new(self.width, self.height, ch);
        out.data_mut()
            .par_chunks_mut(w * ch)
            .enumerate()
            .for_each(|(y, row)| {
                let mut sample = [0.0f64; 3];
                for x in 0..w {
                    let paths = self.pixel_paths(y * w + x);
                    let weight = 1.0 / paths.len() as f64;
                    let mut acc = [0.0f64; 3];
                    for p in paths {
                        if let Some([sx, sy]) = p.source {
                            background.sample_into(sx, sy, &mut sample);
                            for c in 0..ch {
                                acc[c] += weight * p.transmittance * sample[c];
                            }
                        }
                    }
                    for c in 0..ch {
                        row[x * ch + c] = acc[c].clamp(0.0, 1.0) as f32;
                    }
                }
            });
        Ok(out)
    }

    /// The object rendered white over a black background: the soft mask.
    pub fn coverage(&self) -> ImageBuffer {
        let data = (0..self.width * self.height)
            .map(|i| {
                let paths = self.pixel_paths(i);
                (paths.iter().filter(|p| p.hit).count() as f64 / paths.len() as f64) as f32
            })
            .collect();
        ImageBuffer::from_vec(self.width, self.height, 1, data).expect("sized buffer")
    }

    /// Ground-truth matte: hit fraction as mask, mean transmittance of the
    /// hitting paths as attenuation, mean landing point minus pixel as flow.
    pub fn matte(&self) -> Matte {
        let (w, h) = (self.width, self.height);
        let mut matte = Matte::empty(w, h);
        for i in 0..w * h {
            let (x, y) = (i % w, i / w);
            let paths = self.pixel_paths(i);
            let hits: Vec<&LightPath> = paths.iter().filter(|p| p.hit).collect();
            if hits.is_empty() {
                continue;
            }
            let mask = hits.len() as f64 / paths.len() as f64;
            let rho = hits.iter().map(|p| p.transmittance).sum::<f64>() / hits.len() as f64;
            matte.mask.set(x, y, 0, mask as f32);
            matte.attenuation.set(x, y, 0, rho.clamp(0.0, 1.0) as f32);
            let valid: Vec<[f64; 2]> = hits.iter().filter_map(|p| p.source).collect();
            if valid.is_empty() {
                matte.flow.set_invalid(x, y);
                continue;
            }
            let n = valid.len() as f64;
            let mx = valid.iter().map(|s| s[0]).sum::<f64>() / n;
            let my = valid.iter().map(|s| s[1]).sum::<f64>() / n;
            let dx = (mx - x as f64).clamp(-(w as f64), w as f64);
            let dy = (my - y as f64).clamp(-(h as f64), h as f64);
            matte.flow.set(x, y, [dx as f32, dy as f32]);
        }
        matte
    }
}

fn to_path(trace: &RayTrace, x: f64, y: f64) -> LightPath {
    if trace.hit {
        LightPath {
            transmittance: trace.transmittance,
            source: trace.exit,
            hit: true,
        }
    } else {
        LightPath {
            transmittance: 1.0,
            source: Some([x, y]),
            hit: false,
        }
    }
}

fn neighbors(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (x as isize, y as isize);
    (-1isize..=1)
        .flat_map(move |dy| (-1isize..=1).map(move |dx| (x + dx, y + dy)))
        .filter(move |&(nx, ny)| {
            (nx, ny) != (x, y) && nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize
        })
        .map(move |(nx, ny)| ny as usize * w + nx as usize)
}

/// Ground-truth matte together with the pixels that were supersampled.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub matte: Matte,
    pub supersampled: Vec<bool>,
}

pub fn render_ground_truth(scene: &Scene) -> Result<GroundTruth> {
    let transport = LightTransport::trace(scene)?;
    Ok(GroundTruth {
        matte: transport.matte(),
        supersampled: transport.supersampled(),
    })
}

/// Analytic ground-truth matte of `scene`.
pub fn render_ground_truth_matte(scene: &Scene) -> Result<Matte> {
    Ok(LightTransport::trace(scene)?.matte())
}

/// Direct render of `scene` in front of `background`, which must match the
/// camera's image size.
pub fn render_scene_image(scene: &Scene, background: &ImageBuffer) -> Result<ImageBuffer> {
    check_dims((scene.camera.width, scene.camera.height), background.dims())?;
    LightTransport::trace(scene)?.render(background)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slab_scene(tilt_deg: f64, n: f64, thickness: f64) -> Scene {
        Scene {
            camera: Camera::centered(65, 65, 200.0),
            background_distance: 10.0,
            object: Some(TransparentObject {
                shape: Shape::Slab {
                    thickness,
                    half_width: 3.0,
                    half_height: 3.0,
                },
                pose: Pose {
                    position: [0.0, 0.0, 5.0],
                    rotation: [0.0, tilt_deg, 0.0],
                },
                refractive_index: n,
                fill: None,
            }),
        }
    }

    #[test]
    fn normal_incidence_slab_has_zero_flow() {
        let scene = slab_scene(0.0, 1.5, 0.5);
        let r = trace_ray(&scene, 32.0, 32.0).unwrap();
        assert!(r.hit);
        let [u, v] = r.exit.unwrap();
        assert!((u - 32.0).abs() < 1e-9 && (v - 32.0).abs() < 1e-9);
        assert!((r.transmittance - 0.96 * 0.96).abs() < 1e-12);
        assert_eq!(r.interfaces, 2);
    }

    #[test]
    fn sphere_through_center_is_undeviated() {
        let scene = Scene {
            camera: Camera::centered(65, 65, 100.0),
            background_distance: 10.0,
            object: Some(TransparentObject {
                shape: Shape::Sphere { radius: 1.0 },
                pose: Pose::at([0.0, 0.0, 5.0]),
                refractive_index: 1.5,
                fill: None,
            }),
        };
        let r = trace_ray(&scene, 32.0, 32.0).unwrap();
        let [u, v] = r.exit.unwrap();
        assert!((u - 32.0).abs() < 1e-9 && (v - 32.0).abs() < 1e-9);
        assert!((r.transmittance - 0.9216).abs() < 1e-12);
    }

    #[test]
    fn miss_lands_on_own_pixel() {
        let mut scene = slab_scene(0.0, 1.5, 0.5);
        scene.object.as_mut().unwrap().shape = Shape::Slab {
            thickness: 0.5,
            half_width: 0.5,
            half_height: 0.5,
        };
        let r = trace_ray(&scene, 0.0, 0.0).unwrap();
        assert!(!r.hit);
        assert_eq!(r.exit, Some([0.0, 0.0]));
        assert_eq!(r.transmittance, 1.0);
    }

    #[test]
    fn trace_rejects_out_of_frame_pixel() {
        let scene = slab_scene(0.0, 1.5, 0.5);
        assert!(trace_ray(&scene, 65.0, 0.0).is_err());
        assert!(trace_ray(&scene, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn empty_scene_renders_background() {
        let scene = Scene::empty(Camera::centered(16, 12, 20.0), 5.0);
        let matte = render_ground_truth_matte(&scene).unwrap();
        assert_eq!(matte, Matte::empty(16, 12));
        let bg = ImageBuffer::from_fn(16, 12, 3, |x, y, c| ((x + y + c) % 5) as f32 / 4.0);
        assert_eq!(render_scene_image(&scene, &bg).unwrap(), bg);
    }

    #[test]
    fn object_outside_frustum_gives_empty_matte() {
        let mut scene = slab_scene(0.0, 1.5, 0.5);
        scene.object.as_mut().unwrap().pose.position = [40.0, 0.0, 5.0];
        let matte = render_ground_truth_matte(&scene).unwrap();
        assert!(matte.mask.data().iter().all(|&m| m == 0.0));
        assert!(matte.flow.offsets().iter().all(|o| *o == [0.0, 0.0]));
    }

    #[test]
    fn normal_incidence_slab_dims_background() {
        // slab covers the whole frame: every pixel is interior
        let mut scene = slab_scene(0.0, 1.5, 0.2);
        scene.camera = Camera::centered(32, 32, 400.0);
        let bg = ImageBuffer::filled(32, 32, 3, 0.75);
        let img = render_scene_image(&scene, &bg).unwrap();
        // near-normal incidence everywhere at this focal length
        for v in img.data() {
            assert!((*v as f64 - 0.9216 * 0.75).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn degenerate_scene_is_rejected() {
        let mut scene = slab_scene(0.0, 1.5, 0.5);
        scene.background_distance = 6.0;
        assert!(render_ground_truth_matte(&scene).is_err());
    }

    #[test]
    fn total_internal_reflection_is_flagged() {
        // ray enters a slab face and meets a side face past the critical angle
        let scene = Scene {
            camera: Camera::centered(65, 65, 60.0),
            background_distance: 20.0,
            object: Some(TransparentObject {
                shape: Shape::Slab {
                    thickness: 1.0,
                    half_width: 0.8,
                    half_height: 0.8,
                },
                pose: Pose {
                    position: [0.0, 0.0, 5.0],
                    rotation: [0.0, 60.0, 0.0],
                },
                refractive_index: 1.5,
                fill: None,
            }),
        };
        let matte = render_ground_truth_matte(&scene).unwrap();
        let invalid = (0..65 * 65)
            .filter(|&i| matte.mask.data()[i] > 0.0 && !matte.flow.valid()[i])
            .count();
        assert!(invalid > 0);
        for i in 0..65 * 65 {
            if !matte.flow.valid()[i] {
                assert_eq!(matte.flow.offsets()[i], [0.0, 0.0]);
                assert_eq!(matte.attenuation.data()[i], 0.0);
            }
        }
    }
}
