//! Seeded random scenes for the four object categories.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{Camera, Fill, Pose, Scene, TransparentObject, INDEX_RANGE, WATER_INDEX};
use super::shapes::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Glass,
    GlassWater,
    Lens,
    /// Stand-in for composed shapes: solid surfaces of revolution,
    /// spheres and tilted slabs.
    Complex,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Glass,
        Category::GlassWater,
        Category::Lens,
        Category::Complex,
    ];

    /// Default relative frequency in generated datasets.
    pub fn default_weight(self) -> f64 {
        match self {
            Category::Glass => 52.0,
            Category::GlassWater => 26.0,
            Category::Lens => 20.0,
            Category::Complex => 80.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Glass => "glass",
            Category::GlassWater => "glass_water",
            Category::Lens => "lens",
            Category::Complex => "complex",
        }
    }
}

/// Splits `count` across categories proportionally to `weights` using
/// largest remainders; ties go to the earlier category.
pub fn allocate(count: usize, weights: &[(Category, f64)]) -> Vec<(Category, usize)> {
    let total: f64 = weights.iter().map(|(_, w)| w.max(0.0)).sum();
    if total <= 0.0 {
        return weights.iter().map(|(c, _)| (*c, 0)).collect();
    }
    let exact: Vec<f64> = weights
        .iter()
        .map(|(_, w)| count as f64 * w.max(0.0) / total)
        .collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = count - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    weights.iter().map(|(c, _)| *c).zip(counts).collect()
}

/// Ranges for randomized scene parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneRanges {
    /// Focal length as a multiple of the image width.
    pub focal_min: f64,
    pub focal_max: f64,
    pub object_depth_min: f64,
    pub object_depth_max: f64,
    pub background_min: f64,
    pub background_max: f64,
    /// Lateral jitter of the object center, object units.
    pub lateral_jitter: f64,
}

impl Default for SceneRanges {
    fn default() -> Self {
        Self {
            focal_min: 0.9,
            focal_max: 1.4,
            object_depth_min: 4.5,
            object_depth_max: 6.0,
            background_min: 9.0,
            background_max: 13.0,
            lateral_jitter: 0.4,
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Draws a valid scene of the given category.
pub fn random_scene<R: Rng>(
    category: Category,
    width: usize,
    height: usize,
    ranges: &SceneRanges,
    rng: &mut R,
) -> Scene {
    let focal = width as f64 * uniform(rng, ranges.focal_min, ranges.focal_max);
    let camera = Camera::centered(width, height, focal);
    let depth = uniform(rng, ranges.object_depth_min, ranges.object_depth_max);
    let background_distance = uniform(rng, ranges.background_min, ranges.background_max);
    let position = [
        uniform(rng, -ranges.lateral_jitter, ranges.lateral_jitter),
        uniform(rng, -ranges.lateral_jitter, ranges.lateral_jitter),
        depth,
    ];
    let refractive_index = uniform(rng, *INDEX_RANGE.start(), *INDEX_RANGE.end());

    let (shape, rotation, fill) = match category {
        Category::Glass | Category::GlassWater => {
            let cup = Cup::random(rng);
            // local z is the cup axis; rotate it to point up the image
            let rotation = [
                90.0 + uniform(rng, -25.0, 25.0),
                0.0,
                uniform(rng, -15.0, 15.0),
            ];
            let fill = (category == Category::GlassWater).then(|| Fill {
                shape: cup.water(uniform(rng, 0.3, 0.9)),
                refractive_index: WATER_INDEX,
            });
            (cup.shape(), rotation, fill)
        }
        Category::Lens => {
            let rim = uniform(rng, 0.7, 1.3);
            let r1 = rim * uniform(rng, 1.2, 3.0);
            let r2 = rim * uniform(rng, 1.2, 3.0);
            let sag = |r: f64| r - (r * r - rim * rim).sqrt();
            let shape = Shape::Lens {
                front_radius: r1,
                back_radius: r2,
                thickness: sag(r1) + sag(r2),
            };
            let rotation = [uniform(rng, -35.0, 35.0), uniform(rng, -35.0, 35.0), 0.0];
            (shape, rotation, None)
        }
        Category::Complex => match rng.random_range(0..3u8) {
            0 => (
                Shape::Sphere {
                    radius: uniform(rng, 0.6, 1.2),
                },
                [0.0; 3],
                None,
            ),
            1 => (
                Shape::Slab {
                    thickness: uniform(rng, 0.2, 0.6),
                    half_width: uniform(rng, 0.6, 1.3),
                    half_height: uniform(rng, 0.6, 1.3),
                },
                [
                    uniform(rng, -50.0, 50.0),
                    uniform(rng, -50.0, 50.0),
                    uniform(rng, -45.0, 45.0),
                ],
                None,
            ),
            _ => (
                random_vase(rng),
                [
                    90.0 + uniform(rng, -30.0, 30.0),
                    0.0,
                    uniform(rng, -20.0, 20.0),
                ],
                None,
            ),
        },
    };

    Scene {
        camera,
        background_distance,
        object: Some(TransparentObject {
            shape,
            pose: Pose { position, rotation },
            refractive_index,
            fill,
        }),
    }
}

/// Open-topped cup with a flat base, centered on its axis midpoint.
struct Cup {
    radius: f64,
    half_height: f64,
    wall: f64,
    base: f64,
}

impl Cup {
    fn random<R: Rng>(rng: &mut R) -> Self {
        Self {
            radius: uniform(rng, 0.6, 1.0),
            half_height: uniform(rng, 0.6, 1.0),
            wall: uniform(rng, 0.06, 0.15),
            base: uniform(rng, 0.1, 0.25),
        }
    }

    fn shape(&self) -> Shape {
        let (r, h, w) = (self.radius, self.half_height, self.wall);
        let floor = -h + self.base;
        Shape::Sor {
            profile: vec![
                [0.0, -h],
                [r, -h],
                [r, h],
                [r - w, h],
                [r - w, floor],
                [0.0, floor],
            ],
        }
    }

    /// Liquid column filling the cup to `level` of its inner depth.
    fn water(&self, level: f64) -> Shape {
        let inner = self.radius - self.wall;
        let floor = -self.half_height + self.base;
        let top = floor + level * (self.half_height - floor);
        Shape::Sor {
            profile: vec![[0.0, floor], [inner, floor], [inner, top], [0.0, top]],
        }
    }
}

/// Solid, squashed surface of revolution with a wavy silhouette.
fn random_vase<R: Rng>(rng: &mut R) -> Shape {
    let levels = 6;
    let half = uniform(rng, 0.6, 1.0);
    let mut profile = vec![[0.0, -half]];
    for i in 0..levels {
        let z = -half + 2.0 * half * i as f64 / (levels - 1) as f64;
        profile.push([uniform(rng, 0.35, 0.9), z]);
    }
    profile.push([0.0, half]);
    Shape::Sor { profile }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn allocation_follows_training_ratios() {
        let weights: Vec<_> = Category::ALL
            .iter()
            .map(|c| (*c, c.default_weight()))
            .collect();
        let counts = allocate(100, &weights);
        let n: Vec<usize> = counts.iter().map(|(_, n)| *n).collect();
        assert_eq!(n, vec![29, 15, 11, 45]);
        assert_eq!(
            allocate(0, &weights).iter().map(|(_, n)| n).sum::<usize>(),
            0
        );
        assert_eq!(
            allocate(178, &weights)
                .iter()
                .map(|(_, n)| *n)
                .collect::<Vec<_>>(),
            vec![52, 26, 20, 80]
        );
    }

    #[test]
    fn random_scenes_are_valid_and_seeded() {
        for (i, cat) in Category::ALL.iter().cycle().take(40).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let scene = random_scene(*cat, 64, 64, &SceneRanges::default(), &mut rng);
            scene.validate_strict().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            assert_eq!(
                scene,
                random_scene(*cat, 64, 64, &SceneRanges::default(), &mut rng)
            );
        }
    }
}
