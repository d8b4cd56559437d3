//! Reference scenes with default cameras, trajectories and labeled regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, CameraIntrinsics, Pose, Vec3};

use super::{Scene, ScenePrimitive, TrajectorySpec};

pub const SCENE_NAMES: [&str; 3] = ["pool", "two_walls", "sphere_room"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolScale {
    /// 40 m x 6.45 m x 1.5 m.
    Full,
    /// One tenth of the full tank on every axis.
    #[default]
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: String,
    pub bounds: Aabb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScene {
    pub name: String,
    pub scene: Scene,
    pub intrinsics: CameraIntrinsics,
    pub trajectory: TrajectorySpec,
    pub regions: Vec<Region>,
    /// Outer dimensions for enclosure-type scenes.
    pub extent: Option<Vec3>,
}

impl NamedScene {
    pub fn region(&self, label: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.label == label)
    }
}

fn region(label: &str, a: Vec3, b: Vec3) -> Region {
    Region {
        label: label.into(),
        bounds: Aabb::new(a, b),
    }
}

fn camera(width: usize, height: usize, alpha: f64) -> CameraIntrinsics {
    CameraIntrinsics::new(
        alpha,
        alpha,
        (width as f64 - 1.0) / 2.0,
        (height as f64 - 1.0) / 2.0,
        width,
        height,
        0.1,
    )
    .expect("catalog intrinsics are valid")
}

fn look(eye: Vec3, target: Vec3, up: Vec3) -> Pose {
    Pose::look_at(eye, target, up).expect("catalog pose is well defined")
}

/// Open-top tank standing on the `z = 0` floor, corner at the origin.
pub fn pool(scale: PoolScale) -> NamedScene {
    let s = match scale {
        PoolScale::Full => 1.0,
        PoolScale::Reduced => 0.1,
    };
    let (l, w, h) = (40.0 * s, 6.45 * s, 1.5 * s);
    let p = |pt: Vec3, n: Vec3, c: f64| ScenePrimitive::plane(pt, n, c).expect("valid plane");
    let scene = Scene::new(vec![
        p(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 0.9),
        p(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 0.3),
        p(Vec3::new(l, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 0.3),
        p(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 0.3),
        p(Vec3::new(0.0, w, 0.0), Vec3::new(0.0, -1.0, 0.0), 0.3),
    ]);
    // the vehicle runs down the tank centerline looking ahead and down
    let up = Vec3::new(0.0, 0.0, 1.0);
    let eye = |x: f64| Vec3::new(x, w / 2.0, 0.8 * h);
    let ahead = 3.0 * h;
    let keys = vec![
        (0.0, look(eye(0.1 * l), eye(0.1 * l + ahead) - up * (0.8 * h), up)),
        (20.0, look(eye(0.7 * l), eye(0.7 * l + ahead) - up * (0.8 * h), up)),
    ];
    let b = 0.1 * h;
    NamedScene {
        name: "pool".into(),
        scene,
        intrinsics: camera(160, 120, 100.0),
        trajectory: TrajectorySpec::new(keys, 1.0).expect("valid trajectory"),
        regions: vec![
            region("floor", Vec3::new(b, b, -b), Vec3::new(l - b, w - b, b)),
            region("wall_y0", Vec3::new(b, -b, b), Vec3::new(l - b, b, h)),
            region("wall_y1", Vec3::new(b, w - b, b), Vec3::new(l - b, w + b, h)),
        ],
        extent: Some(Vec3::new(l, w, h)),
    }
}

/// A textured wall at 1.4 m and a poorly textured one at 0.56 m in front of
/// a camera near the origin looking along +z.
pub fn two_walls() -> NamedScene {
    let scene = Scene::new(vec![
        ScenePrimitive::cuboid(Vec3::new(-0.9, -0.45, 1.4), Vec3::new(-0.05, 0.45, 1.45), 0.9)
            .expect("valid box"),
        ScenePrimitive::cuboid(Vec3::new(0.05, -0.2, 0.56), Vec3::new(0.35, 0.2, 0.61), 0.4)
            .expect("valid box"),
    ]);
    let keys = vec![
        (0.0, Pose::from_translation(Vec3::new(-0.05, -0.03, 0.0))),
        (2.0, Pose::from_translation(Vec3::new(0.05, 0.03, 0.0))),
    ];
    NamedScene {
        name: "two_walls".into(),
        scene,
        intrinsics: camera(80, 60, 50.0),
        trajectory: TrajectorySpec::new(keys, 10.0).expect("valid trajectory"),
        regions: vec![
            region("wall_a", Vec3::new(-0.75, -0.3, 1.3), Vec3::new(-0.2, 0.3, 1.5)),
            region("wall_b", Vec3::new(0.12, -0.12, 0.46), Vec3::new(0.28, 0.12, 0.66)),
        ],
        extent: None,
    }
}

/// Sphere of radius 0.5 at the origin inside a 4 m cube room.
pub fn sphere_room() -> NamedScene {
    let mut prims = vec![ScenePrimitive::sphere(Vec3::ZERO, 0.5, 0.9).expect("valid sphere")];
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut n = [0.0; 3];
            n[axis] = -sign;
            let mut pt = [0.0; 3];
            pt[axis] = 2.0 * sign;
            prims.push(
                ScenePrimitive::plane(Vec3::from_array(pt), Vec3::from_array(n), 0.6)
                    .expect("valid plane"),
            );
        }
    }
    // orbit with alternating elevation so both poles are seen
    let up = Vec3::new(0.0, 0.0, 1.0);
    let keys = (0..=8)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / 8.0;
            let elev: f64 = if k % 2 == 0 { 0.7 } else { -0.7 };
            let eye = Vec3::new(
                1.5 * elev.cos() * theta.cos(),
                1.5 * elev.cos() * theta.sin(),
                1.5 * elev.sin(),
            );
            (k as f64, look(eye, Vec3::ZERO, up))
        })
        .collect();
    let r = 0.5 + 0.1;
    NamedScene {
        name: "sphere_room".into(),
        scene: Scene::new(prims),
        intrinsics: camera(160, 120, 100.0),
        trajectory: TrajectorySpec::new(keys, 3.0).expect("valid trajectory"),
        regions: vec![region("sphere", Vec3::new(-r, -r, -r), Vec3::new(r, r, r))],
        extent: Some(Vec3::new(4.0, 4.0, 4.0)),
    }
}

pub fn make_reference_scenes(pool_scale: PoolScale) -> Vec<NamedScene> {
    vec![pool(pool_scale), two_walls(), sphere_room()]
}

pub fn reference_scene(name: &str, pool_scale: PoolScale) -> Result<NamedScene> {
    match name {
        "pool" => Ok(pool(pool_scale)),
        "two_walls" => Ok(two_walls()),
        "sphere_room" => Ok(sphere_room()),
        other => Err(Error::Config(format!(
            "unknown scene {other:?}, expected one of {SCENE_NAMES:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::render_frame;

    #[test]
    fn pool_dimensions() {
        assert_eq!(pool(PoolScale::Full).extent, Some(Vec3::new(40.0, 6.45, 1.5)));
        let e = pool(PoolScale::Reduced).extent.unwrap();
        assert!((e.x - 4.0).abs() < 1e-12 && (e.y - 0.645).abs() < 1e-12 && (e.z - 0.15).abs() < 1e-12);
    }

    #[test]
    fn two_walls_distances() {
        let s = two_walls();
        let front = |i: usize| match s.scene.primitives[i].shape {
            crate::scene::Shape::Box(b) => b.min.z,
            _ => unreachable!(),
        };
        assert_eq!(front(0), 1.4);
        assert_eq!(front(1), 0.56);
        assert_eq!(s.scene.primitives[0].texture_confidence, 0.9);
        assert_eq!(s.scene.primitives[1].texture_confidence, 0.4);
    }

    #[test]
    fn sphere_sdf_at_center() {
        assert_eq!(sphere_room().scene.signed_distance(Vec3::ZERO), -0.5);
    }

    #[test]
    fn default_views_see_their_scene() {
        for named in make_reference_scenes(PoolScale::Reduced) {
            let poses = named.trajectory.sample().unwrap();
            assert!(poses.len() >= 20, "{}", named.name);
            for (_, pose) in poses.iter().step_by(5) {
                let (d, _) = render_frame(&named.scene, pose, &named.intrinsics, None).unwrap();
                assert!(d.valid_count() > d.len() / 4, "{}", named.name);
            }
        }
        assert!(reference_scene("desk", PoolScale::Full).is_err());
    }
}
