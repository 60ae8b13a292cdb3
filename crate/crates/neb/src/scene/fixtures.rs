//! Built-in procedural test scenes.
//!
//! * `cornell_diffuse` — closed diffuse box, ceiling area light plus a dim
//!   point light; the bread-and-butter convergence scene.
//! * `caustic_sphere` — glass sphere resting on a diffuse floor under a
//!   small bright area light; renders a floor caustic.
//! * `light_bulb` — point emitter sealed inside a glass shell (plus a dim
//!   fill panel), which next-event connections cannot reach.
//! * `mirror_box` — the diffuse box with mirror side walls.

use crate::color::{rgb, Rgb};
use crate::math::{vec3, Vector3};

use super::{Bsdf, Geometry, Light, Pinhole, Scene, SceneError, Shape};

pub fn builtin(name: &str) -> Result<Scene, SceneError> {
    match name {
        "cornell_diffuse" => cornell_diffuse(),
        "caustic_sphere" => caustic_sphere(),
        "light_bulb" => light_bulb(),
        "mirror_box" => mirror_box(),
        other => Err(SceneError::UnknownBuiltin(other.to_string())),
    }
}

pub const BUILTIN_NAMES: [&str; 4] =
    ["cornell_diffuse", "caustic_sphere", "light_bulb", "mirror_box"];

const WHITE_WALL: Bsdf = Bsdf::Lambert { albedo: rgb(0.73, 0.71, 0.68) };
const RED_WALL: Bsdf = Bsdf::Lambert { albedo: rgb(0.63, 0.065, 0.05) };
const GREEN_WALL: Bsdf = Bsdf::Lambert { albedo: rgb(0.14, 0.45, 0.091) };

struct Builder {
    materials: Vec<Bsdf>,
    shapes: Vec<Shape>,
    lights: Vec<Light>,
}

impl Builder {
    fn new() -> Builder {
        Builder { materials: Vec::new(), shapes: Vec::new(), lights: Vec::new() }
    }

    fn material(&mut self, b: Bsdf) -> usize {
        self.materials.push(b);
        self.materials.len() - 1
    }

    fn quad(&mut self, corner: Vector3, edge1: Vector3, edge2: Vector3, material: usize) {
        let (a, b, c, d) = (corner, corner + edge1, corner + edge1 + edge2, corner + edge2);
        for tri in [[a, b, c], [a, c, d]] {
            self.shapes.push(Shape {
                geometry: Geometry::Triangle { p: tri, normals: None },
                material,
                emitter: None,
            });
        }
    }

    fn sphere(&mut self, center: Vector3, radius: f64, material: usize) {
        self.shapes.push(Shape {
            geometry: Geometry::Sphere { center, radius },
            material,
            emitter: None,
        });
    }

    fn build(self, camera: Pinhole) -> Result<Scene, SceneError> {
        Scene::new(camera, self.materials, self.shapes, self.lights)
    }
}

/// Five walls of the unit-ish box [-1,1] x [0,2] x [-1,1], open toward +z.
fn box_walls(b: &mut Builder, left: usize, right: usize, other: usize) {
    // Floor (+y), ceiling (-y), back (+z): normals face the interior.
    b.quad(vec3(-1.0, 0.0, -1.0), vec3(0.0, 0.0, 2.0), vec3(2.0, 0.0, 0.0), other);
    b.quad(vec3(-1.0, 2.0, -1.0), vec3(2.0, 0.0, 0.0), vec3(0.0, 0.0, 2.0), other);
    b.quad(vec3(-1.0, 0.0, -1.0), vec3(2.0, 0.0, 0.0), vec3(0.0, 2.0, 0.0), other);
    b.quad(vec3(-1.0, 0.0, -1.0), vec3(0.0, 2.0, 0.0), vec3(0.0, 0.0, 2.0), left);
    b.quad(vec3(1.0, 0.0, -1.0), vec3(0.0, 0.0, 2.0), vec3(0.0, 2.0, 0.0), right);
}

fn box_camera() -> Pinhole {
    Pinhole {
        position: vec3(0.0, 1.0, 3.2),
        look_at: vec3(0.0, 1.0, 0.0),
        up: vec3(0.0, 1.0, 0.0),
        vfov_degrees: 40.0,
        width: 512,
        height: 512,
    }
}

fn ceiling_panel(radiance: Rgb) -> Light {
    // edge1 x edge2 points -y: emits down into the box.
    Light::AreaQuad {
        corner: vec3(-0.35, 1.9995, -0.35),
        edge1: vec3(0.7, 0.0, 0.0),
        edge2: vec3(0.0, 0.0, 0.7),
        radiance,
    }
}

fn cornell_diffuse() -> Result<Scene, SceneError> {
    let mut b = Builder::new();
    let white = b.material(WHITE_WALL);
    let red = b.material(RED_WALL);
    let green = b.material(GREEN_WALL);
    box_walls(&mut b, red, green, white);
    b.lights.push(ceiling_panel(rgb(14.4, 12.2, 8.4)));
    b.lights.push(Light::Point {
        position: vec3(0.55, 0.55, 0.45),
        intensity: Rgb::splat(0.04),
    });
    b.build(box_camera())
}

fn caustic_sphere() -> Result<Scene, SceneError> {
    let mut b = Builder::new();
    let floor = b.material(Bsdf::Lambert { albedo: Rgb::splat(0.75) });
    let glass = b.material(Bsdf::Dielectric { ior: 1.5 });
    b.quad(vec3(-3.0, 0.0, -3.0), vec3(0.0, 0.0, 6.0), vec3(6.0, 0.0, 0.0), floor);
    b.sphere(vec3(0.0, 0.45, 0.0), 0.45, glass);
    b.lights.push(Light::AreaQuad {
        corner: vec3(-0.55, 1.8, -0.15),
        edge1: vec3(0.3, 0.0, 0.0),
        edge2: vec3(0.0, 0.0, 0.3),
        radiance: Rgb::splat(250.0),
    });
    b.build(Pinhole {
        position: vec3(0.0, 1.5, 2.2),
        look_at: vec3(0.0, 0.3, 0.0),
        up: vec3(0.0, 1.0, 0.0),
        vfov_degrees: 45.0,
        width: 512,
        height: 512,
    })
}

fn light_bulb() -> Result<Scene, SceneError> {
    let mut b = Builder::new();
    let white = b.material(WHITE_WALL);
    box_walls(&mut b, white, white, white);
    // Glass shell: the inner boundary carries the reciprocal index ratio, so
    // the bulb interior behaves like air.
    let shell = b.material(Bsdf::Dielectric { ior: 1.5 });
    let interior = b.material(Bsdf::Dielectric { ior: 1.0 / 1.5 });
    let center = vec3(0.0, 1.25, 0.0);
    b.sphere(center, 0.18, shell);
    b.sphere(center, 0.15, interior);
    b.lights.push(Light::Point { position: center, intensity: rgb(1.0, 0.95, 0.8) });
    // Dim fill panel in a ceiling corner so the shell-blocked scene is not
    // pitch black without light photons.
    b.lights.push(Light::AreaQuad {
        corner: vec3(-0.85, 1.9995, -0.85),
        edge1: vec3(0.3, 0.0, 0.0),
        edge2: vec3(0.0, 0.0, 0.3),
        radiance: Rgb::splat(1.5),
    });
    b.build(Pinhole {
        position: vec3(0.0, 1.2, 3.2),
        look_at: vec3(0.0, 1.1, 0.0),
        up: vec3(0.0, 1.0, 0.0),
        vfov_degrees: 42.0,
        width: 512,
        height: 512,
    })
}

fn mirror_box() -> Result<Scene, SceneError> {
    let mut b = Builder::new();
    let white = b.material(WHITE_WALL);
    let mirror = b.material(Bsdf::Mirror { reflectance: Rgb::splat(0.9) });
    box_walls(&mut b, mirror, mirror, white);
    b.lights.push(ceiling_panel(rgb(14.4, 12.2, 8.4)));
    b.build(box_camera())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SurfaceFrame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_builtins_load() {
        for name in BUILTIN_NAMES {
            let scene = builtin(name).unwrap();
            assert!(!scene.bounds.is_empty(), "{name}");
            assert!(!scene.lights.is_empty(), "{name}");
            assert!(scene.camera.width > 0);
        }
    }

    #[test]
    fn cornell_has_expected_inventory() {
        let scene = builtin("cornell_diffuse").unwrap();
        assert_eq!(scene.lights.len(), 2);
        assert_eq!(
            scene.lights.iter().filter(|l| !l.is_delta()).count(),
            1,
            "exactly one area light"
        );
        let tris = scene
            .shapes
            .iter()
            .filter(|s| matches!(s.geometry, Geometry::Triangle { .. }))
            .count();
        assert!(tris >= 10, "got {tris} triangles");
    }

    #[test]
    fn bulb_shell_blocks_next_event_connections() {
        let scene = builtin("light_bulb").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // A point on the floor looking up: the point light is inside the
        // shell, so every connection to it is shadowed by glass.
        let frame = SurfaceFrame::from_normal(vec3(0.3, 0.0, 0.3), vec3(0.0, 1.0, 0.0));
        let mut saw_point_light = 0;
        for _ in 0..100 {
            let s = scene.sample_nee(&frame, &mut rng).unwrap();
            if matches!(s.light_pdf, crate::mis::LightPdf::Delta(_)) {
                saw_point_light += 1;
                assert!(s.occluded, "shell must occlude the bulb");
            }
        }
        assert!(saw_point_light > 20);
    }

    #[test]
    fn caustic_scene_geometry() {
        let scene = builtin("caustic_sphere").unwrap();
        let spheres = scene
            .shapes
            .iter()
            .filter(|s| matches!(s.geometry, Geometry::Sphere { .. }))
            .count();
        assert_eq!(spheres, 1);
        // Camera sees the sphere.
        let ray = scene.camera.primary_ray(256, 300, 512, 512, (0.5, 0.5));
        assert!(scene.intersect(&ray).is_some());
    }
}
