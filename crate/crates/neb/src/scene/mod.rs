//! Scene representation: shapes, materials, lights, pinhole camera, BVH ray
//! casting, and next-event light sampling.
//!
//! Scenes are immutable after construction; every query here is safe to call
//! from many threads at once.

pub mod bsdf;
mod bvh;
pub mod fixtures;
mod mesh;
mod parse;

use rand::Rng;

pub use bsdf::{fresnel_dielectric, Bsdf, BsdfEval, BsdfSample};
pub use parse::{load_scene, SceneError};

use crate::color::Rgb;
use crate::math::{Aabb, Ray, SurfaceFrame, Vector3};
use crate::mis::LightPdf;

#[derive(Clone, Copy, Debug)]
pub enum Geometry {
    Sphere { center: Vector3, radius: f64 },
    Triangle { p: [Vector3; 3], normals: Option<[Vector3; 3]> },
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub geometry: Geometry,
    pub material: usize,
    /// Index into `Scene::lights` when this shape is the emissive geometry of
    /// an area light.
    pub emitter: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
pub enum Light {
    /// Isotropic emitter, intensity in W/sr.
    Point { position: Vector3, intensity: Rgb },
    /// One-sided quad with cosine emission, radiance in W/(m^2 sr); emits on
    /// the side faced by `edge1 x edge2`.
    AreaQuad { corner: Vector3, edge1: Vector3, edge2: Vector3, radiance: Rgb },
}

impl Light {
    pub fn is_delta(&self) -> bool {
        matches!(self, Light::Point { .. })
    }

    fn quad_normal_area(&self) -> Option<(Vector3, f64)> {
        match *self {
            Light::AreaQuad { edge1, edge2, .. } => {
                let c = edge1.cross(edge2);
                Some((c.normalized(), c.length()))
            }
            Light::Point { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Pinhole {
    pub position: Vector3,
    pub look_at: Vector3,
    pub up: Vector3,
    pub vfov_degrees: f64,
    /// Default image size; the render config may override it.
    pub width: u32,
    pub height: u32,
}

impl Pinhole {
    /// Ray through pixel (x, y) at sub-pixel offset `jitter` in [0,1)^2.
    pub fn primary_ray(&self, x: u32, y: u32, width: u32, height: u32, jitter: (f64, f64)) -> Ray {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        let tan_half = (self.vfov_degrees.to_radians() * 0.5).tan();
        let aspect = width as f64 / height as f64;
        let sx = ((x as f64 + jitter.0) / width as f64 * 2.0 - 1.0) * tan_half * aspect;
        let sy = (1.0 - (y as f64 + jitter.1) / height as f64 * 2.0) * tan_half;
        Ray::new(self.position, (forward + right * sx + up * sy).normalized())
    }
}

/// Surface hit. The shading frame and geometric normal are oriented toward
/// the ray origin; `entering` preserves which side was struck.
#[derive(Clone, Copy, Debug)]
pub struct Intersection {
    pub frame: SurfaceFrame,
    pub geo_normal: Vector3,
    pub distance: f64,
    pub material: usize,
    pub emitter: Option<usize>,
    pub entering: bool,
    /// Unit direction back toward the ray origin.
    pub wi: Vector3,
}

/// One next-event sample toward a scene light.
#[derive(Clone, Copy, Debug)]
pub struct NeeSample {
    /// Unit direction from the surface toward the light point.
    pub d: Vector3,
    pub distance: f64,
    /// One-sample irradiance estimate, light pick probability folded in;
    /// zero when occluded.
    pub irradiance: Rgb,
    pub occluded: bool,
    /// Density of the sampled light point, pick probability folded in.
    pub light_pdf: LightPdf,
    /// Emission cosine at the light (1 for point lights).
    pub cos_at_light: f64,
    /// Directional emission density from the light toward the surface.
    pub emit_pdf_sr: f64,
    pub light: usize,
}

pub struct Scene {
    pub shapes: Vec<Shape>,
    pub materials: Vec<Bsdf>,
    pub lights: Vec<Light>,
    pub camera: Pinhole,
    pub bounds: Aabb,
    ray_epsilon: f64,
    bvh: bvh::Bvh,
}

impl std::fmt::Debug for Scene {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scene")
            .field("shapes", &self.shapes.len())
            .field("materials", &self.materials.len())
            .field("lights", &self.lights.len())
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

/// Convert a solid-angle density at a point into an area density at the
/// target it projects to.
pub fn solid_angle_to_area_pdf(pdf_sr: f64, distance: f64, cos_at_target: f64) -> f64 {
    debug_assert!(distance > 0.0);
    pdf_sr * cos_at_target.abs() / (distance * distance)
}

impl Scene {
    /// Assemble and validate a scene; area lights get their emissive
    /// geometry appended here.
    pub fn new(
        camera: Pinhole,
        materials: Vec<Bsdf>,
        mut shapes: Vec<Shape>,
        lights: Vec<Light>,
    ) -> Result<Scene, SceneError> {
        for (i, s) in shapes.iter().enumerate() {
            if s.material >= materials.len() {
                return Err(SceneError::Validation(format!(
                    "shape {i}: material index {} out of range",
                    s.material
                )));
            }
            if let Geometry::Sphere { radius, .. } = s.geometry {
                if !(radius > 0.0) {
                    return Err(SceneError::Validation(format!(
                        "sphere {i}: radius must be positive, got {radius}"
                    )));
                }
            }
        }
        let mut materials = materials;
        let mut light_material = None;
        for (li, light) in lights.iter().enumerate() {
            match *light {
                Light::Point { intensity, .. } => {
                    if intensity.min_component() < 0.0 {
                        return Err(SceneError::Validation(format!(
                            "point light {li}: negative intensity"
                        )));
                    }
                }
                Light::AreaQuad { corner, edge1, edge2, radiance } => {
                    if radiance.min_component() < 0.0 {
                        return Err(SceneError::Validation(format!(
                            "area light {li}: negative radiance"
                        )));
                    }
                    if edge1.cross(edge2).length() < 1e-12 {
                        return Err(SceneError::Validation(format!(
                            "area light {li}: degenerate edges"
                        )));
                    }
                    let mat = *light_material.get_or_insert_with(|| {
                        materials.push(Bsdf::Lambert { albedo: Rgb::BLACK });
                        materials.len() - 1
                    });
                    let (a, b, c, d) =
                        (corner, corner + edge1, corner + edge1 + edge2, corner + edge2);
                    for tri in [[a, b, c], [a, c, d]] {
                        shapes.push(Shape {
                            geometry: Geometry::Triangle { p: tri, normals: None },
                            material: mat,
                            emitter: Some(li),
                        });
                    }
                }
            }
        }
        if shapes.is_empty() {
            return Err(SceneError::Validation("scene has no geometry".into()));
        }
        let mut bounds = Aabb::empty();
        for s in &shapes {
            bounds = bounds.union(shape_bounds(&s.geometry));
        }
        let bvh = bvh::Bvh::build(&shapes);
        let ray_epsilon = 1e-4 * bounds.diagonal();
        Ok(Scene { shapes, materials, lights, camera, bounds, ray_epsilon, bvh })
    }

    pub fn ray_epsilon(&self) -> f64 {
        self.ray_epsilon
    }

    pub fn material(&self, id: usize) -> &Bsdf {
        &self.materials[id]
    }

    /// Radiance emitted toward the ray that produced `hit` (front side only).
    pub fn emitted(&self, hit: &Intersection) -> Rgb {
        match hit.emitter {
            Some(li) if hit.entering => match self.lights[li] {
                Light::AreaQuad { radiance, .. } => radiance,
                Light::Point { .. } => Rgb::BLACK,
            },
            _ => Rgb::BLACK,
        }
    }

    /// Uniform light-pick probability.
    pub fn light_pick_prob(&self) -> f64 {
        1.0 / self.lights.len() as f64
    }

    /// Area density of next-event-sampling the specific point that a random
    /// hit on area light `li` landed on.
    pub fn nee_pdf_for_hit(&self, li: usize) -> LightPdf {
        let (_, area) = self.lights[li].quad_normal_area().expect("area light");
        LightPdf::Area(self.light_pick_prob() / area)
    }

    /// Directional emission density of light `li` toward a direction making
    /// `cos_emit` with its normal.
    pub fn emission_pdf_sr(&self, li: usize, cos_emit: f64) -> f64 {
        match self.lights[li] {
            Light::AreaQuad { .. } => cos_emit.max(0.0) * std::f64::consts::FRAC_1_PI,
            Light::Point { .. } => 0.25 * std::f64::consts::FRAC_1_PI,
        }
    }

    /// Nearest intersection beyond the self-intersection epsilon.
    pub fn intersect(&self, ray: &Ray) -> Option<Intersection> {
        let (shape, t) = self.bvh.intersect(&self.shapes, ray, self.ray_epsilon)?;
        Some(self.make_intersection(ray, shape, t))
    }

    /// Linear-scan reference for the BVH; test oracle only.
    pub fn intersect_brute(&self, ray: &Ray) -> Option<Intersection> {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.shapes.iter().enumerate() {
            let t_max = best.map_or(f64::INFINITY, |(_, t)| t);
            if let Some(t) = intersect_geometry(&s.geometry, ray, self.ray_epsilon, t_max) {
                best = Some((i, t));
            }
        }
        best.map(|(i, t)| self.make_intersection(ray, i, t))
    }

    fn make_intersection(&self, ray: &Ray, shape: usize, t: f64) -> Intersection {
        let s = &self.shapes[shape];
        let p = ray.origin + ray.dir * t;
        let (geo_n, shade_n) = match s.geometry {
            Geometry::Sphere { center, radius } => {
                let n = (p - center) / radius;
                (n, n)
            }
            Geometry::Triangle { p: v, normals } => {
                let n = (v[1] - v[0]).cross(v[2] - v[0]).normalized();
                let sn = match normals {
                    Some(ns) => {
                        let (u, vv) = barycentrics(v, p);
                        (ns[0] * (1.0 - u - vv) + ns[1] * u + ns[2] * vv).normalized()
                    }
                    None => n,
                };
                (n, sn)
            }
        };
        let entering = ray.dir.dot(geo_n) < 0.0;
        let sign = if entering { 1.0 } else { -1.0 };
        Intersection {
            frame: SurfaceFrame::from_normal(p, shade_n * sign),
            geo_normal: geo_n * sign,
            distance: t,
            material: s.material,
            emitter: s.emitter,
            entering,
            wi: -ray.dir,
        }
    }

    /// Shadow test between two surface points, insetting both ends.
    pub fn occluded(&self, from: Vector3, to: Vector3) -> bool {
        let delta = to - from;
        let dist = delta.length();
        if dist <= 2.0 * self.ray_epsilon {
            return false;
        }
        let ray = Ray::new(from, delta / dist);
        self.bvh.occluded(&self.shapes, &ray, self.ray_epsilon, dist - self.ray_epsilon)
    }

    /// One next-event estimate from a surface point: pick a light uniformly,
    /// sample a point on it, and test visibility. Samples on the wrong side
    /// of either surface come back occluded with zero irradiance.
    pub fn sample_nee(&self, from: &SurfaceFrame, rng: &mut impl Rng) -> Option<NeeSample> {
        let u = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        self.sample_nee_with(from, u)
    }

    /// [`Scene::sample_nee`] with the three uniforms supplied by the caller:
    /// light pick, then the two quad coordinates (points ignore the latter).
    /// Lets integrators stratify the estimate across iterations.
    pub fn sample_nee_with(
        &self,
        from: &SurfaceFrame,
        u: (f64, f64, f64),
    ) -> Option<NeeSample> {
        if self.lights.is_empty() {
            return None;
        }
        let pick = self.light_pick_prob();
        let li = ((u.0 * self.lights.len() as f64) as usize).min(self.lights.len() - 1);
        let sample = match self.lights[li] {
            Light::Point { position, intensity } => {
                let delta = position - from.position;
                let distance = delta.length();
                let d = delta / distance;
                let cos_r = from.normal.dot(d);
                let visible = cos_r > 0.0 && !self.occluded(from.position, position);
                let irradiance = if visible {
                    intensity * (cos_r / (distance * distance) / pick)
                } else {
                    Rgb::BLACK
                };
                NeeSample {
                    d,
                    distance,
                    irradiance,
                    occluded: !visible,
                    light_pdf: LightPdf::Delta(pick),
                    cos_at_light: 1.0,
                    emit_pdf_sr: 0.25 * std::f64::consts::FRAC_1_PI,
                    light: li,
                }
            }
            Light::AreaQuad { corner, edge1, edge2, radiance } => {
                let (normal, area) = self.lights[li].quad_normal_area().expect("area light");
                let q = corner + edge1 * u.1 + edge2 * u.2;
                let delta = q - from.position;
                let distance = delta.length();
                let d = delta / distance;
                let cos_r = from.normal.dot(d);
                let cos_l = normal.dot(-d);
                let visible =
                    cos_r > 0.0 && cos_l > 0.0 && !self.occluded(from.position, q);
                let irradiance = if visible {
                    radiance * (cos_r * cos_l / (distance * distance) * area / pick)
                } else {
                    Rgb::BLACK
                };
                NeeSample {
                    d,
                    distance,
                    irradiance,
                    occluded: !visible,
                    light_pdf: LightPdf::Area(pick / area),
                    cos_at_light: cos_l.max(0.0),
                    emit_pdf_sr: self.emission_pdf_sr(li, cos_l),
                    light: li,
                }
            }
        };
        Some(sample)
    }

    /// Sample an emitted photon: position, direction, and power carried when
    /// the emission budget is `n_paths` paths.
    pub fn sample_photon_emission(
        &self,
        n_paths: usize,
        rng: &mut impl Rng,
    ) -> Option<PhotonEmission> {
        if self.lights.is_empty() {
            return None;
        }
        let pick = self.light_pick_prob();
        let li = rng.gen_range(0..self.lights.len());
        let norm = 1.0 / (pick * n_paths as f64);
        match self.lights[li] {
            Light::Point { position, intensity } => {
                // Uniform sphere direction; flux = 4 pi I.
                let z = 1.0 - 2.0 * rng.gen::<f64>();
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let dir = crate::math::vec3(r * phi.cos(), r * phi.sin(), z);
                Some(PhotonEmission {
                    origin: position,
                    dir,
                    flux: intensity * (4.0 * std::f64::consts::PI * norm),
                    light: li,
                    light_pdf: LightPdf::Delta(pick),
                    emit_pdf_sr: 0.25 * std::f64::consts::FRAC_1_PI,
                    cos_at_light: 1.0,
                    origin_frame: None,
                })
            }
            Light::AreaQuad { corner, edge1, edge2, radiance } => {
                let (normal, area) = self.lights[li].quad_normal_area().expect("area light");
                let q = corner + edge1 * rng.gen::<f64>() + edge2 * rng.gen::<f64>();
                // Cosine-weighted hemisphere around the emitting side; the
                // cosine cancels, leaving flux = pi A L per unit budget.
                let u1: f64 = rng.gen();
                let rr = u1.sqrt();
                let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                let frame = SurfaceFrame::from_normal(q, normal);
                let local =
                    crate::math::vec3(rr * phi.cos(), rr * phi.sin(), (1.0 - u1).sqrt().max(1e-9));
                let dir = frame.to_world(local);
                Some(PhotonEmission {
                    origin: q,
                    dir,
                    flux: radiance * (std::f64::consts::PI * area * norm),
                    light: li,
                    light_pdf: LightPdf::Area(pick / area),
                    emit_pdf_sr: self.emission_pdf_sr(li, local.z),
                    cos_at_light: local.z,
                    origin_frame: Some(frame),
                })
            }
        }
    }
}

/// A photon leaving a light source.
#[derive(Clone, Copy, Debug)]
pub struct PhotonEmission {
    pub origin: Vector3,
    pub dir: Vector3,
    /// Power carried, divided by the path budget and pick probability.
    pub flux: Rgb,
    pub light: usize,
    pub light_pdf: LightPdf,
    /// Directional density the direction was drawn with.
    pub emit_pdf_sr: f64,
    pub cos_at_light: f64,
    /// Emitting surface frame for area lights.
    pub origin_frame: Option<SurfaceFrame>,
}

fn barycentrics(v: [Vector3; 3], p: Vector3) -> (f64, f64) {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let w = p - v[0];
    let d11 = e1.dot(e1);
    let d12 = e1.dot(e2);
    let d22 = e2.dot(e2);
    let dw1 = w.dot(e1);
    let dw2 = w.dot(e2);
    let denom = d11 * d22 - d12 * d12;
    ((d22 * dw1 - d12 * dw2) / denom, (d11 * dw2 - d12 * dw1) / denom)
}

pub(crate) fn shape_bounds(g: &Geometry) -> Aabb {
    match *g {
        Geometry::Sphere { center, radius } => {
            Aabb::new(center - Vector3::splat(radius), center + Vector3::splat(radius))
        }
        Geometry::Triangle { p, .. } => {
            let mut b = Aabb::empty();
            for v in p {
                b.grow(v);
            }
            b
        }
    }
}

/// Parametric hit distance in (t_min, t_max), if any.
pub(crate) fn intersect_geometry(
    g: &Geometry,
    ray: &Ray,
    t_min: f64,
    t_max: f64,
) -> Option<f64> {
    match *g {
        Geometry::Sphere { center, radius } => {
            let oc = ray.origin - center;
            let b = oc.dot(ray.dir);
            let c = oc.dot(oc) - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let root = disc.sqrt();
            for t in [-b - root, -b + root] {
                if t > t_min && t < t_max {
                    return Some(t);
                }
            }
            None
        }
        Geometry::Triangle { p, .. } => {
            let e1 = p[1] - p[0];
            let e2 = p[2] - p[0];
            let pv = ray.dir.cross(e2);
            let det = e1.dot(pv);
            if det.abs() < 1e-14 {
                return None;
            }
            let inv = 1.0 / det;
            let tv = ray.origin - p[0];
            let u = tv.dot(pv) * inv;
            if !(0.0..=1.0).contains(&u) {
                return None;
            }
            let qv = tv.cross(e1);
            let v = ray.dir.dot(qv) * inv;
            if v < 0.0 || u + v > 1.0 {
                return None;
            }
            let t = e2.dot(qv) * inv;
            if t > t_min && t < t_max {
                Some(t)
            } else {
                None
            }
        }
    }
}
