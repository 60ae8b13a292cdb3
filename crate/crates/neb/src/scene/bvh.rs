//! Binary bounding volume hierarchy with median splits on the widest
//! centroid axis. Flat node array, iterative traversal.

use crate::math::{Aabb, Ray};

use super::{intersect_geometry, shape_bounds, Shape};

pub struct Bvh {
    nodes: Vec<Node>,
    /// Shape indices, leaf ranges point into this.
    order: Vec<u32>,
}

struct Node {
    bounds: Aabb,
    /// Leaf: start in `order`. Inner: index of the right child (left child
    /// is the next node).
    offset: u32,
    count: u16,
    axis: u8,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(shapes: &[Shape]) -> Bvh {
        let bounds: Vec<Aabb> = shapes.iter().map(|s| shape_bounds(&s.geometry)).collect();
        let mut order: Vec<u32> = (0..shapes.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * shapes.len().max(1));
        build_range(&bounds, &mut order, 0, shapes.len(), &mut nodes);
        Bvh { nodes, order }
    }

    /// Nearest hit: (shape index, distance).
    pub fn intersect(&self, shapes: &[Shape], ray: &Ray, t_min: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut t_max = f64::INFINITY;
        let inv = ray.inv_dir();
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let current = stack[top];
            let node = &self.nodes[current as usize];
            if node.bounds.intersect_ray(ray.origin, inv, 0.0, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &si in
                    &self.order[node.offset as usize..node.offset as usize + node.count as usize]
                {
                    if let Some(t) =
                        intersect_geometry(&shapes[si as usize].geometry, ray, t_min, t_max)
                    {
                        t_max = t;
                        best = Some((si as usize, t));
                    }
                }
            } else {
                // Near child first: descend along the ray's sign on the
                // split axis.
                let (first, second) = if ray.dir[node.axis as usize] >= 0.0 {
                    (current + 1, node.offset)
                } else {
                    (node.offset, current + 1)
                };
                stack[top] = second;
                stack[top + 1] = first;
                top += 2;
            }
        }
        best
    }

    /// Any-hit shadow query in (t_min, t_max).
    pub fn occluded(&self, shapes: &[Shape], ray: &Ray, t_min: f64, t_max: f64) -> bool {
        let inv = ray.inv_dir();
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let current = stack[top];
            let node = &self.nodes[current as usize];
            if node.bounds.intersect_ray(ray.origin, inv, 0.0, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                for &si in
                    &self.order[node.offset as usize..node.offset as usize + node.count as usize]
                {
                    if intersect_geometry(&shapes[si as usize].geometry, ray, t_min, t_max)
                        .is_some()
                    {
                        return true;
                    }
                }
            } else {
                stack[top] = current + 1;
                stack[top + 1] = node.offset;
                top += 2;
            }
        }
        false
    }
}

fn build_range(
    bounds: &[Aabb],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut node_bounds = Aabb::empty();
    let mut centroid_bounds = Aabb::empty();
    for &i in &order[start..end] {
        node_bounds = node_bounds.union(bounds[i as usize]);
        centroid_bounds.grow(bounds[i as usize].center());
    }
    let index = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node { bounds: node_bounds, offset: start as u32, count: (end - start) as u16, axis: 0 });
        return index;
    }
    let size = centroid_bounds.size();
    let axis = if size.x >= size.y && size.x >= size.z {
        0
    } else if size.y >= size.z {
        1
    } else {
        2
    };
    order[start..end]
        .sort_unstable_by(|&a, &b| {
            let ca = bounds[a as usize].center()[axis];
            let cb = bounds[b as usize].center()[axis];
            ca.partial_cmp(&cb).unwrap()
        });
    let mid = (start + end) / 2;
    nodes.push(Node { bounds: node_bounds, offset: 0, count: 0, axis: axis as u8 });
    build_range(bounds, order, start, mid, nodes);
    let right = build_range(bounds, order, mid, end, nodes);
    nodes[index].offset = right as u32;
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Rgb;
    use crate::math::{vec3, Vector3};
    use crate::scene::{Bsdf, Geometry, Light, Pinhole, Scene};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scene(rng: &mut ChaCha8Rng, n_spheres: usize, n_tris: usize) -> Scene {
        let camera = Pinhole {
            position: vec3(0.0, 0.0, -5.0),
            look_at: Vector3::ZERO,
            up: vec3(0.0, 1.0, 0.0),
            vfov_degrees: 45.0,
            width: 32,
            height: 32,
        };
        let mut shapes = Vec::new();
        for _ in 0..n_spheres {
            shapes.push(crate::scene::Shape {
                geometry: Geometry::Sphere {
                    center: vec3(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ),
                    radius: rng.gen_range(0.05..0.5),
                },
                material: 0,
                emitter: None,
            });
        }
        for _ in 0..n_tris {
            let base = vec3(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let jitter = |rng: &mut ChaCha8Rng| {
                vec3(
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                )
            };
            shapes.push(crate::scene::Shape {
                geometry: Geometry::Triangle {
                    p: [base, base + jitter(rng), base + jitter(rng)],
                    normals: None,
                },
                material: 0,
                emitter: None,
            });
        }
        Scene::new(
            camera,
            vec![Bsdf::Lambert { albedo: Rgb::splat(0.5) }],
            shapes,
            vec![Light::Point { position: vec3(0.0, 4.0, 0.0), intensity: Rgb::WHITE }],
        )
        .unwrap()
    }

    #[test]
    fn matches_brute_force_on_random_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let scene = random_scene(&mut rng, 64, 96);
        for _ in 0..10_000 {
            let origin = vec3(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let dir = vec3(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if dir.length() < 1e-3 {
                continue;
            }
            let ray = Ray::new(origin, dir.normalized());
            let a = scene.intersect(&ray);
            let b = scene.intersect_brute(&ray);
            match (a, b) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    assert!(
                        (x.distance - y.distance).abs() < 1e-9,
                        "bvh {} vs brute {}",
                        x.distance,
                        y.distance
                    );
                    assert_eq!(x.material, y.material);
                }
                (a, b) => panic!("bvh {:?} vs brute {:?}", a.map(|h| h.distance), b.map(|h| h.distance)),
            }
        }
    }

    #[test]
    fn occlusion_agrees_with_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let scene = random_scene(&mut rng, 40, 40);
        for _ in 0..2000 {
            let a = vec3(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let b = vec3(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let dist = (b - a).length();
            if dist < 0.1 {
                continue;
            }
            let blocked = scene.occluded(a, b);
            let ray = Ray::new(a, (b - a) / dist);
            let reference = match scene.intersect_brute(&ray) {
                Some(h) => h.distance < dist - scene.ray_epsilon(),
                None => false,
            };
            assert_eq!(blocked, reference);
        }
    }
}
