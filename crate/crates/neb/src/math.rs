//! Vectors, bounding boxes, surface frames and the plane/box intersection
//! measures the density octree is built on.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

/// Three component double precision vector, used for points, directions and
/// normals alike.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vector3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vector3 {
    Vector3 { x, y, z }
}

impl Vector3 {
    pub const ZERO: Vector3 = vec3(0.0, 0.0, 0.0);
    pub const ONE: Vector3 = vec3(1.0, 1.0, 1.0);

    pub fn splat(v: f64) -> Vector3 {
        vec3(v, v, v)
    }

    pub fn dot(self, o: Vector3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vector3) -> Vector3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    pub fn normalized(self) -> Vector3 {
        let len = self.length();
        debug_assert!(len > 0.0, "normalizing zero vector");
        self * (1.0 / len)
    }

    pub fn abs(self) -> Vector3 {
        vec3(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn min(self, o: Vector3) -> Vector3 {
        vec3(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vector3) -> Vector3 {
        vec3(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn min_component(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    /// Component wise multiplication.
    pub fn mul_elem(self, o: Vector3) -> Vector3 {
        vec3(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn div_elem(self, o: Vector3) -> Vector3 {
        vec3(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Vector3) -> f64 {
        (self - o).length()
    }
}

impl Index<usize> for Vector3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("vector index {i} out of range"),
        }
    }
}

impl Add for Vector3 {
    type Output = Vector3;
    fn add(self, o: Vector3) -> Vector3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vector3 {
    fn add_assign(&mut self, o: Vector3) {
        *self = *self + o;
    }
}

impl Sub for Vector3 {
    type Output = Vector3;
    fn sub(self, o: Vector3) -> Vector3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vector3 {
    type Output = Vector3;
    fn neg(self) -> Vector3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vector3 {
    type Output = Vector3;
    fn mul(self, s: f64) -> Vector3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vector3> for f64 {
    type Output = Vector3;
    fn mul(self, v: Vector3) -> Vector3 {
        v * self
    }
}

impl Div<f64> for Vector3 {
    type Output = Vector3;
    fn div(self, s: f64) -> Vector3 {
        self * (1.0 / s)
    }
}

/// Axis aligned bounding box. An empty box has `min > max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3,
    pub max: Vector3,
}

impl Aabb {
    pub fn empty() -> Aabb {
        Aabb {
            min: Vector3::splat(f64::INFINITY),
            max: Vector3::splat(f64::NEG_INFINITY),
        }
    }

    pub fn new(min: Vector3, max: Vector3) -> Aabb {
        Aabb { min, max }
    }

    pub fn grow(&mut self, p: Vector3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn size(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.size().length()
        }
    }

    pub fn center(&self) -> Vector3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vector3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Corner `i` with bit 0/1/2 selecting max on x/y/z.
    pub fn corner(&self, i: usize) -> Vector3 {
        vec3(
            if i & 1 != 0 { self.max.x } else { self.min.x },
            if i & 2 != 0 { self.max.y } else { self.min.y },
            if i & 4 != 0 { self.max.z } else { self.min.z },
        )
    }

    /// Slab test against a ray; returns the entry/exit parameters clipped to
    /// `[t_min, t_max]` if the ray touches the box.
    pub fn intersect_ray(&self, origin: Vector3, inv_dir: Vector3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (self.min[a] - origin[a]) * inv_dir[a];
            let mut far = (self.max[a] - origin[a]) * inv_dir[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}

/// Ray with unit direction.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vector3,
    pub dir: Vector3,
}

impl Ray {
    pub fn new(origin: Vector3, dir: Vector3) -> Ray {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vector3 {
        self.origin + self.dir * t
    }

    /// Componentwise reciprocal of the direction, for slab tests.
    pub fn inv_dir(&self) -> Vector3 {
        vec3(1.0 / self.dir.x, 1.0 / self.dir.y, 1.0 / self.dir.z)
    }
}

/// Orthonormal shading basis attached to a surface point. `tangent`,
/// `bitangent` and `normal` form a right handed frame.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    pub position: Vector3,
    pub normal: Vector3,
    pub tangent: Vector3,
    pub bitangent: Vector3,
}

impl SurfaceFrame {
    /// Builds a frame from a unit normal, choosing tangents deterministically.
    pub fn from_normal(position: Vector3, normal: Vector3) -> SurfaceFrame {
        debug_assert!((normal.length() - 1.0).abs() < 1e-6, "frame normal not unit");
        // Pick the helper axis least aligned with the normal to stay stable.
        let helper = if normal.x.abs() < 0.9 {
            vec3(1.0, 0.0, 0.0)
        } else {
            vec3(0.0, 1.0, 0.0)
        };
        let tangent = helper.cross(normal).normalized();
        let bitangent = normal.cross(tangent);
        SurfaceFrame {
            position,
            normal,
            tangent,
            bitangent,
        }
    }

    /// World direction -> local coordinates (z along the normal).
    pub fn to_local(&self, v: Vector3) -> Vector3 {
        vec3(v.dot(self.tangent), v.dot(self.bitangent), v.dot(self.normal))
    }

    /// Local coordinates (z along the normal) -> world direction.
    pub fn to_world(&self, v: Vector3) -> Vector3 {
        self.tangent * v.x + self.bitangent * v.y + self.normal * v.z
    }

    pub fn cos_theta(&self, world_dir: Vector3) -> f64 {
        self.normal.dot(world_dir)
    }
}

/// Area of the intersection between the plane through `pos` with unit
/// `normal` and the box `[bmin, bmax]`.
///
/// Axis aligned and single-zero-component normals take closed form short
/// cuts; the general case evaluates the signed corner expansion
/// `|sum_i e_i max(0, h - <n, b_i>)^2 / (2 n_x n_y n_z)|` where `e_i` is the
/// corner parity. Everything runs in double precision regardless of what the
/// caller stores.
pub fn plane_box_area(bmin: Vector3, bmax: Vector3, pos: Vector3, normal: Vector3) -> f64 {
    let abs_n = normal.abs();
    let cell_size = bmax - bmin;

    // Near axis aligned: the slice is a full face-parallel rectangle (or
    // nothing, outside the slab). The threshold only needs to catch exact
    // zeros plus a band where the corner expansions below would divide by
    // ~1e-8 sized products and lose digits; the snapping error at the band
    // edge is ~1e-4 radians of tilt, far below the expansions' own noise.
    for d in 0..3 {
        if (abs_n[d] - 1.0).abs() < 1e-8 {
            if pos[d] < bmin[d] || pos[d] > bmax[d] {
                return 0.0;
            }
            let x = (d + 1) % 3;
            let y = (d + 2) % 3;
            return cell_size[x] * cell_size[y];
        }
    }

    let h = normal.dot(pos);

    // One component (numerically) zero: the 2D corner expansion over the
    // remaining two axes, extruded along d.
    for d in 0..3 {
        if abs_n[d] < 1e-8 {
            let x = (d + 1) % 3;
            let y = (d + 2) % 3;
            let corner = |cx: f64, cy: f64| (h - (normal[x] * cx + normal[y] * cy)).max(0.0);
            let mut sum = corner(bmin[x], bmin[y]);
            sum -= corner(bmin[x], bmax[y]);
            sum -= corner(bmax[x], bmin[y]);
            sum += corner(bmax[x], bmax[y]);
            return cell_size[d] * (sum / (normal[x] * normal[y])).abs();
        }
    }

    let b = Aabb::new(bmin, bmax);
    let mut sum = 0.0;
    for i in 0..8usize {
        let t = (h - normal.dot(b.corner(i))).max(0.0);
        let term = t * t;
        if i.count_ones() % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    (sum / (2.0 * normal.x * normal.y * normal.z)).abs()
}

/// Volume of `{x in box : <n, x> <= h}` for the plane through `pos`, i.e. the
/// box portion behind the plane. Requires all normal components nonzero; it
/// exists as the antiderivative of [`plane_box_area`] in the plane offset,
/// which is what the tests differentiate.
pub fn plane_box_volume(bmin: Vector3, bmax: Vector3, pos: Vector3, normal: Vector3) -> f64 {
    debug_assert!(
        normal.abs().min_component() > 0.0,
        "volume form needs generic normals"
    );
    let h = normal.dot(pos);
    let b = Aabb::new(bmin, bmax);
    let mut sum = 0.0;
    for i in 0..8usize {
        let t = (h - normal.dot(b.corner(i))).max(0.0);
        let term = t * t * t;
        if i.count_ones() % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    (sum / (6.0 * normal.x * normal.y * normal.z)).abs()
}

/// Constant merge kernel: `1 / (pi r^2)` inside the disc of radius `r`.
pub fn uniform_kernel(r: f64) -> f64 {
    debug_assert!(r > 0.0);
    1.0 / (std::f64::consts::PI * r * r)
}

/// Monte Carlo reference for [`plane_box_area`]: uniform samples on a plane
/// patch that covers the whole box footprint, scaled by the in-box hit rate.
/// Verification oracle only; far too slow for rendering use.
pub fn mc_area(
    bmin: Vector3,
    bmax: Vector3,
    pos: Vector3,
    n: Vector3,
    samples: u64,
    rng: &mut impl rand::Rng,
) -> f64 {
    let b = Aabb::new(bmin, bmax);
    let frame = SurfaceFrame::from_normal(Vector3::ZERO, n);
    // Project the box center onto the plane; every intersection point lies
    // within half a diagonal of it, in the plane as well.
    let center = b.center();
    let h = n.dot(pos);
    let on_plane = center + n * (h - n.dot(center));
    let half = 0.5 * b.diagonal() * 1.0001;
    let patch_area = (2.0 * half) * (2.0 * half);
    let mut hits = 0u64;
    for _ in 0..samples {
        let u = rng.gen_range(-half..half);
        let v = rng.gen_range(-half..half);
        let p = on_plane + frame.tangent * u + frame.bitangent * v;
        if b.contains(p) {
            hits += 1;
        }
    }
    patch_area * hits as f64 / samples as f64
}
