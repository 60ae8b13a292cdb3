//! Lock free sparse octree counting surface samples to estimate their area
//! density.
//!
//! Nodes live in one flat array of atomic 32 bit slots. A non-negative slot
//! is a counter; a negative slot is the negated base index of its 8
//! contiguous children. A cell splits once its counter reaches
//! `split_factor * iteration`, and because `set_iteration` presets every
//! unallocated slot with the expected per-cell count, freshly split children
//! start with a sensible estimate instead of zero. Queries divide the cell
//! counter by the area of the plane/cell intersection, so the result is a
//! per-area density of the counted samples.

use crate::math::{plane_box_area, Aabb, SurfaceFrame, Vector3};
use std::io::{self, Write};
use std::sync::atomic::{AtomicI32, Ordering};

/// How many samples per iteration a cell may hold before it splits.
const SPLIT_FACTOR: i32 = 4;
/// Counting stops beyond this iteration so the 32 bit counters cannot
/// overflow in long renders.
const FILL_ITERATIONS: u32 = 1000;
/// Splits stop at this depth; the integer grid coordinates must stay inside
/// 32 bits (resolution `2^31` on the finest level).
const MAX_SPLIT_DEPTH: i32 = 31;

/// One slot of the node array: a counter when non-negative, otherwise the
/// negated index of the first of 8 children.
#[repr(transparent)]
pub struct NodeSlot(AtomicI32);

impl NodeSlot {
    fn new(v: i32) -> NodeSlot {
        NodeSlot(AtomicI32::new(v))
    }

    fn load(&self) -> i32 {
        self.0.load(Ordering::Acquire)
    }

    fn store(&self, v: i32) {
        self.0.store(v, Ordering::Release);
    }

    /// Adds 1 if the slot currently holds a counter and returns the new
    /// count; returns the unchanged child pointer otherwise.
    fn increment_if_positive(&self) -> i32 {
        let mut old = self.0.load(Ordering::Acquire);
        loop {
            if old < 0 {
                return old;
            }
            match self
                .0
                .compare_exchange_weak(old, old + 1, Ordering::AcqRel, Ordering::Acquire)
            {
                Ok(_) => return old + 1,
                Err(cur) => old = cur,
            }
        }
    }
}

/// Concurrent density octree over a fixed scene volume.
pub struct DensityOctree {
    nodes: Vec<NodeSlot>,
    allocation_counter: AtomicI32,
    depth: AtomicI32,
    min_bound: Vector3,
    scene_size_inv: Vector3,
    scene_scale: f64,
    density_scale: f64,
    split_count_density: i32,
    stop_filling: bool,
}

impl DensityOctree {
    /// Builds an octree covering `[scene_min, scene_max]`, slightly inflated
    /// so boundary points map strictly inside the root cell. The slot
    /// capacity is rounded up to `8k + 1`; a request of 100 yields 105.
    pub fn new(scene_min: Vector3, scene_max: Vector3, capacity: usize) -> DensityOctree {
        let mut scene_size = (scene_max - scene_min) * 1.002;
        // Degenerate extents (flat scenes) would divide by zero below.
        let floor = (1e-4 * scene_size.max_component()).max(1e-9);
        scene_size = scene_size.max(Vector3::splat(floor));
        let effective = 1 + ((capacity + 7) & !7);
        assert!(effective <= i32::MAX as usize, "octree capacity exceeds slot index range");
        let mut nodes = Vec::with_capacity(effective);
        nodes.resize_with(effective, || NodeSlot::new(0));
        DensityOctree {
            nodes,
            allocation_counter: AtomicI32::new(1),
            depth: AtomicI32::new(0),
            min_bound: scene_min - scene_size * (0.001 / 1.002),
            scene_size_inv: Vector3::ONE.div_elem(scene_size),
            scene_scale: scene_size.length(),
            density_scale: 1.0,
            split_count_density: SPLIT_FACTOR,
            stop_filling: false,
        }
    }

    /// Prepares the tree for counting iteration `iter` (1 based): sets the
    /// normalization to `1/iter`, raises the split threshold to
    /// `split_factor * iter` and presets every unallocated slot with the
    /// count a quarter of a split cell would have received. A surface
    /// through a cell covers about 4 of its 8 children, so this preset is
    /// the best guess for a child that has never counted itself. Beyond
    /// iteration 1000 counting is frozen.
    pub fn set_iteration(&mut self, iter: u32) {
        assert!(iter >= 1, "iterations are 1 based");
        let iter_clamp = iter.min(FILL_ITERATIONS) as i32;
        self.stop_filling = iter > FILL_ITERATIONS;
        self.density_scale = 1.0 / iter_clamp as f64;
        self.split_count_density = SPLIT_FACTOR * iter_clamp;
        if !self.stop_filling {
            let preset = (SPLIT_FACTOR as f64 / 4.0 * iter as f64).ceil() as i32;
            let from = self.allocated_end();
            for slot in &self.nodes[from..] {
                slot.0.store(preset, Ordering::Relaxed);
            }
        }
    }

    /// Zeroes all counters but keeps the allocation and the child topology,
    /// so a new counting window refines from the existing structure.
    pub fn clear_counters(&mut self) {
        let end = self.allocated_end();
        for slot in &self.nodes[..end] {
            if slot.0.load(Ordering::Relaxed) > 0 {
                slot.0.store(0, Ordering::Relaxed);
            }
        }
    }

    /// Counts one sample. Thread safe; concurrent increments never lose a
    /// count except for the ones a split consumes by design (the children it
    /// publishes were preset with the expected distribution instead).
    pub fn increment(&self, pos: Vector3) {
        if self.stop_filling {
            return;
        }
        let norm_pos = self.normalized(pos);
        let mut count_or_child = self.nodes[0].increment_if_positive();
        count_or_child = self.split_node_if_necessary(0, count_or_child, 0);
        let mut edge_len: i64 = 1;
        let mut depth = 0;
        while count_or_child < 0 {
            edge_len *= 2;
            depth += 1;
            let child = |v: f64| ((v * edge_len as f64) as i64 & 1) as i32;
            let rel = child(norm_pos.x) + 2 * (child(norm_pos.y) + 2 * child(norm_pos.z));
            let idx = (rel - count_or_child) as usize;
            count_or_child = self.nodes[idx].increment_if_positive();
            count_or_child = self.split_node_if_necessary(idx, count_or_child, depth);
        }
    }

    /// Density of counted samples around `pos` on the surface with `normal`:
    /// the counter of the leaf containing `pos`, normalized by iteration
    /// count and divided by the plane/cell intersection area. Zero for cells
    /// that never counted.
    pub fn get_density(&self, pos: Vector3, normal: Vector3) -> f64 {
        self.density_impl(pos, normal, None)
    }

    /// Like [`get_density`](Self::get_density) but also reports the cell
    /// diagonal and uses a looser minimum-area clamp, which is what the
    /// robust query wants for its neighborhood radius.
    pub fn get_density_with_size(&self, pos: Vector3, normal: Vector3) -> (f64, f64) {
        let mut size = 0.0;
        let d = self.density_impl(pos, normal, Some(&mut size));
        (d, size)
    }

    /// Median-filtered density: the plain query at `pos` plus four queries
    /// offset along the tangents by slightly more than a cell diagonal.
    /// Returns the median of the positive results, preferring the greater
    /// of two middle candidates since overestimates are visually benign.
    pub fn get_density_robust(&self, frame: &SurfaceFrame) -> f64 {
        let mut raw = [0.0f64; 5];
        let (d0, mut cell_diag) = {
            let (d, size) = self.get_density_with_size(frame.position, frame.normal);
            // An empty cell reports no size; fall back to a tiny step.
            (d, if d > 0.0 { size } else { 1e-3 })
        };
        cell_diag *= 1.1;
        raw[0] = d0;
        raw[1] = self.get_density(frame.position + frame.tangent * cell_diag, frame.normal);
        raw[2] = self.get_density(frame.position - frame.tangent * cell_diag, frame.normal);
        raw[3] = self.get_density(frame.position + frame.bitangent * cell_diag, frame.normal);
        raw[4] = self.get_density(frame.position - frame.bitangent * cell_diag, frame.normal);
        median_of_positives(raw)
    }

    /// Rounded-up slot capacity.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    /// Number of slots in use.
    pub fn size(&self) -> usize {
        self.allocated_end()
    }

    /// Finest subdivision level reached so far.
    pub fn depth(&self) -> u32 {
        self.depth.load(Ordering::Acquire) as u32
    }

    /// Calls `f(cell bounds, depth, counter)` for every reachable leaf.
    pub fn visit_leaves<F: FnMut(Aabb, u32, i32)>(&self, mut f: F) {
        let scene_size = Vector3::ONE.div_elem(self.scene_size_inv);
        let root = Aabb::new(self.min_bound, self.min_bound + scene_size);
        self.visit_rec(0, root, 0, &mut f);
    }

    /// Writes one line per leaf cell: six bounds values, depth and counter,
    /// space separated. Meant for external visualization tooling.
    pub fn dump_cells<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut result = Ok(());
        self.visit_leaves(|bounds, depth, count| {
            if result.is_ok() {
                result = writeln!(
                    out,
                    "{} {} {} {} {} {} {} {}",
                    bounds.min.x,
                    bounds.min.y,
                    bounds.min.z,
                    bounds.max.x,
                    bounds.max.y,
                    bounds.max.z,
                    depth,
                    count
                );
            }
        });
        result
    }

    fn visit_rec<F: FnMut(Aabb, u32, i32)>(&self, idx: usize, bounds: Aabb, depth: u32, f: &mut F) {
        let v = self.nodes[idx].load();
        if v >= 0 {
            f(bounds, depth, v);
            return;
        }
        let base = (-v) as usize;
        let center = bounds.center();
        for rel in 0..8usize {
            let mut min = bounds.min;
            let mut max = center;
            if rel & 1 != 0 {
                min.x = center.x;
                max.x = bounds.max.x;
            }
            if rel & 2 != 0 {
                min.y = center.y;
                max.y = bounds.max.y;
            }
            if rel & 4 != 0 {
                min.z = center.z;
                max.z = bounds.max.z;
            }
            self.visit_rec(base + rel, Aabb::new(min, max), depth + 1, f);
        }
    }

    fn allocated_end(&self) -> usize {
        (self.allocation_counter.load(Ordering::Acquire) as usize).min(self.nodes.len())
    }

    /// Position in root cell coordinates, clamped so marginally out of
    /// bounds queries still resolve to a boundary cell.
    fn normalized(&self, pos: Vector3) -> Vector3 {
        let n = (pos - self.min_bound).mul_elem(self.scene_size_inv);
        n.max(Vector3::ZERO).min(Vector3::splat(1.0 - 1e-12))
    }

    fn density_impl(&self, pos: Vector3, normal: Vector3, size: Option<&mut f64>) -> f64 {
        let off_pos = pos - self.min_bound;
        let norm_pos = self.normalized(pos);
        let grid_res: i64 = 1 << self.depth.load(Ordering::Acquire);
        let ipos = [
            (norm_pos.x * grid_res as f64) as i64,
            (norm_pos.y * grid_res as f64) as i64,
            (norm_pos.z * grid_res as f64) as i64,
        ];
        let mut count_or_child = self.nodes[0].load();
        // The most significant bit of the grid coordinate selects the root's
        // child, each level below uses the next bit.
        let mut level_mask = grid_res;
        while count_or_child < 0 {
            level_mask >>= 1;
            let rel = (if ipos[0] & level_mask != 0 { 1 } else { 0 })
                + (if ipos[1] & level_mask != 0 { 2 } else { 0 })
                + (if ipos[2] & level_mask != 0 { 4 } else { 0 });
            count_or_child = self.nodes[(rel - count_or_child) as usize].load();
        }
        if count_or_child > 0 {
            let current_grid_res = grid_res / level_mask;
            let cell_size = Vector3::ONE.div_elem(self.scene_size_inv) / current_grid_res as f64;
            let cell_min = Vector3 {
                x: (ipos[0] / level_mask) as f64 * cell_size.x,
                y: (ipos[1] / level_mask) as f64 * cell_size.y,
                z: (ipos[2] / level_mask) as f64 * cell_size.z,
            };
            let area = plane_box_area(cell_min, cell_min + cell_size, off_pos, normal);
            // The slice can degenerate to (near) zero area when the plane
            // grazes a corner; clamp to a fraction of the cell cross section.
            let cell_diag = self.scene_scale / current_grid_res as f64;
            let mut min_area = cell_diag * cell_diag;
            match size {
                Some(s) => {
                    *s = cell_diag;
                    min_area *= 0.1;
                }
                None => min_area *= 0.01,
            }
            self.density_scale * count_or_child as f64 / min_area.max(area)
        } else {
            0.0
        }
    }

    /// Splits `idx` once its count reaches the threshold. Returns a negative
    /// child pointer to descend into, or a non-negative value when the
    /// increment is fully accounted for. The thread whose increment hits the
    /// threshold exactly owns the split; latecomers spin until the pointer
    /// is published and then re-count one level deeper.
    fn split_node_if_necessary(&self, idx: usize, count: i32, current_depth: i32) -> i32 {
        if count >= self.split_count_density && current_depth < MAX_SPLIT_DEPTH {
            if count == self.split_count_density {
                match self.allocate_children() {
                    Some(child) => {
                        self.nodes[idx].store(-child);
                        self.depth.fetch_max(current_depth + 1, Ordering::AcqRel);
                    }
                    // Out of slots: the cell keeps counting at this
                    // granularity forever.
                    None => {}
                }
                // This sample was already counted before the split.
                0
            } else {
                loop {
                    let child = self.nodes[idx].load();
                    if child <= 0 {
                        return child;
                    }
                    if self.allocation_counter.load(Ordering::Acquire) > self.nodes.len() as i32 {
                        return 0;
                    }
                    std::hint::spin_loop();
                }
            }
        } else {
            count
        }
    }

    /// Reserves 8 contiguous slots, or pins the allocation counter just past
    /// capacity so everybody can see the overflow.
    fn allocate_children(&self) -> Option<i32> {
        let capacity = self.nodes.len() as i32;
        let mut cur = self.allocation_counter.load(Ordering::Acquire);
        loop {
            if cur + 8 > capacity {
                // Keep a value above capacity but do not grow unboundedly.
                let _ = self.allocation_counter.compare_exchange(
                    cur,
                    capacity + 1,
                    Ordering::AcqRel,
                    Ordering::Acquire,
                );
                return None;
            }
            match self.allocation_counter.compare_exchange_weak(
                cur,
                cur + 8,
                Ordering::AcqRel,
                Ordering::Acquire,
            ) {
                Ok(_) => return Some(cur),
                Err(v) => cur = v,
            }
        }
    }
}

/// Median of the positive entries of five query results, keeping the exact
/// tie handling of the selection used by the renderer: the first entry is
/// returned unchanged when nothing was positive.
fn median_of_positives(raw: [f64; 5]) -> f64 {
    let mut d = [0.0f64; 5];
    let mut count = 0;
    for v in raw {
        d[count] = v;
        if v > 0.0 {
            count += 1;
        }
    }
    if count == 0 {
        return d[0];
    }
    let m = count / 2;
    for i in 0..=m {
        for j in i + 1..count {
            if d[j] < d[i] {
                d.swap(i, j);
            }
        }
    }
    d[m]
}
