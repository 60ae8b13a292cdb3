//! Per-iteration intermediate storage: the next-event vertex store written by
//! pass 1 and the spatial grid that lets photons find nearby view vertices.

use crate::color::Rgb;
use crate::math::{SurfaceFrame, Vector3};
use crate::mis::{LightPdf, PdfChain, SegmentPdfs};

/// One stored next-event connection, together with everything needed to
/// re-weight its contribution and to splice photon paths onto its view
/// prefix later in the iteration.
#[derive(Clone, Debug)]
pub struct NeeVertexRecord {
    pub pixel: u32,
    pub shading: SurfaceFrame,
    pub geo_normal: Vector3,
    pub material: usize,
    /// Direction back toward the previous view vertex.
    pub wi_prev: Vector3,
    /// Path throughput up to this vertex, Russian roulette included.
    pub throughput: Rgb,
    /// Segment pdfs from the camera to this vertex. The last reverse holds
    /// the light-incident variant used by the record's own next-event chain;
    /// merges overwrite it with the photon-incident value.
    pub prefix: PdfChain,
    pub prev_dist: f64,
    /// |cos| at the previous vertex with respect to the incoming segment.
    pub prev_cos: f64,
    /// Sampled connection direction toward the light.
    pub d: Vector3,
    pub nee_dist: f64,
    /// Incident irradiance estimate; zero when occluded.
    pub irradiance: Rgb,
    pub occluded: bool,
    pub light_pdf: LightPdf,
    /// Pdfs of the connection segment to the light.
    pub final_seg: SegmentPdfs,
    /// BSDF response toward the light.
    pub f_nee: Rgb,
    pub cos_at_light: f64,
    /// Stored-vertex density here; filled at the start of pass 2.
    pub density: f64,
}

impl NeeVertexRecord {
    /// Vertex index along the view path (camera = 0).
    pub fn k(&self) -> usize {
        self.prefix.len()
    }

    /// Geometric frame for density queries.
    pub fn geo_frame(&self) -> SurfaceFrame {
        SurfaceFrame::from_normal(self.shading.position, self.geo_normal)
    }
}

/// A camera path that ran into an emitting surface; re-weighted and splatted
/// in pass 3 once the iteration's sampler counts are known.
#[derive(Clone, Debug)]
pub struct EmissionEvent {
    pub pixel: u32,
    /// Throughput times emitted radiance, unweighted.
    pub contribution: Rgb,
    /// Full chain to the light; the last reverse is the emission density
    /// toward the previous vertex.
    pub chain: PdfChain,
    pub light_pdf: LightPdf,
    /// Geometric frame of the vertex before the light, for evaluating the
    /// competing photon sampler's density. Absent for direct hits and for
    /// delta vertices, where no merge competes.
    pub emitter_geo: Option<SurfaceFrame>,
}

/// Append-only record storage with a hard size limit.
#[derive(Debug)]
pub struct VertexStore {
    records: Vec<NeeVertexRecord>,
    capacity: usize,
}

impl VertexStore {
    /// `capacity` bounds the record count; memory grows on demand.
    pub fn with_capacity(capacity: usize) -> VertexStore {
        VertexStore { records: Vec::new(), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[NeeVertexRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [NeeVertexRecord] {
        &mut self.records
    }

    /// Appends `records`; `required` is the iteration's total demand and is
    /// checked against the capacity before anything is moved.
    pub fn fill(&mut self, required: usize, records: impl IntoIterator<Item = NeeVertexRecord>) -> Result<(), usize> {
        if self.records.len() + required > self.capacity {
            return Err(self.records.len() + required);
        }
        self.records.extend(records);
        Ok(())
    }
}

/// Uniform grid over record positions answering "all records within the
/// merge radius of a point". Cells are two radii wide so a query touches at
/// most eight; buckets hold record indices in store order, which keeps
/// traversal deterministic.
#[derive(Debug)]
pub struct VertexHashGrid {
    inv_cell: f64,
    radius: f64,
    positions: Vec<Vector3>,
    /// Sorted (cell key, record index) pairs; a cell's bucket is a
    /// contiguous run located by binary search.
    entries: Vec<(u64, u32)>,
}

const KEY_OFFSET: i64 = 1 << 20;

fn pack(ix: i64, iy: i64, iz: i64) -> u64 {
    debug_assert!(
        [ix, iy, iz].iter().all(|&i| (0..(1 << 21)).contains(&(i + KEY_OFFSET))),
        "grid index out of key range"
    );
    (((ix + KEY_OFFSET) as u64) << 42) | (((iy + KEY_OFFSET) as u64) << 21) | ((iz + KEY_OFFSET) as u64)
}

impl VertexHashGrid {
    pub fn build(records: &[NeeVertexRecord], radius: f64) -> VertexHashGrid {
        assert!(radius > 0.0, "merge radius must be positive");
        let inv_cell = 1.0 / (2.0 * radius);
        let positions: Vec<Vector3> = records.iter().map(|r| r.shading.position).collect();
        let mut entries: Vec<(u64, u32)> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let ix = (p.x * inv_cell).floor() as i64;
                let iy = (p.y * inv_cell).floor() as i64;
                let iz = (p.z * inv_cell).floor() as i64;
                (pack(ix, iy, iz), i as u32)
            })
            .collect();
        entries.sort_unstable();
        VertexHashGrid { inv_cell, radius, positions, entries }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Calls `f` with the index of every record within `radius` of `p`.
    pub fn for_each_in_range(&self, p: Vector3, mut f: impl FnMut(u32)) {
        let lo = [
            ((p.x - self.radius) * self.inv_cell).floor() as i64,
            ((p.y - self.radius) * self.inv_cell).floor() as i64,
            ((p.z - self.radius) * self.inv_cell).floor() as i64,
        ];
        let hi = [
            ((p.x + self.radius) * self.inv_cell).floor() as i64,
            ((p.y + self.radius) * self.inv_cell).floor() as i64,
            ((p.z + self.radius) * self.inv_cell).floor() as i64,
        ];
        for ix in lo[0]..=hi[0] {
            for iy in lo[1]..=hi[1] {
                for iz in lo[2]..=hi[2] {
                    let key = pack(ix, iy, iz);
                    let start = self.entries.partition_point(|e| e.0 < key);
                    for &(k, idx) in &self.entries[start..] {
                        if k != key {
                            break;
                        }
                        if self.positions[idx as usize].distance(p) <= self.radius {
                            f(idx);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::rgb;
    use crate::math::vec3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dummy_record(p: Vector3) -> NeeVertexRecord {
        let frame = SurfaceFrame::from_normal(p, vec3(0.0, 1.0, 0.0));
        NeeVertexRecord {
            pixel: 0,
            shading: frame,
            geo_normal: vec3(0.0, 1.0, 0.0),
            material: 0,
            wi_prev: vec3(0.0, 1.0, 0.0),
            throughput: rgb(1.0, 1.0, 1.0),
            prefix: PdfChain::from_segments(&[SegmentPdfs::smooth(1.0, 1.0)]),
            prev_dist: 1.0,
            prev_cos: 1.0,
            d: vec3(0.0, 1.0, 0.0),
            nee_dist: 1.0,
            irradiance: Rgb::BLACK,
            occluded: false,
            light_pdf: LightPdf::Area(1.0),
            final_seg: SegmentPdfs::smooth(1.0, 1.0),
            f_nee: Rgb::BLACK,
            cos_at_light: 1.0,
            density: 0.0,
        }
    }

    #[test]
    fn store_rejects_overflow_with_required_size() {
        let mut store = VertexStore::with_capacity(3);
        let recs: Vec<_> = (0..5).map(|i| dummy_record(vec3(i as f64, 0.0, 0.0))).collect();
        match store.fill(recs.len(), recs) {
            Err(required) => assert_eq!(required, 5),
            Ok(()) => panic!("overflow accepted"),
        }
        assert!(store.is_empty(), "nothing may be stored on failure");
        let two: Vec<_> = (0..2).map(|i| dummy_record(vec3(i as f64, 0.0, 0.0))).collect();
        store.fill(two.len(), two).unwrap();
        assert_eq!(store.len(), 2);
    }

    #[test]
    fn grid_query_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let radius = 0.07;
        let records: Vec<_> = (0..600)
            .map(|_| {
                dummy_record(vec3(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ))
            })
            .collect();
        let grid = VertexHashGrid::build(&records, radius);
        for _ in 0..300 {
            let q = vec3(
                rng.gen_range(-1.1..1.1),
                rng.gen_range(-1.1..1.1),
                rng.gen_range(-1.1..1.1),
            );
            let mut got: Vec<u32> = Vec::new();
            grid.for_each_in_range(q, |i| got.push(i));
            let want: Vec<u32> = records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.shading.position.distance(q) <= radius)
                .map(|(i, _)| i as u32)
                .collect();
            got.sort_unstable();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn grid_boundary_points_are_included() {
        let records = vec![
            dummy_record(vec3(0.0, 0.0, 0.0)),
            dummy_record(vec3(0.1, 0.0, 0.0)),
            dummy_record(vec3(0.1000001, 0.0, 0.0)),
        ];
        let grid = VertexHashGrid::build(&records, 0.1);
        let mut got = Vec::new();
        grid.for_each_in_range(vec3(0.0, 0.0, 0.0), |i| got.push(i));
        got.sort_unstable();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn grid_is_deterministic_in_store_order() {
        let records: Vec<_> =
            (0..50).map(|i| dummy_record(vec3(0.001 * i as f64, 0.0, 0.0))).collect();
        let grid = VertexHashGrid::build(&records, 0.5);
        let mut a = Vec::new();
        grid.for_each_in_range(vec3(0.0, 0.0, 0.0), |i| a.push(i));
        let mut b = Vec::new();
        grid.for_each_in_range(vec3(0.0, 0.0, 0.0), |i| b.push(i));
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
    }
}
