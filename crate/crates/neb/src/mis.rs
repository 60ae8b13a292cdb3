//! Balance-heuristic weighting of the sampling techniques that can produce a
//! given light path.
//!
//! A complete path has `l` segments joining camera vertex 0 to a light vertex
//! `l`. Up to four technique families can generate it: hitting the emitter
//! with the final BSDF sample, next event estimation from vertex `l-1`, a
//! backtracked photon merged at an interior vertex `k`, and a light-traced
//! photon merged at `k`. Each family's path density is a product of
//! per-segment area-measure pdfs plus family-specific factors (light pick
//! density, merge-disc area, emitter vertex density). Weights follow the
//! balance heuristic: sampler count times density, normalized by the sum.
//!
//! Delta lobes report residual pdfs of 1. The validity rules guarantee that
//! techniques are compared only when their residual sets coincide, so the
//! deltas cancel in every surviving ratio.

use std::f64::consts::PI;

use smallvec::{smallvec, SmallVec};

/// Area-measure pdfs of one path segment `v_i -> v_{i+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentPdfs {
    /// Density of sampling `v_{i+1}` from `v_i` (residual 1 if `v_i` is delta).
    pub forward: f64,
    /// Density of sampling `v_i` from `v_{i+1}` (residual 1 if `v_{i+1}` is delta).
    pub reverse: f64,
    /// Whether the lobe sampled at the segment's origin `v_i` is a delta.
    pub delta: bool,
}

impl SegmentPdfs {
    pub fn smooth(forward: f64, reverse: f64) -> Self {
        SegmentPdfs { forward, reverse, delta: false }
    }

    /// Segment leaving a delta lobe. Both residuals start at 1; the reverse is
    /// overwritten later if the far vertex turns out to have a smooth lobe.
    pub fn delta_lobe() -> Self {
        SegmentPdfs { forward: 1.0, reverse: 1.0, delta: true }
    }
}

/// Segment pdfs of a complete camera-to-light path, camera end first.
#[derive(Clone, Debug, Default)]
pub struct PdfChain {
    segments: SmallVec<[SegmentPdfs; 12]>,
}

impl PdfChain {
    pub fn new() -> Self {
        PdfChain { segments: SmallVec::new() }
    }

    pub fn from_segments(segments: &[SegmentPdfs]) -> Self {
        PdfChain { segments: segments.into() }
    }

    pub fn push(&mut self, segment: SegmentPdfs) {
        self.segments.push(segment);
    }

    /// Number of segments; the light sits at vertex `len()`.
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[SegmentPdfs] {
        &self.segments
    }

    pub fn segments_mut(&mut self) -> &mut [SegmentPdfs] {
        &mut self.segments
    }

    /// Whether the lobe at vertex `i` is a delta. Vertex 0 is the camera and
    /// never delta; the light vertex `l` has no entry.
    pub fn vertex_is_delta(&self, i: usize) -> bool {
        self.segments[i].delta
    }
}

/// Density of the sampled light point.
///
/// Area lights carry an area-measure density. Point lights carry the discrete
/// pick probability: their positional delta cancels because every technique
/// that can produce the path samples the same light point explicitly, and none
/// can hit it by chance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LightPdf {
    Area(f64),
    Delta(f64),
}

impl LightPdf {
    pub fn value(self) -> f64 {
        match self {
            LightPdf::Area(p) | LightPdf::Delta(p) => p,
        }
    }

    pub fn is_area(self) -> bool {
        matches!(self, LightPdf::Area(_))
    }
}

/// Path-wide quantities shared by the photon techniques.
#[derive(Clone, Copy, Debug)]
pub struct MergeContext {
    /// Merge radius.
    pub radius: f64,
    /// Stored-vertex density at the emitting vertex `l-1`.
    pub rho_emitter: f64,
    /// Density of the light point at vertex `l`.
    pub light_pdf: LightPdf,
    /// Stored-vertex count normalizing the per-photon flux; equal to the
    /// backtracked-photon sampler count of the same iteration.
    pub n_photons: f64,
}

impl MergeContext {
    /// Context for a renderer that traces no photons at all.
    pub fn no_photons(light_pdf: LightPdf) -> Self {
        MergeContext { radius: 0.0, rho_emitter: 0.0, light_pdf, n_photons: 0.0 }
    }
}

/// Sample counts per technique family entering the balance heuristic.
#[derive(Clone, Copy, Debug)]
pub struct SamplerCounts {
    pub n_nee: f64,
    pub n_photon: f64,
    pub n_light_photon: f64,
}

impl SamplerCounts {
    /// Plain path tracing: one next event estimate, no photons.
    pub fn path_tracer() -> Self {
        SamplerCounts { n_nee: 1.0, n_photon: 0.0, n_light_photon: 0.0 }
    }
}

/// Balance-heuristic weights for every technique that can produce the path.
/// `neb[k-1]` and `light_photon[k-1]` correspond to a merge at vertex `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MisWeights {
    pub random_hit: f64,
    pub nee: f64,
    pub neb: SmallVec<[f64; 12]>,
    pub light_photon: SmallVec<[f64; 12]>,
}

impl MisWeights {
    pub fn total(&self) -> f64 {
        self.random_hit
            + self.nee
            + self.neb.iter().sum::<f64>()
            + self.light_photon.iter().sum::<f64>()
    }
}

/// Path density of BSDF-sampling the whole chain and hitting the emitter.
pub fn pdf_random_hit(chain: &PdfChain) -> f64 {
    chain.segments.iter().map(|s| s.forward).product()
}

/// Path density of BSDF-sampling up to vertex `l-1` and connecting to a
/// sampled light point.
pub fn pdf_nee(chain: &PdfChain, light_pdf: LightPdf) -> f64 {
    let l = chain.len();
    assert!(l >= 2, "next event estimation needs at least two segments");
    let fwd: f64 = chain.segments[..l - 1].iter().map(|s| s.forward).product();
    light_pdf.value() * fwd
}

/// Path density of a backtracked photon emitted from a stored vertex at `l-1`
/// and merged with the view path at vertex `k`, `1 <= k <= l-2`.
pub fn pdf_neb_photon(chain: &PdfChain, merge: &MergeContext, k: usize) -> f64 {
    let l = chain.len();
    assert!(k >= 1 && k + 2 <= l, "merge vertex {k} out of range for {l} segments");
    let fwd: f64 = chain.segments[..k].iter().map(|s| s.forward).product();
    let rev: f64 = chain.segments[k..l - 1].iter().map(|s| s.reverse).product();
    let disc = PI * merge.radius * merge.radius;
    merge.light_pdf.value() * merge.rho_emitter * disc / merge.n_photons * rev * fwd
}

/// Path density of a light-traced photon merged with the view path at vertex
/// `k`, `1 <= k <= l-1`. The reverse pdf of the last segment is the emission
/// density toward vertex `l-1`.
pub fn pdf_light_photon(chain: &PdfChain, radius: f64, light_pdf: LightPdf, k: usize) -> f64 {
    let l = chain.len();
    assert!(k >= 1 && k + 1 <= l, "merge vertex {k} out of range for {l} segments");
    let fwd: f64 = chain.segments[..k].iter().map(|s| s.forward).product();
    let rev: f64 = chain.segments[k..].iter().map(|s| s.reverse).product();
    light_pdf.value() * PI * radius * radius * rev * fwd
}

fn valid_nee(chain: &PdfChain) -> bool {
    chain.len() >= 2 && !chain.vertex_is_delta(chain.len() - 1)
}

fn valid_neb(chain: &PdfChain, merge: &MergeContext, counts: &SamplerCounts, k: usize) -> bool {
    !chain.vertex_is_delta(k)
        && !chain.vertex_is_delta(chain.len() - 1)
        && merge.rho_emitter > 0.0
        && counts.n_photon > 0.0
}

fn valid_light_photon(chain: &PdfChain, counts: &SamplerCounts, k: usize) -> bool {
    !chain.vertex_is_delta(k) && counts.n_light_photon > 0.0
}

fn combine(
    p_hit: f64,
    p_nee: f64,
    p_neb: SmallVec<[f64; 12]>,
    p_lp: SmallVec<[f64; 12]>,
    counts: &SamplerCounts,
) -> MisWeights {
    let mut sum = p_hit + counts.n_nee * p_nee;
    for &p in &p_neb {
        sum += counts.n_photon * p;
    }
    for &p in &p_lp {
        sum += counts.n_light_photon * p;
    }
    if !(sum > 0.0 && sum.is_finite()) {
        return MisWeights {
            random_hit: 0.0,
            nee: 0.0,
            neb: smallvec![0.0; p_neb.len()],
            light_photon: smallvec![0.0; p_lp.len()],
        };
    }
    let inv = 1.0 / sum;
    MisWeights {
        random_hit: p_hit * inv,
        nee: counts.n_nee * p_nee * inv,
        neb: p_neb.iter().map(|p| counts.n_photon * p * inv).collect(),
        light_photon: p_lp.iter().map(|p| counts.n_light_photon * p * inv).collect(),
    }
}

/// Weights for every technique, evaluated term by term from the raw pdf
/// products. Invalid techniques get weight 0 and are excluded from the
/// normalization; if nothing is valid all weights are 0.
pub fn mis_weights(chain: &PdfChain, merge: &MergeContext, counts: &SamplerCounts) -> MisWeights {
    let l = chain.len();
    assert!(l >= 1, "empty pdf chain");
    debug_assert!(
        counts.n_photon == 0.0 || counts.n_photon == merge.n_photons,
        "backtracked-photon sampler count {} disagrees with flux normalization {}",
        counts.n_photon,
        merge.n_photons
    );
    let p_hit = if merge.light_pdf.is_area() { pdf_random_hit(chain) } else { 0.0 };
    let p_nee = if valid_nee(chain) { pdf_nee(chain, merge.light_pdf) } else { 0.0 };
    let mut p_neb: SmallVec<[f64; 12]> = smallvec![0.0; l.saturating_sub(2)];
    for k in 1..l.saturating_sub(1) {
        if valid_neb(chain, merge, counts, k) {
            p_neb[k - 1] = pdf_neb_photon(chain, merge, k);
        }
    }
    let mut p_lp: SmallVec<[f64; 12]> = smallvec![0.0; l - 1];
    for k in 1..l {
        if valid_light_photon(chain, counts, k) {
            p_lp[k - 1] = pdf_light_photon(chain, merge.radius, merge.light_pdf, k);
        }
    }
    combine(p_hit, p_nee, p_neb, p_lp, counts)
}

/// Same result as [`mis_weights`] from one forward prefix sweep and one
/// backward suffix sweep, avoiding the quadratic per-`k` products.
pub fn mis_weights_incremental(
    chain: &PdfChain,
    merge: &MergeContext,
    counts: &SamplerCounts,
) -> MisWeights {
    let l = chain.len();
    assert!(l >= 1, "empty pdf chain");
    debug_assert!(
        counts.n_photon == 0.0 || counts.n_photon == merge.n_photons,
        "backtracked-photon sampler count {} disagrees with flux normalization {}",
        counts.n_photon,
        merge.n_photons
    );
    let segs = chain.segments();
    let mut fwd_prefix: SmallVec<[f64; 13]> = SmallVec::with_capacity(l + 1);
    fwd_prefix.push(1.0);
    let mut acc = 1.0;
    for s in segs {
        acc *= s.forward;
        fwd_prefix.push(acc);
    }
    let p_hit = if merge.light_pdf.is_area() { fwd_prefix[l] } else { 0.0 };
    let p_nee =
        if valid_nee(chain) { merge.light_pdf.value() * fwd_prefix[l - 1] } else { 0.0 };
    let disc = PI * merge.radius * merge.radius;
    let emit_rev = segs[l - 1].reverse;
    let mut p_neb: SmallVec<[f64; 12]> = smallvec![0.0; l.saturating_sub(2)];
    let mut p_lp: SmallVec<[f64; 12]> = smallvec![0.0; l - 1];
    // Running product of reverse pdfs over segments k..=l-2.
    let mut rev_suffix = 1.0;
    for k in (1..l).rev() {
        if valid_light_photon(chain, counts, k) {
            p_lp[k - 1] =
                merge.light_pdf.value() * disc * emit_rev * rev_suffix * fwd_prefix[k];
        }
        if k + 2 <= l && valid_neb(chain, merge, counts, k) {
            p_neb[k - 1] = merge.light_pdf.value() * merge.rho_emitter * disc
                / merge.n_photons
                * rev_suffix
                * fwd_prefix[k];
        }
        rev_suffix *= segs[k - 1].reverse;
    }
    combine(p_hit, p_nee, p_neb, p_lp, counts)
}
