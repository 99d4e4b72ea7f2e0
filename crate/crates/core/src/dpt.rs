//! Discrete pulse transform: `f = Σ pulses + c`, obtained by applying
//! `F_n = U_n ∘ L_n ∘ F_{n-1}` for `n = 1, 2, …` and collecting the
//! differences between consecutive stages.
//!
//! Before stage `n` the running image has no local extremum sets smaller
//! than `n`. `L_n` then lowers each flat regional maximum of exactly `n`
//! pixels to its largest neighbor, and `U_n` raises each flat regional
//! minimum of exactly `n` pixels of the result to its smallest neighbor.
//! Every such zone becomes one pulse. [`dpt_decompose`] runs this on a graph
//! of flat zones and only visits stages at which some zone has exactly `n`
//! pixels. [`dpt_decompose_reference`] runs every stage on full images with
//! the operators from [`crate::lulu`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::connectivity::{
    flat_local_max_components, flat_local_min_components, flat_zones, is_connected, Connectivity,
    PixelSet, Polarity,
};
use crate::error::{LuluError, Result};
use crate::grid::{Coord, GridImage};
use crate::lulu::{apply_ln, apply_un, smallest_extremum};
use crate::union_find::DisjointSet;

/// A constant `amplitude` on a connected support, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pulse {
    /// Lexicographically sorted, duplicate-free.
    pub support: Vec<Coord>,
    pub amplitude: i64,
}

impl Pulse {
    pub fn new(mut support: Vec<Coord>, amplitude: i64) -> Self {
        support.sort_unstable();
        support.dedup();
        Pulse { support, amplitude }
    }

    /// The layer a pulse belongs to equals its support size.
    pub fn layer(&self) -> usize {
        self.support.len()
    }

    pub fn first_pixel(&self) -> Option<Coord> {
        self.support.first().copied()
    }

    pub fn is_upward(&self) -> bool {
        self.amplitude > 0
    }

    pub fn support_set(&self) -> PixelSet {
        self.support.iter().copied().collect()
    }
}

/// Pulses grouped by layer plus the constant left at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DptDecomposition {
    pub connectivity: Connectivity,
    pub width: usize,
    pub height: usize,
    /// Layer size → pulses sorted by first pixel.
    pub layers: BTreeMap<usize, Vec<Pulse>>,
    pub residual_constant: i64,
    /// The remaining `F_m(f)` when the decomposition stopped at a size bound
    /// before reaching a constant; `None` for complete decompositions.
    pub residual_image: Option<GridImage>,
}

impl DptDecomposition {
    pub fn empty(width: usize, height: usize, conn: Connectivity, residual: i64) -> Self {
        DptDecomposition {
            connectivity: conn,
            width,
            height,
            layers: BTreeMap::new(),
            residual_constant: residual,
            residual_image: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.residual_image.is_none()
    }

    pub fn pulses(&self) -> impl Iterator<Item = &Pulse> + '_ {
        self.layers.values().flatten()
    }

    pub fn pulse_count(&self) -> usize {
        self.layers.values().map(Vec::len).sum()
    }

    /// Adds a pulse to its layer, keeping the layer ordered by first pixel.
    pub fn insert(&mut self, pulse: Pulse) {
        let layer = self.layers.entry(pulse.layer()).or_default();
        let key = pulse.first_pixel();
        let at = layer.partition_point(|p| p.first_pixel() < key);
        layer.insert(at, pulse);
    }

    fn canonicalize(&mut self) {
        self.layers.retain(|_, v| !v.is_empty());
        for layer in self.layers.values_mut() {
            layer.sort_by_key(|p| p.first_pixel());
        }
    }
}

/// Which smoother runs first within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StageOrder {
    /// `F_n = U_n ∘ L_n ∘ F_{n-1}`.
    #[default]
    UnAfterLn,
    /// `F_n = L_n ∘ U_n ∘ F_{n-1}`.
    LnAfterUn,
}

impl StageOrder {
    fn polarities(self) -> [Polarity; 2] {
        match self {
            StageOrder::UnAfterLn => [Polarity::Max, Polarity::Min],
            StageOrder::LnAfterUn => [Polarity::Min, Polarity::Max],
        }
    }
}

/// Decomposes `f` into pulses. With `max_n`, stops after that stage; the
/// result then keeps the unreduced remainder in `residual_image` unless it
/// already happens to be constant.
pub fn dpt_decompose(f: &GridImage, conn: &Connectivity, max_n: Option<usize>) -> DptDecomposition {
    dpt_decompose_with(f, conn, max_n, StageOrder::default())
}

pub fn dpt_decompose_with(
    f: &GridImage,
    conn: &Connectivity,
    max_n: Option<usize>,
    order: StageOrder,
) -> DptDecomposition {
    let mut graph = ZoneGraph::new(f, conn);
    let mut out = DptDecomposition::empty(f.width(), f.height(), conn.clone(), f.padding());

    while let Some((&n, _)) = graph.buckets.first_key_value() {
        if max_n.is_some_and(|m| n > m) {
            break;
        }
        let ids = graph.buckets.remove(&n).unwrap_or_default();
        for pulse in graph.run_stage(n, ids, order) {
            out.layers.entry(n).or_default().push(pulse);
        }
    }

    if graph.live_zones() > 0 {
        out.residual_image = Some(graph.current_image(f));
    }
    out.canonicalize();
    out
}

const PADDING_ZONE: usize = 0;

/// Flat zones of the running image with their neighbor relation. The
/// padding region is zone 0 and never changes.
struct ZoneGraph {
    zones: DisjointSet,
    value: Vec<i64>,
    size: Vec<usize>,
    pixels: Vec<Vec<u32>>,
    neighbors: Vec<Vec<u32>>,
    label: Vec<u32>,
    width: usize,
    /// Stage size → zones that had that many pixels when created.
    buckets: BTreeMap<usize, Vec<u32>>,
    live: usize,
}

impl ZoneGraph {
    fn new(f: &GridImage, conn: &Connectivity) -> Self {
        let flat = flat_zones(f, conn);
        let count = flat.len() + 1;
        let mut label = vec![0u32; f.len()];
        let mut value = vec![f.padding(); count];
        let mut size = vec![usize::MAX; count];
        let mut pixels = vec![Vec::new(); count];
        let mut zones = DisjointSet::new(count);
        let mut buckets: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        let mut live = 0;
        for (k, zone) in flat.into_iter().enumerate() {
            let id = k + 1;
            for &i in &zone.pixels {
                label[i] = id as u32;
            }
            if zone.is_unbounded(f.padding()) {
                zones.attach(id, PADDING_ZONE);
                continue;
            }
            value[id] = zone.value;
            size[id] = zone.pixels.len();
            buckets.entry(size[id]).or_default().push(id as u32);
            pixels[id] = zone.pixels.into_iter().map(|i| i as u32).collect();
            live += 1;
        }

        let mut neighbors = vec![Vec::new(); count];
        for i in 0..f.len() {
            let z = zones.find(label[i] as usize);
            if z == PADDING_ZONE {
                continue;
            }
            for q in conn.neighbor_coords(f.coord_of(i)) {
                let other = match f.index_of(q) {
                    Some(j) => zones.find(label[j] as usize),
                    None => PADDING_ZONE,
                };
                if other != z {
                    neighbors[z].push(other as u32);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }

        ZoneGraph {
            zones,
            value,
            size,
            pixels,
            neighbors,
            label,
            width: f.width(),
            buckets,
            live,
        }
    }

    fn live_zones(&self) -> usize {
        self.live
    }

    /// Resolves the neighbor list of a root zone in place and returns the
    /// extreme neighbor value for the given polarity.
    fn neighbor_extreme(&mut self, z: usize, polarity: Polarity) -> i64 {
        let mut list = std::mem::take(&mut self.neighbors[z]);
        for id in list.iter_mut() {
            *id = self.zones.find(*id as usize) as u32;
        }
        list.sort_unstable();
        list.dedup();
        list.retain(|&id| id as usize != z);
        let values = list.iter().map(|&id| self.value[id as usize]);
        let extreme = match polarity {
            Polarity::Max => values.max(),
            Polarity::Min => values.min(),
        };
        self.neighbors[z] = list;
        extreme.expect("a finite zone always has neighbors")
    }

    /// One stage: lowers regional maxima of exactly `n` pixels, then raises
    /// regional minima of exactly `n` pixels of the lowered image.
    fn run_stage(&mut self, n: usize, mut ids: Vec<u32>, order: StageOrder) -> Vec<Pulse> {
        ids.sort_unstable();
        ids.dedup();
        let mut pulses = Vec::new();
        for polarity in order.polarities() {
            let mut moves = Vec::new();
            for &id in &ids {
                let z = id as usize;
                if !self.zones.is_root(z) || self.size[z] != n {
                    continue;
                }
                let extreme = self.neighbor_extreme(z, polarity);
                let qualifies = match polarity {
                    Polarity::Max => extreme < self.value[z],
                    Polarity::Min => extreme > self.value[z],
                };
                if qualifies {
                    moves.push((z, extreme));
                }
            }
            for &(z, target) in &moves {
                pulses.push(self.pulse_of(z, self.value[z] - target));
            }
            for (z, target) in moves {
                self.value[z] = target;
                self.merge_equal_neighbors(z);
            }
        }
        pulses
    }

    fn pulse_of(&self, z: usize, amplitude: i64) -> Pulse {
        let w = self.width;
        let support = self.pixels[z]
            .iter()
            .map(|&i| ((i as usize / w) as i64, (i as usize % w) as i64))
            .collect();
        Pulse::new(support, amplitude)
    }

    /// Merges `z` with every neighbor now carrying the same value.
    fn merge_equal_neighbors(&mut self, z: usize) {
        let z = self.zones.find(z);
        let list = std::mem::take(&mut self.neighbors[z]);
        let v = self.value[z];
        let mut equal = Vec::new();
        let mut rest = Vec::with_capacity(list.len());
        for id in list {
            let r = self.zones.find(id as usize);
            if r == z {
                continue;
            }
            if self.value[r] == v {
                equal.push(r);
            } else {
                rest.push(r as u32);
            }
        }
        self.neighbors[z] = rest;
        equal.sort_unstable();
        equal.dedup();
        if equal.is_empty() {
            return;
        }

        let mut group = equal;
        group.push(z);
        // The padding zone absorbs everything it touches; otherwise the zone
        // holding the most pixels stays the root.
        let root = if group.contains(&PADDING_ZONE) {
            PADDING_ZONE
        } else {
            *group
                .iter()
                .max_by_key(|&&g| (self.pixels[g].len(), std::cmp::Reverse(g)))
                .expect("non-empty group")
        };
        for &g in &group {
            if g == root {
                continue;
            }
            self.zones.attach(g, root);
            self.live -= 1;
            if root == PADDING_ZONE {
                self.pixels[g] = Vec::new();
                self.neighbors[g] = Vec::new();
                continue;
            }
            self.size[root] += self.size[g];
            let mut px = std::mem::take(&mut self.pixels[g]);
            if px.len() > self.pixels[root].len() {
                std::mem::swap(&mut px, &mut self.pixels[root]);
            }
            self.pixels[root].extend(px);
            let mut nb = std::mem::take(&mut self.neighbors[g]);
            if nb.len() > self.neighbors[root].len() {
                std::mem::swap(&mut nb, &mut self.neighbors[root]);
            }
            self.neighbors[root].extend(nb);
        }
        if root != PADDING_ZONE {
            self.buckets
                .entry(self.size[root])
                .or_default()
                .push(root as u32);
        }
    }

    fn current_image(&mut self, f: &GridImage) -> GridImage {
        let values = (0..f.len())
            .map(|i| self.value[self.zones.find(self.label[i] as usize)])
            .collect();
        GridImage::new(f.width(), f.height(), values, f.padding()).expect("same shape")
    }
}

/// Pulses of one stage and the stage output `U_n(L_n(g))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub pulses: Vec<Pulse>,
    pub smoothed: GridImage,
}

/// Stage `n` on a full image `g` that has no local extremum set with fewer
/// than `n` pixels. Upward pulses are the flat local maximum sets of `g` of
/// size `n`, downward pulses the flat local minimum sets of `L_n(g)`
/// (or the other way round with [`StageOrder::LnAfterUn`]).
pub fn extract_layer(g: &GridImage, n: usize, conn: &Connectivity) -> Result<Layer> {
    extract_layer_with(g, n, conn, StageOrder::default())
}

pub fn extract_layer_with(
    g: &GridImage,
    n: usize,
    conn: &Connectivity,
    order: StageOrder,
) -> Result<Layer> {
    if n == 0 {
        return Err(LuluError::ZeroSize);
    }
    for polarity in [Polarity::Max, Polarity::Min] {
        if let Some((size, first)) = smallest_extremum(g, n - 1, conn, polarity) {
            return Err(LuluError::LayerPrecondition {
                n,
                polarity: polarity.name(),
                size,
                first: g.coord_of(first),
            });
        }
    }

    let mut pulses = Vec::new();
    let mut current = g.clone();
    for polarity in order.polarities() {
        let (next, zones) = match polarity {
            Polarity::Max => (
                apply_ln(&current, n, conn),
                flat_local_max_components(&current, n, conn),
            ),
            Polarity::Min => (
                apply_un(&current, n, conn),
                flat_local_min_components(&current, n, conn),
            ),
        };
        pulses.extend(pulses_from(&current, &next, zones, n)?);
        current = next;
    }
    let smoothed = current;
    pulses.sort_by_key(|p| p.first_pixel());
    Ok(Layer { pulses, smoothed })
}

/// Turns zones of `before` into pulses and checks they account for
/// `before − after` exactly.
fn pulses_from(
    before: &GridImage,
    after: &GridImage,
    zones: Vec<PixelSet>,
    n: usize,
) -> Result<Vec<Pulse>> {
    let mut diff = before.sub(after)?;
    let mut pulses = Vec::with_capacity(zones.len());
    for zone in zones {
        let first = zone.first().expect("zones are non-empty");
        let amplitude = diff.get(first);
        for &p in zone.iter() {
            if diff.get(p) != amplitude || amplitude == 0 {
                return Err(LuluError::LayerMismatch { n, at: p });
            }
            diff.set(p, 0);
        }
        pulses.push(Pulse::new(zone.to_vec(), amplitude));
    }
    if let Some(at) = diff.values().iter().position(|&v| v != 0) {
        return Err(LuluError::LayerMismatch {
            n,
            at: diff.coord_of(at),
        });
    }
    Ok(pulses)
}

/// Stage-by-stage decomposition on full images, for cross-checking
/// [`dpt_decompose`]. Quadratic in the image size.
pub fn dpt_decompose_reference(
    f: &GridImage,
    conn: &Connectivity,
    max_n: Option<usize>,
    order: StageOrder,
) -> Result<DptDecomposition> {
    let mut out = DptDecomposition::empty(f.width(), f.height(), conn.clone(), f.padding());
    let mut g = f.clone();
    let limit = max_n.unwrap_or(usize::MAX).min(f.len());
    let mut n = 1;
    while !g.is_flat() && n <= limit {
        let layer = extract_layer_with(&g, n, conn, order)?;
        for pulse in layer.pulses {
            out.insert(pulse);
        }
        g = layer.smoothed;
        n += 1;
    }
    if !g.is_flat() {
        out.residual_image = Some(g);
    }
    Ok(out)
}

/// Which pulses to keep when reconstructing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignFilter {
    Pos,
    Neg,
    #[default]
    Both,
}

impl SignFilter {
    pub fn admits(self, amplitude: i64) -> bool {
        match self {
            SignFilter::Pos => amplitude > 0,
            SignFilter::Neg => amplitude < 0,
            SignFilter::Both => true,
        }
    }
}

impl std::str::FromStr for SignFilter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pos" => Ok(SignFilter::Pos),
            "neg" => Ok(SignFilter::Neg),
            "both" => Ok(SignFilter::Both),
            _ => Err(format!("expected pos, neg or both, got {s:?}")),
        }
    }
}

/// Pulse predicate for partial reconstruction: layer bounds (inclusive),
/// sign, and whether the residual is added back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseFilter {
    pub min_size: usize,
    pub max_size: usize,
    pub sign: SignFilter,
    pub include_residual: bool,
}

impl PulseFilter {
    /// Everything, residual included: reconstructs the input exactly.
    pub fn all() -> Self {
        PulseFilter {
            min_size: 0,
            max_size: usize::MAX,
            sign: SignFilter::Both,
            include_residual: true,
        }
    }

    /// Pulses with `min_size ≤ layer ≤ max_size`, no residual.
    pub fn sizes(min_size: usize, max_size: usize) -> Self {
        PulseFilter {
            min_size,
            max_size,
            sign: SignFilter::Both,
            include_residual: false,
        }
    }

    pub fn admits(&self, pulse: &Pulse) -> bool {
        (self.min_size..=self.max_size).contains(&pulse.layer())
            && self.sign.admits(pulse.amplitude)
    }
}

/// Sum of the admitted pulses, plus the residual if the filter asks for it.
pub fn reconstruct(d: &DptDecomposition, filter: &PulseFilter) -> GridImage {
    let mut out = match (&d.residual_image, filter.include_residual) {
        (Some(residual), true) => residual.clone(),
        (None, true) => {
            GridImage::constant(d.width, d.height, d.residual_constant, d.residual_constant)
                .expect("decomposition dimensions are non-zero")
        }
        (_, false) => GridImage::constant(d.width, d.height, 0, 0)
            .expect("decomposition dimensions are non-zero"),
    };
    let width = d.width;
    let values = out.values_mut();
    for (_, layer) in d.layers.range(filter.min_size..=filter.max_size) {
        for pulse in layer.iter().filter(|p| filter.admits(p)) {
            for &(r, c) in &pulse.support {
                values[r as usize * width + c as usize] += pulse.amplitude;
            }
        }
    }
    out
}

/// `(layer size, pulse count)` for every non-empty layer, ascending.
pub fn pulse_histogram(d: &DptDecomposition) -> Vec<(usize, usize)> {
    d.layers
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&n, v)| (n, v.len()))
        .collect()
}

/// Outcome of one structural check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub property: &'static str,
    pub passed: bool,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub checks: Vec<Check>,
}

impl StructureReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, property: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.property == property)
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            write!(
                f,
                "{:<22} {}",
                c.property,
                if c.passed { "pass" } else { "FAIL" }
            )?;
            if let Some(ce) = &c.counterexample {
                write!(f, "  ({ce})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub const CHECK_RECONSTRUCTION: &str = "reconstruction";
pub const CHECK_LAYER_SIZE: &str = "layer_size";
pub const CHECK_AMPLITUDE: &str = "nonzero_amplitude";
pub const CHECK_CONNECTED: &str = "connected_support";
pub const CHECK_DISJOINT: &str = "intra_layer_disjoint";
pub const CHECK_NESTING: &str = "inter_layer_nesting";

/// Checks exact reconstruction of `original`, the layer-size law, non-zero
/// amplitudes, connected supports, disjointness within a layer and nesting
/// across layers. Each failing property reports its first counterexample.
pub fn verify_structure(d: &DptDecomposition, original: &GridImage) -> StructureReport {
    let mut checks = Vec::new();
    let mut record = |property, counterexample: Option<String>| {
        checks.push(Check {
            property,
            passed: counterexample.is_none(),
            counterexample,
        })
    };

    let rebuilt = reconstruct(d, &PulseFilter::all());
    let recon = if rebuilt.width() != original.width() || rebuilt.height() != original.height() {
        Some(format!(
            "decomposition is {}x{}, image is {}x{}",
            rebuilt.width(),
            rebuilt.height(),
            original.width(),
            original.height()
        ))
    } else if rebuilt.padding() != original.padding() {
        Some(format!(
            "residual {} differs from padding {}",
            rebuilt.padding(),
            original.padding()
        ))
    } else {
        rebuilt.first_difference(original).map(|p| {
            format!(
                "at {p:?}: pulses sum to {}, image has {}",
                rebuilt.get(p),
                original.get(p)
            )
        })
    };
    record(CHECK_RECONSTRUCTION, recon);

    let in_domain =
        |p: &Coord| p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < d.height && (p.1 as usize) < d.width;
    record(
        CHECK_LAYER_SIZE,
        d.layers.iter().find_map(|(&n, layer)| {
            layer
                .iter()
                .find(|p| p.layer() != n || !p.support.iter().all(in_domain))
                .map(|p| {
                    format!(
                        "pulse at {:?} in layer {n} has {} pixels",
                        p.first_pixel(),
                        p.layer()
                    )
                })
        }),
    );
    record(
        CHECK_AMPLITUDE,
        d.pulses()
            .find(|p| p.amplitude == 0)
            .map(|p| format!("zero pulse at {:?}", p.first_pixel())),
    );
    record(
        CHECK_CONNECTED,
        d.pulses()
            .find(|p| !is_connected(&p.support_set(), &d.connectivity))
            .map(|p| format!("support starting at {:?} is disconnected", p.first_pixel())),
    );

    let (disjoint, nesting) = laminarity(d);
    record(CHECK_DISJOINT, disjoint.map(|v| v.1));
    record(CHECK_NESTING, nesting.map(|v| v.1));

    StructureReport { checks }
}

type Violation = Option<(usize, String)>;

/// First same-layer overlap and first nesting failure, each with the index
/// of the offending pulse in [`DptDecomposition::pulses`] order.
pub(crate) fn laminarity(d: &DptDecomposition) -> (Violation, Violation) {
    let in_domain =
        |p: &Coord| p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < d.height && (p.1 as usize) < d.width;
    // Per-pixel chain of pulses in ascending layer order.
    let pulses: Vec<&Pulse> = d.pulses().collect();
    let mut chains: Vec<Vec<u32>> = vec![Vec::new(); d.width * d.height];
    for (id, p) in pulses.iter().enumerate() {
        for &(r, c) in p.support.iter().filter(|q| in_domain(q)) {
            chains[r as usize * d.width + c as usize].push(id as u32);
        }
    }
    let mut disjoint = None;
    for (i, chain) in chains.iter().enumerate() {
        if let Some(w) = chain
            .windows(2)
            .find(|w| pulses[w[0] as usize].layer() == pulses[w[1] as usize].layer())
        {
            disjoint = Some((
                w[1] as usize,
                format!(
                    "layer {} pulses at {:?} and {:?} share pixel {:?}",
                    pulses[w[0] as usize].layer(),
                    pulses[w[0] as usize].first_pixel(),
                    pulses[w[1] as usize].first_pixel(),
                    (i / d.width, i % d.width)
                ),
            ));
            break;
        }
    }

    // If, at every pixel of a pulse, the next larger pulse through that pixel
    // is the same one, intersecting pulses form chains by inclusion.
    let mut nesting = None;
    'outer: for (id, p) in pulses.iter().enumerate() {
        let mut expected: Option<Option<u32>> = None;
        for &(r, c) in p.support.iter().filter(|q| in_domain(q)) {
            let chain = &chains[r as usize * d.width + c as usize];
            let pos = chain
                .iter()
                .position(|&x| x as usize == id)
                .expect("pixel in chain");
            let next = chain
                .get(pos + 1..)
                .and_then(|rest| {
                    rest.iter()
                        .find(|&&x| pulses[x as usize].layer() > p.layer())
                })
                .copied();
            match expected {
                None => expected = Some(next),
                Some(e) if e != next => {
                    let other = e.or(next).expect("one side is a pulse");
                    nesting = Some((id, format!(
                        "layer {} pulse at {:?} meets layer {} pulse at {:?} without nesting (pixel {:?})",
                        p.layer(),
                        p.first_pixel(),
                        pulses[other as usize].layer(),
                        pulses[other as usize].first_pixel(),
                        (r, c)
                    )));
                    break 'outer;
                }
                _ => {}
            }
        }
    }

    (disjoint, nesting)
}

/// Number of flat zones of the image, counted with `conn`.
pub fn flat_zone_count(f: &GridImage, conn: &Connectivity) -> usize {
    flat_zones(f, conn).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pulse() -> GridImage {
        let mut f = GridImage::constant(4, 4, 0, 0).unwrap();
        f.set((1, 1), 8);
        f.set((1, 2), 3);
        f
    }

    #[test]
    fn zero_image_has_no_pulses() {
        let f = GridImage::constant(5, 4, 0, 0).unwrap();
        let d = dpt_decompose(&f, &Connectivity::four(), None);
        assert_eq!(d.pulse_count(), 0);
        assert_eq!(d.residual_constant, 0);
        assert!(d.is_complete());
        assert!(pulse_histogram(&d).is_empty());
    }

    #[test]
    fn single_spike() {
        let mut f = GridImage::constant(3, 3, 0, 0).unwrap();
        f.set((1, 1), 5);
        let d = dpt_decompose(&f, &Connectivity::four(), None);
        assert_eq!(d.layers.len(), 1);
        assert_eq!(d.layers[&1], vec![Pulse::new(vec![(1, 1)], 5)]);
        assert_eq!(d.residual_constant, 0);
    }

    #[test]
    fn two_pulses_nest() {
        let d = dpt_decompose(&two_pulse(), &Connectivity::four(), None);
        assert_eq!(d.layers[&1], vec![Pulse::new(vec![(1, 1)], 5)]);
        assert_eq!(d.layers[&2], vec![Pulse::new(vec![(1, 1), (1, 2)], 3)]);
        assert_eq!(pulse_histogram(&d), vec![(1, 1), (2, 1)]);
        assert!(verify_structure(&d, &two_pulse()).all_passed());

        let plateau = reconstruct(&d, &PulseFilter::sizes(2, usize::MAX));
        let mut want = GridImage::constant(4, 4, 0, 0).unwrap();
        want.set((1, 1), 3);
        want.set((1, 2), 3);
        assert_eq!(plateau, want);
    }

    #[test]
    fn matches_reference_on_examples() {
        let f = GridImage::from_rows(&[[0, 3, 9, 2, 0], [4, 4, 1, 7, 7], [0, 5, 5, 5, 2]]);
        for conn in [Connectivity::four(), Connectivity::eight()] {
            let fast = dpt_decompose(&f, &conn, None);
            let slow = dpt_decompose_reference(&f, &conn, None, StageOrder::default()).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn layer_examples() {
        let four = Connectivity::four();
        let mut plateau = GridImage::constant(4, 4, 0, 0).unwrap();
        plateau.set((1, 1), 3);
        plateau.set((1, 2), 3);

        let layer = extract_layer(&plateau, 2, &four).unwrap();
        assert_eq!(layer.pulses, vec![Pulse::new(vec![(1, 1), (1, 2)], 3)]);
        assert!(layer.smoothed.is_flat());

        let layer = extract_layer(&plateau, 1, &four).unwrap();
        assert!(layer.pulses.is_empty());
        assert_eq!(layer.smoothed, plateau);

        let c = GridImage::constant(3, 3, 2, 2).unwrap();
        let layer = extract_layer(&c, 4, &four).unwrap();
        assert!(layer.pulses.is_empty());
        assert_eq!(layer.smoothed, c);
    }

    #[test]
    fn layer_precondition_is_enforced() {
        let err = extract_layer(&two_pulse(), 2, &Connectivity::four()).unwrap_err();
        match err {
            LuluError::LayerPrecondition { n, size, first, .. } => {
                assert_eq!((n, size, first), (2, 1, (1, 1)));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn truncated_decomposition_keeps_remainder() {
        let d = dpt_decompose(&two_pulse(), &Connectivity::four(), Some(1));
        assert!(!d.is_complete());
        assert_eq!(d.pulse_count(), 1);
        let rest = d.residual_image.as_ref().unwrap();
        assert_eq!(rest.get((1, 1)), 3);
        assert_eq!(reconstruct(&d, &PulseFilter::all()), two_pulse());
        let slow = dpt_decompose_reference(
            &two_pulse(),
            &Connectivity::four(),
            Some(1),
            StageOrder::default(),
        )
        .unwrap();
        assert_eq!(d, slow);
    }

    #[test]
    fn tampered_amplitude_is_located() {
        let mut d = dpt_decompose(&two_pulse(), &Connectivity::four(), None);
        d.layers.get_mut(&2).unwrap()[0].amplitude = 4;
        let report = verify_structure(&d, &two_pulse());
        let check = report.get(CHECK_RECONSTRUCTION).unwrap();
        assert!(!check.passed);
        assert!(check.counterexample.as_ref().unwrap().contains("(1, 1)"));
        assert!(report.get(CHECK_NESTING).unwrap().passed);
    }

    #[test]
    fn broken_nesting_is_reported() {
        let mut d = DptDecomposition::empty(4, 1, Connectivity::four(), 0);
        d.insert(Pulse::new(vec![(0, 0), (0, 1)], 1));
        d.insert(Pulse::new(vec![(0, 1), (0, 2), (0, 3)], 1));
        let f = reconstruct(&d, &PulseFilter::all());
        let report = verify_structure(&d, &f);
        assert!(report.get(CHECK_RECONSTRUCTION).unwrap().passed);
        assert!(!report.get(CHECK_NESTING).unwrap().passed);
    }

    #[test]
    fn overlap_within_layer_is_reported() {
        let mut d = DptDecomposition::empty(3, 1, Connectivity::four(), 0);
        d.insert(Pulse::new(vec![(0, 0), (0, 1)], 1));
        d.insert(Pulse::new(vec![(0, 1), (0, 2)], -1));
        let f = reconstruct(&d, &PulseFilter::all());
        let report = verify_structure(&d, &f);
        assert!(!report.get(CHECK_DISJOINT).unwrap().passed);
    }
}
