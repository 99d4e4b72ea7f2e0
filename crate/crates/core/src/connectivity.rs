//! Neighbor relations on Z², connected pixel sets, adjacency, point
//! connected openings and detection of local maximum / minimum sets.
//!
//! A [`Connectivity`] is a translation-invariant symmetric offset set. Every
//! admissible relation contains the four axis offsets, which makes the family
//! of connected sets rich enough for the size-indexed smoothers: any connected
//! `V ⊊ W` can be grown inside `W` one adjacent pixel at a time.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};
use std::fmt;

use crate::error::{LuluError, Result};
use crate::grid::{Coord, GridImage, Rect};

const AXIS: [Coord; 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Four,
    Eight,
    Custom,
    HorizontalLine,
}

/// Translation-invariant, symmetric neighbor relation given by its offsets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Connectivity {
    offsets: Vec<Coord>,
    kind: Kind,
}

impl Connectivity {
    /// The axis neighbors `(±1,0), (0,±1)`.
    pub fn four() -> Self {
        Connectivity {
            offsets: sorted(AXIS.to_vec()),
            kind: Kind::Four,
        }
    }

    /// Axis and diagonal neighbors.
    pub fn eight() -> Self {
        let offsets = (-1..=1)
            .flat_map(|dr| (-1..=1).map(move |dc| (dr, dc)))
            .filter(|&o| o != (0, 0))
            .collect();
        Connectivity {
            offsets: sorted(offsets),
            kind: Kind::Eight,
        }
    }

    /// An arbitrary offset set. It must be symmetric, omit `(0,0)` and
    /// contain the four axis offsets.
    pub fn custom(offsets: impl IntoIterator<Item = Coord>) -> Result<Self> {
        let offsets = sorted(offsets.into_iter().collect());
        if offsets.contains(&(0, 0)) {
            return Err(LuluError::InvalidConnectivity(
                "the zero offset is implicit and must not be listed".into(),
            ));
        }
        if let Some(&(dr, dc)) = offsets
            .iter()
            .find(|&&(dr, dc)| offsets.binary_search(&(-dr, -dc)).is_err())
        {
            return Err(LuluError::InvalidConnectivity(format!(
                "offset ({dr},{dc}) present without its mirror ({},{})",
                -dr, -dc
            )));
        }
        if let Some(missing) = AXIS.iter().find(|a| offsets.binary_search(a).is_err()) {
            return Err(LuluError::InvalidConnectivity(format!(
                "axis offset {missing:?} is required"
            )));
        }
        let kind = if offsets == Connectivity::four().offsets {
            Kind::Four
        } else if offsets == Connectivity::eight().offsets {
            Kind::Eight
        } else {
            Kind::Custom
        };
        Ok(Connectivity { offsets, kind })
    }

    /// Consecutive columns only: `{(0,-1), (0,1)}`.
    ///
    /// This is the connection generated by pairs of consecutive integers,
    /// applied along each row. It is not an admissible image connectivity
    /// (vertical axis offsets are missing) and exists so that a single-row
    /// image behaves exactly like a zero-extended sequence.
    pub fn horizontal_line() -> Self {
        Connectivity {
            offsets: vec![(0, -1), (0, 1)],
            kind: Kind::HorizontalLine,
        }
    }

    pub fn offsets(&self) -> &[Coord] {
        &self.offsets
    }

    /// Largest Chebyshev length among the offsets.
    pub fn reach(&self) -> i64 {
        self.offsets
            .iter()
            .map(|&(dr, dc)| dr.abs().max(dc.abs()))
            .max()
            .unwrap_or(0)
    }

    /// `4` or `8` for the built-in relations.
    pub fn standard_degree(&self) -> Option<u8> {
        match self.kind {
            Kind::Four => Some(4),
            Kind::Eight => Some(8),
            _ => None,
        }
    }

    pub fn is_horizontal_line(&self) -> bool {
        self.kind == Kind::HorizontalLine
    }

    pub fn neighbor_coords(&self, (r, c): Coord) -> impl Iterator<Item = Coord> + '_ {
        self.offsets.iter().map(move |&(dr, dc)| (r + dr, c + dc))
    }
}

impl Default for Connectivity {
    fn default() -> Self {
        Connectivity::four()
    }
}

impl fmt::Debug for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Four => write!(f, "Connectivity::four()"),
            Kind::Eight => write!(f, "Connectivity::eight()"),
            Kind::HorizontalLine => write!(f, "Connectivity::horizontal_line()"),
            Kind::Custom => write!(f, "Connectivity::custom({:?})", self.offsets),
        }
    }
}

fn sorted(mut v: Vec<Coord>) -> Vec<Coord> {
    v.sort_unstable();
    v.dedup();
    v
}

/// A finite set of grid coordinates, kept in lexicographic order.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelSet(BTreeSet<Coord>);

impl PixelSet {
    pub fn new() -> Self {
        PixelSet(BTreeSet::new())
    }

    pub fn cardinality(&self) -> usize {
        self.0.len()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: &Coord) -> bool {
        self.0.contains(p)
    }

    pub fn insert(&mut self, p: Coord) -> bool {
        self.0.insert(p)
    }

    pub fn remove(&mut self, p: &Coord) -> bool {
        self.0.remove(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coord> + '_ {
        self.0.iter()
    }

    pub fn first(&self) -> Option<Coord> {
        self.0.first().copied()
    }

    pub fn to_vec(&self) -> Vec<Coord> {
        self.0.iter().copied().collect()
    }

    pub fn is_subset(&self, other: &PixelSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &PixelSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &PixelSet) -> PixelSet {
        PixelSet(self.0.union(&other.0).copied().collect())
    }

    pub fn as_btree(&self) -> &BTreeSet<Coord> {
        &self.0
    }
}

impl FromIterator<Coord> for PixelSet {
    fn from_iter<I: IntoIterator<Item = Coord>>(iter: I) -> Self {
        PixelSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[Coord; N]> for PixelSet {
    fn from(arr: [Coord; N]) -> Self {
        arr.into_iter().collect()
    }
}

impl IntoIterator for PixelSet {
    type Item = Coord;
    type IntoIter = std::collections::btree_set::IntoIter<Coord>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl fmt::Debug for PixelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// `{ x + v : v ∈ offsets }`.
pub fn neighbors(x: Coord, conn: &Connectivity) -> PixelSet {
    conn.neighbor_coords(x).collect()
}

/// True for the empty set, singletons, and sets in which every two pixels
/// are joined by a chain of neighbor pairs that stays inside the set.
pub fn is_connected(set: &PixelSet, conn: &Connectivity) -> bool {
    let Some(start) = set.first() else {
        return true;
    };
    let mut seen = HashSet::with_capacity(set.len());
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for q in conn.neighbor_coords(p) {
            if set.contains(&q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    seen.len() == set.len()
}

/// Pixels outside `set` that have at least one neighbor in it, i.e. the `x`
/// for which `set ∪ {x}` is still connected.
pub fn adjacency(set: &PixelSet, conn: &Connectivity) -> Result<PixelSet> {
    if set.is_empty() {
        return Err(LuluError::NotConnectedSet("empty"));
    }
    if !is_connected(set, conn) {
        return Err(LuluError::NotConnectedSet("disconnected"));
    }
    Ok(boundary(set, conn))
}

fn boundary(set: &PixelSet, conn: &Connectivity) -> PixelSet {
    set.iter()
        .flat_map(|&p| conn.neighbor_coords(p))
        .filter(|q| !set.contains(q))
        .collect()
}

/// The largest connected subset of `{y : pred(y)}` that contains `x`.
///
/// The search is confined to `bounds` grown by the connectivity's reach,
/// which is where the predicate has to be decidable. An `x` failing the
/// predicate yields the empty set.
pub fn point_connected_opening(
    x: Coord,
    pred: impl Fn(Coord) -> bool,
    conn: &Connectivity,
    bounds: Rect,
) -> PixelSet {
    let window = bounds.expand(conn.reach());
    if !window.contains(x) || !pred(x) {
        return PixelSet::new();
    }
    let mut out = PixelSet::new();
    out.insert(x);
    let mut queue = VecDeque::from([x]);
    while let Some(p) = queue.pop_front() {
        for q in conn.neighbor_coords(p) {
            if window.contains(q) && !out.contains(&q) && pred(q) {
                out.insert(q);
                queue.push_back(q);
            }
        }
    }
    out
}

/// Whether the set is a local maximum set (`Max`) or local minimum set (`Min`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Max,
    Min,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::Max => "maximum",
            Polarity::Min => "minimum",
        }
    }

    fn orient(self, v: i64) -> i64 {
        match self {
            Polarity::Max => v,
            Polarity::Min => -v,
        }
    }
}

/// A local extremum set found by [`threshold_walk`] together with the
/// extreme value over its adjacency (the largest adjacent value for a local
/// maximum set, the smallest for a local minimum set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremumSet {
    pub pixels: PixelSet,
    pub adjacent_extreme: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Frontier {
    Pixel(Reverse<Coord>),
    Outside,
}

/// Walks the nested threshold components `γ_x({y : f(y) ≥ t})` for
/// decreasing `t ≤ f(x)` (or the dual for `Min`) and returns the largest
/// one with at most `n` pixels that is a strict local extremum set.
///
/// Pixels are absorbed in priority-flood order, so after each absorption
/// the current set is a threshold component exactly when the best frontier
/// value is strictly below the set's minimum. Reaching the padding means
/// the component has become unbounded.
pub fn threshold_walk(
    f: &GridImage,
    x: Coord,
    n: usize,
    conn: &Connectivity,
    polarity: Polarity,
) -> Option<ExtremumSet> {
    if n == 0 || !f.in_domain(x) {
        return None;
    }
    let value = |p: Coord| polarity.orient(f.get(p));
    let mut members = vec![x];
    let mut queued: HashSet<Coord> = HashSet::from([x]);
    let mut outside_queued = false;
    let mut frontier: BinaryHeap<(i64, Frontier)> = BinaryHeap::new();
    let mut set_min = value(x);
    let mut best: Option<(usize, i64)> = None;

    let enqueue = |p: Coord,
                   frontier: &mut BinaryHeap<(i64, Frontier)>,
                   queued: &mut HashSet<Coord>,
                   outside_queued: &mut bool| {
        for q in conn.neighbor_coords(p) {
            if f.in_domain(q) {
                if queued.insert(q) {
                    frontier.push((value(q), Frontier::Pixel(Reverse(q))));
                }
            } else if !*outside_queued {
                *outside_queued = true;
                frontier.push((polarity.orient(f.padding()), Frontier::Outside));
            }
        }
    };
    enqueue(x, &mut frontier, &mut queued, &mut outside_queued);

    while let Some(&(top, entry)) = frontier.peek() {
        if top < set_min {
            best = Some((members.len(), top));
        }
        if members.len() >= n {
            break;
        }
        frontier.pop();
        match entry {
            Frontier::Outside => break,
            Frontier::Pixel(Reverse(p)) => {
                members.push(p);
                set_min = set_min.min(top);
                enqueue(p, &mut frontier, &mut queued, &mut outside_queued);
            }
        }
    }
    best.map(|(len, adj)| ExtremumSet {
        pixels: members[..len].iter().copied().collect(),
        adjacent_extreme: polarity.orient(adj),
    })
}

/// The largest local maximum set containing `x` with at most `n` pixels.
pub fn maximal_local_max_set(
    f: &GridImage,
    x: Coord,
    n: usize,
    conn: &Connectivity,
) -> Option<PixelSet> {
    threshold_walk(f, x, n, conn, Polarity::Max).map(|s| s.pixels)
}

/// The largest local minimum set containing `x` with at most `n` pixels.
pub fn maximal_local_min_set(
    f: &GridImage,
    x: Coord,
    n: usize,
    conn: &Connectivity,
) -> Option<PixelSet> {
    threshold_walk(f, x, n, conn, Polarity::Min).map(|s| s.pixels)
}

/// One connected component of constant value inside the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatZone {
    pub value: i64,
    /// Row-major pixel indices, ascending.
    pub pixels: Vec<usize>,
    /// Touches a pixel outside the domain.
    pub touches_padding: bool,
    /// Largest and smallest value over the zone's adjacency (padding included).
    pub adjacent_max: Option<i64>,
    pub adjacent_min: Option<i64>,
}

impl FlatZone {
    /// A zone at the padding value that reaches the padding is part of an
    /// unbounded flat region.
    pub fn is_unbounded(&self, padding: i64) -> bool {
        self.touches_padding && self.value == padding
    }

    /// Strict regional extremum: every adjacent value lies strictly beyond
    /// the zone's value.
    pub fn is_extremum(&self, polarity: Polarity, padding: i64) -> bool {
        if self.is_unbounded(padding) {
            return false;
        }
        match polarity {
            Polarity::Max => self.adjacent_max.is_none_or(|m| m < self.value),
            Polarity::Min => self.adjacent_min.is_none_or(|m| m > self.value),
        }
    }
}

/// Splits the domain into maximal connected constant-valued zones.
pub fn flat_zones(f: &GridImage, conn: &Connectivity) -> Vec<FlatZone> {
    let mut label = vec![usize::MAX; f.len()];
    let mut zones = Vec::new();
    let mut stack = Vec::new();
    for start in 0..f.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = zones.len();
        let value = f.values()[start];
        let mut zone = FlatZone {
            value,
            pixels: Vec::new(),
            touches_padding: false,
            adjacent_max: None,
            adjacent_min: None,
        };
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            zone.pixels.push(i);
            for q in conn.neighbor_coords(f.coord_of(i)) {
                let v = match f.index_of(q) {
                    Some(j) => {
                        let v = f.values()[j];
                        if v == value {
                            if label[j] == usize::MAX {
                                label[j] = id;
                                stack.push(j);
                            }
                            continue;
                        }
                        v
                    }
                    None => {
                        zone.touches_padding = true;
                        f.padding()
                    }
                };
                if v != value {
                    zone.adjacent_max = Some(zone.adjacent_max.map_or(v, |m| m.max(v)));
                    zone.adjacent_min = Some(zone.adjacent_min.map_or(v, |m| m.min(v)));
                }
            }
        }
        zone.pixels.sort_unstable();
        zones.push(zone);
    }
    zones
}

/// All constant-valued components of exactly `n` pixels that are local
/// maximum sets. Meant for images without local maximum sets smaller than
/// `n`, where such components are precisely the local maximum sets of size
/// `n`.
pub fn flat_local_max_components(f: &GridImage, n: usize, conn: &Connectivity) -> Vec<PixelSet> {
    flat_extremum_components(f, n, conn, Polarity::Max)
}

/// Dual of [`flat_local_max_components`].
pub fn flat_local_min_components(f: &GridImage, n: usize, conn: &Connectivity) -> Vec<PixelSet> {
    flat_extremum_components(f, n, conn, Polarity::Min)
}

pub(crate) fn flat_extremum_components(
    f: &GridImage,
    n: usize,
    conn: &Connectivity,
    polarity: Polarity,
) -> Vec<PixelSet> {
    let zones = flat_zones(f, conn);
    debug_assert!(
        f.len() > 64
            || !zones
                .iter()
                .any(|z| z.pixels.len() < n && z.is_extremum(polarity, f.padding())),
        "image has a local {} set smaller than {n}",
        polarity.name()
    );
    zones
        .iter()
        .filter(|z| z.pixels.len() == n && z.is_extremum(polarity, f.padding()))
        .map(|z| z.pixels.iter().map(|&i| f.coord_of(i)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set<const N: usize>(arr: [Coord; N]) -> PixelSet {
        PixelSet::from(arr)
    }

    #[test]
    fn four_neighbors_of_origin() {
        assert_eq!(
            neighbors((0, 0), &Connectivity::four()),
            set([(1, 0), (-1, 0), (0, 1), (0, -1)])
        );
    }

    #[test]
    fn eight_neighbors_surround() {
        let n = neighbors((2, 3), &Connectivity::eight());
        assert_eq!(n.len(), 8);
        for r in 1..=3 {
            for c in 2..=4 {
                assert_eq!(n.contains(&(r, c)), (r, c) != (2, 3));
            }
        }
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        for conn in [Connectivity::four(), Connectivity::eight()] {
            let x = (5, 5);
            for y in neighbors(x, &conn) {
                assert!(neighbors(y, &conn).contains(&x));
            }
        }
    }

    #[test]
    fn custom_connectivity_validation() {
        assert!(Connectivity::custom([(0, 1), (0, -1), (1, 0), (-1, 0), (2, 0), (-2, 0)]).is_ok());
        assert!(Connectivity::custom([(0, 1), (0, -1), (1, 0), (-1, 0), (2, 0)]).is_err());
        assert!(Connectivity::custom([(0, 1), (0, -1), (1, 0)]).is_err());
        assert!(Connectivity::custom([(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)]).is_err());
        assert_eq!(
            Connectivity::custom(Connectivity::eight().offsets().to_vec())
                .unwrap()
                .standard_degree(),
            Some(8)
        );
    }

    #[test]
    fn connectedness_examples() {
        let four = Connectivity::four();
        let eight = Connectivity::eight();
        assert!(is_connected(&set([(0, 0), (0, 1), (1, 1)]), &four));
        assert!(!is_connected(&set([(0, 0), (2, 2)]), &four));
        assert!(is_connected(&set([(0, 0), (1, 1)]), &eight));
        assert!(!is_connected(&set([(0, 0), (1, 1)]), &four));
        assert!(is_connected(&PixelSet::new(), &four));
        assert!(is_connected(&set([(7, -3)]), &four));
    }

    #[test]
    fn adjacency_examples() {
        let four = Connectivity::four();
        assert_eq!(
            adjacency(&set([(1, 1)]), &four).unwrap(),
            set([(0, 1), (2, 1), (1, 0), (1, 2)])
        );
        // Border of a horizontal domino, enumerated by hand.
        assert_eq!(
            adjacency(&set([(1, 1), (1, 2)]), &four).unwrap(),
            set([(0, 1), (0, 2), (2, 1), (2, 2), (1, 0), (1, 3)])
        );
        let v = set([(0, 0), (0, 1), (1, 1), (2, 1)]);
        assert!(adjacency(&v, &four).unwrap().is_disjoint(&v));
        assert!(matches!(
            adjacency(&set([(0, 0), (2, 2)]), &four),
            Err(LuluError::NotConnectedSet(_))
        ));
        assert!(adjacency(&PixelSet::new(), &four).is_err());
    }

    #[test]
    fn point_opening_examples() {
        let four = Connectivity::four();
        let bounds = Rect::sized(3, 3);
        let all = point_connected_opening((1, 1), |p| bounds.contains(p), &four, bounds);
        assert_eq!(all.len(), 9);

        let y = set([(0, 0), (0, 1), (1, 1), (2, 2)]);
        let got = point_connected_opening((0, 0), |p| y.contains(&p), &four, bounds);
        assert_eq!(got, set([(0, 0), (0, 1), (1, 1)]));

        let pair = set([(0, 0), (2, 2)]);
        let got = point_connected_opening((2, 2), |p| pair.contains(&p), &four, bounds);
        assert_eq!(got, set([(2, 2)]));

        let got = point_connected_opening((1, 0), |p| pair.contains(&p), &four, bounds);
        assert!(got.is_empty());
    }

    fn spike(v: i64) -> GridImage {
        let mut f = GridImage::constant(3, 3, 0, 0).unwrap();
        f.set((1, 1), v);
        f
    }

    #[test]
    fn local_max_set_examples() {
        let four = Connectivity::four();
        assert_eq!(
            maximal_local_max_set(&spike(5), (1, 1), 1, &four),
            Some(set([(1, 1)]))
        );
        let row = GridImage::from_rows(&[[0, 3, 9, 2, 0]]);
        assert_eq!(
            maximal_local_max_set(&row, (0, 2), 2, &four),
            Some(set([(0, 1), (0, 2)]))
        );
        // {9} alone is also a local max set; n=2 prefers the larger one.
        assert_eq!(
            maximal_local_max_set(&row, (0, 2), 1, &four),
            Some(set([(0, 2)]))
        );
        let flat = GridImage::constant(4, 4, 7, 7).unwrap();
        for n in 1..5 {
            assert_eq!(maximal_local_max_set(&flat, (2, 2), n, &four), None);
            assert_eq!(maximal_local_min_set(&flat, (2, 2), n, &four), None);
        }
        assert_eq!(
            maximal_local_min_set(&spike(-5), (1, 1), 1, &four),
            Some(set([(1, 1)]))
        );
    }

    #[test]
    fn walk_reports_adjacent_extreme() {
        let row = GridImage::from_rows(&[[0, 3, 9, 2, 0]]);
        let s = threshold_walk(&row, (0, 2), 2, &Connectivity::four(), Polarity::Max).unwrap();
        // Vertical neighbors are zero padding; the horizontal one is 2.
        assert_eq!(s.adjacent_extreme, 2);
    }

    #[test]
    fn walk_stops_at_padding() {
        // A plateau at the padding value never qualifies.
        let f = GridImage::from_rows(&[[0, 0, 0]]);
        assert_eq!(
            threshold_walk(&f, (0, 1), 10, &Connectivity::four(), Polarity::Max),
            None
        );
        // Outside the domain there is nothing to find.
        assert_eq!(
            threshold_walk(&spike(5), (-1, 0), 3, &Connectivity::four(), Polarity::Max),
            None
        );
    }

    fn plateau() -> GridImage {
        let mut f = GridImage::constant(4, 4, 0, 0).unwrap();
        f.set((1, 1), 3);
        f.set((1, 2), 3);
        f
    }

    #[test]
    fn flat_max_component_examples() {
        let four = Connectivity::four();
        assert_eq!(
            flat_local_max_components(&plateau(), 2, &four),
            vec![set([(1, 1), (1, 2)])]
        );
        assert!(flat_local_max_components(&plateau(), 1, &four).is_empty());
        let zero = GridImage::constant(4, 4, 0, 0).unwrap();
        for n in 1..4 {
            assert!(flat_local_max_components(&zero, n, &four).is_empty());
        }
    }

    #[test]
    fn flat_zone_at_padding_value_is_unbounded() {
        let f = GridImage::from_rows(&[[1, 0, 1], [1, 1, 1]]);
        let zones = flat_zones(&f, &Connectivity::four());
        let hole = zones.iter().find(|z| z.value == 0).unwrap();
        assert!(hole.touches_padding);
        assert!(!hole.is_extremum(Polarity::Min, 0));
    }
}
