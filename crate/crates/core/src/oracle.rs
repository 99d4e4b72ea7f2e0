//! Slow, literal implementations of the definitions, used to validate the
//! fast operators on small instances.
//!
//! Everything here enumerates connected pixel sets explicitly, so it is
//! exponential in the set size and guarded accordingly.

use std::collections::HashSet;

use crate::connectivity::{adjacency, Connectivity, PixelSet, Polarity};
use crate::error::{LuluError, Result};
use crate::grid::{Coord, GridImage, Rect};

/// Largest `n` accepted by the enumerating oracles.
pub const MAX_ORACLE_N: usize = 6;
/// Largest image side accepted by the enumerating oracles.
pub const MAX_ORACLE_SIDE: i64 = 8;

/// All connected sets of `size` pixels that contain `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectedSetFamily {
    pub base: Coord,
    pub size: usize,
    pub members: Vec<PixelSet>,
}

impl ConnectedSetFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn guard(n: usize, bounds: Rect) -> Result<()> {
    if n > MAX_ORACLE_N {
        return Err(LuluError::GuardrailExceeded(format!(
            "n = {n} exceeds the limit of {MAX_ORACLE_N}"
        )));
    }
    if bounds.height > MAX_ORACLE_SIDE || bounds.width > MAX_ORACLE_SIDE {
        return Err(LuluError::GuardrailExceeded(format!(
            "domain {}x{} exceeds the limit of {MAX_ORACLE_SIDE}x{MAX_ORACLE_SIDE}",
            bounds.width, bounds.height
        )));
    }
    Ok(())
}

/// `N_n(x)`: every connected set of `n + 1` pixels containing `x`.
///
/// `bounds` is the image domain; sets may leave it by up to `n` steps, so
/// the padding pixels they can reach are included and the family is the
/// complete one on Z². Members are sorted lexicographically.
pub fn enumerate_nn(
    x: Coord,
    n: usize,
    conn: &Connectivity,
    bounds: Rect,
) -> Result<ConnectedSetFamily> {
    guard(n, bounds)?;
    let window = bounds.expand(n as i64 * conn.reach());
    let window = if window.contains(x) {
        window
    } else {
        // A base outside the domain: centre the window on it instead.
        Rect::new(x.0, x.1, 1, 1).expand(n as i64 * conn.reach())
    };
    let mut members = connected_sets_containing(x, n + 1, conn, |p| window.contains(p));
    members.sort();
    Ok(ConnectedSetFamily {
        base: x,
        size: n + 1,
        members,
    })
}

/// Redelmeier-style growth: every connected set of `size` pixels through
/// `root` whose pixels satisfy `allowed` is produced exactly once.
pub(crate) fn connected_sets_containing(
    root: Coord,
    size: usize,
    conn: &Connectivity,
    allowed: impl Fn(Coord) -> bool,
) -> Vec<PixelSet> {
    let mut out = Vec::new();
    if size == 0 || !allowed(root) {
        return out;
    }
    let mut seen = HashSet::from([root]);
    let mut current = Vec::with_capacity(size);
    grow(
        vec![root],
        &mut current,
        &mut seen,
        size,
        conn,
        &allowed,
        &mut out,
    );
    out
}

fn grow(
    mut untried: Vec<Coord>,
    current: &mut Vec<Coord>,
    seen: &mut HashSet<Coord>,
    size: usize,
    conn: &Connectivity,
    allowed: &impl Fn(Coord) -> bool,
    out: &mut Vec<PixelSet>,
) {
    while let Some(u) = untried.pop() {
        current.push(u);
        if current.len() == size {
            out.push(current.iter().copied().collect());
        } else {
            let fresh: Vec<Coord> = conn
                .neighbor_coords(u)
                .filter(|&v| allowed(v) && !seen.contains(&v))
                .collect();
            seen.extend(fresh.iter().copied());
            let mut next = untried.clone();
            next.extend(fresh.iter().copied());
            grow(next, current, seen, size, conn, allowed, out);
            for v in &fresh {
                seen.remove(v);
            }
        }
        current.pop();
    }
}

/// `max_{V ∈ N_n(x)} min_{y ∈ V} f(y)` at any point of Z².
pub fn ln_bruteforce_at(f: &GridImage, x: Coord, n: usize, conn: &Connectivity) -> Result<i64> {
    let family = enumerate_nn(x, n, conn, f.domain())?;
    Ok(family
        .members
        .iter()
        .map(|v| v.iter().map(|&p| f.get(p)).min().expect("non-empty set"))
        .max()
        .expect("N_n(x) is never empty"))
}

/// `min_{V ∈ N_n(x)} max_{y ∈ V} f(y)` at any point of Z².
pub fn un_bruteforce_at(f: &GridImage, x: Coord, n: usize, conn: &Connectivity) -> Result<i64> {
    let family = enumerate_nn(x, n, conn, f.domain())?;
    Ok(family
        .members
        .iter()
        .map(|v| v.iter().map(|&p| f.get(p)).max().expect("non-empty set"))
        .min()
        .expect("N_n(x) is never empty"))
}

/// `L_n(f)` by literal evaluation on every domain pixel. The padding is
/// carried over; [`ln_bruteforce_at`] confirms it is fixed.
pub fn ln_bruteforce(f: &GridImage, n: usize, conn: &Connectivity) -> Result<GridImage> {
    pointwise(f, |x| ln_bruteforce_at(f, x, n, conn))
}

/// `U_n(f)` by literal evaluation.
pub fn un_bruteforce(f: &GridImage, n: usize, conn: &Connectivity) -> Result<GridImage> {
    pointwise(f, |x| un_bruteforce_at(f, x, n, conn))
}

fn pointwise(f: &GridImage, eval: impl Fn(Coord) -> Result<i64>) -> Result<GridImage> {
    guard(0, f.domain())?;
    let values = f.coords().map(eval).collect::<Result<Vec<_>>>()?;
    GridImage::new(f.width(), f.height(), values, f.padding())
}

/// Classical sequence `L_n`: the largest of the `n + 1` window minima
/// covering each index, with zeros beyond both ends.
pub fn sequence_ln(xs: &[i64], n: usize) -> Vec<i64> {
    sequence_op(xs, n, |w| w.iter().copied().min(), |a, b| a.max(b))
}

/// Classical sequence `U_n`: the smallest of the window maxima.
pub fn sequence_un(xs: &[i64], n: usize) -> Vec<i64> {
    sequence_op(xs, n, |w| w.iter().copied().max(), |a, b| a.min(b))
}

fn sequence_op(
    xs: &[i64],
    n: usize,
    inner: impl Fn(&[i64]) -> Option<i64>,
    outer: impl Fn(i64, i64) -> i64,
) -> Vec<i64> {
    let mut ext = vec![0; n];
    ext.extend_from_slice(xs);
    ext.extend(std::iter::repeat_n(0, n));
    (0..xs.len())
        .map(|i| {
            // Index i of `xs` sits at i + n in `ext`; windows start at i..=i+n.
            (i..=i + n)
                .map(|s| inner(&ext[s..=s + n]).expect("window of n+1 values"))
                .reduce(&outer)
                .expect("n+1 windows")
        })
        .collect()
}

/// Every connected subset of the domain with at most `max_size` pixels that
/// is a strict local maximum (or minimum) set of `f`, found by exhaustive
/// enumeration. Sets containing padding pixels never qualify: the padding
/// region is unbounded, so such a set always has a padding pixel in its
/// adjacency.
pub fn local_extremum_sets_up_to(
    f: &GridImage,
    max_size: usize,
    conn: &Connectivity,
    polarity: Polarity,
) -> Result<Vec<PixelSet>> {
    guard(max_size.saturating_sub(1), f.domain())?;
    let mut found = Vec::new();
    for root in f.coords() {
        for size in 1..=max_size {
            // Lexicographically smallest pixel is the root: each set once.
            for v in connected_sets_containing(root, size, conn, |p| f.in_domain(p) && p >= root) {
                if is_local_extremum_set(f, &v, conn, polarity) {
                    found.push(v);
                }
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Literal check of the strict local extremum set condition.
pub fn is_local_extremum_set(
    f: &GridImage,
    v: &PixelSet,
    conn: &Connectivity,
    polarity: Polarity,
) -> bool {
    let Ok(adj) = adjacency(v, conn) else {
        return false;
    };
    let inside = v.iter().map(|&p| f.get(p));
    let around = adj.iter().map(|&p| f.get(p));
    match polarity {
        Polarity::Max => around.max() < inside.min(),
        Polarity::Min => around.min() > inside.max(),
    }
}
