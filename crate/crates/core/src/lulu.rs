//! The smoothers `L_n`, `U_n` and their compositions.
//!
//! `L_n(f)(x)` is the largest `min_V f` over connected `V ∋ x` with `n + 1`
//! pixels. Any larger connected set through `x` contains such a `V`, so
//! `L_n(f)(x)` is the highest level `t` at which the threshold component of
//! `x` in `{f ≥ t}` has at least `n + 1` pixels: an area opening with area
//! `n + 1`. The production path computes it with a union-find over pixels
//! sorted by decreasing value. The whole padding region is collapsed into a
//! single node of unbounded area, which is exact because the padding is
//! constant and any component reaching it is already infinite.
//!
//! [`apply_ln_reference`] evaluates the same operator pixel by pixel from
//! the maximal local maximum set through `x`; both paths are checked
//! against each other and against direct enumeration in the test suites.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::connectivity::{flat_zones, threshold_walk, Connectivity, Polarity};
use crate::error::{LuluError, Result};
use crate::grid::GridImage;

/// One of the four members of the LULU semi-group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoother {
    Ln,
    Un,
    /// `L_n ∘ U_n`: `U_n` first.
    LnUn,
    /// `U_n ∘ L_n`: `L_n` first.
    UnLn,
}

impl Smoother {
    pub const ALL: [Smoother; 4] = [Smoother::Ln, Smoother::Un, Smoother::UnLn, Smoother::LnUn];

    pub fn name(self) -> &'static str {
        match self {
            Smoother::Ln => "ln",
            Smoother::Un => "un",
            Smoother::LnUn => "lnun",
            Smoother::UnLn => "unln",
        }
    }

    /// Composition `self ∘ other` as a member of the semi-group.
    pub fn compose(self, other: Smoother) -> Smoother {
        use Smoother::*;
        match (self, other) {
            (Ln, Ln) => Ln,
            (Un, Un) => Un,
            (_, Ln) | (_, UnLn) => UnLn,
            (_, Un) | (_, LnUn) => LnUn,
        }
    }
}

impl fmt::Display for Smoother {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Smoother {
    type Err = LuluError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ln" => Ok(Smoother::Ln),
            "un" => Ok(Smoother::Un),
            "lnun" => Ok(Smoother::LnUn),
            "unln" => Ok(Smoother::UnLn),
            _ => Err(LuluError::UnknownOperator(s.to_string())),
        }
    }
}

/// A smoother together with its size parameter `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorKind {
    smoother: Smoother,
    n: usize,
}

impl OperatorKind {
    pub fn new(smoother: Smoother, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LuluError::ZeroSize);
        }
        Ok(OperatorKind { smoother, n })
    }

    pub fn smoother(&self) -> Smoother {
        self.smoother
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.smoother, self.n)
    }
}

/// `L_n(f)`. `n = 0` is the identity.
pub fn apply_ln(f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
    if n == 0 {
        return f.clone();
    }
    area_open(f, n + 1, conn)
}

/// `U_n(f) = -L_n(-f)`.
pub fn apply_un(f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
    apply_ln(&f.negate(), n, conn).negate()
}

pub fn apply(kind: OperatorKind, f: &GridImage, conn: &Connectivity) -> GridImage {
    apply_smoother(kind.smoother, f, kind.n, conn)
}

pub fn apply_smoother(s: Smoother, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
    match s {
        Smoother::Ln => apply_ln(f, n, conn),
        Smoother::Un => apply_un(f, n, conn),
        Smoother::LnUn => apply_ln(&apply_un(f, n, conn), n, conn),
        Smoother::UnLn => apply_un(&apply_ln(f, n, conn), n, conn),
    }
}

const UNSEEN: u32 = u32::MAX;

/// Area opening: every pixel is lowered to the highest level at which its
/// threshold component holds at least `area` pixels.
fn area_open(f: &GridImage, area: usize, conn: &Connectivity) -> GridImage {
    let len = f.len();
    let pad = len;
    let values = f.values();
    let value = |i: usize| if i == pad { f.padding() } else { values[i] };

    let mut order: Vec<u32> = (0..=len as u32).collect();
    order.sort_unstable_by(|&a, &b| value(b as usize).cmp(&value(a as usize)).then(a.cmp(&b)));

    let offsets = conn.offsets();
    let (w, h) = (f.width() as i64, f.height() as i64);
    let border: Vec<u32> = (0..len)
        .filter(|&i| {
            let (r, c) = f.coord_of(i);
            offsets
                .iter()
                .any(|&(dr, dc)| !(0..h).contains(&(r + dr)) || !(0..w).contains(&(c + dc)))
        })
        .map(|i| i as u32)
        .collect();

    let mut parent = vec![UNSEEN; len + 1];
    let mut size = vec![0usize; len + 1];
    let mut scratch: Vec<usize> = Vec::with_capacity(offsets.len());

    for &p in &order {
        let p = p as usize;
        parent[p] = p as u32;
        size[p] = if p == pad { usize::MAX } else { 1 };

        scratch.clear();
        if p == pad {
            scratch.extend(border.iter().map(|&b| b as usize));
        } else {
            let (r, c) = f.coord_of(p);
            let mut touches_pad = false;
            for &(dr, dc) in offsets {
                let (rr, cc) = (r + dr, c + dc);
                if (0..h).contains(&rr) && (0..w).contains(&cc) {
                    scratch.push((rr * w + cc) as usize);
                } else {
                    touches_pad = true;
                }
            }
            if touches_pad {
                scratch.push(pad);
            }
        }

        for &q in &scratch {
            if parent[q] == UNSEEN {
                continue;
            }
            let root = find(&mut parent, q);
            if root == p {
                continue;
            }
            if value(root) == value(p) || size[root] < area {
                parent[root] = p as u32;
                size[p] = size[p].saturating_add(size[root]);
            } else {
                size[p] = size[p].max(area);
            }
        }
    }

    // Parents come later in `order`, so resolving in reverse sees them first.
    let mut out = vec![0i64; len + 1];
    for &p in order.iter().rev() {
        let p = p as usize;
        let q = parent[p] as usize;
        out[p] = if q == p { value(p) } else { out[q] };
    }
    out.truncate(len);
    GridImage::new(f.width(), f.height(), out, f.padding()).expect("same shape as input")
}

fn find(parent: &mut [u32], mut x: usize) -> usize {
    while parent[x] as usize != x {
        let grand = parent[parent[x] as usize];
        parent[x] = grand;
        x = grand as usize;
    }
    x
}

/// `L_n` evaluated pixel by pixel: a pixel inside a local maximum set of at
/// most `n` pixels takes the largest value adjacent to the maximal such set,
/// every other pixel keeps its value.
pub fn apply_ln_reference(f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
    walk_all(f, n, conn, Polarity::Max)
}

/// Dual of [`apply_ln_reference`].
pub fn apply_un_reference(f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
    walk_all(f, n, conn, Polarity::Min)
}

fn walk_all(f: &GridImage, n: usize, conn: &Connectivity, polarity: Polarity) -> GridImage {
    let mut out = f.clone();
    for (i, x) in f.coords().enumerate() {
        if let Some(set) = threshold_walk(f, x, n, conn, polarity) {
            out.values_mut()[i] = set.adjacent_extreme;
        }
    }
    out
}

/// Whether `f` has a local maximum (or minimum) set with at most `n` pixels.
///
/// Such a set exists exactly when a flat regional extremum of at most `n`
/// pixels exists: the top (bottom) level of any local maximum (minimum) set
/// is itself one.
pub fn has_local_extremum_set_up_to(
    f: &GridImage,
    n: usize,
    conn: &Connectivity,
    polarity: Polarity,
) -> bool {
    smallest_extremum(f, n, conn, polarity).is_some()
}

/// Smallest flat regional extremum with at most `n` pixels, as
/// `(size, first pixel)`.
pub(crate) fn smallest_extremum(
    f: &GridImage,
    n: usize,
    conn: &Connectivity,
    polarity: Polarity,
) -> Option<(usize, usize)> {
    flat_zones(f, conn)
        .into_iter()
        .filter(|z| z.pixels.len() <= n && z.is_extremum(polarity, f.padding()))
        .map(|z| (z.pixels.len(), z.pixels[0]))
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike(v: i64) -> GridImage {
        let mut f = GridImage::constant(3, 3, 0, 0).unwrap();
        f.set((1, 1), v);
        f
    }

    #[test]
    fn constant_images_are_fixed() {
        let f = GridImage::constant(5, 4, 7, 0).unwrap();
        // Zero padding makes the block of 7s a local maximum set of 20 pixels.
        assert_eq!(apply_ln(&f, 19, &Connectivity::four()), f);
        let g = GridImage::constant(5, 4, 7, 7).unwrap();
        for n in 1..30 {
            assert_eq!(apply_ln(&g, n, &Connectivity::four()), g);
            assert_eq!(apply_un(&g, n, &Connectivity::eight()), g);
        }
    }

    #[test]
    fn spike_is_removed() {
        let four = Connectivity::four();
        assert_eq!(apply_ln(&spike(5), 1, &four), spike(0));
        assert_eq!(apply_un(&spike(-5), 1, &four), spike(0));
        assert_eq!(apply_ln(&spike(-5), 1, &four), spike(-5));
    }

    #[test]
    fn row_examples() {
        let four = Connectivity::four();
        let row = GridImage::from_rows(&[[0, 3, 9, 2, 0]]);
        assert_eq!(
            apply_ln(&row, 2, &four),
            GridImage::from_rows(&[[0, 2, 2, 2, 0]])
        );
        let row = GridImage::from_rows(&[[0, 9, 8, 9, 0]]);
        let expected = GridImage::from_rows(&[[0, 8, 8, 8, 0]]);
        assert_eq!(apply_ln(&row, 1, &four), expected);
        assert_eq!(
            apply(OperatorKind::new(Smoother::Ln, 1).unwrap(), &row, &four),
            expected
        );
    }

    #[test]
    fn unln_clears_spike() {
        let kind = OperatorKind::new(Smoother::UnLn, 1).unwrap();
        assert_eq!(apply(kind, &spike(5), &Connectivity::four()), spike(0));
    }

    #[test]
    fn padding_above_domain() {
        // Everything inside is below the padding; a 1-pixel dip is a local
        // minimum set, raised by U_1 to its smallest neighbor.
        let f = GridImage::new(3, 1, vec![5, 1, 5], 9).unwrap();
        let four = Connectivity::four();
        assert_eq!(apply_ln(&f, 3, &four), f);
        assert_eq!(apply_un(&f, 1, &four).values(), &[5, 5, 5]);
        assert_eq!(apply_un(&f, 3, &four).values(), &[9, 9, 9]);
    }

    #[test]
    fn reference_matches_on_examples() {
        let four = Connectivity::four();
        let row = GridImage::from_rows(&[[0, 3, 9, 2, 0]]);
        for n in 1..6 {
            assert_eq!(apply_ln_reference(&row, n, &four), apply_ln(&row, n, &four));
            assert_eq!(apply_un_reference(&row, n, &four), apply_un(&row, n, &four));
        }
    }

    #[test]
    fn extremum_detection() {
        let four = Connectivity::four();
        assert!(has_local_extremum_set_up_to(
            &spike(5),
            1,
            &four,
            Polarity::Max
        ));
        assert!(!has_local_extremum_set_up_to(
            &spike(5),
            1,
            &four,
            Polarity::Min
        ));
        let c = GridImage::constant(4, 4, 3, 0).unwrap();
        assert!(!has_local_extremum_set_up_to(&c, 15, &four, Polarity::Max));
        assert!(has_local_extremum_set_up_to(&c, 16, &four, Polarity::Max));
        let flat = GridImage::constant(4, 4, 3, 3).unwrap();
        for p in [Polarity::Max, Polarity::Min] {
            assert!(!has_local_extremum_set_up_to(&flat, 100, &four, p));
        }
    }

    #[test]
    fn composition_table() {
        use Smoother::*;
        // Rows compose on the left: entry = row ∘ column.
        let table = [
            (Ln, [Ln, LnUn, UnLn, LnUn]),
            (Un, [UnLn, Un, UnLn, LnUn]),
            (UnLn, [UnLn, LnUn, UnLn, LnUn]),
            (LnUn, [UnLn, LnUn, UnLn, LnUn]),
        ];
        for (row, entries) in table {
            for (col, want) in [Ln, Un, UnLn, LnUn].into_iter().zip(entries) {
                assert_eq!(row.compose(col), want, "{row} ∘ {col}");
            }
        }
    }
}
