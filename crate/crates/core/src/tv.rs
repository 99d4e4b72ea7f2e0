//! Discrete total variation: the sum of absolute differences between
//! axis-adjacent pixels over all of Z².
//!
//! With constant padding only the domain and its one-pixel ring contribute.
//! The neighbor relation used by the operators plays no role here.

use serde::Serialize;

use crate::dpt::DptDecomposition;
use crate::error::Result;
use crate::grid::{Coord, GridImage};
use crate::lulu::{apply, OperatorKind};
use crate::Connectivity;

pub fn total_variation(f: &GridImage) -> u64 {
    let (h, w) = (f.height() as i64, f.width() as i64);
    let mut tv = 0u64;
    // Vertical pairs (r, c)-(r+1, c) and horizontal pairs (r, c)-(r, c+1)
    // with at least one end in the domain.
    for r in -1..h {
        for c in 0..w {
            tv += f.get((r, c)).abs_diff(f.get((r + 1, c)));
        }
    }
    for r in 0..h {
        for c in -1..w {
            tv += f.get((r, c)).abs_diff(f.get((r, c + 1)));
        }
    }
    tv
}

/// Total variation of the pulse `amplitude · 1_support`: every axis pair
/// with exactly one end in the support contributes `|amplitude|`.
pub fn pulse_total_variation(support: &[Coord], amplitude: i64) -> u64 {
    boundary_edges(support) * amplitude.unsigned_abs()
}

/// Number of axis-adjacent pairs crossing the boundary of `support`.
pub fn boundary_edges(support: &[Coord]) -> u64 {
    let members: std::collections::HashSet<Coord> = support.iter().copied().collect();
    support
        .iter()
        .map(|&(r, c)| {
            [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                .iter()
                .filter(|q| !members.contains(q))
                .count() as u64
        })
        .sum()
}

/// TV bookkeeping for the split `f = P(f) + (f − P(f))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TvReport {
    pub tv_input: u64,
    pub tv_operator_part: u64,
    pub tv_residual_part: u64,
    pub preserved: bool,
}

impl TvReport {
    pub fn of_split(f: &GridImage, smoothed: &GridImage) -> Result<Self> {
        let residual = f.sub(smoothed)?;
        let tv_input = total_variation(f);
        let tv_operator_part = total_variation(smoothed);
        let tv_residual_part = total_variation(&residual);
        Ok(TvReport {
            tv_input,
            tv_operator_part,
            tv_residual_part,
            preserved: tv_input == tv_operator_part + tv_residual_part,
        })
    }
}

/// Applies `op` and reports `TV(f)` against `TV(op f) + TV(f − op f)`.
pub fn verify_preservation(f: &GridImage, op: OperatorKind, conn: &Connectivity) -> TvReport {
    let smoothed = apply(op, f, conn);
    TvReport::of_split(f, &smoothed).expect("operators preserve shape")
}

/// TV of an image against the summed TV of its pulses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DptTvReport {
    pub tv_input: u64,
    pub tv_pulses: u64,
    /// TV of the unreduced remainder of a truncated decomposition, else 0.
    pub tv_remainder: u64,
    /// `(layer, Σ TV of its pulses)` for every non-empty layer.
    pub per_layer: Vec<(usize, u64)>,
    pub preserved: bool,
}

/// Checks `TV(f) = Σ TV(pulse)`. A truncated decomposition also counts the
/// TV of its remainder image.
pub fn verify_dpt_tv(d: &DptDecomposition, f: &GridImage) -> DptTvReport {
    let per_layer: Vec<(usize, u64)> = d
        .layers
        .iter()
        .map(|(&n, pulses)| {
            let tv = pulses
                .iter()
                .map(|p| pulse_total_variation(&p.support, p.amplitude))
                .sum();
            (n, tv)
        })
        .collect();
    let tv_pulses = per_layer.iter().map(|l| l.1).sum();
    let tv_remainder = d.residual_image.as_ref().map_or(0, total_variation);
    let tv_input = total_variation(f);
    DptTvReport {
        tv_input,
        tv_pulses,
        tv_remainder,
        per_layer,
        preserved: tv_input == tv_pulses + tv_remainder,
    }
}
