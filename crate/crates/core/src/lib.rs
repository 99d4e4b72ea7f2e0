//! LULU smoothers on integer images and the discrete pulse transform.
//!
//! The size-`n` smoothers `L_n` and `U_n` act on finitely supported integer
//! functions on Z² ([`GridImage`]) through a translation-invariant neighbor
//! relation ([`Connectivity`]). `L_n` removes local maximum sets of at most
//! `n` pixels, `U_n` removes local minimum sets. Iterating `U_n ∘ L_n` for
//! `n = 1, 2, …` splits an image into pulses: constant values on connected
//! supports, with disjoint supports inside a layer, nested supports across
//! layers, and no total variation added by the split.

pub mod connectivity;
pub mod dpt;
pub mod error;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod lulu;
pub mod oracle;
pub mod tv;
mod union_find;

pub use connectivity::{Connectivity, PixelSet, Polarity};
pub use dpt::{dpt_decompose, reconstruct, DptDecomposition, Pulse, PulseFilter, SignFilter};
pub use error::{LuluError, Result};
pub use grid::{Coord, GridImage, Rect};
pub use lulu::{apply, apply_ln, apply_un, OperatorKind, Smoother};
pub use tv::{total_variation, verify_dpt_tv, verify_preservation};
