//! The full invariant suite run by `lulu verify`: order chain, idempotence,
//! co-idempotence, the composition table, TV preservation and DPT
//! structure, for several values of `n`.
//!
//! Operators come from an [`OperatorBackend`] so a deliberately broken
//! implementation can be plugged in to see which identities catch it.

use std::fmt;

use serde::Serialize;

use crate::connectivity::Connectivity;
use crate::dpt::{dpt_decompose, verify_structure};
use crate::grid::{Coord, GridImage};
use crate::lulu::{apply_ln, apply_un, Smoother};
use crate::tv::{verify_dpt_tv, TvReport};

pub trait OperatorBackend {
    fn ln(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage;
    fn un(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage;

    fn smoother(&self, s: Smoother, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
        match s {
            Smoother::Ln => self.ln(f, n, conn),
            Smoother::Un => self.un(f, n, conn),
            Smoother::LnUn => self.ln(&self.un(f, n, conn), n, conn),
            Smoother::UnLn => self.un(&self.ln(f, n, conn), n, conn),
        }
    }
}

/// The library operators.
#[derive(Debug, Clone, Copy, Default)]
pub struct Production;

impl OperatorBackend for Production {
    fn ln(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
        apply_ln(f, n, conn)
    }

    fn un(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
        apply_un(f, n, conn)
    }
}

/// Production operators, except that `L_n` at `n = at_n` also raises the
/// first pixel of its output by one. Used to exercise failure reporting.
#[derive(Debug, Clone, Copy)]
pub struct CorruptedLn {
    pub at_n: usize,
}

impl OperatorBackend for CorruptedLn {
    fn ln(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
        let mut out = apply_ln(f, n, conn);
        if n == self.at_n {
            out.values_mut()[0] += 1;
        }
        out
    }

    fn un(&self, f: &GridImage, n: usize, conn: &Connectivity) -> GridImage {
        apply_un(f, n, conn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub property: String,
    /// `None` for checks that do not depend on `n`.
    pub n: Option<usize>,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub sizes: Vec<usize>,
    pub cells: Vec<Cell>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Cell> + '_ {
        self.cells.iter().filter(|c| !c.passed)
    }

    pub fn cell(&self, property: &str, n: Option<usize>) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.property == property && c.n == n)
    }

    fn properties(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.property.as_str()) {
                seen.push(&c.property);
            }
        }
        seen
    }
}

impl fmt::Display for SuiteReport {
    /// One row per property, one column per `n`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let props = self.properties();
        let width = props
            .iter()
            .map(|p| p.chars().count())
            .max()
            .unwrap_or(8)
            .max(8);
        write!(f, "{:<width$}", "property")?;
        for n in &self.sizes {
            write!(f, "  n={n:<3}")?;
        }
        writeln!(f)?;
        for prop in props {
            write!(f, "{prop:<width$}")?;
            let row_wide = self.cell(prop, None);
            for &n in &self.sizes {
                let mark = match row_wide.or_else(|| self.cell(prop, Some(n))) {
                    Some(c) if c.passed => "pass",
                    Some(_) => "FAIL",
                    None => "-",
                };
                write!(f, "  {mark:<5}")?;
            }
            writeln!(f)?;
        }
        for c in self.failures() {
            let at = c.n.map(|n| format!(" (n={n})")).unwrap_or_default();
            writeln!(
                f,
                "FAIL {}{at}: {}",
                c.property,
                c.detail.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }
}

fn diff_detail(want: &GridImage, got: &GridImage, lhs: &str, rhs: &str) -> Option<String> {
    want.first_difference(got).map(|p: Coord| {
        format!(
            "{lhs} = {} but {rhs} = {} at {p:?}",
            got.get(p),
            want.get(p)
        )
    })
}

fn le_detail(lo: &GridImage, hi: &GridImage, lo_name: &str, hi_name: &str) -> Option<String> {
    lo.coords().find(|&p| lo.get(p) > hi.get(p)).map(|p| {
        format!(
            "{lo_name} = {} > {hi_name} = {} at {p:?}",
            lo.get(p),
            hi.get(p)
        )
    })
}

/// Runs every check on `f` for each `n` in `sizes` with the given backend.
pub fn run_suite(
    f: &GridImage,
    conn: &Connectivity,
    sizes: &[usize],
    backend: &dyn OperatorBackend,
) -> SuiteReport {
    let mut cells = Vec::new();
    let mut push = |property: String, n: Option<usize>, detail: Option<String>| {
        cells.push(Cell {
            property,
            n,
            passed: detail.is_none(),
            detail,
        })
    };

    for &n in sizes {
        let out = |s: Smoother| backend.smoother(s, f, n, conn);
        let [ln, un, unln, lnun] = Smoother::ALL.map(out);

        let chain = le_detail(&ln, f, "Ln f", "f")
            .or_else(|| le_detail(f, &un, "f", "Un f"))
            .or_else(|| le_detail(&ln, &unln, "Ln f", "UnLn f"))
            .or_else(|| le_detail(&unln, &lnun, "UnLn f", "LnUn f"))
            .or_else(|| le_detail(&lnun, &un, "LnUn f", "Un f"));
        push("order Ln<=UnLn<=LnUn<=Un".into(), Some(n), chain);

        for (s, pf) in Smoother::ALL.iter().zip([&ln, &un, &unln, &lnun]) {
            let again = backend.smoother(*s, pf, n, conn);
            push(
                format!("idempotent {s}"),
                Some(n),
                diff_detail(pf, &again, &format!("{s}({s} f)"), &format!("{s} f")),
            );

            let rest = f.sub(pf).expect("same shape");
            let zero = GridImage::constant(f.width(), f.height(), 0, 0).expect("non-empty");
            let co = backend.smoother(*s, &rest, n, conn);
            push(
                format!("co-idempotent {s}"),
                Some(n),
                diff_detail(&zero, &co, &format!("{s}(f - {s} f)"), "0"),
            );

            let tv = TvReport::of_split(f, pf).expect("same shape");
            push(
                format!("tv preserved {s}"),
                Some(n),
                (!tv.preserved).then(|| {
                    format!(
                        "TV(f) = {} but TV({s} f) + TV(f - {s} f) = {} + {}",
                        tv.tv_input, tv.tv_operator_part, tv.tv_residual_part
                    )
                }),
            );
        }

        for outer in Smoother::ALL {
            for (inner, pf) in Smoother::ALL.iter().zip([&ln, &un, &unln, &lnun]) {
                let composed = backend.smoother(outer, pf, n, conn);
                let table = outer.compose(*inner);
                let direct = backend.smoother(table, f, n, conn);
                push(
                    format!("semigroup {outer}*{inner}={table}"),
                    Some(n),
                    diff_detail(
                        &direct,
                        &composed,
                        &format!("{outer}({inner} f)"),
                        &format!("{table} f"),
                    ),
                );
            }
        }
    }

    let d = dpt_decompose(f, conn, None);
    for check in verify_structure(&d, f).checks {
        push(
            format!("dpt {}", check.property),
            None,
            check.counterexample,
        );
    }
    let tv = verify_dpt_tv(&d, f);
    push(
        "dpt tv additivity".into(),
        None,
        (!tv.preserved).then(|| {
            format!(
                "TV(f) = {} but pulses sum to {} (per layer {:?})",
                tv.tv_input, tv.tv_pulses, tv.per_layer
            )
        }),
    );

    SuiteReport {
        sizes: sizes.to_vec(),
        cells,
    }
}

/// [`run_suite`] with the library operators.
pub fn verify_image(f: &GridImage, conn: &Connectivity, sizes: &[usize]) -> SuiteReport {
    run_suite(f, conn, sizes, &Production)
}
