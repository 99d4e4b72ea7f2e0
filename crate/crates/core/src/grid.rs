//! Integer images on a rectangular window of Z², extended by a constant.

use std::fmt;

use crate::error::{LuluError, Result};

/// A pixel coordinate `(row, col)` on the infinite grid.
pub type Coord = (i64, i64);

/// Axis-aligned rectangle `[row0, row0 + height) × [col0, col0 + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub row0: i64,
    pub col0: i64,
    pub height: i64,
    pub width: i64,
}

impl Rect {
    pub fn new(row0: i64, col0: i64, height: i64, width: i64) -> Self {
        Rect {
            row0,
            col0,
            height,
            width,
        }
    }

    /// Rectangle anchored at the origin.
    pub fn sized(height: usize, width: usize) -> Self {
        Rect::new(0, 0, height as i64, width as i64)
    }

    pub fn contains(&self, (r, c): Coord) -> bool {
        r >= self.row0
            && r < self.row0 + self.height
            && c >= self.col0
            && c < self.col0 + self.width
    }

    /// Grows the rectangle by `margin` pixels on every side.
    pub fn expand(&self, margin: i64) -> Rect {
        Rect::new(
            self.row0 - margin,
            self.col0 - margin,
            self.height + 2 * margin,
            self.width + 2 * margin,
        )
    }

    pub fn area(&self) -> i64 {
        self.height.max(0) * self.width.max(0)
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (self.row0..self.row0 + self.height)
            .flat_map(move |r| (self.col0..self.col0 + self.width).map(move |c| (r, c)))
    }
}

/// A finitely supported integer function on Z²: explicit values on the
/// domain `[0, height) × [0, width)` and a single constant everywhere else.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridImage {
    width: usize,
    height: usize,
    values: Vec<i64>,
    padding: i64,
}

impl GridImage {
    pub fn new(width: usize, height: usize, values: Vec<i64>, padding: i64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(LuluError::EmptyDomain { width, height });
        }
        if values.len() != width * height {
            return Err(LuluError::ValueCount {
                expected: width * height,
                actual: values.len(),
            });
        }
        Ok(GridImage {
            width,
            height,
            values,
            padding,
        })
    }

    /// Builds an image from row slices with zero padding.
    ///
    /// Panics if the rows are ragged or empty; meant for literals in tests
    /// and examples.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let values: Vec<i64> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        GridImage::new(width, height, values, 0).expect("rectangular, non-empty rows")
    }

    pub fn constant(width: usize, height: usize, value: i64, padding: i64) -> Result<Self> {
        GridImage::new(width, height, vec![value; width * height], padding)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn padding(&self) -> i64 {
        self.padding
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [i64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    pub fn domain(&self) -> Rect {
        Rect::sized(self.height, self.width)
    }

    pub fn in_domain(&self, (r, c): Coord) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width
    }

    /// Row-major index of an in-domain coordinate.
    pub fn index_of(&self, p: Coord) -> Option<usize> {
        self.in_domain(p)
            .then(|| p.0 as usize * self.width + p.1 as usize)
    }

    pub fn coord_of(&self, index: usize) -> Coord {
        ((index / self.width) as i64, (index % self.width) as i64)
    }

    /// Value at any point of Z²; the padding constant outside the domain.
    pub fn get(&self, p: Coord) -> i64 {
        match self.index_of(p) {
            Some(i) => self.values[i],
            None => self.padding,
        }
    }

    /// Sets an in-domain value. Returns `false` (and does nothing) outside.
    pub fn set(&mut self, p: Coord, value: i64) -> bool {
        match self.index_of(p) {
            Some(i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.len()).map(move |i| self.coord_of(i))
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> GridImage {
        GridImage {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
            padding: f(self.padding),
        }
    }

    pub fn negate(&self) -> GridImage {
        self.map(|v| -v)
    }

    fn zip_with(&self, other: &GridImage, f: impl Fn(i64, i64) -> i64) -> Result<GridImage> {
        self.check_same_shape(other)?;
        Ok(GridImage {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            padding: f(self.padding, other.padding),
        })
    }

    pub fn add(&self, other: &GridImage) -> Result<GridImage> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridImage) -> Result<GridImage> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn check_same_shape(&self, other: &GridImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(LuluError::ShapeMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        Ok(())
    }

    /// Pointwise `self ≤ other`, padding included.
    pub fn le(&self, other: &GridImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.padding <= other.padding
            && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// True when every domain value equals the padding.
    pub fn is_flat(&self) -> bool {
        self.values.iter().all(|&v| v == self.padding)
    }

    pub fn min_value(&self) -> i64 {
        self.values.iter().copied().min().unwrap_or(self.padding)
    }

    pub fn max_value(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(self.padding)
    }

    /// Copy placed at `(row, col)` inside a larger frame of `frame_value`.
    pub fn embed(
        &self,
        frame_width: usize,
        frame_height: usize,
        row: usize,
        col: usize,
    ) -> Result<GridImage> {
        if row + self.height > frame_height || col + self.width > frame_width {
            return Err(LuluError::ShapeMismatch {
                left: (self.width + col, self.height + row),
                right: (frame_width, frame_height),
            });
        }
        let mut out = GridImage::constant(frame_width, frame_height, self.padding, self.padding)?;
        for (i, &v) in self.values.iter().enumerate() {
            let (r, c) = self.coord_of(i);
            out.set((r + row as i64, c + col as i64), v);
        }
        Ok(out)
    }

    /// Index of the first pixel where two equally-shaped images differ.
    pub fn first_difference(&self, other: &GridImage) -> Option<Coord> {
        if self.width != other.width || self.height != other.height {
            return Some((0, 0));
        }
        self.values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a != b)
            .map(|i| self.coord_of(i))
    }
}

impl fmt::Debug for GridImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "GridImage {}x{} (padding {})",
            self.width, self.height, self.padding
        )?;
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            writeln!(f, "{}", line.join(""))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_outside_domain() {
        let img = GridImage::new(2, 2, vec![1, 2, 3, 4], 9).unwrap();
        assert_eq!(img.get((0, 1)), 2);
        assert_eq!(img.get((1, 0)), 3);
        assert_eq!(img.get((-1, 0)), 9);
        assert_eq!(img.get((0, 2)), 9);
        assert_eq!(img.get((100, -100)), 9);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            GridImage::new(2, 2, vec![1, 2, 3], 0),
            Err(LuluError::ValueCount {
                expected: 4,
                actual: 3
            })
        ));
        assert!(GridImage::new(0, 3, vec![], 0).is_err());
    }

    #[test]
    fn embed_places_values() {
        let img = GridImage::from_rows(&[[1, 2]]);
        let big = img.embed(4, 3, 1, 2).unwrap();
        assert_eq!(big.get((1, 2)), 1);
        assert_eq!(big.get((1, 3)), 2);
        assert_eq!(big.values().iter().sum::<i64>(), 3);
    }
}
