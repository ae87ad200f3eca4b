//! Grid image and CSV emission.

use std::path::Path;

use crate::{Error, Result};

/// A scalar field sampled on a regular grid; row 0 is the top (largest `y`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGrid {
    pub width: usize,
    pub height: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Vec<f64>,
}

impl ScoreGrid {
    /// Cell centres, row by row from the top.
    pub fn points(
        width: usize,
        height: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Vec<[f64; 2]> {
        let dx = (x_range.1 - x_range.0) / width as f64;
        let dy = (y_range.1 - y_range.0) / height as f64;
        let mut pts = Vec::with_capacity(width * height);
        for r in 0..height {
            let y = y_range.1 - (r as f64 + 0.5) * dy;
            for c in 0..width {
                pts.push([x_range.0 + (c as f64 + 0.5) * dx, y]);
            }
        }
        pts
    }

    /// Binary 16-bit PGM, values min-max scaled to `0..=65535`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &v in &self.values {
            let level = if span > 0.0 {
                ((v - lo) / span * 65535.0).round() as u16
            } else {
                0
            };
            out.extend(level.to_be_bytes());
        }
        out
    }

    /// `x,y,score` per cell in image order.
    pub fn to_csv(&self) -> String {
        let pts = Self::points(self.width, self.height, self.x_range, self.y_range);
        let mut out = String::from("x,y,score\n");
        for (p, v) in pts.iter().zip(&self.values) {
            out.push_str(&format!("{:?},{:?},{:?}\n", p[0], p[1], v));
        }
        out
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
