use super::mask::Bitmap;
use crate::{Error, Result};

/// Rasterizes the union of filled polygons.
///
/// Each polygon is a flat `[x0, y0, x1, y1, ...]` list in pixel coordinates.
/// A pixel is foreground iff its center `(x + 0.5, y + 0.5)` is inside the
/// polygon under the even-odd rule; polygons are OR-ed together. Vertices
/// outside the frame are allowed and simply clip.
pub fn polygons_to_bitmap(polygons: &[Vec<f64>], height: u32, width: u32) -> Result<Bitmap> {
    for (index, p) in polygons.iter().enumerate() {
        if p.len() % 2 != 0 {
            return Err(Error::InvalidPolygon {
                index,
                reason: format!("odd coordinate count {}", p.len()),
            });
        }
        if p.len() < 6 {
            return Err(Error::InvalidPolygon {
                index,
                reason: format!("{} vertices, need at least 3", p.len() / 2),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolygon {
                index,
                reason: "non-finite coordinate".into(),
            });
        }
    }

    let mut out = Bitmap::new(height, width);
    let mut crossings: Vec<f64> = Vec::new();
    for poly in polygons {
        let xs: Vec<f64> = poly.iter().step_by(2).copied().collect();
        let ys: Vec<f64> = poly.iter().skip(1).step_by(2).copied().collect();
        let n = xs.len();
        let ymin = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row_lo = (ymin - 0.5).ceil().max(0.0);
        let row_hi = (ymax - 0.5).floor().min(height as f64 - 1.0);
        if row_lo > row_hi {
            continue;
        }

        let row_data = out.as_mut_slice();
        for y in row_lo as u32..=row_hi as u32 {
            let py = y as f64 + 0.5;
            crossings.clear();
            let mut j = n - 1;
            for i in 0..n {
                if (ys[i] > py) != (ys[j] > py) {
                    crossings.push((xs[j] - xs[i]) * (py - ys[i]) / (ys[j] - ys[i]) + xs[i]);
                }
                j = i;
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(f64::total_cmp);

            // inside iff an odd number of crossings lie strictly right of the center
            let row = &mut row_data[y as usize * width as usize..(y as usize + 1) * width as usize];
            let mut left = 0usize;
            for (x, px) in row.iter_mut().enumerate() {
                let cx = x as f64 + 0.5;
                while left < crossings.len() && crossings[left] <= cx {
                    left += 1;
                }
                if (crossings.len() - left) % 2 == 1 {
                    *px = 1;
                }
            }
        }
    }
    Ok(out)
}
