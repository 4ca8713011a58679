//! Binary masks and their run-length encodings.
//!
//! [`Bitmap`] is stored row-major, one byte per pixel holding 0 or 1.
//! [`Rle`] follows COCO: runs are taken in column-major order and alternate
//! background/foreground, always starting with a (possibly empty) background
//! run. The compressed string form is the one written by COCO tooling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `(x, y, w, h)` in pixels, serialized as a 4-element array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Box reported for a mask with no foreground pixels.
    pub const EMPTY: BBox = BBox {
        x: 0.0,
        y: 0.0,
        w: 0.0,
        h: 0.0,
    };

    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0.0 || self.h <= 0.0
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// Dense binary mask, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    height: u32,
    width: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Bitmap")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("area", &self.area())
            .finish()
    }
}

impl Bitmap {
    pub fn new(height: u32, width: u32) -> Self {
        Bitmap {
            height,
            width,
            data: vec![0; height as usize * width as usize],
        }
    }

    pub fn full(height: u32, width: u32) -> Self {
        Bitmap {
            height,
            width,
            data: vec![1; height as usize * width as usize],
        }
    }

    /// Builds a bitmap from row-major values; any non-zero value is foreground.
    pub fn from_row_major(height: u32, width: u32, values: &[u8]) -> Result<Self> {
        let n = height as usize * width as usize;
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "bitmap of {height}x{width} needs {n} values, got {}",
                values.len()
            )));
        }
        Ok(Bitmap {
            height,
            width,
            data: values.iter().map(|&v| u8::from(v != 0)).collect(),
        })
    }

    /// Parses rows written as strings of `0`/`1` characters.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.as_ref().len()) as u32;
        let mut data = Vec::with_capacity(height as usize * width as usize);
        for row in rows {
            let row = row.as_ref();
            if row.len() as u32 != width {
                return Err(Error::InvalidArgument("ragged bitmap rows".into()));
            }
            for c in row.bytes() {
                match c {
                    b'0' => data.push(0),
                    b'1' => data.push(1),
                    _ => return Err(Error::InvalidArgument(format!("bad bitmap char {c:#x}"))),
                }
            }
        }
        Ok(Bitmap {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// `(height, width)`.
    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.data[y as usize * self.width as usize + x as usize] = u8::from(value);
    }

    /// Row-major 0/1 bytes.
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    /// Foreground pixel count.
    pub fn area(&self) -> u64 {
        self.data.iter().map(|&v| v as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Minimal box containing every foreground pixel, or [`BBox::EMPTY`].
    pub fn tight_bbox(&self) -> BBox {
        let w = self.width as usize;
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        for (y, row) in self.data.chunks_exact(w.max(1)).enumerate() {
            let Some(first) = row.iter().position(|&v| v != 0) else {
                continue;
            };
            let last = row.iter().rposition(|&v| v != 0).unwrap_or(first);
            if y0 == usize::MAX {
                y0 = y;
            }
            y1 = y;
            x0 = x0.min(first);
            x1 = x1.max(last);
        }
        if y0 == usize::MAX {
            return BBox::EMPTY;
        }
        BBox::new(
            x0 as f64,
            y0 as f64,
            (x1 - x0 + 1) as f64,
            (y1 - y0 + 1) as f64,
        )
    }

    fn check_shape(&self, other: &Bitmap) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }

    /// In-place union.
    pub fn union_with(&mut self, other: &Bitmap) -> Result<()> {
        self.check_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
        Ok(())
    }

    /// In-place `self ∧ ¬other`.
    pub fn subtract(&mut self, other: &Bitmap) -> Result<()> {
        self.check_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a &= b ^ 1;
        }
        Ok(())
    }

    /// Number of pixels set in both masks.
    pub fn overlap(&self, other: &Bitmap) -> Result<u64> {
        self.check_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a & b) as u64)
            .sum())
    }

    /// Mirror image about the vertical axis.
    pub fn flipped_horizontal(&self) -> Bitmap {
        let mut out = self.clone();
        let w = self.width as usize;
        if w > 0 {
            for row in out.data.chunks_exact_mut(w) {
                row.reverse();
            }
        }
        out
    }
}

/// Uncompressed run-length encoding of a mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rle {
    height: u32,
    width: u32,
    counts: Vec<u32>,
}

impl Rle {
    /// Validates that the runs cover exactly `height × width` pixels.
    pub fn new(height: u32, width: u32, counts: Vec<u32>) -> Result<Self> {
        let sum: u64 = counts.iter().map(|&c| c as u64).sum();
        let expected = height as u64 * width as u64;
        if sum != expected {
            return Err(Error::RleSize {
                sum,
                expected,
                height,
                width,
            });
        }
        Ok(Rle {
            height,
            width,
            counts,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn shape(&self) -> (u32, u32) {
        (self.height, self.width)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Foreground pixel count (sum of the odd runs).
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub fn from_bitmap(bitmap: &Bitmap) -> Rle {
        bitmap_to_rle(bitmap)
    }

    pub fn to_bitmap(&self) -> Bitmap {
        rle_to_bitmap(self)
    }

    /// COCO compressed `counts` string.
    pub fn to_compressed(&self) -> String {
        compress_rle(self)
    }

    pub fn from_compressed(s: &str, height: u32, width: u32) -> Result<Rle> {
        decompress_rle(s, height, width)
    }
}

/// Column-major run-length encoding of a bitmap.
pub fn bitmap_to_rle(b: &Bitmap) -> Rle {
    let (h, w) = (b.height as usize, b.width as usize);
    let mut counts = Vec::new();
    let mut current = 0u8;
    let mut run = 0u32;
    for x in 0..w {
        for y in 0..h {
            let v = b.data[y * w + x];
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    Rle {
        height: b.height,
        width: b.width,
        counts,
    }
}

/// Inverse of [`bitmap_to_rle`]. `Rle` values are validated on construction,
/// so this cannot fail.
pub fn rle_to_bitmap(r: &Rle) -> Bitmap {
    let (h, w) = (r.height as usize, r.width as usize);
    let mut out = Bitmap::new(r.height, r.width);
    let mut pos = 0usize;
    for (i, &c) in r.counts.iter().enumerate() {
        let end = pos + c as usize;
        if i % 2 == 1 {
            for idx in pos..end {
                let (x, y) = (idx / h, idx % h);
                out.data[y * w + x] = 1;
            }
        }
        pos = end;
    }
    out
}

/// Encodes counts as COCO's compressed string.
///
/// From the fourth run on, each count is stored as the difference to the run two
/// positions earlier. Every value is split into 5-bit groups, low group first;
/// a group carries a continuation bit (0x20) and is offset by 48 into printable
/// ASCII.
pub fn compress_rle(r: &Rle) -> String {
    let mut out = String::with_capacity(r.counts.len() * 2);
    for (i, &c) in r.counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= r.counts[i - 2] as i64;
        }
        loop {
            let mut group = (x & 0x1f) as u8;
            x >>= 5;
            let more = if group & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                group |= 0x20;
            }
            out.push((group + 48) as char);
            if !more {
                break;
            }
        }
    }
    out
}

/// Decodes a COCO compressed counts string for a mask of the given size.
pub fn decompress_rle(s: &str, height: u32, width: u32) -> Result<Rle> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u32> = Vec::with_capacity(bytes.len());
    let mut p = 0usize;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0u32;
        loop {
            let Some(&ch) = bytes.get(p) else {
                return Err(Error::RleString(format!(
                    "truncated continuation sequence at byte {p}"
                )));
            };
            if !(48..=111).contains(&ch) {
                return Err(Error::RleString(format!(
                    "character {:?} at byte {p} outside the encoding alphabet",
                    ch as char
                )));
            }
            if k >= 12 {
                return Err(Error::RleString(format!("value too long at byte {p}")));
            }
            let group = (ch - 48) as i64;
            x |= (group & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if group & 0x20 == 0 {
                if group & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        let m = counts.len();
        if m > 2 {
            x += counts[m - 2] as i64;
        }
        let value = u32::try_from(x)
            .map_err(|_| Error::RleString(format!("run {m} decodes to {x}, out of range")))?;
        counts.push(value);
    }
    Rle::new(height, width, counts)
}
