//! COCO-style dataset model and mask codecs.

mod coco;
pub mod mask;
mod polygon;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use coco::{load_dataset, parse_dataset, to_json_string, write_dataset};
pub use mask::{bitmap_to_rle, compress_rle, decompress_rle, rle_to_bitmap, BBox, Bitmap, Rle};
pub use polygon::polygons_to_bitmap;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    /// Keys this crate does not interpret, kept for re-emission.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ImageRecord {
    pub fn new(id: u64, file_name: impl Into<String>, width: u32, height: u32) -> Self {
        ImageRecord {
            id,
            file_name: file_name.into(),
            width,
            height,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub id: u64,
    pub name: String,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CategoryRecord {
    pub fn new(id: u64, name: impl Into<String>) -> Self {
        CategoryRecord {
            id,
            name: name.into(),
            extra: Map::new(),
        }
    }
}

/// An instance mask in one of three interchangeable representations.
#[derive(Debug, Clone, PartialEq)]
pub enum SegMask {
    /// Flat `[x0, y0, x1, y1, ...]` coordinate lists; their union is the mask.
    Polygons(Vec<Vec<f64>>),
    Rle(Rle),
    Bitmap(Bitmap),
}

impl SegMask {
    /// Decodes to a dense mask of the given frame size.
    pub fn to_bitmap(&self, height: u32, width: u32) -> Result<Bitmap> {
        match self {
            SegMask::Polygons(p) => polygons_to_bitmap(p, height, width),
            SegMask::Rle(r) => {
                check_shape((height, width), r.shape())?;
                Ok(r.to_bitmap())
            }
            SegMask::Bitmap(b) => {
                check_shape((height, width), b.shape())?;
                Ok(b.clone())
            }
        }
    }

    /// Consuming variant of [`SegMask::to_bitmap`] that avoids a copy for bitmaps.
    pub fn into_bitmap(self, height: u32, width: u32) -> Result<Bitmap> {
        match self {
            SegMask::Bitmap(b) => {
                check_shape((height, width), b.shape())?;
                Ok(b)
            }
            other => other.to_bitmap(height, width),
        }
    }

    pub fn as_bitmap(&self) -> Option<&Bitmap> {
        match self {
            SegMask::Bitmap(b) => Some(b),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SegMask::Polygons(_) => "polygon",
            SegMask::Rle(_) => "rle",
            SegMask::Bitmap(_) => "bitmap",
        }
    }
}

fn check_shape(expected: (u32, u32), actual: (u32, u32)) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch { expected, actual });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub area: f64,
    pub segmentation: SegMask,
    pub iscrowd: bool,
    /// Detection confidence; present on pseudo labels.
    pub score: Option<f64>,
    pub extra: Map<String, Value>,
}

impl InstanceAnnotation {
    /// Annotation whose bbox and area are derived from `mask`.
    pub fn from_bitmap(id: u64, image_id: u64, category_id: u64, mask: Bitmap) -> Self {
        InstanceAnnotation {
            id,
            image_id,
            category_id,
            bbox: mask.tight_bbox(),
            area: mask.area() as f64,
            segmentation: SegMask::Bitmap(mask),
            iscrowd: false,
            score: None,
            extra: Map::new(),
        }
    }

    /// Replaces the mask and recomputes bbox and area from it.
    pub fn set_mask(&mut self, mask: Bitmap) {
        self.bbox = mask.tight_bbox();
        self.area = mask.area() as f64;
        self.segmentation = SegMask::Bitmap(mask);
    }

    pub fn mask(&self) -> Option<&Bitmap> {
        self.segmentation.as_bitmap()
    }

    /// Checks the invariants every engine output satisfies: a bitmap mask of the
    /// frame size, area equal to its pixel count, a tight in-frame bbox, and at
    /// least one visible pixel.
    pub fn check_output_invariants(&self, height: u32, width: u32) -> Result<()> {
        let fail = |msg: String| Err(Error::Dataset(format!("annotation {}: {msg}", self.id)));
        let mask = match &self.segmentation {
            SegMask::Bitmap(b) => b.clone(),
            SegMask::Rle(r) => r.to_bitmap(),
            SegMask::Polygons(_) => return fail("output masks must be RLE or bitmap".into()),
        };
        if mask.shape() != (height, width) {
            return fail(format!("mask shape {:?} != frame {:?}", mask.shape(), (height, width)));
        }
        let area = mask.area();
        if area == 0 {
            return fail("no visible pixels".into());
        }
        if self.area != area as f64 {
            return fail(format!("area {} != mask area {area}", self.area));
        }
        if self.bbox != mask.tight_bbox() {
            return fail(format!("bbox {:?} not tight ({:?})", self.bbox, mask.tight_bbox()));
        }
        let b = self.bbox;
        if b.x < 0.0 || b.y < 0.0 || b.x + b.w > width as f64 || b.y + b.h > height as f64 {
            return fail(format!("bbox {b:?} leaves the frame"));
        }
        Ok(())
    }
}

/// An indexed, immutable COCO-style dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<ImageRecord>,
    annotations: Vec<InstanceAnnotation>,
    categories: Vec<CategoryRecord>,
    /// Top-level JSON keys other than images/annotations/categories.
    extra: Map<String, Value>,
    image_root: PathBuf,
    image_pos: HashMap<u64, usize>,
    category_pos: HashMap<u64, usize>,
    by_image: Vec<Vec<usize>>,
}

impl Dataset {
    /// Builds and validates a dataset: ids must be unique and every annotation
    /// must reference an existing image and category.
    pub fn new(
        images: Vec<ImageRecord>,
        annotations: Vec<InstanceAnnotation>,
        categories: Vec<CategoryRecord>,
    ) -> Result<Self> {
        Self::with_extra(images, annotations, categories, Map::new(), PathBuf::new())
    }

    pub(crate) fn with_extra(
        images: Vec<ImageRecord>,
        annotations: Vec<InstanceAnnotation>,
        categories: Vec<CategoryRecord>,
        extra: Map<String, Value>,
        image_root: PathBuf,
    ) -> Result<Self> {
        let mut image_pos = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if img.width == 0 || img.height == 0 {
                return Err(Error::Dataset(format!(
                    "image {} has zero size {}x{}",
                    img.id, img.width, img.height
                )));
            }
            if image_pos.insert(img.id, i).is_some() {
                return Err(Error::Dataset(format!("duplicate image id {}", img.id)));
            }
        }
        let mut category_pos = HashMap::with_capacity(categories.len());
        for (i, c) in categories.iter().enumerate() {
            if category_pos.insert(c.id, i).is_some() {
                return Err(Error::Dataset(format!("duplicate category id {}", c.id)));
            }
        }
        let mut by_image = vec![Vec::new(); images.len()];
        let mut seen = std::collections::HashSet::with_capacity(annotations.len());
        for (i, a) in annotations.iter().enumerate() {
            if !seen.insert(a.id) {
                return Err(Error::Dataset(format!("duplicate annotation id {}", a.id)));
            }
            let Some(&pos) = image_pos.get(&a.image_id) else {
                return Err(Error::Dataset(format!(
                    "annotation {} references missing image_id {}",
                    a.id, a.image_id
                )));
            };
            if !category_pos.contains_key(&a.category_id) {
                return Err(Error::Dataset(format!(
                    "annotation {} references missing category_id {}",
                    a.id, a.category_id
                )));
            }
            by_image[pos].push(i);
        }
        Ok(Dataset {
            images,
            annotations,
            categories,
            extra,
            image_root,
            image_pos,
            category_pos,
            by_image,
        })
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn annotations(&self) -> &[InstanceAnnotation] {
        &self.annotations
    }

    pub fn categories(&self) -> &[CategoryRecord] {
        &self.categories
    }

    pub fn extra(&self) -> &Map<String, Value> {
        &self.extra
    }

    pub fn image_root(&self) -> &Path {
        &self.image_root
    }

    pub fn set_image_root(&mut self, root: impl Into<PathBuf>) {
        self.image_root = root.into();
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.image_pos.get(&id).map(|&i| &self.images[i])
    }

    /// Position of an image id in [`Dataset::images`].
    pub fn image_index(&self, id: u64) -> Option<usize> {
        self.image_pos.get(&id).copied()
    }

    pub fn category(&self, id: u64) -> Option<&CategoryRecord> {
        self.category_pos.get(&id).map(|&i| &self.categories[i])
    }

    /// Annotations of the image at position `index`, in file order.
    pub fn annotations_at(&self, index: usize) -> impl Iterator<Item = &InstanceAnnotation> {
        self.by_image[index].iter().map(|&i| &self.annotations[i])
    }

    /// Annotations of image `id`; empty for unknown ids.
    pub fn annotations_for(&self, id: u64) -> Vec<&InstanceAnnotation> {
        match self.image_index(id) {
            Some(i) => self.annotations_at(i).collect(),
            None => Vec::new(),
        }
    }

    /// Annotation positions grouped per image position.
    pub fn index(&self) -> &[Vec<usize>] {
        &self.by_image
    }

    /// Path of an image file under the image root.
    pub fn image_path(&self, record: &ImageRecord) -> PathBuf {
        self.image_root.join(&record.file_name)
    }

    /// Decodes the pixels of image `id` as 8-bit RGB. Missing files are only
    /// detected here, never at load time.
    pub fn load_image(&self, id: u64) -> Result<RgbImage> {
        let record = self
            .image(id)
            .ok_or_else(|| Error::Dataset(format!("unknown image id {id}")))?;
        let path = self.image_path(record);
        let img = image::open(&path).map_err(|source| match source {
            image::ImageError::IoError(e) => Error::io(&path, e),
            source => Error::Image {
                path: path.clone(),
                source,
            },
        })?;
        let img = img.to_rgb8();
        if img.dimensions() != (record.width, record.height) {
            return Err(Error::Dataset(format!(
                "image {id} is {}x{} on disk but {}x{} in the annotations",
                img.width(),
                img.height(),
                record.width,
                record.height
            )));
        }
        Ok(img)
    }

    /// Decomposes into owned parts.
    pub fn into_parts(
        self,
    ) -> (
        Vec<ImageRecord>,
        Vec<InstanceAnnotation>,
        Vec<CategoryRecord>,
        Map<String, Value>,
    ) {
        (self.images, self.annotations, self.categories, self.extra)
    }

    /// Convenience for sharing across workers.
    pub fn into_shared(self) -> Arc<Dataset> {
        Arc::new(self)
    }
}
