use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::{BBox, CategoryRecord, Dataset, ImageRecord, InstanceAnnotation, Rle, SegMask};
use crate::{Error, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCounts {
    Compressed(String),
    Uncompressed(Vec<u64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSegmentation {
    Polygons(Vec<Vec<f64>>),
    Rle { size: [u32; 2], counts: RawCounts },
}

impl TryFrom<RawSegmentation> for SegMask {
    type Error = Error;

    fn try_from(raw: RawSegmentation) -> Result<Self> {
        match raw {
            RawSegmentation::Polygons(p) => Ok(SegMask::Polygons(p)),
            RawSegmentation::Rle {
                size: [h, w],
                counts: RawCounts::Compressed(s),
            } => Ok(SegMask::Rle(Rle::from_compressed(&s, h, w)?)),
            RawSegmentation::Rle {
                size: [h, w],
                counts: RawCounts::Uncompressed(c),
            } => {
                let counts = c
                    .into_iter()
                    .map(|v| u32::try_from(v).map_err(|_| Error::RleString(format!("run {v} too large"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(SegMask::Rle(Rle::new(h, w, counts)?))
            }
        }
    }
}

struct RleDict<'a>(&'a Rle);

impl Serialize for RleDict<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("size", &[self.0.height(), self.0.width()])?;
        m.serialize_entry("counts", &self.0.to_compressed())?;
        m.end()
    }
}

impl Serialize for SegMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SegMask::Polygons(p) => {
                let mut seq = s.serialize_seq(Some(p.len()))?;
                for poly in p {
                    seq.serialize_element(poly)?;
                }
                seq.end()
            }
            SegMask::Rle(r) => RleDict(r).serialize(s),
            SegMask::Bitmap(b) => RleDict(&Rle::from_bitmap(b)).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SegMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSegmentation::deserialize(d)?;
        SegMask::try_from(raw).map_err(serde::de::Error::custom)
    }
}

fn crowd_flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Int(i64),
        Bool(bool),
    }
    Ok(match Flag::deserialize(d)? {
        Flag::Int(v) => v != 0,
        Flag::Bool(b) => b,
    })
}

#[derive(Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: BBox,
    #[serde(default)]
    area: f64,
    segmentation: SegMask,
    #[serde(default, deserialize_with = "crowd_flag")]
    iscrowd: bool,
    #[serde(default)]
    score: Option<f64>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

impl<'de> Deserialize<'de> for InstanceAnnotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RawAnnotation::deserialize(d)?;
        Ok(InstanceAnnotation {
            id: r.id,
            image_id: r.image_id,
            category_id: r.category_id,
            bbox: r.bbox,
            area: r.area,
            segmentation: r.segmentation,
            iscrowd: r.iscrowd,
            score: r.score,
            extra: r.extra,
        })
    }
}

impl Serialize for InstanceAnnotation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("id", &self.id)?;
        m.serialize_entry("image_id", &self.image_id)?;
        m.serialize_entry("category_id", &self.category_id)?;
        m.serialize_entry("bbox", &self.bbox)?;
        m.serialize_entry("area", &self.area)?;
        m.serialize_entry("segmentation", &self.segmentation)?;
        m.serialize_entry("iscrowd", &u8::from(self.iscrowd))?;
        if let Some(score) = self.score {
            m.serialize_entry("score", &score)?;
        }
        for (k, v) in &self.extra {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Deserialize)]
struct CocoFileIn {
    images: Vec<ImageRecord>,
    #[serde(default)]
    annotations: Vec<InstanceAnnotation>,
    #[serde(default)]
    categories: Vec<CategoryRecord>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize)]
struct CocoFileOut<'a> {
    #[serde(flatten)]
    extra: &'a Map<String, Value>,
    images: &'a [ImageRecord],
    annotations: &'a [InstanceAnnotation],
    categories: &'a [CategoryRecord],
}

impl<'a> CocoFileOut<'a> {
    fn new(d: &'a Dataset) -> Self {
        CocoFileOut {
            extra: d.extra(),
            images: d.images(),
            annotations: d.annotations(),
            categories: d.categories(),
        }
    }
}

/// Parses COCO JSON text. `origin` is only used in error messages.
pub fn parse_dataset(text: &str, origin: &Path, image_root: impl Into<PathBuf>) -> Result<Dataset> {
    let raw: CocoFileIn = serde_json::from_str(text).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    Dataset::with_extra(
        raw.images,
        raw.annotations,
        raw.categories,
        raw.extra,
        image_root.into(),
    )
}

/// Loads and indexes a COCO-style JSON file. Image files under `image_root`
/// are not touched until [`Dataset::load_image`].
pub fn load_dataset(json_path: impl AsRef<Path>, image_root: impl AsRef<Path>) -> Result<Dataset> {
    let json_path = json_path.as_ref();
    let text = std::fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
    parse_dataset(&text, json_path, image_root.as_ref())
}

/// Serializes to compact COCO JSON. Bitmap masks are emitted as compressed RLE.
pub fn to_json_string(d: &Dataset) -> String {
    serde_json::to_string(&CocoFileOut::new(d)).expect("dataset serialization cannot fail")
}

/// Writes the dataset as COCO JSON. Image pixels are the caller's business.
pub fn write_dataset(d: &Dataset, json_path: impl AsRef<Path>) -> Result<()> {
    let json_path = json_path.as_ref();
    let file = File::create(json_path).map_err(|e| Error::io(json_path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &CocoFileOut::new(d)).map_err(|source| Error::Json {
        path: json_path.to_path_buf(),
        source,
    })?;
    w.flush().map_err(|e| Error::io(json_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Bitmap;

    const MINIMAL: &str = r#"{"images":[{"id":1,"file_name":"a.png","width":4,"height":3}],
        "annotations":[],"categories":[{"id":1,"name":"x"}],"info":{"year":2020}}"#;

    #[test]
    fn minimal_dataset_has_empty_index_entry() {
        let d = parse_dataset(MINIMAL, Path::new("mem"), "").unwrap();
        assert_eq!(d.images().len(), 1);
        assert_eq!(d.index(), &[Vec::<usize>::new()]);
        assert_eq!(d.extra()["info"]["year"], 2020);
    }

    #[test]
    fn dangling_image_id() {
        let text = r#"{"images":[{"id":1,"file_name":"a.png","width":4,"height":3}],
            "annotations":[{"id":55,"image_id":9,"category_id":1,"bbox":[0,0,1,1],"area":1,
            "segmentation":[[0,0,1,0,1,1]],"iscrowd":0}],"categories":[{"id":1,"name":"x"}]}"#;
        let err = parse_dataset(text, Path::new("mem"), "").unwrap_err();
        assert!(err.to_string().contains("annotation 55"), "{err}");
    }

    #[test]
    fn malformed_json() {
        let err = parse_dataset("{\"images\": [", Path::new("mem"), "").unwrap_err();
        assert!(matches!(err, Error::Json { .. }));
    }

    #[test]
    fn bitmap_is_written_as_rle_dict() {
        let mut m = Bitmap::new(3, 4);
        m.set(2, 1, true);
        let d = Dataset::new(
            vec![ImageRecord::new(1, "a.png", 4, 3)],
            vec![InstanceAnnotation::from_bitmap(1, 1, 1, m)],
            vec![CategoryRecord::new(1, "x")],
        )
        .unwrap();
        let v: Value = serde_json::from_str(&to_json_string(&d)).unwrap();
        let seg = &v["annotations"][0]["segmentation"];
        assert_eq!(seg["size"], serde_json::json!([3, 4]));
        assert!(seg["counts"].is_string());
        assert_eq!(v["annotations"][0]["iscrowd"], 0);
    }
}
