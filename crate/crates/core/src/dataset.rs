//! On-disk dataset layout.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/frames/<id>_rgb.png     8-bit RGB
//! <dir>/frames/<id>_depth.png   16-bit grey, millimetres, 0 = missing
//! <dir>/frames/<id>_sem.png     8-bit grey, class index
//! ```
//!
//! Field names are documented in `DATASET.md` and must stay stable.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::{
    ActionLabel, Bucket, ClassTable, Error, Provenance, Result, RgbdFrame, Sample, SemanticMap,
    Split,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRAMES_DIR: &str = "frames";
pub const FORMAT_VERSION: u32 = 1;

/// One sample as recorded in the manifest; paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub rgb: String,
    pub depth: String,
    pub semantic: String,
    pub action: ActionLabel,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub split: Split,
    pub generator_seed: u64,
    pub width: usize,
    pub height: usize,
    pub classes: ClassTable,
    pub samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    /// Label counts in ordinal order.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.samples {
            counts[s.action.ordinal()] += 1;
        }
        counts
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Manifest(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported format_version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

/// A manifest together with its decoded samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Assembles a dataset; sample ids are the frame ids, which must be unique
    /// and file-name safe. Depths are snapped to millimetres.
    pub fn new(
        split: Split,
        generator_seed: u64,
        classes: ClassTable,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let (width, height) = match samples.first() {
            Some(s) => (s.frame.width(), s.frame.height()),
            None => return Err(Error::Empty("dataset has no samples")),
        };
        let mut ids = std::collections::HashSet::new();
        let mut records = Vec::with_capacity(samples.len());
        let mut quantized = Vec::with_capacity(samples.len());
        for s in samples {
            let id = s.frame.frame_id().to_string();
            if id.is_empty()
                || !id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(Error::Invalid(format!("sample id {id:?} is not file-name safe")));
            }
            if !ids.insert(id.clone()) {
                return Err(Error::Invalid(format!("duplicate sample id {id:?}")));
            }
            if s.frame.width() != width || s.frame.height() != height || !s.semantic_gt.matches(&s.frame)
            {
                return Err(Error::DimensionMismatch(format!(
                    "sample {id} is not {width}x{height}"
                )));
            }
            s.semantic_gt.validate(classes.len())?;
            records.push(SampleRecord {
                rgb: format!("{FRAMES_DIR}/{id}_rgb.png"),
                depth: format!("{FRAMES_DIR}/{id}_depth.png"),
                semantic: format!("{FRAMES_DIR}/{id}_sem.png"),
                id,
                action: s.action,
                bucket: s.bucket,
            });
            quantized.push(Sample {
                frame: s.frame.quantized(),
                ..s
            });
        }
        Ok(Self {
            manifest: DatasetManifest {
                format_version: FORMAT_VERSION,
                split,
                generator_seed,
                width,
                height,
                classes,
                samples: records,
            },
            samples: quantized,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> &ClassTable {
        &self.manifest.classes
    }

    /// Keeps only samples whose bucket satisfies `keep`.
    pub fn filter_buckets(&self, keep: impl Fn(Bucket) -> bool) -> Self {
        let (records, samples) = self
            .manifest
            .samples
            .iter()
            .zip(&self.samples)
            .filter(|(r, _)| keep(r.bucket))
            .map(|(r, s)| (r.clone(), s.clone()))
            .unzip();
        Self {
            manifest: DatasetManifest {
                samples: records,
                ..self.manifest.clone()
            },
            samples,
        }
    }
}

/// Writes images and `manifest.json` under `dir`; returns the manifest path.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join(FRAMES_DIR))?;
    for (rec, sample) in dataset.manifest.samples.iter().zip(&dataset.samples) {
        let f = &sample.frame;
        let (w, h) = (f.width() as u32, f.height() as u32);
        let rgb: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(w, h, f.rgb().to_vec())
            .ok_or_else(|| Error::DimensionMismatch("rgb buffer".into()))?;
        write_png(&dir.join(&rec.rgb), DynamicImage::ImageRgb8(rgb))?;
        let depth: ImageBuffer<Luma<u16>, _> = ImageBuffer::from_raw(w, h, f.depth_mm())
            .ok_or_else(|| Error::DimensionMismatch("depth buffer".into()))?;
        write_png(&dir.join(&rec.depth), DynamicImage::ImageLuma16(depth))?;
        let sem: ImageBuffer<Luma<u8>, _> =
            ImageBuffer::from_raw(w, h, sample.semantic_gt.labels().to_vec())
                .ok_or_else(|| Error::DimensionMismatch("semantic buffer".into()))?;
        write_png(&dir.join(&rec.semantic), DynamicImage::ImageLuma8(sem))?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, dataset.manifest.to_json()?)?;
    Ok(path)
}

fn write_png(path: &Path, img: DynamicImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptImage {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads a dataset from its directory (or directly from its manifest file).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let mpath = manifest_path(path.as_ref());
    if !mpath.exists() {
        return Err(Error::MissingFile(mpath));
    }
    let manifest = DatasetManifest::from_json(&fs::read_to_string(&mpath)?)?;
    let root = mpath.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for rec in &manifest.samples {
        let (w, h) = (manifest.width, manifest.height);
        let rgb = match open(root, &rec.rgb)? {
            DynamicImage::ImageRgb8(img) => checked_dims(img, w, h, root, &rec.rgb)?,
            _ => return Err(corrupt(root, &rec.rgb, "expected 8-bit RGB")),
        };
        let depth = match open(root, &rec.depth)? {
            DynamicImage::ImageLuma16(img) => checked_dims(img, w, h, root, &rec.depth)?,
            _ => return Err(corrupt(root, &rec.depth, "expected 16-bit grey")),
        };
        let labels = match open(root, &rec.semantic)? {
            DynamicImage::ImageLuma8(img) => checked_dims(img, w, h, root, &rec.semantic)?,
            _ => return Err(corrupt(root, &rec.semantic, "expected 8-bit grey")),
        };
        let frame = RgbdFrame::from_depth_mm(rec.id.clone(), w, h, rgb, &depth)?;
        let semantic_gt = SemanticMap::new(w, h, labels, Provenance::GroundTruth)?;
        semantic_gt.validate(manifest.classes.len())?;
        samples.push(Sample {
            frame,
            semantic_gt,
            action: rec.action,
            bucket: rec.bucket,
        });
    }
    Ok(Dataset { manifest, samples })
}

/// Like [`load_dataset`] but insists on a specific class table.
pub fn load_dataset_with_classes(path: impl AsRef<Path>, classes: &ClassTable) -> Result<Dataset> {
    let ds = load_dataset(path)?;
    if &ds.manifest.classes != classes {
        let found: Vec<_> = ds.manifest.classes.names().collect();
        let want: Vec<_> = classes.names().collect();
        return Err(Error::ClassTableMismatch(format!(
            "dataset has {found:?}, expected {want:?}"
        )));
    }
    Ok(ds)
}

/// Reads one frame from image files in the dataset encodings: 8-bit RGB,
/// 16-bit millimetre depth and, optionally, an 8-bit class-index map.
pub fn load_frame(
    rgb: impl AsRef<Path>,
    depth: impl AsRef<Path>,
    semantic: Option<&Path>,
) -> Result<(RgbdFrame, Option<SemanticMap>)> {
    let rgb_path = rgb.as_ref();
    let root = Path::new("");
    let (w, h, rgb) = match open(root, &rgb_path.to_string_lossy())? {
        DynamicImage::ImageRgb8(img) => (img.width() as usize, img.height() as usize, img.into_raw()),
        _ => return Err(corrupt(root, &rgb_path.to_string_lossy(), "expected 8-bit RGB")),
    };
    let d = depth.as_ref().to_string_lossy();
    let depth = match open(root, &d)? {
        DynamicImage::ImageLuma16(img) => checked_dims(img, w, h, root, &d)?,
        _ => return Err(corrupt(root, &d, "expected 16-bit grey")),
    };
    let id = rgb_path
        .file_stem()
        .map_or_else(|| "frame".to_string(), |s| s.to_string_lossy().into_owned());
    let frame = RgbdFrame::from_depth_mm(id, w, h, rgb, &depth)?;
    let semantic = match semantic {
        None => None,
        Some(p) => {
            let s = p.to_string_lossy();
            let labels = match open(root, &s)? {
                DynamicImage::ImageLuma8(img) => checked_dims(img, w, h, root, &s)?,
                _ => return Err(corrupt(root, &s, "expected 8-bit grey")),
            };
            Some(SemanticMap::new(w, h, labels, Provenance::GroundTruth)?)
        }
    };
    Ok((frame, semantic))
}

fn open(root: &Path, rel: &str) -> Result<DynamicImage> {
    let p = root.join(rel);
    if !p.exists() {
        return Err(Error::MissingFile(p));
    }
    image::open(&p).map_err(|e| Error::CorruptImage {
        path: p,
        message: e.to_string(),
    })
}

fn checked_dims<P: image::Pixel>(
    img: ImageBuffer<P, Vec<P::Subpixel>>,
    w: usize,
    h: usize,
    root: &Path,
    rel: &str,
) -> Result<Vec<P::Subpixel>> {
    if img.width() as usize != w || img.height() as usize != h {
        return Err(corrupt(
            root,
            rel,
            &format!("is {}x{}, manifest says {w}x{h}", img.width(), img.height()),
        ));
    }
    Ok(img.into_raw())
}

fn corrupt(root: &Path, rel: &str, message: &str) -> Error {
    Error::CorruptImage {
        path: root.join(rel),
        message: message.to_string(),
    }
}
