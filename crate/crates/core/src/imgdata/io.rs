//! PNG and manifest I/O.
//!
//! On disk a dataset is a directory of paired PNGs named
//! `<slide>_img.png` / `<slide>_mask.png` plus `manifest.json` mapping each
//! slide to the lab code that scanned it. Masks are single-channel 8-bit
//! PNGs whose pixel value is the class id. [`prepare_dataset`] turns such a
//! directory into a patch directory with deterministic names
//! `<slide>_r<row>_c<col>_{img,mask}.png` and a `splits.json` manifest
//! assigning every patch to train/val/test.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{
    collapse_classes, extract_patches, split_by_lab, ClassMap, ClassMask, ImgDataError, PatchPair,
    RgbImage, SplitSpec,
};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImgDataError + '_ {
    move |source| ImgDataError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn bad_file(path: &Path, reason: impl Into<String>) -> ImgDataError {
    ImgDataError::BadFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn decode_png(path: &Path) -> Result<image::DynamicImage, ImgDataError> {
    image::open(path).map_err(|e| bad_file(path, e.to_string()))
}

/// Parses `<slide>_r<row>_c<col>` out of a patch file stem, if present.
fn parse_patch_name(stem: &str) -> Option<(String, usize, usize)> {
    let (rest, col_part) = stem.rsplit_once("_c")?;
    let (slide, row_part) = rest.rsplit_once("_r")?;
    Some((slide.to_string(), row_part.parse().ok()?, col_part.parse().ok()?))
}

/// Loads an image/mask PNG pair.
///
/// The mask must be a single-channel 8-bit PNG with the same dimensions as
/// the image. Slide name and patch origin are recovered from the file name
/// when it follows the patch naming scheme; the lab code defaults to `"NA"`
/// until a manifest assigns one.
pub fn load_pair(image_path: &Path, mask_path: &Path) -> Result<PatchPair, ImgDataError> {
    let img = match decode_png(image_path)? {
        image::DynamicImage::ImageRgb8(i) => i,
        image::DynamicImage::ImageRgba8(i) => image::DynamicImage::ImageRgba8(i).to_rgb8(),
        other => {
            return Err(bad_file(
                image_path,
                format!("expected an RGB image, found {:?}", other.color()),
            ))
        }
    };
    let mask = match decode_png(mask_path)? {
        image::DynamicImage::ImageLuma8(m) => m,
        other => {
            return Err(bad_file(
                mask_path,
                format!("expected a single-channel 8-bit mask, found {:?}", other.color()),
            ))
        }
    };
    if img.dimensions() != mask.dimensions() {
        return Err(ImgDataError::DimensionMismatch(
            img.height() as usize,
            img.width() as usize,
            mask.height() as usize,
            mask.width() as usize,
        ));
    }

    let (h, w) = (img.height() as usize, img.width() as usize);
    let image = RgbImage::from_pixels(h, w, img.into_raw())?;
    let mask = ClassMask::from_labels(h, w, mask.into_raw())?;

    let stem = image_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .trim_end_matches("_img")
        .to_string();
    let (slide, origin) = match parse_patch_name(&stem) {
        Some((slide, r, c)) => (slide, (r, c)),
        None => (stem, (0, 0)),
    };
    PatchPair::new(image, mask, slide, "NA", origin)
}

/// Writes a patch pair as `<slide>_r<row>_c<col>_{img,mask}.png` under `dir`.
pub fn save_pair(pair: &PatchPair, dir: &Path) -> Result<(PathBuf, PathBuf), ImgDataError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let img_path = dir.join(format!("{}_img.png", pair.name()));
    let mask_path = dir.join(format!("{}_mask.png", pair.name()));

    let img = image::RgbImage::from_raw(
        pair.image.width() as u32,
        pair.image.height() as u32,
        pair.image.as_slice().to_vec(),
    )
    .expect("pixel buffer matches dimensions by construction");
    img.save(&img_path)
        .map_err(|e| bad_file(&img_path, e.to_string()))?;

    let mask = image::GrayImage::from_raw(
        pair.mask.width() as u32,
        pair.mask.height() as u32,
        pair.mask.as_slice().to_vec(),
    )
    .expect("label buffer matches dimensions by construction");
    mask.save(&mask_path)
        .map_err(|e| bad_file(&mask_path, e.to_string()))?;

    Ok((img_path, mask_path))
}

/// Reads a JSON object mapping slide name to lab code.
pub fn read_slide_manifest(path: &Path) -> Result<BTreeMap<String, String>, ImgDataError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| bad_file(path, e.to_string()))
}

/// What [`prepare_dataset`] produced.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PrepareSummary {
    pub slides: usize,
    pub train_patches: usize,
    pub val_patches: usize,
    pub test_patches: usize,
}

/// Full ingest pipeline: load every slide named in the manifest, collapse its
/// mask classes, cut overlapping patches, split them by lab, and write the
/// patch directory plus `splits.json` and a copy of the slide manifest.
pub fn prepare_dataset(
    input_dir: &Path,
    manifest: &BTreeMap<String, String>,
    class_map: &ClassMap,
    patch_size: usize,
    stride: usize,
    split: &SplitSpec,
    out_dir: &Path,
) -> Result<PrepareSummary, ImgDataError> {
    let mut patches = Vec::new();
    for (slide, lab) in manifest {
        let image_path = input_dir.join(format!("{slide}_img.png"));
        let mask_path = input_dir.join(format!("{slide}_mask.png"));
        let mut pair = load_pair(&image_path, &mask_path)?;
        pair.lab_code = lab.clone();
        let mask = collapse_classes(&pair.mask, class_map)?;
        patches.extend(extract_patches(
            &pair.image,
            &mask,
            patch_size,
            stride,
            slide,
            lab,
        )?);
    }

    let (train, val, test) = split_by_lab(patches, split)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut assignments: BTreeMap<String, String> = BTreeMap::new();
    for (subset, name) in [(&train, "train"), (&val, "val"), (&test, "test")] {
        for pair in subset.iter() {
            save_pair(pair, out_dir)?;
            assignments.insert(pair.name(), name.to_string());
        }
    }

    let splits_path = out_dir.join("splits.json");
    let json = serde_json::to_string_pretty(&assignments).expect("string map serializes");
    std::fs::write(&splits_path, json).map_err(io_err(&splits_path))?;
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest).expect("string map serializes");
    std::fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;

    Ok(PrepareSummary {
        slides: manifest.len(),
        train_patches: train.len(),
        val_patches: val.len(),
        test_patches: test.len(),
    })
}

/// Loads every patch pair in a directory, together with the split
/// assignments from `splits.json` when present. Lab codes are restored from
/// `manifest.json` when present. Patches are returned sorted by name.
pub fn load_patch_dir(
    dir: &Path,
) -> Result<(Vec<PatchPair>, Option<BTreeMap<String, String>>), ImgDataError> {
    let mut pairs = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(io_err(dir))?;
    let mut image_paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with("_img.png"))
        })
        .collect();
    image_paths.sort();

    let manifest_path = dir.join("manifest.json");
    let labs = if manifest_path.exists() {
        Some(read_slide_manifest(&manifest_path)?)
    } else {
        None
    };

    for image_path in image_paths {
        let name = image_path.file_name().and_then(|n| n.to_str()).unwrap();
        let mask_path = dir.join(name.replace("_img.png", "_mask.png"));
        if !mask_path.exists() {
            return Err(bad_file(&mask_path, "missing mask for image"));
        }
        let mut pair = load_pair(&image_path, &mask_path)?;
        if let Some(labs) = &labs {
            if let Some(lab) = labs.get(&pair.source_slide) {
                pair.lab_code = lab.clone();
            }
        }
        pairs.push(pair);
    }

    let splits_path = dir.join("splits.json");
    let splits = if splits_path.exists() {
        let text = std::fs::read_to_string(&splits_path).map_err(io_err(&splits_path))?;
        Some(serde_json::from_str(&text).map_err(|e| bad_file(&splits_path, e.to_string()))?)
    } else {
        None
    };
    Ok((pairs, splits))
}
