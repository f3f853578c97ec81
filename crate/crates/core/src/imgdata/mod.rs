//! Image/mask ingestion, class collapsing, patch extraction, dataset splits
//! and synthetic data generation.
//!
//! The atomic unit everywhere is the [`PatchPair`]: an RGB patch plus its
//! per-pixel class mask, tagged with the slide it came from, the lab that
//! scanned that slide, and the pixel offset of the patch within the slide.
//! Splits are built either from lab codes ([`split_by_lab`]) or from shuffled
//! fractions ([`split_by_fraction`]); k-fold plans come from
//! [`make_fold_plan`]. All shuffles use the crate's seeded generator, so
//! every split is reproducible.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::rng::Xoshiro256StarStar;

mod io;
mod synthetic;

pub use io::{
    load_pair, load_patch_dir, prepare_dataset, read_slide_manifest, save_pair, PrepareSummary,
};
pub use synthetic::{generate_synthetic_dataset, SyntheticConfig};

/// Errors from dataset construction and manipulation.
#[derive(Debug, thiserror::Error)]
pub enum ImgDataError {
    #[error("pixel buffer length {got} does not match {height}x{width}x{channels}")]
    BadBufferLength {
        height: usize,
        width: usize,
        channels: usize,
        got: usize,
    },
    #[error("image dimensions {0}x{1} and mask dimensions {2}x{3} differ")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("raw class id {raw} at pixel {pixel} has no entry in the class map")]
    UnmappedClass { raw: u8, pixel: usize },
    #[error("class map value {grouped} for raw id {raw} exceeds group count {groups}")]
    BadGroupId { raw: u8, grouped: u8, groups: usize },
    #[error("patch size {patch} exceeds image dimensions {height}x{width}")]
    PatchTooLarge {
        patch: usize,
        height: usize,
        width: usize,
    },
    #[error("stride {stride} must be in 1..={patch}")]
    BadStride { stride: usize, patch: usize },
    #[error("lab codes {0:?} are not assigned to any split")]
    UnassignedLabs(Vec<String>),
    #[error("split spec assigns lab {0} to more than one subset")]
    OverlappingSplit(String),
    #[error("label {label} at pixel {pixel} is out of range for {num_classes} classes")]
    LabelOutOfRange {
        label: u8,
        pixel: usize,
        num_classes: usize,
    },
    #[error("no pixels to aggregate")]
    EmptyInput,
    #[error("cannot make {k} folds from {n} items")]
    BadFoldCount { k: usize, n: usize },
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    BadFile { path: String, reason: String },
}

/// An H×W RGB byte image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    /// Creates an image filled with a constant color.
    pub fn filled(height: usize, width: usize, color: [u8; 3]) -> Self {
        assert!(height >= 1 && width >= 1, "image must be at least 1x1");
        let mut pixels = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            pixels.extend_from_slice(&color);
        }
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn from_pixels(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self, ImgDataError> {
        if height == 0 || width == 0 || pixels.len() != height * width * 3 {
            return Err(ImgDataError::BadBufferLength {
                height,
                width,
                channels: 3,
                got: pixels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.pixels
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Bilinear resize with center-aligned sampling and edge clamping.
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> RgbImage {
        assert!(out_h >= 1 && out_w >= 1);
        if out_h == self.height && out_w == self.width {
            return self.clone();
        }
        let mut out = Vec::with_capacity(out_h * out_w * 3);
        let sy = self.height as f64 / out_h as f64;
        let sx = self.width as f64 / out_w as f64;
        for oy in 0..out_h {
            let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for ox in 0..out_w {
                let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                for c in 0..3 {
                    let p00 = self.get(y0, x0)[c] as f64;
                    let p01 = self.get(y0, x1)[c] as f64;
                    let p10 = self.get(y1, x0)[c] as f64;
                    let p11 = self.get(y1, x1)[c] as f64;
                    let v = p00 * (1.0 - wy) * (1.0 - wx)
                        + p01 * (1.0 - wy) * wx
                        + p10 * wy * (1.0 - wx)
                        + p11 * wy * wx;
                    out.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        RgbImage {
            height: out_h,
            width: out_w,
            pixels: out,
        }
    }
}

/// An H×W mask of small-integer class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    height: usize,
    width: usize,
    labels: Vec<u8>,
}

impl ClassMask {
    pub fn filled(height: usize, width: usize, label: u8) -> Self {
        assert!(height >= 1 && width >= 1, "mask must be at least 1x1");
        Self {
            height,
            width,
            labels: vec![label; height * width],
        }
    }

    pub fn from_labels(height: usize, width: usize, labels: Vec<u8>) -> Result<Self, ImgDataError> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(ImgDataError::BadBufferLength {
                height,
                width,
                channels: 1,
                got: labels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.labels
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, label: u8) {
        self.labels[y * self.width + x] = label;
    }

    /// Nearest-neighbor resize; never invents labels.
    pub fn resize_nearest(&self, out_h: usize, out_w: usize) -> ClassMask {
        assert!(out_h >= 1 && out_w >= 1);
        if out_h == self.height && out_w == self.width {
            return self.clone();
        }
        let mut out = Vec::with_capacity(out_h * out_w);
        let sy = self.height as f64 / out_h as f64;
        let sx = self.width as f64 / out_w as f64;
        for oy in 0..out_h {
            let y = (((oy as f64 + 0.5) * sy).floor() as usize).min(self.height - 1);
            for ox in 0..out_w {
                let x = (((ox as f64 + 0.5) * sx).floor() as usize).min(self.width - 1);
                out.push(self.get(y, x));
            }
        }
        ClassMask {
            height: out_h,
            width: out_w,
            labels: out,
        }
    }
}

/// Total mapping from raw annotation class ids to grouped class ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMap {
    pub raw_to_grouped: BTreeMap<u8, u8>,
    pub class_names: Vec<String>,
}

impl ClassMap {
    /// Validates that every grouped id is a valid index into `class_names`.
    pub fn validate(&self) -> Result<(), ImgDataError> {
        for (&raw, &grouped) in &self.raw_to_grouped {
            if grouped as usize >= self.class_names.len() {
                return Err(ImgDataError::BadGroupId {
                    raw,
                    grouped,
                    groups: self.class_names.len(),
                });
            }
        }
        Ok(())
    }

    pub fn num_groups(&self) -> usize {
        self.class_names.len()
    }

    /// The built-in 22-to-6 grouping shipped with the crate.
    ///
    /// Raw ids follow the upstream annotation repository's numbering; the
    /// grouping collapses them to: 0 out-of-scope, 1 tumour (tumour,
    /// angioinvasion, carcinoma in situ), 2 stroma, 3 inflammatory
    /// infiltration (incl. lymphocytes, plasma cells, other immune
    /// infiltrates), 4 necrosis, 5 everything else.
    pub fn default_grouping() -> ClassMap {
        let map: ClassMap = serde_json::from_str(include_str!("../../data/default_classmap.json"))
            .expect("built-in class map is valid JSON");
        map.validate().expect("built-in class map is consistent");
        map
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<ClassMap, ImgDataError> {
        let text = std::fs::read_to_string(path).map_err(|source| ImgDataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let map: ClassMap =
            serde_json::from_str(&text).map_err(|e| ImgDataError::BadFile {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        map.validate()?;
        Ok(map)
    }
}

/// One image/mask patch plus its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchPair {
    pub image: RgbImage,
    pub mask: ClassMask,
    pub source_slide: String,
    pub lab_code: String,
    /// (row, col) pixel offset of the patch within its source slide.
    pub origin: (usize, usize),
}

impl PatchPair {
    pub fn new(
        image: RgbImage,
        mask: ClassMask,
        source_slide: impl Into<String>,
        lab_code: impl Into<String>,
        origin: (usize, usize),
    ) -> Result<Self, ImgDataError> {
        if image.height() != mask.height() || image.width() != mask.width() {
            return Err(ImgDataError::DimensionMismatch(
                image.height(),
                image.width(),
                mask.height(),
                mask.width(),
            ));
        }
        Ok(Self {
            image,
            mask,
            source_slide: source_slide.into(),
            lab_code: lab_code.into(),
            origin,
        })
    }

    /// Canonical patch name: `<slide>_r<row>_c<col>`.
    pub fn name(&self) -> String {
        format!(
            "{}_r{}_c{}",
            self.source_slide, self.origin.0, self.origin.1
        )
    }
}

/// Which labs feed the train/val/test subsets.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_labs: BTreeSet<String>,
    pub val_labs: BTreeSet<String>,
    pub test_labs: BTreeSet<String>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), ImgDataError> {
        for lab in self.train_labs.iter().chain(&self.val_labs) {
            if self.test_labs.contains(lab) {
                return Err(ImgDataError::OverlappingSplit(lab.clone()));
            }
        }
        for lab in &self.train_labs {
            if self.val_labs.contains(lab) {
                return Err(ImgDataError::OverlappingSplit(lab.clone()));
            }
        }
        Ok(())
    }

    /// The scanning-lab split used for the source dataset: 15 training labs,
    /// 5 validation labs, and lab E2 held out as the test set.
    pub fn default_lab_split() -> SplitSpec {
        let set = |codes: &[&str]| codes.iter().map(|c| c.to_string()).collect();
        SplitSpec {
            train_labs: set(&[
                "E9", "GI", "HN", "D8", "BH", "C8", "A7", "A8", "AC", "AN", "AO", "AQ", "AR",
                "A1", "A2",
            ]),
            val_labs: set(&["OL", "LL", "EW", "GM", "S3"]),
            test_labs: set(&["E2"]),
        }
    }
}

/// Remaps every mask label through the class map.
pub fn collapse_classes(mask: &ClassMask, map: &ClassMap) -> Result<ClassMask, ImgDataError> {
    map.validate()?;
    let mut labels = Vec::with_capacity(mask.as_slice().len());
    for (pixel, &raw) in mask.as_slice().iter().enumerate() {
        match map.raw_to_grouped.get(&raw) {
            Some(&grouped) => labels.push(grouped),
            None => return Err(ImgDataError::UnmappedClass { raw, pixel }),
        }
    }
    ClassMask::from_labels(mask.height(), mask.width(), labels)
}

/// Offsets `0, stride, 2*stride, ...` with the final offset clamped so the
/// last patch ends exactly at the border. Covers `[0, len)` completely.
fn clamped_offsets(len: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut pos = 0;
    loop {
        if pos + patch >= len {
            offsets.push(len - patch);
            break;
        }
        offsets.push(pos);
        pos += stride;
    }
    offsets
}

/// Cuts an image/mask pair into overlapping `patch_size` square patches.
pub fn extract_patches(
    image: &RgbImage,
    mask: &ClassMask,
    patch_size: usize,
    stride: usize,
    source_slide: &str,
    lab_code: &str,
) -> Result<Vec<PatchPair>, ImgDataError> {
    if image.height() != mask.height() || image.width() != mask.width() {
        return Err(ImgDataError::DimensionMismatch(
            image.height(),
            image.width(),
            mask.height(),
            mask.width(),
        ));
    }
    if patch_size > image.height() || patch_size > image.width() || patch_size == 0 {
        return Err(ImgDataError::PatchTooLarge {
            patch: patch_size,
            height: image.height(),
            width: image.width(),
        });
    }
    if stride == 0 || stride > patch_size {
        return Err(ImgDataError::BadStride {
            stride,
            patch: patch_size,
        });
    }

    let rows = clamped_offsets(image.height(), patch_size, stride);
    let cols = clamped_offsets(image.width(), patch_size, stride);
    let mut patches = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            let mut pix = Vec::with_capacity(patch_size * patch_size * 3);
            let mut lab = Vec::with_capacity(patch_size * patch_size);
            for y in r..r + patch_size {
                let img_row = &image.as_slice()[(y * image.width() + c) * 3..];
                pix.extend_from_slice(&img_row[..patch_size * 3]);
                let mask_row = &mask.as_slice()[y * mask.width() + c..];
                lab.extend_from_slice(&mask_row[..patch_size]);
            }
            patches.push(PatchPair {
                image: RgbImage::from_pixels(patch_size, patch_size, pix)?,
                mask: ClassMask::from_labels(patch_size, patch_size, lab)?,
                source_slide: source_slide.to_string(),
                lab_code: lab_code.to_string(),
                origin: (r, c),
            });
        }
    }
    Ok(patches)
}

/// Partitions patches into (train, val, test) by each patch's lab code.
pub fn split_by_lab(
    patches: Vec<PatchPair>,
    spec: &SplitSpec,
) -> Result<(Vec<PatchPair>, Vec<PatchPair>, Vec<PatchPair>), ImgDataError> {
    spec.validate()?;
    let mut unassigned = BTreeSet::new();
    for p in &patches {
        if !spec.train_labs.contains(&p.lab_code)
            && !spec.val_labs.contains(&p.lab_code)
            && !spec.test_labs.contains(&p.lab_code)
        {
            unassigned.insert(p.lab_code.clone());
        }
    }
    if !unassigned.is_empty() {
        return Err(ImgDataError::UnassignedLabs(
            unassigned.into_iter().collect(),
        ));
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for p in patches {
        if spec.train_labs.contains(&p.lab_code) {
            train.push(p);
        } else if spec.val_labs.contains(&p.lab_code) {
            val.push(p);
        } else {
            test.push(p);
        }
    }
    Ok((train, val, test))
}

/// Shuffles patches with the given seed and cuts them into fractional
/// (train, val, test) subsets. `test` receives whatever the two fractions
/// leave over.
pub fn split_by_fraction(
    mut patches: Vec<PatchPair>,
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<(Vec<PatchPair>, Vec<PatchPair>, Vec<PatchPair>), ImgDataError> {
    if !(0.0..=1.0).contains(&train_frac)
        || !(0.0..=1.0).contains(&val_frac)
        || train_frac + val_frac > 1.0 + 1e-9
    {
        return Err(ImgDataError::InvalidConfig {
            field: "split fractions",
            reason: format!("train {train_frac} + val {val_frac} must lie in [0, 1]"),
        });
    }
    let n = patches.len();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    fisher_yates(&mut patches, &mut rng);
    let n_train = ((n as f64) * train_frac).round() as usize;
    let n_val = (((n as f64) * val_frac).round() as usize).min(n - n_train);
    let test = patches.split_off(n_train + n_val);
    let val = patches.split_off(n_train);
    Ok((patches, val, test))
}

/// Per-class pixel fractions over a collection of masks. Fractions sum to 1.
pub fn pixel_class_distribution<'a, I>(
    masks: I,
    num_classes: usize,
) -> Result<Vec<f64>, ImgDataError>
where
    I: IntoIterator<Item = &'a ClassMask>,
{
    let mut counts = vec![0u64; num_classes];
    let mut total = 0u64;
    for mask in masks {
        for (pixel, &label) in mask.as_slice().iter().enumerate() {
            if label as usize >= num_classes {
                return Err(ImgDataError::LabelOutOfRange {
                    label,
                    pixel,
                    num_classes,
                });
            }
            counts[label as usize] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(ImgDataError::EmptyInput);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// K disjoint validation-index sets covering `0..n_items`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn fold(&self, i: usize) -> &[usize] {
        &self.folds[i]
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    /// Train/validation index split for fold `i`: validation is fold `i`,
    /// training is everything else, both in ascending order.
    pub fn train_val(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let val: Vec<usize> = {
            let mut v = self.folds[i].clone();
            v.sort_unstable();
            v
        };
        let in_val: BTreeSet<usize> = val.iter().copied().collect();
        let n: usize = self.folds.iter().map(Vec::len).sum();
        let train = (0..n).filter(|idx| !in_val.contains(idx)).collect();
        (train, val)
    }
}

fn fisher_yates<T>(items: &mut [T], rng: &mut Xoshiro256StarStar) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// Shuffles `0..n_items` and deals the order into k folds whose sizes differ
/// by at most one (the first `n mod k` folds take the extra item).
pub fn make_fold_plan(n_items: usize, k: usize, seed: u64) -> Result<FoldPlan, ImgDataError> {
    if k < 2 || k > n_items {
        return Err(ImgDataError::BadFoldCount { k, n: n_items });
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    fisher_yates(&mut order, &mut rng);
    let base = n_items / k;
    let extra = n_items % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests;
