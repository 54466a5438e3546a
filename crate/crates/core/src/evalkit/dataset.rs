//! MVTec-style dataset layout:
//!
//! ```text
//! <category>/test/<defect>/NNN.png
//! <category>/ground_truth/<defect>/NNN_mask.png
//! ```
//!
//! `test/good/` holds defect-free images without masks.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub image: PathBuf,
    /// `None` means every pixel is normal.
    pub mask: Option<PathBuf>,
    pub category: String,
    pub defect: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadIssue {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub issues: Vec<LoadIssue>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn is_png(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn dir_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Category directories under `root`: `root` itself if it has a `test/`
/// directory, otherwise each subdirectory that does.
pub fn find_categories(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join("test").is_dir() {
        return Ok(vec![root.to_path_buf()]);
    }
    Ok(sorted_entries(root)?
        .into_iter()
        .filter(|p| p.join("test").is_dir())
        .collect())
}

/// Pairs every test image of one category with its mask. Problems with
/// individual files are collected in `issues` and the sample is skipped.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let category = dir_name(root);
    let test_dir = root.join("test");
    let gt_dir = root.join("ground_truth");
    let mut ds = Dataset::default();
    let mut used_masks = BTreeSet::new();

    for defect_dir in sorted_entries(&test_dir)?
        .into_iter()
        .filter(|p| p.is_dir())
    {
        let defect = dir_name(&defect_dir);
        for image in sorted_entries(&defect_dir)?
            .into_iter()
            .filter(|p| is_png(p))
        {
            let stem = image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mask_path = gt_dir.join(&defect).join(format!("{stem}_mask.png"));
            let mask = mask_path.is_file().then_some(mask_path);
            let dims = match image::image_dimensions(&image) {
                Ok(d) => d,
                Err(e) => {
                    ds.issues.push(LoadIssue {
                        path: image,
                        reason: format!("unreadable image: {e}"),
                    });
                    continue;
                }
            };
            if let Some(m) = &mask {
                used_masks.insert(m.clone());
                match image::image_dimensions(m) {
                    Ok(md) if md == dims => {}
                    Ok(md) => {
                        ds.issues.push(LoadIssue {
                            path: m.clone(),
                            reason: format!(
                                "mask is {}x{}, image is {}x{}",
                                md.0, md.1, dims.0, dims.1
                            ),
                        });
                        continue;
                    }
                    Err(e) => {
                        ds.issues.push(LoadIssue {
                            path: m.clone(),
                            reason: format!("unreadable mask: {e}"),
                        });
                        continue;
                    }
                }
            }
            ds.samples.push(LabeledSample {
                image,
                mask,
                category: category.clone(),
                defect: defect.clone(),
            });
        }
    }

    if gt_dir.is_dir() {
        for defect_dir in sorted_entries(&gt_dir)?.into_iter().filter(|p| p.is_dir()) {
            for m in sorted_entries(&defect_dir)?
                .into_iter()
                .filter(|p| is_png(p))
            {
                if !used_masks.contains(&m) {
                    ds.issues.push(LoadIssue {
                        path: m,
                        reason: "mask has no matching test image".into(),
                    });
                }
            }
        }
    }
    Ok(ds)
}
