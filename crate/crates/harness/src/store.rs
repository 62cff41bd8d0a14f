//! Dataset directories: raw tensors for exact reloads plus PNG previews.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sua_core::io;
use sua_core::{Dataset, DomainRole, Error, ImageFormat, Result, Sample};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    count: usize,
    /// Class count per item; `None` for unlabeled items.
    classes: Vec<Option<usize>>,
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, s) in ds.items().iter().enumerate() {
        io::save_image(&s.image, dir.join(format!("image_{i}.suat")), ImageFormat::Raw)?;
        io::save_image(&s.image, dir.join(format!("image_{i}.png")), ImageFormat::Png)?;
        if let Some(m) = &s.mask {
            io::save_mask(m, dir.join(format!("mask_{i}.suat")))?;
        }
    }
    let manifest = Manifest {
        count: ds.len(),
        classes: ds.items().iter().map(|s| s.mask.as_ref().map(|m| m.classes())).collect(),
    };
    let path = dir.join("dataset.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| Error::io(&path, e))
}

pub fn load_dataset(dir: &Path, role: DomainRole) -> Result<Dataset> {
    let path = dir.join("dataset.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if manifest.classes.len() != manifest.count {
        return Err(Error::Format(format!("{}: class list length mismatch", path.display())));
    }
    let items = (0..manifest.count)
        .map(|i| {
            let image = io::load_image(dir.join(format!("image_{i}.suat")))?;
            let mask = manifest.classes[i]
                .map(|c| io::load_mask(dir.join(format!("mask_{i}.suat")), c))
                .transpose()?;
            Ok(Sample { image, mask })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(items, role)
}
