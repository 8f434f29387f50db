//! On-disk triplet dataset: `clean/`, `masks/`, `damaged/` with matching
//! stems, plus `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_triplet, procedural_painting, CrackSpec, Triplet};
use crate::error::{Error, Result};
use crate::image::{load_png, save_mask_png, save_png};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub source: String,
    pub seed: u64,
    pub mask_density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    /// Spec used for every image; its `seed` field is replaced per image.
    pub spec: CrackSpec,
    pub images: Vec<DatasetEntry>,
}

/// Per-image seed: SplitMix64 of the master seed offset by the image index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_triplet(root: &Path, name: &str, t: &Triplet) -> Result<()> {
    let file = format!("{name}.png");
    save_png(&t.clean, root.join("clean").join(&file))?;
    save_mask_png(&t.mask, root.join("masks").join(&file))?;
    save_png(&t.damaged, root.join("damaged").join(&file))
}

fn finish(root: &Path, spec: &CrackSpec, master_seed: u64, images: Vec<DatasetEntry>) -> Result<Manifest> {
    let manifest = Manifest { master_seed, spec: spec.clone(), images };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Other(e.to_string()))?;
    let path = root.join("manifest.json");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn prepare(root: &Path, spec: &CrackSpec) -> Result<()> {
    spec.validate()?;
    for sub in ["clean", "masks", "damaged"] {
        create_dir(&root.join(sub))?;
    }
    Ok(())
}

/// Generates one triplet per source image and writes the dataset layout.
/// Sources are processed in the given order; index `i` gets
/// `derive_seed(master_seed, i)`. Runs on the current rayon pool.
pub fn write_dataset(
    sources: &[PathBuf],
    root: &Path,
    spec: &CrackSpec,
    master_seed: u64,
) -> Result<Manifest> {
    prepare(root, spec)?;
    let entries: Vec<DatasetEntry> = sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| -> Result<DatasetEntry> {
            let name = src
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::InvalidParameter(format!("bad source name {}", src.display())))?
                .to_string();
            let seed = derive_seed(master_seed, i as u64);
            let image = load_png(src)?;
            let t = generate_triplet(&image, &CrackSpec { seed, ..spec.clone() })?;
            write_triplet(root, &name, &t)?;
            Ok(DatasetEntry { name, source: src.display().to_string(), seed, mask_density: t.mask.density() })
        })
        .collect::<Result<_>>()?;
    finish(root, spec, master_seed, entries)
}

/// Like [`write_dataset`] but with procedural paintings as sources, named
/// `proc_0000`, `proc_0001`, ... The triplets equal [`procedural_triplets`].
pub fn write_procedural_dataset(
    count: usize,
    source_size: [usize; 2],
    root: &Path,
    spec: &CrackSpec,
    master_seed: u64,
) -> Result<Manifest> {
    prepare(root, spec)?;
    let entries: Vec<DatasetEntry> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<DatasetEntry> {
            let name = format!("proc_{i:04}");
            let (t, seed) = procedural_triplet(i, source_size, spec, master_seed)?;
            write_triplet(root, &name, &t)?;
            Ok(DatasetEntry {
                name,
                source: format!("procedural:{}x{}", source_size[0], source_size[1]),
                seed,
                mask_density: t.mask.density(),
            })
        })
        .collect::<Result<_>>()?;
    finish(root, spec, master_seed, entries)
}

fn procedural_triplet(
    i: usize,
    source_size: [usize; 2],
    spec: &CrackSpec,
    master_seed: u64,
) -> Result<(Triplet, u64)> {
    let src = procedural_painting(source_size[0], source_size[1], derive_seed(!master_seed, i as u64))?;
    let seed = derive_seed(master_seed, i as u64);
    Ok((generate_triplet(&src, &CrackSpec { seed, ..spec.clone() })?, seed))
}

/// Builds `count` triplets from procedural paintings of `source_size`.
/// Painting `i` is seeded from the bitwise complement of the master seed,
/// the crack network from `derive_seed(master_seed, i)`.
pub fn procedural_triplets(
    count: usize,
    source_size: [usize; 2],
    spec: &CrackSpec,
    master_seed: u64,
) -> Result<Vec<Triplet>> {
    spec.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| procedural_triplet(i, source_size, spec, master_seed).map(|(t, _)| t))
        .collect()
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
