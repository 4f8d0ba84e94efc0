//! Datasets on disk: a TOML manifest plus one feature file per bag and
//! optional text sidecars for coordinates and latent instance labels.
//!
//! ```text
//! out/manifest.toml
//! out/bags/00000.afdf      feature block
//! out/bags/00000.coords    "x,y" per instance
//! out/bags/00000.latent    one label (0, 1 or 2) per instance
//! ```
//!
//! [`load_dataset`] never opens the latent sidecars; [`attach_latent`] does,
//! and only evaluation code calls it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use afdmil_core::data::{Bag, Dataset, InstanceLabel, Provenance, SynthConfig, SynthKind};
use afdmil_core::numerics::RNG_ALGORITHM;
use serde::{Deserialize, Serialize};

use crate::features::{read_features, write_features};
use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSection>,
    pub bags: Vec<BagEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BagEntry {
    pub id: String,
    pub label: u8,
    pub instances: usize,
    pub features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub kind: String,
    pub seed: u64,
    pub rng: String,
    pub bags_per_class: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub witness_rate: f64,
    pub min_witnesses: usize,
    pub separation: f64,
    pub sigma: f64,
    pub coords: bool,
    pub means: Vec<Vec<f64>>,
}

impl GeneratorSection {
    fn from_provenance(p: &Provenance) -> Self {
        let c = &p.config;
        Self {
            kind: p.kind.as_str().into(),
            seed: p.seed,
            rng: RNG_ALGORITHM.into(),
            bags_per_class: c.bags_per_class,
            k_min: c.k_min,
            k_max: c.k_max,
            witness_rate: c.witness_rate,
            min_witnesses: c.min_witnesses,
            separation: c.separation,
            sigma: c.sigma,
            coords: c.coords,
            means: p.means.clone(),
        }
    }

    fn to_provenance(&self, feature_dim: usize) -> Result<Provenance> {
        let kind = SynthKind::parse(&self.kind)?;
        Ok(Provenance {
            kind,
            seed: self.seed,
            config: SynthConfig {
                kind,
                bags_per_class: self.bags_per_class,
                k_min: self.k_min,
                k_max: self.k_max,
                feature_dim,
                witness_rate: self.witness_rate,
                min_witnesses: self.min_witnesses,
                separation: self.separation,
                sigma: self.sigma,
                coords: self.coords,
            },
            means: self.means.clone(),
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `dataset` under `dir` and returns the manifest path.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<PathBuf> {
    dataset.validate()?;
    let bag_dir = dir.join("bags");
    fs::create_dir_all(&bag_dir).map_err(|e| Error::io(&bag_dir, e))?;
    let mut entries = Vec::with_capacity(dataset.len());
    for (i, bag) in dataset.bags.iter().enumerate() {
        let stem = format!("bags/{i:05}");
        let features = format!("{stem}.afdf");
        write_features(&dir.join(&features), &bag.features)?;
        let coords = match &bag.coords {
            Some(c) => {
                let name = format!("{stem}.coords");
                let mut text = String::new();
                for [x, y] in c {
                    writeln!(text, "{x},{y}").unwrap();
                }
                write_text(&dir.join(&name), &text)?;
                Some(name)
            }
            None => None,
        };
        let latent = match dataset.latent_for(i) {
            Some(labels) => {
                let name = format!("{stem}.latent");
                let mut text = String::with_capacity(2 * labels.len());
                for l in labels {
                    writeln!(text, "{}", l.code()).unwrap();
                }
                write_text(&dir.join(&name), &text)?;
                Some(name)
            }
            None => None,
        };
        entries.push(BagEntry {
            id: bag.id.clone(),
            label: bag.label,
            instances: bag.len(),
            features,
            coords,
            latent,
        });
    }
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        name: dataset.name.clone(),
        feature_dim: dataset.feature_dim,
        generator: dataset.provenance.as_ref().map(GeneratorSection::from_provenance),
        bags: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&path, &text)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = read_text(path)?;
    let manifest: DatasetManifest = toml::from_str(&text).map_err(|source| Error::Toml {
        path: path.into(),
        source,
    })?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported manifest version {}", manifest.format_version),
        ));
    }
    Ok(manifest)
}

fn base_dir(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or(Path::new("."))
}

fn parse_coords(path: &Path, text: &str, expected: usize) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(expected);
    for (line_no, line) in text.lines().enumerate() {
        let parsed = line
            .split_once(',')
            .and_then(|(x, y)| Some([x.trim().parse().ok()?, y.trim().parse().ok()?]));
        match parsed {
            Some(xy) => out.push(xy),
            None => {
                return Err(Error::format(
                    path,
                    format!("line {}: expected `x,y`, got `{line}`", line_no + 1),
                ))
            }
        }
    }
    if out.len() != expected {
        return Err(Error::format(
            path,
            format!("{} coordinate rows for {expected} instances", out.len()),
        ));
    }
    Ok(out)
}

/// Loads bags and coordinates, checking every feature header against the
/// manifest. Latent labels are left out.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let dir = base_dir(manifest_path);
    let mut bags = Vec::with_capacity(manifest.bags.len());
    for entry in &manifest.bags {
        let fpath = dir.join(&entry.features);
        let features = read_features(&fpath)?;
        if features.shape() != (entry.instances, manifest.feature_dim) {
            return Err(Error::format(
                &fpath,
                format!(
                    "feature block is {}x{} but the manifest lists bag `{}` as {}x{}",
                    features.rows(),
                    features.cols(),
                    entry.id,
                    entry.instances,
                    manifest.feature_dim
                ),
            ));
        }
        let mut bag = Bag::new(entry.id.clone(), entry.label, features)?;
        if let Some(c) = &entry.coords {
            let cpath = dir.join(c);
            let coords = parse_coords(&cpath, &read_text(&cpath)?, entry.instances)?;
            bag = bag.with_coords(coords)?;
        }
        bags.push(bag);
    }
    let mut ds = Dataset::new(manifest.name.clone(), manifest.feature_dim, bags)?;
    ds.provenance = manifest
        .generator
        .as_ref()
        .map(|g| g.to_provenance(manifest.feature_dim))
        .transpose()?;
    Ok(ds)
}

/// Reads the latent-label sidecars into `dataset`. Returns `false` (and leaves
/// the dataset untouched) when the manifest lists none.
pub fn attach_latent(manifest_path: &Path, dataset: &mut Dataset) -> Result<bool> {
    let manifest = read_manifest(manifest_path)?;
    if manifest.bags.iter().all(|b| b.latent.is_none()) {
        return Ok(false);
    }
    let dir = base_dir(manifest_path);
    let mut latent = Vec::with_capacity(manifest.bags.len());
    for (entry, bag) in manifest.bags.iter().zip(&dataset.bags) {
        if entry.id != bag.id {
            return Err(Error::format(
                manifest_path,
                format!("manifest bag `{}` does not match dataset bag `{}`", entry.id, bag.id),
            ));
        }
        let Some(name) = &entry.latent else {
            return Err(Error::format(
                manifest_path,
                format!("bag `{}` has no latent sidecar while others do", entry.id),
            ));
        };
        let lpath = dir.join(name);
        let mut labels = Vec::with_capacity(entry.instances);
        for (line_no, line) in read_text(&lpath)?.lines().enumerate() {
            let label = line
                .trim()
                .parse::<u8>()
                .ok()
                .and_then(|c| InstanceLabel::from_code(c).ok())
                .ok_or_else(|| {
                    Error::format(
                        &lpath,
                        format!("line {}: expected 0, 1 or 2, got `{line}`", line_no + 1),
                    )
                })?;
            labels.push(label);
        }
        latent.push(labels);
    }
    dataset.latent = Some(latent);
    dataset.validate()?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use afdmil_core::data::gen_binary;

    fn small() -> Dataset {
        let cfg = SynthConfig {
            bags_per_class: 3,
            k_min: 4,
            k_max: 9,
            feature_dim: 5,
            ..SynthConfig::default()
        };
        gen_binary(&cfg, 11).unwrap()
    }

    #[test]
    fn round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small();
        let path = save_dataset(dir.path(), &ds).unwrap();
        let mut back = load_dataset(&path).unwrap();
        assert!(back.latent.is_none());
        assert_eq!(back.provenance, ds.provenance);
        for (a, b) in ds.bags.iter().zip(&back.bags) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.coords, b.coords);
            for (x, y) in a.features.as_slice().iter().zip(b.features.as_slice()) {
                assert_eq!(f64::from(*x as f32), *y);
            }
        }
        assert!(attach_latent(&path, &mut back).unwrap());
        assert_eq!(back.latent, ds.latent);
        back.check_bag_rule().unwrap();
    }

    #[test]
    fn header_disagreement_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = save_dataset(dir.path(), &small()).unwrap();
        let mut manifest = read_manifest(&path).unwrap();
        manifest.bags[1].instances += 1;
        fs::write(&path, toml::to_string(&manifest).unwrap()).unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("bag0001") || err.contains(&manifest.bags[1].id), "{err}");
    }

    #[test]
    fn missing_feature_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = save_dataset(dir.path(), &small()).unwrap();
        fs::remove_file(dir.path().join("bags/00002.afdf")).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Io { .. })));
    }

    #[test]
    fn coords_sidecar_errors() {
        let p = Path::new("c");
        assert_eq!(parse_coords(p, "1,2\n3,4\n", 2).unwrap(), vec![[1.0, 2.0], [3.0, 4.0]]);
        assert!(parse_coords(p, "1;2\n", 1).is_err());
        assert!(parse_coords(p, "1,2\n", 2).is_err());
    }
}
