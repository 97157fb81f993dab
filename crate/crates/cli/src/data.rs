use std::path::{Path, PathBuf};

use alseg_core::synthetic::{make_synthetic_dataset, SyntheticSpec};
use alseg_core::volume::{load_volume, save_volume, LabelVolume, ScanVolume, Shape3};

use crate::error::CliError;
use crate::files;

/// Parses `D,H,W`.
pub fn parse_shape(s: &str) -> Result<Shape3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [d, h, w] = parts[..] else {
        return Err(format!("expected D,H,W, got `{s}`"));
    };
    let num = |v: &str| {
        v.parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("`{v}` is not a positive integer"))
    };
    Ok(Shape3::new(num(d)?, num(h)?, num(w)?))
}

fn volume_dirs(root: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("meta.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

pub fn generate(spec: &SyntheticSpec, seed: u64, out: &Path, force: bool) -> Result<Vec<(String, PathBuf)>, CliError> {
    if !force && volume_dirs(out).is_ok_and(|d| !d.is_empty()) {
        return Err(CliError::Usage(format!(
            "{} already contains volumes; pass --force to overwrite",
            out.display()
        )));
    }
    let data = make_synthetic_dataset(spec, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    files::create_dir(out)?;
    let mut manifest = Vec::with_capacity(data.len());
    for (scan, labels) in &data {
        let dir = out.join(scan.scan_id());
        save_volume(scan, labels, &dir).map_err(CliError::runtime)?;
        manifest.push((scan.scan_id().to_string(), dir));
    }
    Ok(manifest)
}

pub fn load_dataset(root: &Path) -> Result<Vec<(ScanVolume, LabelVolume)>, CliError> {
    if !root.is_dir() {
        return Err(CliError::Usage(format!("dataset directory {} does not exist", root.display())));
    }
    let dirs = volume_dirs(root).map_err(|e| CliError::Runtime(format!("cannot list {}: {e}", root.display())))?;
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("no volumes (meta.json) under {}", root.display())));
    }
    dirs.iter()
        .map(|d| load_volume(d).map_err(CliError::runtime))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(parse_shape("8,16,16").unwrap(), Shape3::new(8, 16, 16));
        assert_eq!(parse_shape(" 2, 3 ,4").unwrap(), Shape3::new(2, 3, 4));
        assert!(parse_shape("8,16").is_err());
        assert!(parse_shape("8,0,16").is_err());
        assert!(parse_shape("8,a,16").is_err());
    }

    #[test]
    fn generated_data_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            num_scans: 2,
            shape: Shape3::new(8, 16, 16),
            num_classes: 1,
            noise: 0.0,
            ..SyntheticSpec::standard()
        };
        let manifest = generate(&spec, 1, dir.path(), false).unwrap();
        assert_eq!(manifest.len(), 2);
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, make_synthetic_dataset(&spec, 1).unwrap());
        assert!(matches!(generate(&spec, 1, dir.path(), false), Err(CliError::Usage(_))));
        generate(&spec, 1, dir.path(), true).unwrap();
    }
}
