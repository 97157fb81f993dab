use std::path::{Path, PathBuf};

use alseg_core::interpolation::{interpolate_labels, InterpolationMethod};
use alseg_core::volume::LabelMode;
use image::{GrayImage, ImageFormat};

use crate::error::CliError;
use crate::files::{create_dir, guard_output, write_atomic};

pub struct InterpolateArgs {
    pub top: PathBuf,
    pub bottom: PathBuf,
    pub intermediate: usize,
    pub method: InterpolationMethod,
    pub classes: Option<usize>,
    pub mode: LabelMode,
    pub out: PathBuf,
    pub force: bool,
}

/// Grayscale PNG whose pixel values are class ids.
pub fn read_mask(path: &Path) -> Result<(Vec<u8>, usize, usize), CliError> {
    let img = image::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    Ok((gray.into_raw(), h as usize, w as usize))
}

fn output_name(i: usize) -> String {
    format!("slice_{:03}.png", i + 1)
}

pub fn interpolate(args: &InterpolateArgs) -> Result<Vec<PathBuf>, CliError> {
    let (top, h, w) = read_mask(&args.top)?;
    let (bottom, hb, wb) = read_mask(&args.bottom)?;
    if (h, w) != (hb, wb) {
        return Err(CliError::Usage(format!("top is {w}x{h} but bottom is {wb}x{hb}")));
    }
    let max = top.iter().chain(&bottom).copied().max().unwrap_or(0) as usize;
    let classes = args.classes.unwrap_or((max + 1).max(2));
    if classes < 2 || max >= classes {
        return Err(CliError::Usage(format!(
            "masks contain class id {max}, which needs --classes > {max} (got {classes})"
        )));
    }
    guard_output(&args.out, args.force, |n| n.starts_with("slice_") && n.ends_with(".png"))?;
    let masks = interpolate_labels(&top, &bottom, h, w, args.intermediate, classes, args.mode, args.method)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .ok_or_else(|| {
            CliError::Runtime("a foreground class is present in both endpoints without overlap; no pseudo-labels".into())
        })?;
    create_dir(&args.out)?;
    let mut written = Vec::with_capacity(masks.len());
    for (i, mask) in masks.into_iter().enumerate() {
        let img = GrayImage::from_raw(w as u32, h as u32, mask).expect("mask has h * w pixels");
        let mut bytes = std::io::Cursor::new(Vec::new());
        img.write_to(&mut bytes, ImageFormat::Png).map_err(CliError::runtime)?;
        let path = args.out.join(output_name(i));
        write_atomic(&path, bytes.get_ref())?;
        written.push(path);
    }
    Ok(written)
}
