use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;

use bos_core::imagecore::load_image;
use bos_core::metrics::{endpoint_error, magnitude_stats, snr, EpeRegion};
use bos_core::{Mask, Plane};

use super::reconstruct::load_field;
use super::write_json;
use crate::cli::MetricsCommand;
use crate::manifest::{manifest_for_file, ManifestWriter};

pub fn run(which: MetricsCommand, argv: Vec<String>) -> Result<()> {
    match which {
        MetricsCommand::Epe { est, gt, border, mask, out } => {
            let estimate = load_field(&est)?;
            let truth = load_field(&gt)?;
            let region = match &mask {
                Some(path) => EpeRegion::Mask(Mask::from_image(&load_image(path)?)),
                None => EpeRegion::Interior { border },
            };
            let report = endpoint_error(&estimate, &truth, &region)?;
            let inputs = [Some(est.as_path()), Some(gt.as_path()), mask.as_deref()];
            emit(&report, out.as_deref(), &inputs, argv)
        }
        MetricsCommand::Snr {
            image,
            field,
            sample_rect,
            sample_mask,
            bg_rect,
            bg_mask,
            db,
            out,
        } => {
            let (plane, source): (Plane, &Path) = match (&image, &field) {
                (Some(path), _) => (load_image(path)?.to_plane(), path),
                (None, Some(path)) => {
                    let f = load_field(path)?;
                    if !f.is_dense() {
                        bail!("invalid parameter field: SNR needs a dense field");
                    }
                    (f.magnitude(), path)
                }
                (None, None) => bail!("invalid parameter image: one of --image or --field is required"),
            };
            let (w, h) = plane.dims();
            let region = |rect: Option<[usize; 4]>, mask: &Option<std::path::PathBuf>, name: &str| -> Result<Mask> {
                match (rect, mask) {
                    (_, Some(path)) => Ok(Mask::from_image(&load_image(path)?)),
                    (Some([x, y, rw, rh]), None) => {
                        if x + rw > w || y + rh > h {
                            bail!("invalid parameter {name}: rectangle exceeds the {w}x{h} image");
                        }
                        Ok(Mask::rect(w, h, x, y, rw, rh))
                    }
                    (None, None) => bail!("invalid parameter {name}: a rectangle or mask is required"),
                }
            };
            let sample = region(sample_rect, &sample_mask, "sample")?;
            let bg = region(bg_rect, &bg_mask, "bg")?;
            let report = snr(&plane, &sample, &bg, db.into())?;
            let inputs = [Some(source), sample_mask.as_deref(), bg_mask.as_deref()];
            emit(&report, out.as_deref(), &inputs, argv)
        }
        MetricsCommand::Stats { field, out } => {
            let stats = magnitude_stats(&load_field(&field)?);
            emit(&stats, out.as_deref(), &[Some(field.as_path())], argv)
        }
    }
}

/// JSON on stdout; with `--out` also a file plus its manifest.
fn emit(report: &impl Serialize, out: Option<&Path>, inputs: &[Option<&Path>], argv: Vec<String>) -> Result<()> {
    println!("{}", serde_json::to_string(report)?);
    if let Some(path) = out {
        write_json(path, report)?;
        let mut manifest = ManifestWriter::new(manifest_for_file(path), argv);
        for input in inputs.iter().flatten() {
            manifest.input(input)?;
        }
        manifest.output(path)?;
        manifest.finish()?;
    }
    Ok(())
}
