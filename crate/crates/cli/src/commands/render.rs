use anyhow::{Context, Result};

use bos_core::imagecore::{load_image, load_rgb, save_rgb};
use bos_core::render::{magnitude_map, panel_labels, side_by_side, vector_overlay, Normalization, RenderConfig};
use bos_core::RgbImage;

use super::ensure_parent;
use super::reconstruct::load_field;
use crate::cli::RenderCommand;
use crate::manifest::{manifest_for_file, ManifestWriter};

pub fn run(which: RenderCommand, argv: Vec<String>) -> Result<()> {
    match which {
        RenderCommand::Magnitude { field, out, colormap, max } => {
            let cfg = RenderConfig {
                colormap: colormap.into(),
                normalization: max.map_or(Normalization::AutoMax, Normalization::Fixed),
                ..RenderConfig::default()
            };
            let img = magnitude_map(&load_field(&field)?, &cfg)?;
            finish(&img, &out, &[&field], &[], argv)
        }
        RenderCommand::Vectors { field, base, out, stride, scale } => {
            let f = load_field(&field)?;
            let canvas = match &base {
                Some(path) => load_image(path)?.to_rgb(),
                None => {
                    let (gw, gh) = f.dims();
                    let (ex, ey) = f.position(gw - 1, gh - 1);
                    RgbImage::filled(ex + 1, ey + 1, [0.0; 3])
                }
            };
            let cfg = RenderConfig {
                stride,
                scale,
                ..RenderConfig::default()
            };
            let img = vector_overlay(&f, &canvas, &cfg)?;
            let mut inputs = vec![field.as_path()];
            inputs.extend(base.as_deref());
            finish(&img, &out, &inputs, &[], argv)
        }
        RenderCommand::SideBySide { inputs, labels, out } => {
            let panels = inputs.iter().map(load_rgb).collect::<bos_core::Result<Vec<_>>>()?;
            let strip = side_by_side(&panels)?;
            let names: Vec<String> = if labels.is_empty() {
                inputs
                    .iter()
                    .map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned())
                    .collect()
            } else {
                labels
            };
            if names.len() != panels.len() {
                anyhow::bail!(
                    "invalid parameter labels: {} labels for {} panels",
                    names.len(),
                    panels.len()
                );
            }
            let label_path = out.with_extension("labels.txt");
            ensure_parent(&label_path)?;
            std::fs::write(&label_path, panel_labels(&panels, &names))
                .with_context(|| format!("writing {}", label_path.display()))?;
            let refs: Vec<_> = inputs.iter().map(|p| p.as_path()).collect();
            finish(&strip, &out, &refs, &[&label_path], argv)
        }
    }
}

fn finish(
    img: &RgbImage,
    out: &std::path::Path,
    inputs: &[&std::path::Path],
    extra: &[&std::path::Path],
    argv: Vec<String>,
) -> Result<()> {
    ensure_parent(out)?;
    save_rgb(img, out)?;
    let mut manifest = ManifestWriter::new(manifest_for_file(out), argv);
    for input in inputs {
        manifest.input(input)?;
    }
    manifest.output(out)?;
    for path in extra {
        manifest.output(path)?;
    }
    manifest.finish()?;
    Ok(())
}
