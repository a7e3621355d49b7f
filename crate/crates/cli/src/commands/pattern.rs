use anyhow::Result;

use bos_core::imagecore::save_image;
use bos_core::optics::GeometryFile;
use bos_core::patterns::{check_raffel, generate_pattern, PatternSpec};

use super::ensure_parent;
use crate::cli::PatternArgs;
use crate::manifest::{manifest_for_file, ManifestWriter};

pub fn run(args: PatternArgs, argv: Vec<String>) -> Result<()> {
    let spec = PatternSpec {
        fill: args.fill,
        ..PatternSpec::new(args.kind.into(), args.width, args.height, args.cell, args.seed)
    };
    spec.validate()?;
    let mut manifest = ManifestWriter::new(manifest_for_file(&args.out), argv);
    if let Some(path) = &args.geometry {
        let setup = GeometryFile::load(path)?.to_setup()?;
        manifest.config(path)?;
        let imaged = setup.geometry.background_px_to_sensor_px(args.cell as f64);
        let check = check_raffel(imaged)?;
        if !check.passed() {
            log::warn!("raffel criterion: {}", check.message);
        }
    }
    let img = generate_pattern(&spec)?;
    ensure_parent(&args.out)?;
    save_image(&img, &args.out)?;
    manifest.output(&args.out)?;
    manifest.finish()?;
    Ok(())
}
