use anyhow::{bail, Context, Result};

use bos_core::imagecore::{load_image, save_image, write_flow};
use bos_core::optics::{BosGeometry, GeometryFile, OpticsConstants, Setup};
use bos_core::patterns::{generate_pattern, PatternSpec};
use bos_core::simulate::{camera_image, delta_n_for_peak, simulate_pair, Background, RefractiveField, SimOptions};

use super::{ensure_dir, write_json};
use crate::cli::SimulateArgs;
use crate::manifest::ManifestWriter;

pub fn run(args: SimulateArgs, argv: Vec<String>) -> Result<()> {
    if args.frames == 0 {
        bail!("invalid parameter frames: must be >= 1");
    }
    ensure_dir(&args.out)?;
    let mut manifest = ManifestWriter::new(args.out.join("manifest.json"), argv);

    let (background, pattern) = match &args.background {
        Some(path) => {
            manifest.input(path)?;
            (Background::Image(load_image(path)?), None)
        }
        None if args.print_scale == 1.0 => {
            let spec = PatternSpec {
                fill: args.fill,
                ..PatternSpec::new(args.kind.into(), args.width, args.height, args.cell, args.seed)
            };
            (Background::Pattern(spec.clone()), Some(spec))
        }
        None => {
            if !(args.print_scale > 0.0 && args.print_scale.is_finite()) {
                bail!("invalid parameter print_scale: must be positive");
            }
            let pw = (args.width as f64 / args.print_scale).ceil() as usize + 1;
            let ph = (args.height as f64 / args.print_scale).ceil() as usize + 1;
            let spec = PatternSpec {
                fill: args.fill,
                ..PatternSpec::new(args.kind.into(), pw, ph, args.cell, args.seed)
            };
            let print = generate_pattern(&spec)?;
            let seen = camera_image(&print, args.print_scale, args.width, args.height)?;
            (Background::Image(seen), Some(spec))
        }
    };
    let (width, height) = match &background {
        Background::Image(img) => img.dims(),
        Background::Pattern(spec) => (spec.width, spec.height),
    };

    let setup = match &args.geometry {
        Some(path) => {
            manifest.config(path)?;
            GeometryFile::load(path)?.to_setup()?
        }
        None => Setup {
            geometry: BosGeometry::new(
                args.d1,
                args.d2,
                args.focal,
                args.pixel_pitch,
                args.bg_scale.unwrap_or_else(|| BosGeometry::a4_bg_scale(width)),
            )?,
            constants: OpticsConstants::default(),
            thickness_z: args.thickness,
        },
    };
    let sigma = args.plume_sigma.unwrap_or(width.min(height) as f64 / 16.0);
    let final_delta_n = match args.delta_n {
        Some(dn) => dn,
        None => delta_n_for_peak(args.peak_px, sigma, setup.thickness_z, &setup.geometry, &setup.constants),
    };
    let options = SimOptions {
        noise_sigma: args.noise,
        quantize: !args.no_quantize,
        noise_seed: args.noise_seed,
    };

    for k in 0..args.frames {
        let dir = if args.frames == 1 {
            args.out.clone()
        } else {
            args.out.join(format!("frame_{k:03}"))
        };
        ensure_dir(&dir)?;
        let field = RefractiveField::GaussianPlume {
            cx: args.plume_x.unwrap_or(width as f64 / 2.0),
            cy: args.plume_y.unwrap_or(height as f64 / 2.0),
            sigma,
            delta_n: final_delta_n * (k + 1) as f64 / args.frames as f64,
            thickness_z: setup.thickness_z,
        };
        let mut sim = simulate_pair(&background, &field, &setup.geometry, &setup.constants, &options)
            .with_context(|| format!("frame {k}"))?;
        sim.metadata.pattern = pattern.clone();
        let [reference, distorted, gt, metadata] =
            ["reference.png", "distorted.png", "gt.flo", "metadata.json"].map(|n| dir.join(n));
        save_image(&sim.reference, &reference)?;
        save_image(&sim.distorted, &distorted)?;
        write_flow(&sim.ground_truth, &gt)?;
        write_json(&metadata, &sim.metadata)?;
        for path in [&reference, &distorted, &gt, &metadata] {
            manifest.output(path)?;
        }
        manifest.checkpoint(&format!("frame_{k:03}"))?;
    }
    manifest.finish()?;
    Ok(())
}
