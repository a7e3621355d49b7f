use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use bos_core::imagecore::{load_image, read_flow, save_image, sidecar_path, write_flow};
use bos_core::reconstruct::{
    cfs, cross_correlate, optical_flow, postfilter, CorrConfig, FlowConfig, FlowEngine, PostFilter,
};
use bos_core::{DisplacementField, GrayImage, Mask};

use super::ensure_parent;
use crate::cli::{Method, MethodParams, PostFilterArg, ReconstructArgs};
use crate::manifest::{manifest_for_file, ManifestWriter};

pub enum MethodOutput {
    Difference(GrayImage),
    Field(DisplacementField),
}

impl MethodParams {
    pub fn corr_config(&self) -> CorrConfig {
        CorrConfig {
            window: self.window,
            search: self.search,
            step: self.step,
            subpixel: self.subpixel.into(),
            min_peak: self.min_peak,
        }
    }

    pub fn flow_config(&self, engine: FlowEngine) -> FlowConfig {
        let base = FlowConfig::for_engine(engine);
        FlowConfig {
            levels: self.levels,
            scale: self.scale,
            iterations: self.iterations.unwrap_or(base.iterations),
            alpha: self.alpha,
            poly_n: self.poly_n,
            poly_sigma: self.poly_sigma,
            window: self.fb_window,
            ..base
        }
    }

    fn post(&self) -> Option<PostFilter> {
        match self.postfilter {
            PostFilterArg::None => None,
            PostFilterArg::Median3 => Some(PostFilter::Median3),
            PostFilterArg::Gaussian => Some(PostFilter::Gaussian {
                sigma: self.postfilter_sigma,
            }),
        }
    }
}

pub fn run_method(method: Method, params: &MethodParams, reference: &GrayImage, target: &GrayImage) -> Result<MethodOutput> {
    let field = match method {
        Method::Cfs => return Ok(MethodOutput::Difference(cfs(reference, target, params.gain)?)),
        Method::Cc => cross_correlate(reference, target, &params.corr_config())?.field,
        Method::Hs => optical_flow(reference, target, &params.flow_config(FlowEngine::HornSchunck))?,
        Method::Farneback => optical_flow(reference, target, &params.flow_config(FlowEngine::Farneback))?,
    };
    Ok(MethodOutput::Field(match params.post() {
        Some(kind) => postfilter(&field, kind),
        None => field,
    }))
}

/// `x.flo` -> `x.valid.png`.
pub fn validity_path(flo: &Path) -> PathBuf {
    flo.with_extension("valid.png")
}

/// Writes the field and, when it carries a validity mask, `x.valid.png` (255 = valid).
/// Returns every file written.
pub fn save_field(field: &DisplacementField, path: &Path) -> Result<Vec<PathBuf>> {
    ensure_parent(path)?;
    write_flow(field, path)?;
    let mut written = vec![path.to_path_buf()];
    if !field.is_dense() {
        written.push(sidecar_path(path));
    }
    let mask_path = validity_path(path);
    match field.validity() {
        Some(valid) => {
            let (w, h) = field.dims();
            let mask = Mask::new(w, h, valid.to_vec())?;
            save_image(&mask.to_image(), &mask_path)?;
            written.push(mask_path);
        }
        None if mask_path.exists() => {
            std::fs::remove_file(&mask_path).with_context(|| format!("removing stale {}", mask_path.display()))?
        }
        None => {}
    }
    Ok(written)
}

/// Reads a `.flo` and attaches `x.valid.png` when present.
pub fn load_field(path: &Path) -> Result<DisplacementField> {
    let field = read_flow(path)?;
    let mask_path = validity_path(path);
    if !mask_path.exists() {
        return Ok(field);
    }
    let mask = Mask::from_image(&load_image(&mask_path)?);
    Ok(field.with_validity(mask.data)?)
}

pub fn run(args: ReconstructArgs, argv: Vec<String>) -> Result<()> {
    let reference = load_image(&args.reference)?;
    let target = load_image(&args.target)?;
    let mut manifest = ManifestWriter::new(manifest_for_file(&args.out), argv);
    manifest.input(&args.reference)?;
    manifest.input(&args.target)?;
    let written = match run_method(args.method, &args.params, &reference, &target)? {
        MethodOutput::Difference(img) => {
            ensure_parent(&args.out)?;
            save_image(&img, &args.out)?;
            vec![args.out.clone()]
        }
        MethodOutput::Field(field) => save_field(&field, &args.out)?,
    };
    for path in &written {
        manifest.output(path)?;
    }
    manifest.finish()?;
    Ok(())
}
