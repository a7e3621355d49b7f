use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use bos_core::imagecore::{save_image, save_rgb, write_flow};
use bos_core::metrics::{endpoint_error, snr, DbConvention, EpeRegion, EpeReport, SnrReport};
use bos_core::patterns::{check_raffel, PatternKind};
use bos_core::render::{magnitude_map, panel_labels, side_by_side, vector_overlay, Normalization, RenderConfig};
use bos_core::{DisplacementField, Plane};
use clap::Parser;

use super::reconstruct::{run_method, save_field, MethodOutput};
use super::{ensure_dir, write_json};
use crate::cli::{Method, MethodParams, RoundtripArgs};
use crate::manifest::ManifestWriter;
use crate::protocol::{kind_label, Protocol, BORDER_PX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub epe: EpeReport,
    /// SNR of the magnitude map, plume annulus against the far background.
    pub snr: SnrReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfsReport {
    /// Mean |target - reference| in the plume annulus, intensity units.
    pub annulus_mean: f64,
    pub background_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcReport {
    pub epe: EpeReport,
    pub valid_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub peak_displacement_px: f64,
    pub imaged_cell_px: f64,
    pub raffel: String,
    pub cfs: Option<CfsReport>,
    pub cc: Option<CcReport>,
    /// Keyed by method name (`hs`, `farneback`).
    pub flow: BTreeMap<String, FlowReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    /// Pattern kinds by decreasing SNR.
    pub ranking: Vec<String>,
    pub squares_dots_gray: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub protocol: Protocol,
    pub methods: Vec<String>,
    pub patterns: BTreeMap<String, PatternReport>,
    /// Per optical-flow method.
    pub snr_ordering: BTreeMap<String, Ordering>,
}

const KINDS: [PatternKind; 3] = [PatternKind::RandomSquares, PatternKind::RandomDots, PatternKind::RandomGray];

pub fn run(args: RoundtripArgs, argv: Vec<String>) -> Result<()> {
    let protocol = Protocol {
        width: args.width,
        height: args.height,
        plume_sigma_px: args.plume_sigma,
        peak_px: args.peak_px,
        noise_sigma: args.noise,
        print_cell: args.cell,
        magnification: args.print_scale,
        ..Protocol::desk(args.seed)
    };
    let mut methods = args.methods.clone();
    methods.sort_by_key(|m| Method::ALL.iter().position(|x| x == m));
    methods.dedup();
    ensure_dir(&args.out)?;
    let mut manifest = ManifestWriter::new(args.out.join("manifest.json"), argv);
    let summary = pipeline(&protocol, &methods, &args.out, &mut manifest)?;
    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    manifest.output(&summary_path)?;
    manifest.finish()?;
    Ok(())
}

/// Runs every stage, recording each in the manifest as it completes.
pub fn pipeline(protocol: &Protocol, methods: &[Method], out: &Path, manifest: &mut ManifestWriter) -> Result<Summary> {
    let params = default_params();
    let sample = protocol.sample_mask();
    let background = protocol.background_mask();
    let render_cfg = RenderConfig {
        normalization: Normalization::Fixed(protocol.peak_px),
        ..RenderConfig::default()
    };
    let mut patterns = BTreeMap::new();
    let mut magnitude_panels: BTreeMap<Method, Vec<bos_core::RgbImage>> = BTreeMap::new();

    for kind in KINDS {
        let label = kind_label(kind);
        let dir = out.join(label);
        ensure_dir(&dir)?;

        let stage = format!("simulate/{label}");
        let (print, seen) = protocol.photographed(kind).with_context(|| format!("stage {stage}"))?;
        let sim = protocol.simulate_with(seen).with_context(|| format!("stage {stage}"))?;
        let files = [
            ("print.png", save_image(&print, dir.join("print.png"))),
            ("reference.png", save_image(&sim.reference, dir.join("reference.png"))),
            ("distorted.png", save_image(&sim.distorted, dir.join("distorted.png"))),
            ("gt.flo", write_flow(&sim.ground_truth, dir.join("gt.flo"))),
        ];
        for (name, result) in files {
            result.with_context(|| format!("stage {stage}"))?;
            manifest.output(&dir.join(name))?;
        }
        let meta = dir.join("metadata.json");
        write_json(&meta, &sim.metadata)?;
        manifest.output(&meta)?;
        manifest.checkpoint(&stage)?;

        let raffel = check_raffel(protocol.imaged_cell_px())?;
        let mut report = PatternReport {
            peak_displacement_px: sim.metadata.peak_displacement_px,
            imaged_cell_px: protocol.imaged_cell_px(),
            raffel: raffel.message,
            cfs: None,
            cc: None,
            flow: BTreeMap::new(),
        };
        for &method in methods {
            let stage = format!("reconstruct/{label}/{}", method.name());
            let output = run_method(method, &params, &sim.reference, &sim.distorted)
                .with_context(|| format!("stage {stage}"))?;
            match output {
                MethodOutput::Difference(diff) => {
                    let path = dir.join("cfs.png");
                    save_image(&diff, &path)?;
                    manifest.output(&path)?;
                    let plane = diff.to_plane();
                    report.cfs = Some(CfsReport {
                        annulus_mean: masked_mean(&plane, &sample.data),
                        background_mean: masked_mean(&plane, &background.data),
                    });
                }
                MethodOutput::Field(field) => {
                    for path in save_field(&field, &dir.join(format!("{}.flo", method.name())))? {
                        manifest.output(&path)?;
                    }
                    let region = if field.is_dense() {
                        EpeRegion::Interior { border: BORDER_PX }
                    } else {
                        EpeRegion::Interior { border: 0 }
                    };
                    let epe = endpoint_error(&field, &sim.ground_truth, &region)
                        .with_context(|| format!("stage {stage}"))?;
                    let mag = magnitude_map(&field, &render_cfg)?;
                    let mag_path = dir.join(format!("{}_magnitude.png", method.name()));
                    save_rgb(&mag, &mag_path)?;
                    manifest.output(&mag_path)?;
                    if field.is_dense() {
                        let snr = snr(&field.magnitude(), &sample, &background, DbConvention::Amplitude)
                            .with_context(|| format!("stage {stage}"))?;
                        report.flow.insert(method.name().into(), FlowReport { epe, snr });
                        let overlay = vector_overlay(&field, &mag, &RenderConfig::default())?;
                        let path = dir.join(format!("{}_vectors.png", method.name()));
                        save_rgb(&overlay, &path)?;
                        manifest.output(&path)?;
                    } else {
                        report.cc = Some(CcReport {
                            epe,
                            valid_fraction: valid_fraction(&field),
                        });
                    }
                    magnitude_panels.entry(method).or_default().push(mag);
                }
            }
            manifest.checkpoint(&stage)?;
        }
        patterns.insert(label.to_string(), report);
    }

    let labels: Vec<String> = KINDS.iter().map(|&k| kind_label(k).to_string()).collect();
    for (method, panels) in &magnitude_panels {
        let strip = side_by_side(panels)?;
        let path = out.join(format!("compare_{}.png", method.name()));
        save_rgb(&strip, &path)?;
        let label_path = path.with_extension("labels.txt");
        std::fs::write(&label_path, panel_labels(panels, &labels))
            .with_context(|| format!("writing {}", label_path.display()))?;
        manifest.output(&path)?;
        manifest.output(&label_path)?;
    }
    manifest.checkpoint("render")?;

    let mut snr_ordering = BTreeMap::new();
    for &method in methods.iter().filter(|m| matches!(m, Method::Hs | Method::Farneback)) {
        let mut ranked: Vec<(String, f64)> = labels
            .iter()
            .map(|l| (l.clone(), patterns[l].flow[method.name()].snr.linear))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let ranking: Vec<String> = ranked.into_iter().map(|(l, _)| l).collect();
        let squares_dots_gray = ranking == ["squares", "dots", "gray"];
        snr_ordering.insert(method.name().to_string(), Ordering { ranking, squares_dots_gray });
    }
    Ok(Summary {
        protocol: protocol.clone(),
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        patterns,
        snr_ordering,
    })
}

/// Library defaults for every method.
pub fn default_params() -> MethodParams {
    #[derive(Parser)]
    struct Wrapper {
        #[command(flatten)]
        params: MethodParams,
    }
    Wrapper::parse_from(["defaults"]).params
}

fn masked_mean(plane: &Plane, mask: &[bool]) -> f64 {
    let (sum, n) = plane
        .data
        .iter()
        .zip(mask)
        .filter(|(_, &keep)| keep)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v as f64, n + 1));
    sum / n.max(1) as f64
}

fn valid_fraction(field: &DisplacementField) -> f64 {
    match field.validity() {
        Some(v) => v.iter().filter(|&&b| b).count() as f64 / v.len().max(1) as f64,
        None => 1.0,
    }
}
