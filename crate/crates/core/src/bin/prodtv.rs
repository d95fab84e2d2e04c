//! Command-line frontend: denoising, inpainting, video denoising,
//! synthetic data generation, metrics, and parameter grid search.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible
//! configuration.

use clap::{Args, Parser, Subcommand, ValueEnum};
use prodtv::cppa::{SolverConfig, TieBreak};
use prodtv::experiments::{denoise_video, grid_search, grid_values, restore, Space};
use prodtv::functional::{InpaintMask, Mode, RegParams};
use prodtv::imaging::color::{hsv_to_rgb, HsvImage, RgbImage};
use prodtv::imaging::{
    add_wrapped_gaussian, make_disc_mask, make_rotation_video, make_synthetic, psnr, psnr_angular,
    ssim,
};
use prodtv::manifest::RunManifest;
use prodtv::pfi::{read_mask_png, read_pfi, write_mask_png, write_pfi};
use prodtv::{Error, Result};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "prodtv", version, about = "Second-order TV restoration of cyclic/linear product-valued images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Rgb,
    Hsv,
    RgbChannelwise,
    HsvChannelwise,
    /// Operate directly on a PFI product image.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Image,
    Video,
    Mask,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Psnr,
    Ssim,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// First-order weights a1,a2,a3,a4 (axial, then diagonal pairs).
    #[arg(long, default_value = "0,0,0,0", value_parser = parse_list::<4>)]
    alpha: [f64; 4],
    /// Second-order weights b1,b2 (horizontal, vertical).
    #[arg(long, default_value = "0,0", value_parser = parse_list::<2>)]
    beta: [f64; 2],
    /// Mixed-difference weight.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Initial step size of the diminishing sequence lambda0/k.
    #[arg(long, default_value_t = PI / 2.0)]
    lambda0: f64,
    /// Number of outer cycles.
    #[arg(long, default_value_t = 400)]
    iters: usize,
    /// Seed for set-valued prox tie-breaking (omit for the deterministic
    /// +pi branch).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the inner sweeps.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SolverArgs {
    fn config(&self, mode: Mode) -> SolverConfig {
        SolverConfig {
            params: RegParams {
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
            },
            mode,
            lambda0: self.lambda0,
            iterations: self.iters,
            tie_break: match self.seed {
                Some(s) => TieBreak::SeededRandom(s),
                None => TieBreak::PlusPi,
            },
            record_energy: false,
            workers: self.workers,
        }
    }

    fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "lambda0": self.lambda0,
            "iters": self.iters,
            "seed": self.seed,
            "workers": self.workers,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Denoise an image (PNG in a chosen color model, or a raw PFI image).
    Denoise {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SpaceArg::Hsv)]
        space: SpaceArg,
        #[command(flatten)]
        solver: SolverArgs,
        /// Record the per-cycle energy to this file (one value per line).
        #[arg(long)]
        energy_trace: Option<PathBuf>,
        /// Ground truth for PSNR/SSIM reporting in the manifest.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inpaint the masked region of an image, optionally jointly denoising.
    Inpaint {
        input: PathBuf,
        /// PNG mask; nonzero pixels are the inpainting region.
        #[arg(long)]
        mask: PathBuf,
        /// Treat observed pixels as noisy (joint restoration) instead of
        /// pinning them.
        #[arg(long)]
        noisy: bool,
        #[arg(long, value_enum, default_value_t = SpaceArg::Hsv)]
        space: SpaceArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Denoise a sequence of PFI frames with temporal stacking.
    VideoDenoise {
        /// Input frames, in temporal order.
        #[arg(required = true)]
        frames: Vec<PathBuf>,
        /// Temporal half-window l: each frame is solved jointly with its
        /// 2l+1 neighbors.
        #[arg(long, default_value_t = 0)]
        window: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Reference frames for per-frame PSNR reporting.
        #[arg(long, num_args = 1..)]
        reference: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate synthetic assets: test image, rotation video, disc mask,
    /// or a noisy copy of an input.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 256)]
        npix: usize,
        #[arg(long, default_value_t = 13)]
        frames: usize,
        #[arg(long, default_value_t = 0.25)]
        radius: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input for --kind noise (PFI or PNG).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Clamp linear channels to [0, 1] after adding noise.
        #[arg(long)]
        clamp: bool,
        /// Output path; video frames get a -NN suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print quality metrics between two images (PNG: PSNR and SSIM;
    /// PFI: angular PSNR).
    Metrics { a: PathBuf, b: PathBuf },
    /// Search the coupled parameter grid for the best restoration.
    GridSearch {
        input: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        noisy: bool,
        #[arg(long, value_enum, default_value_t = SpaceArg::Hsv)]
        space: SpaceArg,
        /// First-order grid as step,max; enumerates (step)N up to max.
        #[arg(long, value_parser = parse_list::<2>, default_value = "0.03125,0.125")]
        alpha_grid: [f64; 2],
        /// Second-order grid as step,max.
        #[arg(long, value_parser = parse_list::<2>, default_value = "0.03125,0.125")]
        beta_grid: [f64; 2],
        /// Also try cells with beta = 0 (pure first-order models).
        #[arg(long)]
        allow_zero_beta: bool,
        #[arg(long, value_enum, default_value_t = MetricArg::Psnr)]
        metric: MetricArg,
        /// Ground truth the metric is computed against.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = PI / 2.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 400)]
        iters: usize,
        /// Write the best restoration here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_list<const K: usize>(s: &str) -> std::result::Result<[f64; K], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != K {
        return Err(format!("expected {K} comma-separated numbers"));
    }
    let mut out = [0.0; K];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number {p:?}: {e}"))?;
    }
    Ok(out)
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case(ext))
        .unwrap_or(false)
}

fn space_of(arg: SpaceArg) -> Option<Space> {
    match arg {
        SpaceArg::Rgb => Some(Space::Rgb),
        SpaceArg::Hsv => Some(Space::Hsv),
        SpaceArg::RgbChannelwise => Some(Space::RgbChannelwise),
        SpaceArg::HsvChannelwise => Some(Space::HsvChannelwise),
        SpaceArg::Raw => None,
    }
}

fn load_reference_rgb(path: &Path) -> Result<RgbImage> {
    if has_ext(path, "png") {
        RgbImage::load_png(path)
    } else {
        Err(Error::InvalidArgument(format!(
            "{}: reference must be a PNG",
            path.display()
        )))
    }
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn run_restore_command(
    command: &str,
    input: &Path,
    mask: Option<&Path>,
    mode: Mode,
    space_arg: SpaceArg,
    solver: &SolverArgs,
    energy_trace: Option<&Path>,
    reference: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut manifest = RunManifest::new(
        command,
        serde_json::json!({
            "space": format!("{space_arg:?}"),
            "mode": format!("{mode:?}"),
            "solver": solver.json(),
        }),
    );
    manifest.inputs.push(input.display().to_string());
    if let Some(s) = solver.seed {
        manifest.seeds.push(s);
    }

    let mut cfg = solver.config(mode);
    cfg.record_energy = energy_trace.is_some();

    match space_of(space_arg) {
        None => {
            // Raw PFI pipeline.
            if !has_ext(input, "pfi") {
                return Err(Error::InvalidArgument(
                    "--space raw needs a PFI input".into(),
                ));
            }
            let f = read_pfi(input)?;
            let m = match mask {
                Some(p) => {
                    manifest.inputs.push(p.display().to_string());
                    read_mask_png(p)?
                }
                None => InpaintMask::empty(f.width(), f.height()),
            };
            let rep = prodtv::cppa::solve(&f, &m, &cfg)?;
            write_pfi(out, &rep.result)?;
            if let Some(tp) = energy_trace {
                write_energy_trace(tp, rep.initial_energy, &rep.energy_trace)?;
                manifest.energy_trace_path = Some(tp.display().to_string());
            }
        }
        Some(space) => {
            if !has_ext(input, "png") {
                return Err(Error::InvalidArgument(format!(
                    "--space {space_arg:?} needs a PNG input"
                )));
            }
            let img = RgbImage::load_png(input)?;
            let m = match mask {
                Some(p) => {
                    manifest.inputs.push(p.display().to_string());
                    read_mask_png(p)?
                }
                None => InpaintMask::empty(img.width(), img.height()),
            };
            if energy_trace.is_some() && space == Space::Hsv {
                // Record the trace of the vectorial solve directly.
                let hsv = prodtv::imaging::rgb_to_hsv(&img);
                let rep = prodtv::cppa::solve(&hsv.to_product(), &m, &cfg)?;
                let restored = hsv_to_rgb(&HsvImage::from_product(&rep.result)?);
                restored.save_png(out)?;
                let tp = energy_trace.unwrap();
                write_energy_trace(tp, rep.initial_energy, &rep.energy_trace)?;
                manifest.energy_trace_path = Some(tp.display().to_string());
                report_rgb_metrics(&mut manifest, &restored, reference)?;
                finish(manifest, out)?;
                return Ok(());
            }
            cfg.record_energy = false;
            let restored = restore(&img, &m, space, &cfg)?;
            restored.save_png(out)?;
            report_rgb_metrics(&mut manifest, &restored, reference)?;
        }
    }
    finish(manifest, out)
}

fn report_rgb_metrics(
    manifest: &mut RunManifest,
    restored: &RgbImage,
    reference: Option<&Path>,
) -> Result<()> {
    if let Some(rp) = reference {
        let r = load_reference_rgb(rp)?;
        manifest.inputs.push(rp.display().to_string());
        manifest.add_metric("psnr", psnr(restored, &r)?);
        if restored.width() >= 11 && restored.height() >= 11 {
            manifest.add_metric("ssim", ssim(restored, &r)?);
        }
    }
    Ok(())
}

fn write_energy_trace(path: &Path, initial: Option<f64>, trace: &[f64]) -> Result<()> {
    let mut text = String::new();
    if let Some(j0) = initial {
        text.push_str(&format!("{j0}\n"));
    }
    for v in trace {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn finish(mut manifest: RunManifest, out: &Path) -> Result<()> {
    manifest.outputs.push(out.display().to_string());
    manifest.save(&manifest_path(out))?;
    Ok(())
}

fn numbered(path: &Path, k: usize) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let ext = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}-{k:02}{ext}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Denoise {
            input,
            space,
            solver,
            energy_trace,
            reference,
            out,
        } => run_restore_command(
            "denoise",
            &input,
            None,
            Mode::Denoise,
            space,
            &solver,
            energy_trace.as_deref(),
            reference.as_deref(),
            &out,
        ),
        Command::Inpaint {
            input,
            mask,
            noisy,
            space,
            solver,
            reference,
            out,
        } => run_restore_command(
            "inpaint",
            &input,
            Some(&mask),
            if noisy {
                Mode::InpaintNoisy
            } else {
                Mode::InpaintNoiseless
            },
            space,
            &solver,
            None,
            reference.as_deref(),
            &out,
        ),
        Command::VideoDenoise {
            frames,
            window,
            solver,
            reference,
            out_dir,
        } => {
            let mut manifest = RunManifest::new(
                "video-denoise",
                serde_json::json!({"window": window, "solver": solver.json()}),
            );
            let mut video = Vec::with_capacity(frames.len());
            for p in &frames {
                manifest.inputs.push(p.display().to_string());
                video.push(read_pfi(p)?);
            }
            if !reference.is_empty() && reference.len() != frames.len() {
                return Err(Error::InvalidArgument(
                    "reference frame count must match the input".into(),
                ));
            }
            let cfg = solver.config(Mode::Denoise);
            let restored = denoise_video(&video, window, &cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            for (k, frame) in restored.iter().enumerate() {
                let path = out_dir.join(format!("frame-{k:02}.pfi"));
                write_pfi(&path, frame)?;
                manifest.outputs.push(path.display().to_string());
                if !reference.is_empty() {
                    let r = read_pfi(&reference[k])?;
                    manifest.add_metric(&format!("psnr_angular_frame{k:02}"), psnr_angular(frame, &r)?);
                }
            }
            let mp = out_dir.join("run.manifest.json");
            manifest.save(&mp)?;
            Ok(())
        }
        Command::Synth {
            kind,
            npix,
            frames,
            radius,
            sigma,
            seed,
            input,
            clamp,
            out,
        } => {
            let mut manifest = RunManifest::new(
                "synth",
                serde_json::json!({
                    "kind": format!("{kind:?}"),
                    "npix": npix,
                    "frames": frames,
                    "radius": radius,
                    "sigma": sigma,
                    "clamp": clamp,
                }),
            );
            match kind {
                SynthKind::Image => {
                    let hsv = make_synthetic(npix)?;
                    if has_ext(&out, "png") {
                        hsv_to_rgb(&hsv).save_png(&out)?;
                    } else {
                        write_pfi(&out, &hsv.to_product())?;
                    }
                    finish(manifest, &out)
                }
                SynthKind::Mask => {
                    let mask = make_disc_mask(npix, radius)?;
                    write_mask_png(&out, &mask)?;
                    finish(manifest, &out)
                }
                SynthKind::Video => {
                    let video = make_rotation_video(npix, frames)?;
                    for (k, frame) in video.iter().enumerate() {
                        let path = numbered(&out, k);
                        write_pfi(&path, frame)?;
                        manifest.outputs.push(path.display().to_string());
                    }
                    manifest.save(&manifest_path(&out))?;
                    Ok(())
                }
                SynthKind::Noise => {
                    manifest.seeds.push(seed);
                    let src = input.ok_or_else(|| {
                        Error::InvalidArgument("--kind noise needs --input".into())
                    })?;
                    manifest.inputs.push(src.display().to_string());
                    let clamp_range = if clamp { Some([0.0, 1.0]) } else { None };
                    if has_ext(&src, "png") {
                        let rgb = RgbImage::load_png(&src)?;
                        let noisy =
                            add_wrapped_gaussian(&rgb.to_product(), sigma, seed, Some([0.0, 1.0]))?;
                        RgbImage::from_product(&noisy)?.save_png(&out)?;
                    } else {
                        let img = read_pfi(&src)?;
                        write_pfi(&out, &add_wrapped_gaussian(&img, sigma, seed, clamp_range)?)?;
                    }
                    finish(manifest, &out)
                }
            }
        }
        Command::Metrics { a, b } => {
            if has_ext(&a, "png") && has_ext(&b, "png") {
                let x = RgbImage::load_png(&a)?;
                let y = RgbImage::load_png(&b)?;
                println!("psnr {}", fmt_db(psnr(&x, &y)?));
                match ssim(&x, &y) {
                    Ok(s) => println!("ssim {s:.6}"),
                    Err(Error::InvalidArgument(_)) => {}
                    Err(e) => return Err(e),
                }
            } else {
                let x = read_pfi(&a)?;
                let y = read_pfi(&b)?;
                println!("psnr_angular {}", fmt_db(psnr_angular(&x, &y)?));
            }
            Ok(())
        }
        Command::GridSearch {
            input,
            mask,
            noisy,
            space,
            alpha_grid,
            beta_grid,
            allow_zero_beta,
            metric,
            reference,
            lambda0,
            iters,
            out,
        } => {
            let space = space_of(space).ok_or_else(|| {
                Error::InvalidArgument("grid search operates on PNG color images".into())
            })?;
            let img = RgbImage::load_png(&input)?;
            let reference_img = load_reference_rgb(&reference)?;
            let (mode, m) = match &mask {
                Some(p) => (
                    if noisy {
                        Mode::InpaintNoisy
                    } else {
                        Mode::InpaintNoiseless
                    },
                    read_mask_png(p)?,
                ),
                None => (Mode::Denoise, InpaintMask::empty(img.width(), img.height())),
            };
            let alphas = grid_values(alpha_grid[0], alpha_grid[1])?;
            let betas = grid_values(beta_grid[0], beta_grid[1])?;
            let outcome = grid_search(&alphas, &betas, allow_zero_beta, |a, b| {
                let cfg = SolverConfig {
                    lambda0,
                    iterations: iters,
                    ..SolverConfig::new(RegParams::coupled(a, b), mode)
                };
                let restored = restore(&img, &m, space, &cfg)?;
                match metric {
                    MetricArg::Psnr => psnr(&restored, &reference_img),
                    MetricArg::Ssim => ssim(&restored, &reference_img),
                }
            })?;
            println!(
                "best alpha {} beta {} score {}",
                outcome.alpha,
                outcome.beta,
                fmt_db(outcome.score)
            );
            let mut manifest = RunManifest::new(
                "grid-search",
                serde_json::json!({
                    "space": format!("{space:?}"),
                    "mode": format!("{mode:?}"),
                    "alpha_grid": alpha_grid,
                    "beta_grid": beta_grid,
                    "allow_zero_beta": allow_zero_beta,
                    "metric": format!("{metric:?}"),
                    "lambda0": lambda0,
                    "iters": iters,
                    "cells": outcome
                        .cells
                        .iter()
                        .map(|&(a, b, s)| serde_json::json!([a, b, s]))
                        .collect::<Vec<_>>(),
                }),
            );
            manifest.inputs.push(input.display().to_string());
            manifest.inputs.push(reference.display().to_string());
            manifest.add_metric("best_alpha", outcome.alpha);
            manifest.add_metric("best_beta", outcome.beta);
            manifest.add_metric("best_score", outcome.score);
            if let Some(outp) = out {
                let cfg = SolverConfig {
                    lambda0,
                    iterations: iters,
                    ..SolverConfig::new(RegParams::coupled(outcome.alpha, outcome.beta), mode)
                };
                restore(&img, &m, space, &cfg)?.save_png(&outp)?;
                finish(manifest, &outp)
            } else {
                manifest.save(&manifest_path(&input))?;
                Ok(())
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Infeasible(_)
                | Error::ConstraintViolation(_, _)
                | Error::DisconnectedCovering => 4,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}
