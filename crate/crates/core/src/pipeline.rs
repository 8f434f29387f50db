//! Command implementations behind the CLI. Each command reads a
//! [`RunConfig`] and writes its artifacts under `cfg.out`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Provider, RefineSection, RunConfig};
use crate::error::{Error, Result};
use crate::image::{load_mask_png, load_png, save_mask_png, save_png, BinaryMask, RasterImage};
use crate::inpaint::time_fill;
use crate::metrics::{aggregate, confusion, detection_metrics, MetricsReport, RestorationScores};
use crate::morph::detect_stages;
use crate::synth::{write_dataset, write_procedural_dataset, Manifest};

/// Runs `f` on a rayon pool with `jobs` threads (0 = one per core).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Other(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::InvalidParameter(format!("no file stem in {}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Other(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// PNG files directly inside `dir`, sorted by name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Expands directories to their PNG files; plain paths pass through.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(list_pngs(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Per-file results of a batch command.
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, Error)>,
}

impl BatchOutcome {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Writes a synthetic dataset from `sources`, or from procedural paintings
/// when `sources` is `None` and `generate.procedural > 0`.
pub fn cmd_generate(cfg: &RunConfig, sources: Option<&Path>) -> Result<Manifest> {
    cfg.validate()?;
    match sources {
        Some(dir) => {
            let files = list_pngs(dir)?;
            if files.is_empty() {
                return Err(Error::InvalidParameter(format!("no PNG source images in {}", dir.display())));
            }
            with_jobs(cfg.jobs, || write_dataset(&files, &cfg.out, &cfg.synth, cfg.seed))?
        }
        None if cfg.generate.procedural > 0 => with_jobs(cfg.jobs, || {
            write_procedural_dataset(
                cfg.generate.procedural,
                cfg.generate.source_size,
                &cfg.out,
                &cfg.synth,
                cfg.seed,
            )
        })?,
        None => Err(Error::Config("generate needs a source directory or generate.procedural > 0".into())),
    }
}

/// Writes `<out>/<stem>_mask.png` per input image, plus
/// `<stem>_mask_unfiltered.png` when `keep_unfiltered` is set. A file that
/// fails is recorded and the batch continues.
pub fn cmd_detect(cfg: &RunConfig, inputs: &[PathBuf], keep_unfiltered: bool) -> Result<BatchOutcome> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let files = expand_inputs(inputs)?;
    let detector = cfg.detect.detector();
    let results: Vec<(PathBuf, Result<Vec<PathBuf>>)> = with_jobs(cfg.jobs, || {
        files
            .par_iter()
            .map(|path| {
                let run = || -> Result<Vec<PathBuf>> {
                    let name = stem(path)?;
                    let det = detect_stages(&load_png(path)?, &detector)?;
                    let mask_path = cfg.out.join(format!("{name}_mask.png"));
                    save_mask_png(&det.mask, &mask_path)?;
                    let mut written = vec![mask_path];
                    if keep_unfiltered {
                        let p = cfg.out.join(format!("{name}_mask_unfiltered.png"));
                        save_mask_png(&det.unfiltered, &p)?;
                        written.push(p);
                    }
                    Ok(written)
                };
                (path.clone(), run())
            })
            .collect()
    })?;
    let mut outcome = BatchOutcome::default();
    for (path, r) in results {
        match r {
            Ok(w) => outcome.written.extend(w),
            Err(e) => {
                log::error!("{}: {e}", path.display());
                outcome.failures.push((path, e));
            }
        }
    }
    Ok(outcome)
}

/// Substitutes `{image}`, `{mask}` and `{out}` in each whitespace-separated
/// word of the template.
pub fn expand_template(template: &str, image: &Path, mask: &Path, out: &Path) -> Vec<String> {
    template
        .split_whitespace()
        .map(|word| {
            word.replace("{image}", &image.display().to_string())
                .replace("{mask}", &mask.display().to_string())
                .replace("{out}", &out.display().to_string())
        })
        .collect()
}

/// Runs the configured refinement provider on files already on disk and
/// returns the refined mask, which is also present at `out`.
pub fn run_provider(refine: &RefineSection, image: &Path, mask: &Path, out: &Path) -> Result<BinaryMask> {
    let (w, h) = load_png(image)?.dimensions();
    let input = load_mask_png(mask)?;
    if input.dimensions() != (w, h) {
        return Err(dimension_error((w, h), input.dimensions()));
    }
    match refine.provider {
        Provider::Passthrough => {
            if mask != out {
                fs::copy(mask, out).map_err(|e| Error::io(out, e))?;
            }
            Ok(input)
        }
        Provider::External => {
            let argv = expand_template(&refine.command, image, mask, out);
            let (program, args) =
                argv.split_first().ok_or_else(|| Error::Config("refine.command is empty".into()))?;
            let output = Command::new(program)
                .args(args)
                .output()
                .map_err(|e| Error::Provider(format!("cannot run '{program}': {e}")))?;
            if !output.status.success() {
                return Err(Error::Provider(format!(
                    "'{program}' exited with {}: {}",
                    output.status,
                    String::from_utf8_lossy(&output.stderr).trim()
                )));
            }
            let refined = load_mask_png(out).map_err(|e| Error::Provider(format!("bad output mask: {e}")))?;
            if refined.dimensions() != (w, h) {
                return Err(dimension_error((w, h), refined.dimensions()));
            }
            Ok(refined)
        }
    }
}

fn dimension_error(expected: (usize, usize), actual: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        expected_w: expected.0,
        expected_h: expected.1,
        actual_w: actual.0,
        actual_h: actual.1,
    }
}

/// Refines a detector mask; writes `<out>/<stem>_refined.png`.
pub fn cmd_refine(cfg: &RunConfig, image: &Path, mask: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let out = cfg.out.join(format!("{}_refined.png", stem(image)?));
    run_provider(&cfg.refine, image, mask, &out)?;
    Ok(out)
}

/// Timing and settings of one fill, written next to the restored image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InpaintRecord {
    pub image_id: String,
    pub method: String,
    pub lambda: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub masked_pixels: usize,
    pub seconds: f64,
    pub config_hash: String,
    pub timestamp: String,
}

fn inpaint_loaded(
    cfg: &RunConfig,
    name: &str,
    image: &RasterImage,
    mask: &BinaryMask,
) -> Result<(RasterImage, InpaintRecord)> {
    if image.dimensions() != mask.dimensions() {
        return Err(dimension_error(image.dimensions(), mask.dimensions()));
    }
    let section = &cfg.inpaint;
    let (restored, seconds) = time_fill(image, mask, section.method, &section.diffusion())?;
    if seconds > section.budget_secs {
        log::warn!("{name}: fill took {seconds:.2}s, over the {:.0}s budget", section.budget_secs);
    }
    let record = InpaintRecord {
        image_id: name.to_string(),
        method: section.method.to_string(),
        lambda: section.lambda,
        kappa: section.kappa,
        iterations: section.iterations,
        masked_pixels: mask.count(),
        seconds,
        config_hash: cfg.hash(),
        timestamp: now(),
    };
    Ok((restored, record))
}

/// Fills `mask` in `image`; writes `<stem>_restored.png` and
/// `<stem>_inpaint.json`.
pub fn cmd_inpaint(cfg: &RunConfig, image: &Path, mask: &Path) -> Result<InpaintRecord> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let name = stem(image)?;
    let img = load_png(image)?;
    let m = load_mask_png(mask)?;
    let (restored, record) = inpaint_loaded(cfg, &name, &img, &m)?;
    save_png(&restored, cfg.out.join(format!("{name}_restored.png")))?;
    write_json(&record, &cfg.out.join(format!("{name}_inpaint.json")))?;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestoreRecord {
    pub image_id: String,
    pub provider: Provider,
    pub detected_pixels: usize,
    pub refined_pixels: usize,
    /// Absent when the refined mask was empty and no fill ran.
    pub inpaint: Option<InpaintRecord>,
    pub config_hash: String,
    pub timestamp: String,
}

/// Detect, refine and inpaint one image. Writes `<stem>_restored.png` and
/// `<stem>_restore.json`; with `keep_intermediate` also the detector and
/// refined masks. Errors carry the name of the failing stage.
pub fn cmd_restore(cfg: &RunConfig, image: &Path, keep_intermediate: bool) -> Result<RestoreRecord> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let name = stem(image)?;
    let img = load_png(image).map_err(|e| Error::stage("load", e))?;
    let detected = detect_stages(&img, &cfg.detect.detector()).map_err(|e| Error::stage("detect", e))?.mask;

    let refined = match cfg.refine.provider {
        Provider::Passthrough => detected.clone(),
        Provider::External => {
            // The provider protocol is file based, so the detector mask goes
            // to disk even when intermediates are not kept.
            let (mask_path, out_path) = if keep_intermediate {
                (cfg.out.join(format!("{name}_mask.png")), cfg.out.join(format!("{name}_refined.png")))
            } else {
                (
                    cfg.out.join(format!(".{name}_mask.tmp.png")),
                    cfg.out.join(format!(".{name}_refined.tmp.png")),
                )
            };
            let run = || -> Result<BinaryMask> {
                save_mask_png(&detected, &mask_path)?;
                run_provider(&cfg.refine, image, &mask_path, &out_path)
            };
            let result = run();
            if !keep_intermediate {
                let _ = fs::remove_file(&mask_path);
                let _ = fs::remove_file(&out_path);
            }
            result.map_err(|e| Error::stage("refine", e))?
        }
    };
    if keep_intermediate {
        save_mask_png(&detected, cfg.out.join(format!("{name}_mask.png")))?;
        save_mask_png(&refined, cfg.out.join(format!("{name}_refined.png")))?;
    }

    let (restored, inpaint) = if refined.is_empty() {
        (img, None)
    } else {
        let (r, rec) = inpaint_loaded(cfg, &name, &img, &refined).map_err(|e| Error::stage("inpaint", e))?;
        (r, Some(rec))
    };
    save_png(&restored, cfg.out.join(format!("{name}_restored.png")))?;
    let record = RestoreRecord {
        image_id: name.clone(),
        provider: cfg.refine.provider,
        detected_pixels: detected.count(),
        refined_pixels: refined.count(),
        inpaint,
        config_hash: cfg.hash(),
        timestamp: now(),
    };
    write_json(&record, &cfg.out.join(format!("{name}_restore.json")))?;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub images: Vec<MetricsReport>,
    pub mean: MetricsReport,
    /// Dataset stems with no prediction of either kind.
    pub missing: Vec<String>,
}

/// Prediction mask for `stem`: `<stem>_refined.png` if present, else
/// `<stem>_mask.png`.
fn predicted_mask_path(predictions: &Path, stem: &str) -> Option<PathBuf> {
    [format!("{stem}_refined.png"), format!("{stem}_mask.png")]
        .into_iter()
        .map(|f| predictions.join(f))
        .find(|p| p.is_file())
}

/// Scores predictions against a dataset: masks against `masks/<stem>.png`,
/// `<stem>_restored.png` against `clean/<stem>.png`. Writes
/// `<out>/evaluation.json`.
pub fn cmd_evaluate(cfg: &RunConfig, dataset: &Path, predictions: &Path) -> Result<Evaluation> {
    let stems: Vec<String> =
        list_pngs(&dataset.join("masks"))?.iter().map(|p| stem(p)).collect::<Result<_>>()?;
    if stems.is_empty() {
        return Err(Error::InvalidParameter(format!("no masks in {}", dataset.join("masks").display())));
    }
    let hash = cfg.hash();
    let timestamp = now();
    let per_image: Vec<Option<MetricsReport>> = with_jobs(cfg.jobs, || {
        stems
            .par_iter()
            .map(|s| -> Result<Option<MetricsReport>> {
                let mask_pred = predicted_mask_path(predictions, s);
                let restored = predictions.join(format!("{s}_restored.png"));
                let restored = restored.is_file().then_some(restored);
                if mask_pred.is_none() && restored.is_none() {
                    return Ok(None);
                }
                let mut report = MetricsReport::new(s.clone());
                report.meta.config_hash = hash.clone();
                report.meta.timestamp = timestamp.clone();
                if let Some(p) = mask_pred {
                    let truth = load_mask_png(dataset.join("masks").join(format!("{s}.png")))?;
                    let c = confusion(&load_mask_png(&p)?, &truth)?;
                    report.detection = Some(detection_metrics(&c)?.into());
                }
                if let Some(p) = restored {
                    let clean = load_png(dataset.join("clean").join(format!("{s}.png")))?;
                    report.restoration = Some(RestorationScores::compute(&load_png(&p)?, &clean)?);
                }
                Ok(Some(report))
            })
            .collect::<Result<_>>()
    })??;
    let mut images = Vec::new();
    let mut missing = Vec::new();
    for (s, r) in stems.iter().zip(per_image) {
        match r {
            Some(r) => images.push(r),
            None => missing.push(s.clone()),
        }
    }
    if !missing.is_empty() {
        log::warn!("no predictions for {} image(s): {}", missing.len(), missing.join(", "));
    }
    if images.is_empty() {
        return Err(Error::InvalidParameter(format!("no predictions found in {}", predictions.display())));
    }
    let eval = Evaluation { mean: aggregate(&images)?, images, missing };
    ensure_dir(&cfg.out)?;
    write_json(&eval, &cfg.out.join("evaluation.json"))?;
    Ok(eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_substitution() {
        let argv = expand_template(
            "python3 refine.py --in={image} {mask}  -o {out}",
            Path::new("a b/img.png"),
            Path::new("m.png"),
            Path::new("o.png"),
        );
        assert_eq!(argv, ["python3", "refine.py", "--in=a b/img.png", "m.png", "-o", "o.png"]);
    }
}
