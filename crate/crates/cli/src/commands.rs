use std::path::{Path, PathBuf};

use wavefp_core::data::{assign_splits, build_synth_dataset, ItemSource, Manifest, ManifestEntry, Split};
use wavefp_core::experiment::{compare, evaluate_model, run_domain, Comparison, SplitData, COMPARE_DOMAINS};
use wavefp_core::image::{load_image, resize_bilinear, save_png, subband_mosaic, DomainKind, ImageTensor};
use wavefp_core::metrics::EvalReport;
use wavefp_core::nn::{load_model, save_model, EpochRecord, Example};
use wavefp_core::wavelet::{BoundaryMode, Wavelet};

use crate::config::RunConfig;
use crate::CliError;

/// Progress lines go to standard error unless silenced.
#[derive(Debug, Clone, Copy)]
pub struct Reporter {
    pub quiet: bool,
}

impl Reporter {
    pub fn line(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn epoch(&self, domain: DomainKind, r: &EpochRecord) {
        self.line(format!(
            "[{domain}] epoch {:>3}  train {:.4}  val {:.4}  acc {:.3}  lr {:.1e}",
            r.epoch, r.train_loss, r.val_loss, r.val_acc, r.lr
        ));
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Nearest even dimensions not larger than the input (at least 2).
fn even_size(img: &ImageTensor) -> Result<ImageTensor, CliError> {
    let (h, w, _) = img.shape();
    let (eh, ew) = ((h & !1).max(2), (w & !1).max(2));
    if (eh, ew) == (h, w) {
        Ok(img.clone())
    } else {
        Ok(resize_bilinear(img, eh, ew)?)
    }
}

/// Writes the sub-band mosaic of `input`; with several levels, each level
/// decomposes the LL quadrant of the previous one. Returns the files written.
pub fn cmd_decompose(
    input: &Path,
    wavelet: Wavelet,
    levels: usize,
    mode: BoundaryMode,
    output: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    if levels == 0 {
        return Err(CliError::Usage("levels must be at least 1".into()));
    }
    let fb = wavelet.filter_bank();
    let mut current = even_size(&load_image(input)?)?;
    let mut written = Vec::new();
    for level in 1..=levels {
        if current.height() < 2 || current.width() < 2 {
            return Err(CliError::Usage(format!("image too small for {levels} levels")));
        }
        let mosaic = subband_mosaic(&current, &fb, mode)?;
        let path = if levels == 1 {
            output.to_path_buf()
        } else {
            let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("mosaic");
            output.with_file_name(format!("{stem}_L{level}.png"))
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        save_png(&mosaic, &path)?;
        written.push(path);
        let (h, w, c) = mosaic.shape();
        let (qh, qw) = (h / 2, w / 2);
        let mut ll = Vec::with_capacity(qh * qw * c);
        for y in 0..qh {
            for x in 0..qw {
                for ch in 0..c {
                    ll.push(mosaic.get(y, x, ch));
                }
            }
        }
        current = ImageTensor::new(qh, qw, c, ll)?;
        if level < levels {
            current = even_size(&current)?;
        }
    }
    Ok(written)
}

/// Writes `n_per_class` real and fake PNGs plus `manifest.jsonl` into `out`.
pub fn cmd_synth(cfg: &RunConfig, n_per_class: usize, out: &Path) -> Result<PathBuf, CliError> {
    let samples = build_synth_dataset(n_per_class, &cfg.synth, cfg.seed)?;
    let images_dir = out.join("images");
    ensure_dir(&images_dir)?;
    let mut manifest = Manifest::default();
    let mut counters = [0usize; 2];
    for s in samples {
        let label = s.item.label;
        let idx = &mut counters[label.as_u8() as usize];
        let name = format!("{}_{:05}.png", if label.as_u8() == 1 { "fake" } else { "real" }, *idx);
        *idx += 1;
        save_png(&s.image, &images_dir.join(&name))?;
        let mut item = s.item;
        item.source = ItemSource::Path(PathBuf::from("images").join(name));
        manifest.entries.push(ManifestEntry { item, split: None });
    }
    let path = out.join("manifest.jsonl");
    manifest.save(&path)?;
    Ok(path)
}

/// Annotates every manifest entry with a split and writes it to `output`.
pub fn cmd_split(cfg: &RunConfig, manifest_path: &Path, output: &Path) -> Result<[usize; 3], CliError> {
    let mut manifest = Manifest::load(manifest_path)?;
    let keys: Vec<_> = manifest
        .entries
        .iter()
        .map(|e| (e.item.label, e.item.class_tag.clone()))
        .collect();
    let splits = assign_splits(&keys, &cfg.split)?;
    let mut counts = [0usize; 3];
    for (e, s) in manifest.entries.iter_mut().zip(splits) {
        counts[s as usize] += 1;
        e.split = Some(s);
    }
    manifest.save(output)?;
    Ok(counts)
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// The dataset a run config points at, split into train/val/test.
pub fn load_data(cfg: &RunConfig) -> Result<SplitData, CliError> {
    let data = match &cfg.manifest {
        Some(path) => {
            let manifest = Manifest::load(path)?;
            SplitData::from_manifest(&manifest, &base_dir(path), &cfg.synth, &cfg.split)?
        }
        None => SplitData::from_synth(cfg.n_per_class, &cfg.synth, cfg.seed, &cfg.split)?,
    };
    Ok(data)
}

pub struct TrainOutcome {
    pub weights: PathBuf,
    pub history: PathBuf,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

pub fn cmd_train(cfg: &RunConfig, rep: Reporter) -> Result<TrainOutcome, CliError> {
    let data = load_data(cfg)?;
    data.require_nonempty()?;
    let run = run_domain(&data, cfg.domain, &cfg.model, &cfg.train, |r| rep.epoch(cfg.domain, r))?;
    ensure_dir(&cfg.output_dir)?;
    let weights = cfg.output_dir.join("model.wgfd");
    let history = cfg.output_dir.join("history.csv");
    save_model(&run.model, &weights)?;
    write(&history, run.history.to_csv())?;
    let best = run.history.best_epoch().expect("at least one epoch");
    Ok(TrainOutcome {
        weights,
        history,
        best_epoch: best.epoch,
        best_val_loss: best.val_loss,
    })
}

fn write_report(report: &EvalReport, dir: &Path, stem: &str, title: &str) -> Result<(), CliError> {
    write(&dir.join(format!("{stem}.json")), report.to_json())?;
    write(&dir.join(format!("{stem}_roc.csv")), report.roc.to_csv())?;
    write(&dir.join(format!("{stem}_roc.svg")), report.roc.to_svg(title))?;
    Ok(())
}

/// Scores one split of the configured dataset with a saved model.
pub fn cmd_eval(cfg: &RunConfig, weights: &Path, split: Split) -> Result<EvalReport, CliError> {
    let model = load_model(weights)?;
    if model.config().input_side != cfg.side {
        return Err(CliError::Usage(format!(
            "weights expect side {}, config has side {}",
            model.config().input_side,
            cfg.side
        )));
    }
    let data = load_data(cfg)?;
    let examples: &[Example] = match split {
        Split::Train => &data.train,
        Split::Val => &data.val,
        Split::Test => &data.test,
    };
    if examples.is_empty() {
        return Err(CliError::Usage(format!("{split:?} split is empty").to_lowercase()));
    }
    let report = evaluate_model(&model, examples, cfg.domain)?;
    ensure_dir(&cfg.output_dir)?;
    write_report(&report, &cfg.output_dir, "report", &format!("ROC ({})", cfg.domain))?;
    Ok(report)
}

/// Trains and tests spatial, Haar and db2 models on one split and writes
/// the comparison table plus per-domain histories and reports.
pub fn cmd_compare(cfg: &RunConfig, rep: Reporter) -> Result<Comparison, CliError> {
    let data = load_data(cfg)?;
    data.require_nonempty()?;
    let cmp = compare(&data, &cfg.model, &cfg.train, |d, r| rep.epoch(d, r))?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    write(&dir.join("comparison.csv"), cmp.to_csv())?;
    write(&dir.join("comparison.txt"), cmp.to_text())?;
    for d in COMPARE_DOMAINS {
        let run = cmp.get(d).expect("every domain ran");
        write(&dir.join(format!("history_{d}.csv")), run.history.to_csv())?;
        write_report(&run.report, dir, &format!("report_{d}"), &format!("ROC ({d})"))?;
    }
    Ok(cmp)
}
