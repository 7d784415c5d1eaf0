//! Controlled comparison: one architecture, one seed set, one split, three
//! input representations.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{
    assign_splits, build_synth_dataset, load_item, synth_item, DatasetItem, ItemSource, Manifest, Split, SplitSpec,
    SynthConfig,
};
use crate::error::{Error, Result};
use crate::image::{DomainKind, ImageTensor};
use crate::metrics::{evaluate, EvalReport};
use crate::nn::{build_model, predict, train_with_progress, EpochRecord, Example, Model, ModelConfig, TrainConfig, TrainHistory};
use crate::wavelet::Wavelet;

/// Spatial, Haar and db2, in table order.
pub const COMPARE_DOMAINS: [DomainKind; 3] = [
    DomainKind::Spatial,
    DomainKind::Wavelet(Wavelet::Haar),
    DomainKind::Wavelet(Wavelet::Db2),
];

/// Train, validation and test examples with pixels loaded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitData {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

/// Pixels of a manifest item: decoded from disk or regenerated from its seed.
pub fn load_example(item: &DatasetItem, base_dir: &Path, synth: &SynthConfig) -> Result<Example> {
    let image = match item.source {
        ItemSource::Synthetic { seed } => synth_item(synth, seed, item.label)?,
        ItemSource::Path(_) => load_item(item, base_dir)?,
    };
    Ok(Example {
        image,
        label: item.label,
    })
}

impl SplitData {
    fn from_assignment(examples: Vec<Example>, splits: &[Split]) -> Self {
        let mut out = SplitData::default();
        for (e, s) in examples.into_iter().zip(splits) {
            match s {
                Split::Train => out.train.push(e),
                Split::Val => out.val.push(e),
                Split::Test => out.test.push(e),
            }
        }
        out
    }

    /// A freshly generated balanced synthetic dataset, split by `spec`.
    pub fn from_synth(n_per_class: usize, cfg: &SynthConfig, data_seed: u64, spec: &SplitSpec) -> Result<Self> {
        let samples = build_synth_dataset(n_per_class, cfg, data_seed)?;
        let keys: Vec<_> = samples.iter().map(|s| (s.item.label, s.item.class_tag.clone())).collect();
        let splits = assign_splits(&keys, spec)?;
        let examples = samples
            .into_iter()
            .map(|s| Example {
                image: s.image,
                label: s.item.label,
            })
            .collect();
        Ok(Self::from_assignment(examples, &splits))
    }

    /// Loads every manifest item. Existing split annotations are kept when
    /// every entry has one; otherwise the items are split with `spec`.
    pub fn from_manifest(manifest: &Manifest, base_dir: &Path, synth: &SynthConfig, spec: &SplitSpec) -> Result<Self> {
        if manifest.entries.is_empty() {
            return Err(Error::EmptyDataset("manifest has no entries".into()));
        }
        let splits: Vec<Split> = if manifest.is_split() {
            manifest.entries.iter().map(|e| e.split.expect("checked")).collect()
        } else {
            let keys: Vec<_> = manifest
                .entries
                .iter()
                .map(|e| (e.item.label, e.item.class_tag.clone()))
                .collect();
            assign_splits(&keys, spec)?
        };
        let examples = manifest
            .entries
            .iter()
            .map(|e| load_example(&e.item, base_dir, synth))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_assignment(examples, &splits))
    }

    pub fn require_nonempty(&self) -> Result<()> {
        for (name, set) in [("training", &self.train), ("validation", &self.val), ("test", &self.test)] {
            if set.is_empty() {
                return Err(Error::EmptyDataset(format!("{name} split is empty")));
            }
        }
        Ok(())
    }
}

/// Scores `examples` with `model` and assembles the evaluation report.
pub fn evaluate_model(model: &Model, examples: &[Example], domain: DomainKind) -> Result<EvalReport> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset("nothing to evaluate".into()));
    }
    let images: Vec<ImageTensor> = examples.iter().map(|e| e.image.clone()).collect();
    let labels: Vec<u8> = examples.iter().map(|e| e.label.as_u8()).collect();
    let scores = predict(model, &images, domain)?;
    evaluate(&labels, &scores)
}

/// Outcome of training and testing one domain.
#[derive(Debug, Clone)]
pub struct DomainRun {
    pub domain: DomainKind,
    pub param_count: usize,
    pub history: TrainHistory,
    pub report: EvalReport,
    pub model: Model,
}

pub fn run_domain(
    data: &SplitData,
    domain: DomainKind,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<DomainRun> {
    data.require_nonempty()?;
    let init = build_model(mcfg)?;
    let (model, history) = train_with_progress(&init, &data.train, &data.val, tcfg, domain, on_epoch)?;
    let report = evaluate_model(&model, &data.test, domain)?;
    Ok(DomainRun {
        domain,
        param_count: model.param_count(),
        history,
        report,
        model,
    })
}

/// Test metrics of the three domains.
///
/// For orientation only, the full-scale study this experiment scales down
/// (ResNet50 on 1024px faces against StyleGAN2 output) reported accuracy
/// 81.5 / 93.8 / 95.1 %, AUC 0.85 / 0.96 / 0.97 and F1 0.802 / 0.872 /
/// 0.886 for spatial / Haar / db2. Those figures depend on that data and
/// model and are not targets here; only the ordering is expected to carry
/// over.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<DomainRun>,
}

#[derive(Debug)]
struct Row<'a> {
    domain: &'a str,
    accuracy: f64,
    f1: f64,
    auc: f64,
    ap: f64,
}

impl Comparison {
    pub fn get(&self, domain: DomainKind) -> Option<&DomainRun> {
        self.runs.iter().find(|r| r.domain == domain)
    }

    fn rows(&self) -> Vec<Row<'_>> {
        self.runs
            .iter()
            .map(|r| Row {
                domain: r.domain.name(),
                accuracy: r.report.accuracy,
                f1: r.report.f1,
                auc: r.report.auc,
                ap: r.report.average_precision,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("domain,accuracy,f1,auc,ap\n");
        for r in self.rows() {
            let _ = writeln!(out, "{},{:.6},{:.6},{:.6},{:.6}", r.domain, r.accuracy, r.f1, r.auc, r.ap);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<8} {:>9} {:>7} {:>7} {:>7}\n", "domain", "accuracy", "f1", "auc", "ap");
        for r in self.rows() {
            let _ = writeln!(
                out,
                "{:<8} {:>9.4} {:>7.4} {:>7.4} {:>7.4}",
                r.domain, r.accuracy, r.f1, r.auc, r.ap
            );
        }
        out
    }
}

/// Trains and tests one model per entry of [`COMPARE_DOMAINS`]. Only the
/// domain differs between runs.
pub fn compare(
    data: &SplitData,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    mut on_epoch: impl FnMut(DomainKind, &EpochRecord),
) -> Result<Comparison> {
    let runs = COMPARE_DOMAINS
        .iter()
        .map(|&d| run_domain(data, d, mcfg, tcfg, |r| on_epoch(d, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn tiny() -> (SplitData, ModelConfig, TrainConfig) {
        let synth = SynthConfig { side: 16, ..Default::default() };
        let data = SplitData::from_synth(10, &synth, 1, &SplitSpec::new(0.6, 0.2, 0.2, 1).unwrap()).unwrap();
        let mcfg = ModelConfig {
            input_side: 16,
            channels_per_block: vec![2, 4],
            ..Default::default()
        };
        let tcfg = TrainConfig { max_epochs: 2, ..Default::default() };
        (data, mcfg, tcfg)
    }

    #[test]
    fn split_sizes_and_balance() {
        let (data, _, _) = tiny();
        assert_eq!((data.train.len(), data.val.len(), data.test.len()), (12, 4, 4));
        assert_eq!(data.test.iter().filter(|e| e.label == Label::Fake).count(), 2);
    }

    #[test]
    fn table_has_three_rows_and_parity() {
        let (data, mcfg, tcfg) = tiny();
        let cmp = compare(&data, &mcfg, &tcfg, |_, _| {}).unwrap();
        let csv = cmp.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "domain,accuracy,f1,auc,ap");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("spatial,") && lines[2].starts_with("haar,") && lines[3].starts_with("db2,"));
        let counts: Vec<_> = cmp.runs.iter().map(|r| r.param_count).collect();
        assert!(counts.iter().all(|&c| c == counts[0]));
        assert_eq!(cmp.to_text().lines().count(), 4);
    }

    #[test]
    fn manifest_synthetic_items_regenerate() {
        let synth = SynthConfig { side: 16, ..Default::default() };
        let samples = build_synth_dataset(3, &synth, 4).unwrap();
        let manifest = Manifest::from_items(samples.iter().map(|s| s.item.clone()));
        let spec = SplitSpec::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0).unwrap();
        let data = SplitData::from_manifest(&manifest, Path::new("."), &synth, &spec).unwrap();
        let n = data.train.len() + data.val.len() + data.test.len();
        assert_eq!(n, 6);
        let all: Vec<_> = data.train.iter().chain(&data.val).chain(&data.test).collect();
        assert!(samples.iter().all(|s| all.iter().any(|e| e.image == s.image)));
    }
}
