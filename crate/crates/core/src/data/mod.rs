//! Dataset construction: ingestion, manifests, stratified splits,
//! augmentation and the synthetic real/fake generator.

mod augment;
mod dataset;
mod split;
mod synth;

pub use augment::{augment, AugmentConfig, AugmentParams};
pub use dataset::{
    ingest_directory, load_item, DatasetItem, IngestReport, ItemSource, Label, Manifest,
    ManifestEntry, ManifestRecord, SkipRecord, Split,
};
pub use split::{apportion, assign_splits, split_dataset, SplitOutput, SplitSpec};
pub use synth::{
    build_synth_dataset, item_seed, synth_fake, synth_item, synth_real, SynthConfig, SynthSample,
    SYNTH_CLASS_TAG,
};
