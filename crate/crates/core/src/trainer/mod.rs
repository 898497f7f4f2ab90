//! A micro MLP trainer with hand-written reverse-mode gradients, used to
//! exercise learnable-ε CRReLU against the baseline activations.

mod compare;
mod data;
mod gradcheck;
mod mlp;
mod optim;
mod probe;
mod tensor;
mod train;

pub use compare::{cell_configs, compare_activations, CompareRow, CompareTable, KindSummary};
pub use data::{
    blobs, load_csv, load_idx, parse_csv, parse_idx_images, parse_idx_labels, two_moons, Dataset, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
};
pub use gradcheck::{gradient_check, rows_away_from_kinks, GradCheck, GRAD_FLOOR};
pub use mlp::{param_count, softmax_cross_entropy, Cache, Gradients, Init, MLPConfig, Mlp};
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use probe::{class_entropy_sum, entropy_probe, ProbeEntry, Stage, MIN_CLASS_SAMPLES};
pub use tensor::Tensor2;
pub use train::{
    evaluate, moving_average, run_dir_name, train, train_model, EpochRecord, LrSchedule, ProbeSnapshot, RunRecord,
    TrainConfig,
};
