//! Language modelling on top of iterative layers.
//!
//! A corpus is tokenized by words or characters, laid out in contiguous
//! lanes and consumed in unroll windows. The model embeds tokens, runs them
//! through a stack of iterative layers with dropout on the connections
//! between layers, and predicts the next token with a softmax. Training is
//! plain minibatch SGD with global-norm clipping and a step decay.

mod batch;
mod checkpoint;
mod config;
mod corpus;
mod model;
pub mod synth;
mod train;

pub use batch::{batchify, BatchedCorpus, Window};
pub use checkpoint::{data_path, Checkpoint, TensorEntry, FORMAT_VERSION};
pub use config::{dropout_mask, lr_schedule, TrainConfig};
pub use corpus::{load_corpus, load_split, tokenize, Corpus, TokenMode, Vocab, EOS, UNK};
pub use model::{LanguageModel, Phase, WindowPass};
pub use train::{
    evaluate, evaluate_perplexity, train, Control, EpochRecord, EpochReport, EvalStats, OutputDir, TrainSummary, Trainer,
    BEST_CHECKPOINT, LAST_CHECKPOINT, LOG_FILE, METRICS_FILE,
};
