pub mod audit;
pub mod ckpt;
pub mod cli;
pub mod corpus_io;
pub mod dedup;
pub mod hash;
pub mod packing;
pub mod progress;
pub mod quality;
pub mod stats;
pub mod tokenizer;
