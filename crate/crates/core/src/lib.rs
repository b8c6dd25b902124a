//! Multi-level dictionary compression for bi-level images.
//!
//! Images are binarized, padded to a multiple of 16 and cut into 16×16
//! blocks. Each block is coded against pattern dictionaries trained at block
//! sides 16, 8, 4 and 2, falling back to smaller blocks when a pattern is
//! missing. Codewords come from per-image canonical Huffman books.
//!
//! Statistics types are generic over the float type; the aliases at the crate
//! root fix it to `f64`.

pub mod analysis;
pub mod bench;
pub mod bitstream;
pub mod codec;
pub mod dictionary;
pub mod error;
pub mod huffman;
pub mod imgproc;
pub mod patchkey;
pub mod scalar;
mod wire;

pub use codec::{decode, decode_bytes, encode, encode_to_bytes, CompressedContainer, Symbol};
pub use dictionary::{prune, Dictionary, DictionarySet, PrunePolicy, TrainerConfig};
pub use error::{Error, Result};
pub use imgproc::{BinaryImage, GrayImage};
pub use patchkey::{Level, PatchKey};
pub use scalar::Scalar;

pub type ConvergenceMonitor = dictionary::ConvergenceMonitor<f64>;
pub type TrainerState = dictionary::TrainerState<f64>;
pub type TrainedModel = dictionary::TrainedModel<f64>;
pub type MassCurve = analysis::MassCurve<f64>;
pub type LogHistogram = analysis::LogHistogram<f64>;
