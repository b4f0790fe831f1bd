pub mod error;
pub mod fixedpoint;
pub mod formats;
pub mod fpchop;
pub mod intquant;
pub mod mathemu;
pub mod notation;
pub mod quantizer;
pub mod rng;
pub mod rounding;

pub use error::{Error, Result};
pub use fixedpoint::{FixedFormat, FixedQuantizer};
pub use mathemu::{lookup, registry, FunctionEntry, MathEmu};
pub use intquant::{calibrate, IntQuantConfig, IntQuantParams, IntQuantizer};
pub use formats::{FloatFormat, FormatParams};
pub use fpchop::{chop_array, chop_value, decompose, flip_bit, Chop, ChopConfig, Decomposition, Storage};
pub use notation::QuantSpec;
pub use quantizer::{QuantOptions, Quantizer};
pub use rng::{Draw, DrawStream, ElementDraws};
pub use rounding::{round_integer, RoundingMode};
