//! Iris recognition with circular pupil-concentric segmentation, Haar-Hilbert
//! (HH1, HH2) and Log-Gabor (LGE) binary encoders, Hamming and MDSS matching,
//! and a biometric evaluation suite (EER, ROC, decidability, Fisher ratio,
//! degrees of freedom, POFA/OFA/OFR).

pub mod code;
pub mod encoders;
pub mod evaluation;
pub mod experiment;
pub mod gray;
pub mod matching;
pub mod report;
pub mod segmentation;
pub mod synth;
pub mod transforms;

pub use code::{EncoderKind, IrisCode};
pub use encoders::{Encoder, EncoderConfig};
pub use evaluation::{DistributionStats, ScoreSet};
pub use gray::GrayImage;
pub use matching::{EnrolledIdentity, MatchScore};
pub use segmentation::{segment, PolarIrisSegment, PupilCircle, SegmentationResult};
