//! Music-to-video synchronisation engine.
//!
//! Turns a song plus seed images into an interpolation-driven visualiser
//! whose frame transitions follow the music's harmonic/percussive energy,
//! and scores any rendered video's synchrony against the audio with the
//! AVS (audio-visual synchrony) metric.
//!
//! The pipeline, end to end:
//!
//! 1. [`audio_io`] decodes a WAV, resamples it to the analysis rate and
//!    slices it into fixed-length segments.
//! 2. [`spectral`] computes STFT, mel spectrograms and onset envelopes.
//! 3. [`hpss`] splits the spectrogram into harmonic and percussive parts
//!    by median filtering.
//! 4. [`energy`] folds the weighted component energies into a cumulative
//!    0..1 vector and samples it into a per-frame interpolation schedule.
//! 5. [`genre`] maps caption text to one of 23 genres and retrieves the
//!    matching art-style description.
//! 6. [`generate`] interpolates key images through a latent codec to
//!    produce the video frames.
//! 7. [`video_io`] persists frames and muxes them with the audio track.
//! 8. [`avs`] extracts audio beat events and visual transition events,
//!    aligns them with [`dtw`], and emits the synchrony score.

// Parameter checks are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`
// the negation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio_io;
pub mod avs;
pub mod dtw;
pub mod energy;
mod error;
pub mod generate;
pub mod genre;
pub mod hpss;
pub mod pipeline;
pub mod spectral;
pub mod video_io;

pub use error::{Error, Result};
