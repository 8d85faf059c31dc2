//! WAV decoding, resampling and fixed-length segmentation.
//!
//! Everything downstream works on a canonical mono [`AudioBuffer`]; the
//! analysis modules additionally assume the buffer has been resampled to
//! [`ANALYSIS_RATE`].

use std::path::Path;

use crate::{Error, Result};

/// Canonical analysis sample rate (Hz). All spectral/HPSS defaults are
/// tuned for this rate; callers resample before analysis.
pub const ANALYSIS_RATE: u32 = 22050;

/// Mono audio: amplitude samples in `[-1, 1]` plus their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    /// Validating constructor: rejects a zero rate and non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParam("sample_rate must be > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParam("samples must be finite".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One tile of the track; segments cover the input in order without overlap.
#[derive(Debug, Clone)]
pub struct Segment {
    pub index: usize,
    pub start_s: f64,
    pub duration_s: f64,
    pub buffer: AudioBuffer,
}

/// Decode a PCM16 or float32 RIFF/WAV file into a mono buffer.
///
/// Multi-channel input is averaged to mono; integer samples are scaled by
/// 1/32768 so full-scale negative is exactly -1.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let reader = hound::WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedWav {
            path: path.into(),
            detail: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0).map_err(|e| wav_err(path, e)))
            .collect::<Result<_>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from).map_err(|e| wav_err(path, e)))
            .collect::<Result<_>>()?,
        (fmt, bits) => {
            return Err(Error::UnsupportedWav {
                path: path.into(),
                detail: format!("{fmt:?} {bits}-bit (only PCM16 and float32 are supported)"),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::UnsupportedWav {
            path: path.into(),
            detail: "non-finite float sample".into(),
        });
    }

    let samples: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| (frame.iter().sum::<f64>() / frame.len() as f64).clamp(-1.0, 1.0))
        .collect();

    AudioBuffer::new(samples, spec.sample_rate)
}

fn wav_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::UnsupportedWav {
            path: path.into(),
            detail: other.to_string(),
        },
    }
}

/// Write a mono buffer as 16-bit PCM.
pub fn write_wav(path: &Path, buf: &AudioBuffer) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in &buf.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

/// Half-width of the sinc kernel, in zero crossings.
const SINC_ZEROS: usize = 32;

/// Windowed-sinc resampler. Identity (bitwise) when rates match; output
/// length is `round(n * target/source)`.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidParam("target_rate must be > 0".into()));
    }
    if target_rate == buf.sample_rate || buf.samples.is_empty() {
        return Ok(AudioBuffer {
            samples: buf.samples.clone(),
            sample_rate: target_rate,
        });
    }

    let src = &buf.samples;
    let n = src.len();
    let ratio = target_rate as f64 / buf.sample_rate as f64;
    let out_len = ((n as f64) * ratio).round().max(1.0) as usize;

    // Anti-aliasing cutoff relative to the input Nyquist, with a small
    // rolloff margin for the transition band.
    let cutoff = ratio.min(1.0) * 0.95;
    let half_width = SINC_ZEROS as f64 / cutoff;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let center = j as f64 / ratio;
        let lo = ((center - half_width).ceil() as isize).max(0) as usize;
        let hi = ((center + half_width).floor() as isize).min(n as isize - 1) as usize;
        let mut acc = 0.0;
        for (m, &x) in src.iter().enumerate().take(hi + 1).skip(lo) {
            let u = m as f64 - center;
            acc += x * cutoff * sinc(cutoff * u) * hann_taper(u / half_width);
        }
        out.push(acc);
    }

    Ok(AudioBuffer {
        samples: out,
        sample_rate: target_rate,
    })
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        let pu = std::f64::consts::PI * u;
        pu.sin() / pu
    }
}

fn hann_taper(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * u).cos())
    }
}

/// Slice the track into `ceil(duration / seg_len_s)` tiles; the final tile
/// may be shorter. Concatenating the tiles reproduces the input exactly.
pub fn segment(buf: &AudioBuffer, seg_len_s: f64) -> Result<Vec<Segment>> {
    if !(seg_len_s > 0.0) {
        return Err(Error::InvalidParam("seg_len_s must be > 0".into()));
    }
    if buf.samples.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let sr = buf.sample_rate;
    let per_seg = ((seg_len_s * sr as f64).round() as usize).max(1);

    Ok(buf
        .samples
        .chunks(per_seg)
        .enumerate()
        .map(|(index, chunk)| Segment {
            index,
            start_s: (index * per_seg) as f64 / sr as f64,
            duration_s: chunk.len() as f64 / sr as f64,
            buffer: AudioBuffer {
                samples: chunk.to_vec(),
                sample_rate: sr,
            },
        })
        .collect())
}
