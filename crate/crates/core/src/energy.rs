//! Audio energy vectors: weighted percussive/harmonic band energy per frame,
//! its normalised cumulative sum, and the per-video-frame interpolation
//! schedule sampled from it.

use crate::spectral::MelSpectrogram;
use crate::{Error, Result};

/// Default mix: percussive content dominates the schedule.
pub const DEFAULT_W_PERC: f64 = 0.9;
pub const DEFAULT_W_HARM: f64 = 0.1;

/// Per-analysis-frame weighted energy before accumulation.
#[derive(Debug, Clone)]
pub struct RawEnergy {
    pub values: Vec<f64>,
    pub frame_times_s: Vec<f64>,
    /// (w_perc, w_harm) used to produce `values`.
    pub weights: (f64, f64),
}

/// Normalised cumulative energy: starts at 0, ends at 1, nondecreasing.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EnergyVector {
    pub values: Vec<f64>,
    pub frame_times_s: Vec<f64>,
    pub weights: (f64, f64),
    /// True when the segment was silent and a linear 0→1 ramp was
    /// substituted.
    pub fallback: bool,
}

/// Interpolation parameter per output video frame of one segment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FrameSchedule {
    pub ts: Vec<f64>,
    pub fps: f64,
    pub segment_index: usize,
}

impl FrameSchedule {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// A uniform 0→1 ramp with the same frame count — the baseline schedule
    /// that ignores the audio.
    pub fn linear(n_frames: usize, fps: f64, segment_index: usize) -> Result<Self> {
        if n_frames < 2 {
            return Err(Error::InvalidParam(format!(
                "schedule needs at least 2 frames, got {n_frames}"
            )));
        }
        let ts = (0..n_frames)
            .map(|j| j as f64 / (n_frames - 1) as f64)
            .collect();
        Ok(FrameSchedule {
            ts,
            fps,
            segment_index,
        })
    }
}

/// Weighted per-frame band energy `w_perc·Σ mel_perc + w_harm·Σ mel_harm`.
pub fn frame_energy(
    mel_perc: &MelSpectrogram,
    mel_harm: &MelSpectrogram,
    w_perc: f64,
    w_harm: f64,
) -> Result<RawEnergy> {
    if mel_perc.n_frames() != mel_harm.n_frames() {
        return Err(Error::ShapeMismatch(format!(
            "percussive has {} frames, harmonic {}",
            mel_perc.n_frames(),
            mel_harm.n_frames()
        )));
    }
    if w_perc < 0.0 || w_harm < 0.0 || (w_perc == 0.0 && w_harm == 0.0) {
        return Err(Error::InvalidParam(format!(
            "weights must be nonnegative and not both zero, got ({w_perc}, {w_harm})"
        )));
    }
    let values = (0..mel_perc.n_frames())
        .map(|t| w_perc * mel_perc.bands.column(t).sum() + w_harm * mel_harm.bands.column(t).sum())
        .collect();
    Ok(RawEnergy {
        values,
        frame_times_s: mel_perc.frame_times_s(),
        weights: (w_perc, w_harm),
    })
}

/// Inclusive prefix sums of the raw energy, shifted to start at 0 and scaled
/// to end at 1. An all-zero segment degrades to a linear ramp with the
/// `fallback` flag set.
pub fn cumulative_energy(raw: &RawEnergy) -> Result<EnergyVector> {
    if raw.values.is_empty() {
        return Err(Error::EmptySequence);
    }
    if raw.values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParam(
            "raw energy must be finite and nonnegative".into(),
        ));
    }
    let n = raw.values.len();
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &v in &raw.values {
        acc += v;
        cum.push(acc);
    }
    let span = cum[n - 1] - cum[0];
    let (values, fallback) = if span > 0.0 {
        (cum.iter().map(|c| (c - cum[0]) / span).collect(), false)
    } else {
        let ramp = if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
        };
        (ramp, true)
    };
    Ok(EnergyVector {
        values,
        frame_times_s: raw.frame_times_s.clone(),
        weights: raw.weights,
        fallback,
    })
}

/// Sample the cumulative energy at each output video frame's time by linear
/// interpolation; endpoints are pinned to exactly 0 and 1.
pub fn frame_schedule(ev: &EnergyVector, fps: f64, duration_s: f64) -> Result<FrameSchedule> {
    if ev.values.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(fps > 0.0) || !(duration_s > 0.0) {
        return Err(Error::InvalidParam(format!(
            "fps and duration must be > 0, got fps={fps} duration={duration_s}"
        )));
    }
    let n_out = (fps * duration_s).round() as usize;
    if n_out < 2 {
        return Err(Error::InvalidParam(format!(
            "schedule needs at least 2 frames; fps={fps} duration={duration_s} yields {n_out}"
        )));
    }

    let times = &ev.frame_times_s;
    let vals = &ev.values;
    let mut ts = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let tau = duration_s * j as f64 / (n_out - 1) as f64;
        ts.push(interp(times, vals, tau));
    }
    ts[0] = 0.0;
    let last = n_out - 1;
    ts[last] = 1.0;
    // Guard against float dust above 1 before the pinned endpoint.
    for t in ts.iter_mut() {
        *t = t.clamp(0.0, 1.0);
    }
    Ok(FrameSchedule {
        ts,
        fps,
        segment_index: 0,
    })
}

/// Piecewise-linear interpolation with clamped extrapolation.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // xs is an increasing frame-time grid; binary-search the interval.
    let mut hi = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    if hi == 0 {
        hi = 1;
    }
    let lo = hi - 1;
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + w * (ys[hi] - ys[lo])
}
