//! End-to-end composition of the analysis stages.
//!
//! Everything here is glue: resample to the analysis rate, split into
//! segments, run the spectral/HPSS/energy chain per segment, and turn the
//! result into per-frame interpolation schedules. The reverse direction —
//! scoring a finished render against its audio — lives here too.

use serde::{Deserialize, Serialize};

use crate::audio_io::{resample, segment, AudioBuffer, ANALYSIS_RATE};
use crate::avs::{audio_events, avs_score, frame_diffs_iter, visual_events, AvsParams, AvsReport};
use crate::energy::{cumulative_energy, frame_energy, frame_schedule, EnergyVector, FrameSchedule};
use crate::generate::Image;
use crate::hpss::hpss;
use crate::spectral::{
    mel_filterbank, mel_from_power, mel_spectrogram, onset_strength, stft, OnsetEnvelope, Window,
};
use crate::Result;

/// Knobs for the audio analysis chain. The defaults are the ones the rest
/// of the crate is tested against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisParams {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub kernel_harm: usize,
    pub kernel_perc: usize,
    pub hpss_power: f64,
    pub w_perc: f64,
    pub w_harm: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            kernel_harm: 31,
            kernel_perc: 31,
            hpss_power: 2.0,
            w_perc: crate::energy::DEFAULT_W_PERC,
            w_harm: crate::energy::DEFAULT_W_HARM,
        }
    }
}

/// One segment's analysis output: the normalized cumulative energy curve
/// and the frame schedule derived from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub index: usize,
    pub start_s: f64,
    pub duration_s: f64,
    pub energy: EnergyVector,
    pub schedule: FrameSchedule,
}

/// The two component mel spectrograms, unnormalized (see [`segment_energy`]).
fn component_mels(
    buf: &AudioBuffer,
    params: &AnalysisParams,
) -> Result<(
    crate::spectral::MelSpectrogram,
    crate::spectral::MelSpectrogram,
)> {
    let spec = stft(buf, params.n_fft, params.hop, Window::Hann)?;
    let separated = hpss(
        &spec,
        params.kernel_harm,
        params.kernel_perc,
        params.hpss_power,
    )?;
    let fb = mel_filterbank(
        params.n_mels,
        params.n_fft,
        buf.sample_rate,
        0.0,
        buf.sample_rate as f64 / 2.0,
    )?;
    let mel_perc = mel_from_power(
        &separated.percussive_mag.mapv(|m| m * m),
        &fb,
        params.hop,
        buf.sample_rate,
        false,
    )?;
    let mel_harm = mel_from_power(
        &separated.harmonic_mag.mapv(|m| m * m),
        &fb,
        params.hop,
        buf.sample_rate,
        false,
    )?;
    Ok((mel_perc, mel_harm))
}

/// Harmonic/percussive-weighted cumulative energy for one buffer.
///
/// The component mel spectrograms are left unnormalized so the percussive
/// and harmonic weights act on physically comparable magnitudes; the
/// cumulative curve is normalized to [0, 1] afterwards anyway.
pub fn segment_energy(buf: &AudioBuffer, params: &AnalysisParams) -> Result<EnergyVector> {
    let (mel_perc, mel_harm) = component_mels(buf, params)?;
    let raw = frame_energy(&mel_perc, &mel_harm, params.w_perc, params.w_harm)?;
    cumulative_energy(&raw)
}

/// Everything the `analyze` report shows for one segment: the per-frame
/// component energy series, a per-band summary of the normalized mel
/// spectrogram, and the cumulative energy curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentDetail {
    /// Summed harmonic mel energy per frame.
    pub harmonic: Vec<f64>,
    /// Summed percussive mel energy per frame.
    pub percussive: Vec<f64>,
    pub frame_times_s: Vec<f64>,
    /// Mean of each normalized mel band over time (peak cell = 1).
    pub mel_band_means: Vec<f64>,
    pub energy: EnergyVector,
}

pub fn segment_detail(buf: &AudioBuffer, params: &AnalysisParams) -> Result<SegmentDetail> {
    let (mel_perc, mel_harm) = component_mels(buf, params)?;
    let band_sum = |mel: &crate::spectral::MelSpectrogram| -> Vec<f64> {
        (0..mel.n_frames())
            .map(|t| mel.bands.column(t).sum())
            .collect()
    };
    let harmonic = band_sum(&mel_harm);
    let percussive = band_sum(&mel_perc);
    let frame_times_s = mel_perc.frame_times_s();

    let spec = stft(buf, params.n_fft, params.hop, Window::Hann)?;
    let fb = mel_filterbank(
        params.n_mels,
        params.n_fft,
        buf.sample_rate,
        0.0,
        buf.sample_rate as f64 / 2.0,
    )?;
    let mel = mel_spectrogram(&spec, &fb, true)?;
    let mel_band_means = (0..mel.n_mels())
        .map(|b| mel.bands.row(b).mean().unwrap_or(0.0))
        .collect();

    let raw = frame_energy(&mel_perc, &mel_harm, params.w_perc, params.w_harm)?;
    let energy = cumulative_energy(&raw)?;
    Ok(SegmentDetail {
        harmonic,
        percussive,
        frame_times_s,
        mel_band_means,
        energy,
    })
}

/// Onset envelope at the analysis rate (used for audio event extraction).
pub fn onset_envelope(buf: &AudioBuffer, params: &AnalysisParams) -> Result<OnsetEnvelope> {
    let spec = stft(buf, params.n_fft, params.hop, Window::Hann)?;
    let fb = mel_filterbank(
        params.n_mels,
        params.n_fft,
        buf.sample_rate,
        0.0,
        buf.sample_rate as f64 / 2.0,
    )?;
    let mel = mel_spectrogram(&spec, &fb, true)?;
    onset_strength(&mel)
}

/// Resample to the analysis rate, split into `segment_s`-second segments,
/// and compute each segment's energy curve and frame schedule.
pub fn plan_segments(
    buf: &AudioBuffer,
    params: &AnalysisParams,
    fps: f64,
    segment_s: f64,
) -> Result<Vec<SegmentPlan>> {
    let work = resample(buf, ANALYSIS_RATE)?;
    let segments = segment(&work, segment_s)?;
    segments
        .iter()
        .map(|seg| {
            let energy = segment_energy(&seg.buffer, params)?;
            let mut schedule = frame_schedule(&energy, fps, seg.duration_s)?;
            schedule.segment_index = seg.index;
            Ok(SegmentPlan {
                index: seg.index,
                start_s: seg.start_s,
                duration_s: seg.duration_s,
                energy,
                schedule,
            })
        })
        .collect()
}

/// Audio and video durations are allowed to disagree by this much before
/// the evaluation attaches a warning and truncates to the overlap.
pub const DURATION_TOLERANCE_S: f64 = 0.25;

/// Score a rendered frame sequence against its audio track.
///
/// Extracts onset events from the audio and difference events from the
/// frames, then combines them via [`avs_score`]. When the two media
/// disagree on duration by more than [`DURATION_TOLERANCE_S`] the report
/// carries a warning and both event series are truncated to the
/// overlapping span.
pub fn evaluate_sync<I>(
    audio: &AudioBuffer,
    frames: I,
    fps: f64,
    avs: &AvsParams,
    analysis: &AnalysisParams,
) -> Result<AvsReport>
where
    I: IntoIterator<Item = Result<Image>>,
{
    avs.validate()?;
    let work = resample(audio, ANALYSIS_RATE)?;
    let env = onset_envelope(&work, analysis)?;
    let audio_ev = audio_events(&env, avs.audio_threshold, avs.min_gap_s)?;

    let diffs = frame_diffs_iter(frames)?;
    let (visual_ev, stats) = visual_events(&diffs, fps, avs.visual_threshold, avs.min_gap_s)?;

    let audio_dur = work.duration_s();
    let video_dur = (diffs.len() + 1) as f64 / fps;
    let mut audio_ev = audio_ev;
    let mut visual_ev = visual_ev;
    let mut warning = None;
    if (audio_dur - video_dur).abs() > DURATION_TOLERANCE_S {
        let overlap = audio_dur.min(video_dur);
        audio_ev = audio_ev.truncated(overlap);
        visual_ev = visual_ev.truncated(overlap);
        warning = Some(format!(
            "audio is {audio_dur:.2} s but video is {video_dur:.2} s; \
             scored the first {overlap:.2} s only"
        ));
    }

    let mut report = avs_score(&audio_ev, &visual_ev, &stats, avs)?;
    report.warning = warning;
    Ok(report)
}
