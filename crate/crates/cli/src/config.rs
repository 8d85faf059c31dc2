//! Runtime configuration: defaults, TOML file loading, flag overrides.
//!
//! Resolution order is defaults → config file → command-line flags, with
//! later layers winning. The serialized form round-trips losslessly, which
//! is what lets a render manifest pin the exact configuration it ran with.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vizsync_core::avs::AvsParams;
use vizsync_core::generate::InterpMode;
use vizsync_core::genre::{DEFAULT_IMAGE_WEIGHT, DEFAULT_TEXT_WEIGHT};
use vizsync_core::pipeline::AnalysisParams;
use vizsync_core::video_io::{DEFAULT_EXTRACT_TEMPLATE, DEFAULT_MUX_TEMPLATE};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// In-process pixel crossfade (deterministic oracle).
    Crossfade,
    /// Child process speaking the JSON line protocol.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// argv for the external backend; required when kind = "external".
    pub command: Vec<String>,
    /// Per-call timeout for the external backend, in seconds.
    pub timeout_s: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Crossfade,
            command: Vec::new(),
            timeout_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Output frame rate.
    pub fps: f64,
    /// Segment length the track is split into, in seconds.
    pub segment_s: f64,
    /// Prompt conditioning weights handed to the generator backend.
    pub image_weight: f64,
    pub text_weight: f64,
    /// Latent interpolation mode for rendering.
    pub interp: InterpMode,
    /// Key-image dimensions when no seed image is supplied.
    pub key_width: usize,
    pub key_height: usize,
    pub backend: BackendConfig,
    pub analysis: AnalysisParams,
    pub avs: AvsParams,
    /// Encoder command template for `render --mux`.
    pub mux_template: String,
    /// Extractor command template (kept alongside the muxer for symmetry).
    pub extract_template: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            fps: 30.0,
            segment_s: 10.0,
            image_weight: DEFAULT_IMAGE_WEIGHT,
            text_weight: DEFAULT_TEXT_WEIGHT,
            interp: InterpMode::Slerp,
            key_width: 256,
            key_height: 256,
            backend: BackendConfig::default(),
            analysis: AnalysisParams::default(),
            avs: AvsParams::default(),
            mux_template: DEFAULT_MUX_TEMPLATE.to_string(),
            extract_template: DEFAULT_EXTRACT_TEMPLATE.to_string(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let cfg: Config = toml::from_str(&text)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(CliError::input(format!(
                "fps must be > 0, got {}",
                self.fps
            )));
        }
        if !(self.segment_s > 0.0 && self.segment_s.is_finite()) {
            return Err(CliError::input(format!(
                "segment_s must be > 0, got {}",
                self.segment_s
            )));
        }
        if self.key_width == 0 || self.key_height == 0 {
            return Err(CliError::input(
                "key image dimensions must be nonzero".into(),
            ));
        }
        self.avs.validate().map_err(CliError::Core)?;
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = o.$field.clone() { $target = v; })*
            };
        }
        set! {
            fps => self.fps,
            segment_s => self.segment_s,
            image_weight => self.image_weight,
            text_weight => self.text_weight,
            key_width => self.key_width,
            key_height => self.key_height,
            n_fft => self.analysis.n_fft,
            hop => self.analysis.hop,
            n_mels => self.analysis.n_mels,
            kernel_harm => self.analysis.kernel_harm,
            kernel_perc => self.analysis.kernel_perc,
            hpss_power => self.analysis.hpss_power,
            w_perc => self.analysis.w_perc,
            w_harm => self.analysis.w_harm,
            audio_threshold => self.avs.audio_threshold,
            visual_threshold => self.avs.visual_threshold,
            min_gap_s => self.avs.min_gap_s,
            radius => self.avs.radius,
            penalty_scale => self.avs.penalty_scale,
            backend_timeout_s => self.backend.timeout_s,
            mux_template => self.mux_template,
            extract_template => self.extract_template,
        }
        if let Some(mode) = o.interp {
            self.interp = mode;
        }
        if let Some(kind) = o.backend {
            self.backend.kind = kind;
        }
        if let Some(cmd) = &o.backend_command {
            self.backend.command = cmd.split_whitespace().map(str::to_string).collect();
        }
    }
}

fn parse_interp(s: &str) -> Result<InterpMode, String> {
    match s {
        "slerp" => Ok(InterpMode::Slerp),
        "lerp" => Ok(InterpMode::Lerp),
        other => Err(format!(
            "unknown interpolation mode {other:?} (use slerp or lerp)"
        )),
    }
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "crossfade" => Ok(BackendKind::Crossfade),
        "external" => Ok(BackendKind::External),
        other => Err(format!(
            "unknown backend {other:?} (use crossfade or external)"
        )),
    }
}

/// Flag-level overrides, applied on top of the config file. Every tunable
/// default is reachable from here.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Output frame rate
    #[arg(long, global = true)]
    pub fps: Option<f64>,
    /// Segment length in seconds
    #[arg(long, global = true, value_name = "SECONDS")]
    pub segment_s: Option<f64>,
    /// Prompt image-conditioning weight
    #[arg(long, global = true)]
    pub image_weight: Option<f64>,
    /// Prompt text-conditioning weight
    #[arg(long, global = true)]
    pub text_weight: Option<f64>,
    /// Latent interpolation mode: slerp or lerp
    #[arg(long, global = true, value_parser = parse_interp)]
    pub interp: Option<InterpMode>,
    /// Key image width when generating from scratch
    #[arg(long, global = true)]
    pub key_width: Option<usize>,
    /// Key image height when generating from scratch
    #[arg(long, global = true)]
    pub key_height: Option<usize>,
    /// FFT size
    #[arg(long, global = true)]
    pub n_fft: Option<usize>,
    /// Hop size in samples
    #[arg(long, global = true)]
    pub hop: Option<usize>,
    /// Number of mel bands
    #[arg(long, global = true)]
    pub n_mels: Option<usize>,
    /// Harmonic (time-axis) median kernel length
    #[arg(long, global = true)]
    pub kernel_harm: Option<usize>,
    /// Percussive (frequency-axis) median kernel length
    #[arg(long, global = true)]
    pub kernel_perc: Option<usize>,
    /// Soft-mask exponent
    #[arg(long, global = true)]
    pub hpss_power: Option<f64>,
    /// Percussive energy weight
    #[arg(long, global = true)]
    pub w_perc: Option<f64>,
    /// Harmonic energy weight
    #[arg(long, global = true)]
    pub w_harm: Option<f64>,
    /// Audio event threshold (fraction of envelope max)
    #[arg(long, global = true)]
    pub audio_threshold: Option<f64>,
    /// Visual event threshold (mean gray difference)
    #[arg(long, global = true)]
    pub visual_threshold: Option<f64>,
    /// Minimum gap between events, seconds
    #[arg(long, global = true)]
    pub min_gap_s: Option<f64>,
    /// Alignment search radius
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Movement penalty scale
    #[arg(long, global = true)]
    pub penalty_scale: Option<f64>,
    /// Generator backend: crossfade or external
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    /// External backend command line (whitespace-split)
    #[arg(long, global = true, value_name = "CMD")]
    pub backend_command: Option<String>,
    /// External backend per-call timeout, seconds
    #[arg(long, global = true)]
    pub backend_timeout_s: Option<f64>,
    /// Encoder command template for muxing
    #[arg(long, global = true, value_name = "TEMPLATE")]
    pub mux_template: Option<String>,
    /// Extractor command template
    #[arg(long, global = true, value_name = "TEMPLATE")]
    pub extract_template: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_lossless() {
        let cfg = Config::default();
        let text = cfg.to_toml().unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn non_default_values_survive_the_round_trip() {
        let mut cfg = Config {
            fps: 24.0,
            interp: InterpMode::Lerp,
            ..Config::default()
        };
        cfg.backend.kind = BackendKind::External;
        cfg.backend.command = vec!["my-model".into(), "--gpu".into()];
        cfg.avs.penalty_scale = 1e-3;
        cfg.analysis.n_mels = 64;
        let back: Config = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_fills_in_defaults() {
        let cfg: Config = toml::from_str("fps = 24\n[analysis]\nn_mels = 64\n").unwrap();
        assert_eq!(cfg.fps, 24.0);
        assert_eq!(cfg.analysis.n_mels, 64);
        assert_eq!(cfg.analysis.n_fft, 2048);
        assert_eq!(cfg.segment_s, 10.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<Config>("frames_per_second = 30\n").unwrap_err();
        assert!(err.to_string().contains("frames_per_second"));
    }

    #[test]
    fn flags_beat_the_file() {
        let mut cfg: Config = toml::from_str("fps = 24\nsegment_s = 5\n").unwrap();
        let o = Overrides {
            fps: Some(60.0),
            backend: Some(BackendKind::External),
            backend_command: Some("run-model --fast".into()),
            ..Overrides::default()
        };
        cfg.apply(&o);
        assert_eq!(cfg.fps, 60.0);
        assert_eq!(cfg.segment_s, 5.0);
        assert_eq!(cfg.backend.kind, BackendKind::External);
        assert_eq!(cfg.backend.command, vec!["run-model", "--fast"]);
    }

    #[test]
    fn validation_catches_bad_values() {
        let cfg = Config {
            fps: 0.0,
            ..Config::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.avs.penalty_scale = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_match_the_documented_values() {
        let cfg = Config::default();
        assert_eq!(cfg.fps, 30.0);
        assert_eq!(cfg.segment_s, 10.0);
        assert_eq!(cfg.image_weight, 0.70);
        assert_eq!(cfg.text_weight, 0.30);
        assert_eq!(cfg.analysis.w_perc, 0.9);
        assert_eq!(cfg.analysis.w_harm, 0.1);
        assert_eq!(cfg.avs.audio_threshold, 0.3);
        assert_eq!(cfg.avs.min_gap_s, 0.25);
    }
}
