use std::path::Path;

use vizsync_core::audio_io::read_wav;
use vizsync_core::pipeline::plan_segments;

use crate::config::Config;
use crate::CliError;

pub fn run(cfg: &Config, audio: &Path, out: &Path, stdout: bool) -> Result<(), CliError> {
    let buf = read_wav(audio)?;
    let plans = plan_segments(&buf, &cfg.analysis, cfg.fps, cfg.segment_s)?;
    let report: Vec<_> = plans
        .iter()
        .map(|p| {
            serde_json::json!({
                "index": p.index,
                "start_s": p.start_s,
                "duration_s": p.duration_s,
                "energy": p.energy,
            })
        })
        .collect();
    super::emit(&report, out, stdout, "energy vectors")
}
