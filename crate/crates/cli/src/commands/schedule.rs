use std::path::Path;

use vizsync_core::audio_io::read_wav;
use vizsync_core::energy::FrameSchedule;
use vizsync_core::pipeline::plan_segments;

use crate::config::Config;
use crate::CliError;

pub fn run(
    cfg: &Config,
    audio: &Path,
    linear: bool,
    out: &Path,
    stdout: bool,
) -> Result<(), CliError> {
    let buf = read_wav(audio)?;
    let plans = plan_segments(&buf, &cfg.analysis, cfg.fps, cfg.segment_s)?;
    let mut schedules = Vec::with_capacity(plans.len());
    for p in &plans {
        let sched = if linear {
            FrameSchedule::linear(p.schedule.len(), cfg.fps, p.index)?
        } else {
            p.schedule.clone()
        };
        schedules.push(serde_json::json!({
            "index": p.index,
            "start_s": p.start_s,
            "duration_s": p.duration_s,
            "mode": if linear { "linear" } else { "energy" },
            "schedule": sched,
        }));
    }
    super::emit(&schedules, out, stdout, "frame schedules")
}
