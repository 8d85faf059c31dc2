use std::path::Path;

use serde::Serialize;
use vizsync_core::audio_io::{read_wav, resample, segment, ANALYSIS_RATE};
use vizsync_core::pipeline::{segment_detail, SegmentDetail};

use crate::config::Config;
use crate::CliError;

#[derive(Serialize)]
struct SegmentReport {
    index: usize,
    start_s: f64,
    duration_s: f64,
    #[serde(flatten)]
    detail: SegmentDetail,
}

pub fn run(cfg: &Config, audio: &Path, out: &Path, stdout: bool) -> Result<(), CliError> {
    let buf = read_wav(audio)?;
    let work = resample(&buf, ANALYSIS_RATE)?;
    let segments = segment(&work, cfg.segment_s)?;

    let mut reports = Vec::with_capacity(segments.len());
    for seg in &segments {
        reports.push(SegmentReport {
            index: seg.index,
            start_s: seg.start_s,
            duration_s: seg.duration_s,
            detail: segment_detail(&seg.buffer, &cfg.analysis)?,
        });
    }

    if stdout {
        return super::emit(&reports, out, true, "analysis");
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
    for report in &reports {
        let path = out.join(format!("segment_{:03}.json", report.index));
        super::emit(report, &path, false, "segment analysis")?;
    }
    Ok(())
}
