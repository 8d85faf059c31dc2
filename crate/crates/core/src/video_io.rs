//! Frame directories and the encoder boundary.
//!
//! Rendered segments land as `frame_%06d.png` files in a directory; muxing
//! them with the audio track is delegated to an external encoder (ffmpeg by
//! default) through a whitespace-tokenised command template, so the encoder
//! never becomes a build dependency.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::generate::Image;
use crate::{Error, Result};

/// A directory of numbered frames plus the rate they are meant to play at.
#[derive(Debug, Clone)]
pub struct FrameStore {
    pub dir: PathBuf,
    pub fps: f64,
}

impl FrameStore {
    pub fn new(dir: impl Into<PathBuf>, fps: f64) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidParam(format!("fps must be > 0, got {fps}")));
        }
        Ok(Self {
            dir: dir.into(),
            fps,
        })
    }

    pub fn frame_path(&self, index: usize) -> PathBuf {
        self.dir.join(frame_file_name(index))
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// Encoder template used by [`mux`] when the caller does not supply one.
pub const DEFAULT_MUX_TEMPLATE: &str = "ffmpeg -y -framerate {fps} -start_number 0 \
     -i {frames_dir}/frame_%06d.png -i {audio} \
     -c:v libx264 -pix_fmt yuv420p -c:a aac -shortest {out}";

/// Extractor template used by [`extract_frames`] when none is supplied.
pub const DEFAULT_EXTRACT_TEMPLATE: &str =
    "ffmpeg -y -i {video} -vf fps={fps} -start_number 0 {frames_dir}/frame_%06d.png";

/// Write frames as `frame_000000.png`, `frame_000001.png`, ... and return
/// how many were written. An empty slice is a no-op (the directory is not
/// even created). Unless `overwrite` is set, an existing frame file fails
/// the whole call before anything is written.
pub fn write_frames(frames: &[Image], store: &FrameStore, overwrite: bool) -> Result<usize> {
    write_frames_from(frames, store, 0, overwrite)
}

/// [`write_frames`] starting at `start_index` instead of zero, so a render
/// can stream one segment at a time into a single numbered sequence.
pub fn write_frames_from(
    frames: &[Image],
    store: &FrameStore,
    start_index: usize,
    overwrite: bool,
) -> Result<usize> {
    if frames.is_empty() {
        return Ok(0);
    }
    fs::create_dir_all(&store.dir).map_err(|e| Error::io(&store.dir, e))?;
    if !overwrite {
        for i in 0..frames.len() {
            let path = store.frame_path(start_index + i);
            if path.exists() {
                return Err(Error::FrameCollision { path });
            }
        }
    }
    for (i, frame) in frames.iter().enumerate() {
        frame.to_png(&store.frame_path(start_index + i))?;
    }
    Ok(frames.len())
}

/// Indices and paths of the frames present, sorted, verified gap-free from
/// zero. Files not matching the naming scheme are ignored.
fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = parse_frame_name(name) else {
            continue;
        };
        found.push((index, entry.path()));
    }
    if found.is_empty() {
        return Err(Error::EmptyFrameStore);
    }
    found.sort_unstable_by_key(|(i, _)| *i);
    for (expected, (index, _)) in found.iter().enumerate() {
        if *index != expected {
            return Err(Error::FrameGap { index: expected });
        }
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn parse_frame_name(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Load every frame eagerly, verifying uniform dimensions.
pub fn read_frames(store: &FrameStore) -> Result<Vec<Image>> {
    let mut frames = Vec::new();
    for result in frame_iter(store)? {
        let img = result?;
        if let Some(first) = frames.first() {
            let first: &Image = first;
            if img.width != first.width || img.height != first.height {
                return Err(Error::ShapeMismatch(format!(
                    "frame {} is {}x{}, frame 0 is {}x{}",
                    frames.len(),
                    img.width,
                    img.height,
                    first.width,
                    first.height
                )));
            }
        }
        frames.push(img);
    }
    Ok(frames)
}

/// Lazy counterpart of [`read_frames`]: the directory listing is validated
/// up front, decoding happens one frame at a time. Useful for evaluating
/// long renders without holding every frame in memory.
pub fn frame_iter(store: &FrameStore) -> Result<impl Iterator<Item = Result<Image>>> {
    let files = list_frames(&store.dir)?;
    Ok(files.into_iter().map(|p| Image::from_png(&p)))
}

/// Number of frames present (validates contiguity).
pub fn frame_count(store: &FrameStore) -> Result<usize> {
    Ok(list_frames(&store.dir)?.len())
}

/// Substitute `bindings` into a whitespace-tokenised command template.
/// Substitution is per-token, so values containing spaces stay one argv
/// entry; tokens that match no binding pass through untouched.
pub fn render_template(template: &str, bindings: &[(&str, &str)]) -> Result<Vec<String>> {
    let argv: Vec<String> = template
        .split_whitespace()
        .map(|token| {
            let mut token = token.to_string();
            for (key, value) in bindings {
                token = token.replace(key, value);
            }
            token
        })
        .collect();
    if argv.is_empty() {
        return Err(Error::InvalidParam("command template is empty".into()));
    }
    Ok(argv)
}

fn run_command(argv: &[String]) -> Result<()> {
    let command = argv.join(" ");
    let output = Command::new(&argv[0])
        .args(&argv[1..])
        .output()
        .map_err(|e| Error::Encoder {
            command: argv[0].clone(),
            message: format!("failed to start: {e}"),
        })?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(Error::Encoder {
            command,
            message: format!(
                "exit {:?}: {}",
                output.status.code(),
                stderr.trim().chars().take(2000).collect::<String>()
            ),
        });
    }
    Ok(())
}

fn fps_token(fps: f64) -> String {
    if (fps - fps.round()).abs() < 1e-9 {
        format!("{}", fps.round() as i64)
    } else {
        format!("{fps}")
    }
}

/// Mux the store's frames with `audio` into `out` using the encoder
/// `template` (tokens `{fps}`, `{frames_dir}`, `{audio}`, `{out}`).
/// Refuses to run the encoder when the store has no frames, and errors if
/// the encoder exits nonzero or leaves no output behind.
pub fn mux(store: &FrameStore, audio: &Path, out: &Path, template: &str) -> Result<()> {
    list_frames(&store.dir)?;
    let fps = fps_token(store.fps);
    let argv = render_template(
        template,
        &[
            ("{fps}", fps.as_str()),
            ("{frames_dir}", &store.dir.display().to_string()),
            ("{audio}", &audio.display().to_string()),
            ("{out}", &out.display().to_string()),
        ],
    )?;
    run_command(&argv)?;
    let nonempty = fs::metadata(out).map(|m| m.len() > 0).unwrap_or(false);
    if !nonempty {
        return Err(Error::Encoder {
            command: argv.join(" "),
            message: format!(
                "exited successfully but produced no output at {}",
                out.display()
            ),
        });
    }
    Ok(())
}

/// Pull frames out of `video` into the store's directory using `template`
/// (tokens `{video}`, `{fps}`, `{frames_dir}`), returning how many frames
/// appeared.
pub fn extract_frames(video: &Path, store: &FrameStore, template: &str) -> Result<usize> {
    fs::create_dir_all(&store.dir).map_err(|e| Error::io(&store.dir, e))?;
    let fps = fps_token(store.fps);
    let argv = render_template(
        template,
        &[
            ("{video}", &video.display().to_string()),
            ("{fps}", fps.as_str()),
            ("{frames_dir}", &store.dir.display().to_string()),
        ],
    )?;
    run_command(&argv)?;
    match frame_count(store) {
        Ok(n) => Ok(n),
        Err(Error::EmptyFrameStore) => Err(Error::Encoder {
            command: argv.join(" "),
            message: "extractor exited successfully but produced no frames".into(),
        }),
        Err(e) => Err(e),
    }
}
