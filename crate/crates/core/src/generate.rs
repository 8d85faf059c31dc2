//! Frame generation: latent interpolation between key images through a
//! pluggable encode/decode backend.
//!
//! The in-process [`CrossfadeBackend`] treats normalised pixels as the
//! latent space, which makes interpolated frames an ordinary crossfade and
//! keeps every test deterministic. [`ExternalBackend`] speaks a one-request
//! JSON protocol to a child process so a real latent model can be plugged in
//! without touching this crate:
//!
//! ```text
//! request  (stdin, one line):
//!   {"op":"encode","image":"<base64 PNG>"}
//!   {"op":"decode","latent":{"values":[...],"codec_id":"..."}}
//!   {"op":"key_images","image":"<base64 PNG>","style_text":"...",
//!    "image_weight":0.7,"text_weight":0.3,"n":3,"genre":"techno"}
//! reply    (stdout, one line):
//!   {"ok":true,"latent":{...}} | {"ok":true,"image":"<base64 PNG>"}
//!   | {"ok":true,"images":["<base64 PNG>",...]} | {"ok":false,"error":"..."}
//! ```

use std::io::{Read, Write as _};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::energy::FrameSchedule;
use crate::genre::PromptContext;
use crate::{Error, Result};

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != 3 * width * height {
            return Err(Error::ShapeMismatch(format!(
                "expected {} bytes for {width}x{height} RGB, got {}",
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(3 * width * height)
            .collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn from_png(path: &Path) -> Result<Self> {
        let dynamic = image::open(path).map_err(|e| Error::Image {
            path: path.into(),
            detail: e.to_string(),
        })?;
        let rgb = dynamic.to_rgb8();
        Ok(Self {
            width: rgb.width() as usize,
            height: rgb.height() as usize,
            pixels: rgb.into_raw(),
        })
    }

    pub fn to_png(&self, path: &Path) -> Result<()> {
        self.as_buffer()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Image {
                path: path.into(),
                detail: e.to_string(),
            })
    }

    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.as_buffer()
            .write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png)
            .map_err(|e| Error::Image {
                path: "<memory>".into(),
                detail: e.to_string(),
            })?;
        Ok(out)
    }

    pub fn from_png_bytes(bytes: &[u8]) -> Result<Self> {
        let dynamic = image::load_from_memory(bytes).map_err(|e| Error::Image {
            path: "<memory>".into(),
            detail: e.to_string(),
        })?;
        let rgb = dynamic.to_rgb8();
        Ok(Self {
            width: rgb.width() as usize,
            height: rgb.height() as usize,
            pixels: rgb.into_raw(),
        })
    }

    fn as_buffer(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("dimensions validated at construction")
    }
}

/// A point in a backend's latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latent {
    pub values: Vec<f64>,
    pub codec_id: String,
}

fn check_pair(a: &Latent, b: &Latent) -> Result<()> {
    if a.codec_id != b.codec_id || a.values.len() != b.values.len() {
        return Err(Error::ShapeMismatch(format!(
            "latents disagree: {} ({} values) vs {} ({} values)",
            a.codec_id,
            a.values.len(),
            b.codec_id,
            b.values.len()
        )));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParam(format!(
            "interpolation parameter must be in [0,1], got {t}"
        )));
    }
    Ok(())
}

/// Straight-line interpolation `(1−t)a + tb`.
pub fn lerp(a: &Latent, b: &Latent, t: f64) -> Result<Latent> {
    check_pair(a, b)?;
    check_t(t)?;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (1.0 - t) * x + t * y)
        .collect();
    Ok(Latent {
        values,
        codec_id: a.codec_id.clone(),
    })
}

/// Angle below which slerp degrades to lerp (nearly collinear latents).
const SLERP_MIN_ANGLE: f64 = 1e-4;

/// Spherical linear interpolation
/// `[sin((1−t)Ω)·a + sin(tΩ)·b] / sin Ω` where Ω is the angle between the
/// two vectors. Nearly collinear inputs (Ω < 1e-4 rad, or Ω ≈ π where the
/// great circle is ambiguous) fall back to lerp.
pub fn slerp(a: &Latent, b: &Latent, t: f64) -> Result<Latent> {
    check_pair(a, b)?;
    check_t(t)?;
    let norm_a = a.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_b = b.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let omega = (dot / (norm_a * norm_b)).clamp(-1.0, 1.0).acos();
    let sin_omega = omega.sin();
    if omega < SLERP_MIN_ANGLE || sin_omega < 1e-9 {
        return lerp(a, b, t);
    }
    let wa = ((1.0 - t) * omega).sin() / sin_omega;
    let wb = (t * omega).sin() / sin_omega;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| wa * x + wb * y)
        .collect();
    Ok(Latent {
        values,
        codec_id: a.codec_id.clone(),
    })
}

/// Which interpolation runs between encoded key images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpMode {
    Slerp,
    Lerp,
}

pub fn interpolate(a: &Latent, b: &Latent, t: f64, mode: InterpMode) -> Result<Latent> {
    match mode {
        InterpMode::Slerp => slerp(a, b, t),
        InterpMode::Lerp => lerp(a, b, t),
    }
}

/// Encode/decode adapter around whatever model produces the frames.
pub trait GeneratorBackend {
    fn id(&self) -> &str;

    fn encode(&self, image: &Image) -> Result<Latent>;

    fn decode(&self, latent: &Latent) -> Result<Image>;

    /// Produce `n` style-conditioned variations of the seed image, one per
    /// segment. The default implementation is the deterministic
    /// genre-keyed color grade used by the in-process backends.
    fn key_images(&self, seed: &Image, style: &PromptContext, n: usize) -> Result<Vec<Image>> {
        Ok(oracle_key_images(seed, style, n))
    }
}

/// Deterministic stand-in for a diffusion model: hash the genre label into a
/// per-channel gain + contrast transform so different genres give visibly
/// different (but reproducible) images.
///
/// Overall brightness alternates between a dark band (even keys) and a bright
/// band (odd keys). Segment `i` crossfades key `i` into key `i + 1`, and two
/// hashes can land on nearly the same color grade, which would render the
/// whole segment as a still image; the bands keep every consecutive pair a
/// visible distance apart no matter what the hashes draw.
pub fn oracle_key_images(seed: &Image, style: &PromptContext, n: usize) -> Vec<Image> {
    let label = style.genre.as_deref().unwrap_or("unknown");
    (0..n)
        .map(|k| {
            let h = mix(fnv1a(format!("{label}:{k}").as_bytes()));
            let band = if k % 2 == 0 { 0.70 } else { 1.10 };
            let brightness = band + 0.2 * hash_unit(h, 0);
            // Zero-mean channel tilts give each key its own color cast
            // without disturbing the banded brightness.
            let tilt = [hash_unit(h, 16), hash_unit(h, 32), hash_unit(h, 48)];
            let tilt_mean = (tilt[0] + tilt[1] + tilt[2]) / 3.0;
            let gain = tilt.map(|t| brightness * (1.0 + 0.35 * (t - tilt_mean)));
            let contrast = 0.7 + 0.6 * hash_unit(mix(h), 0);
            let pixels = seed
                .pixels
                .chunks(3)
                .flat_map(|px| {
                    (0..3).map(move |c| {
                        let v = px[c] as f64 / 255.0;
                        let graded = ((v - 0.5) * contrast + 0.5) * gain[c];
                        (graded.clamp(0.0, 1.0) * 255.0).round() as u8
                    })
                })
                .collect();
            Image {
                width: seed.width,
                height: seed.height,
                pixels,
            }
        })
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// 64-bit avalanche finalizer (murmur3's fmix64). FNV-1a alone barely moves
/// the upper bits when two inputs differ only in the trailing byte — exactly
/// the `label:0`, `label:1`, … pattern used here — which would make
/// consecutive keys share most of their grade parameters.
fn mix(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ceb9fe1a85ec53);
    h ^= h >> 33;
    h
}

fn hash_unit(h: u64, shift: u32) -> f64 {
    ((h >> shift) & 0xFFFF) as f64 / 65535.0
}

/// `n` key images for a track via the backend.
pub fn generate_key_images(
    seed: &Image,
    style: &PromptContext,
    n_segments: usize,
    backend: &dyn GeneratorBackend,
) -> Result<Vec<Image>> {
    if n_segments == 0 {
        return Err(Error::InvalidParam("need at least one key image".into()));
    }
    backend.key_images(seed, style, n_segments)
}

fn tag_frame(err: Error, frame: usize) -> Error {
    match err {
        Error::Backend {
            backend,
            frame: None,
            message,
        } => Error::Backend {
            backend,
            frame: Some(frame),
            message,
        },
        other => other,
    }
}

/// Decode one frame per schedule entry, interpolating between the two
/// encoded endpoint images.
pub fn render_segment(
    start: &Image,
    end: &Image,
    sched: &FrameSchedule,
    backend: &dyn GeneratorBackend,
    mode: InterpMode,
) -> Result<Vec<Image>> {
    if start.width != end.width || start.height != end.height {
        return Err(Error::ShapeMismatch(format!(
            "key images disagree: {}x{} vs {}x{}",
            start.width, start.height, end.width, end.height
        )));
    }
    if sched.is_empty() {
        return Err(Error::EmptySequence);
    }
    let a = backend.encode(start)?;
    let b = backend.encode(end)?;
    sched
        .ts
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let lat = interpolate(&a, &b, t, mode).map_err(|e| tag_frame(e, j))?;
            backend.decode(&lat).map_err(|e| tag_frame(e, j))
        })
        .collect()
}

/// Identity-ish latent codec: pixels scaled to [0,1]. Lossless for 8-bit
/// images, so interpolation through it is an exact crossfade.
#[derive(Debug, Clone, Default)]
pub struct CrossfadeBackend;

const CROSSFADE_PREFIX: &str = "crossfade-rgb8";

impl GeneratorBackend for CrossfadeBackend {
    fn id(&self) -> &str {
        "crossfade"
    }

    fn encode(&self, image: &Image) -> Result<Latent> {
        Ok(Latent {
            values: image.pixels.iter().map(|&p| p as f64 / 255.0).collect(),
            codec_id: format!("{CROSSFADE_PREFIX}:{}x{}", image.width, image.height),
        })
    }

    fn decode(&self, latent: &Latent) -> Result<Image> {
        let (width, height) = parse_crossfade_dims(&latent.codec_id)?;
        if latent.values.len() != 3 * width * height {
            return Err(Error::ShapeMismatch(format!(
                "latent {} has {} values, expected {}",
                latent.codec_id,
                latent.values.len(),
                3 * width * height
            )));
        }
        let pixels = latent
            .values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Image::new(width, height, pixels)
    }
}

fn parse_crossfade_dims(codec_id: &str) -> Result<(usize, usize)> {
    let dims = codec_id
        .strip_prefix(CROSSFADE_PREFIX)
        .and_then(|rest| rest.strip_prefix(':'))
        .and_then(|dims| dims.split_once('x'))
        .and_then(|(w, h)| Some((w.parse::<usize>().ok()?, h.parse::<usize>().ok()?)));
    dims.filter(|&(w, h)| w > 0 && h > 0).ok_or_else(|| {
        Error::InvalidParam(format!(
            "latent codec {codec_id:?} is not a {CROSSFADE_PREFIX}:<w>x<h> id"
        ))
    })
}

pub fn crossfade_backend() -> CrossfadeBackend {
    CrossfadeBackend
}

// --- external child-process backend ------------------------------------

/// Wire format of one request to an external backend process.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BackendRequest {
    Encode {
        image: String,
    },
    Decode {
        latent: Latent,
    },
    KeyImages {
        image: String,
        style_text: String,
        image_weight: f64,
        text_weight: f64,
        n: usize,
        genre: Option<String>,
    },
}

/// Wire format of the reply line.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct BackendReply {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<Latent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BackendReply {
    pub fn failure(message: impl Into<String>) -> Self {
        BackendReply {
            ok: false,
            error: Some(message.into()),
            ..Default::default()
        }
    }
}

/// Child-process backend: spawns the command once per call, writes one JSON
/// request line to its stdin and reads one JSON reply line from its stdout.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    argv: Vec<String>,
    timeout: Duration,
    id: String,
}

impl ExternalBackend {
    pub fn new(argv: Vec<String>, timeout: Duration) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::InvalidParam("backend command is empty".into()));
        }
        let id = format!("external:{}", argv[0]);
        Ok(Self { argv, timeout, id })
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Backend {
            backend: self.id.clone(),
            frame: None,
            message: message.into(),
        }
    }

    fn call(&self, request: &BackendRequest) -> Result<BackendReply> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.fail(format!("failed to spawn: {e}")))?;

        let line = serde_json::to_string(request)
            .map_err(|e| self.fail(format!("request serialization: {e}")))?;
        if let Some(mut stdin) = child.stdin.take() {
            // A short-lived child may exit before reading; the broken pipe
            // is then reported through its exit status instead.
            let _ = stdin.write_all(line.as_bytes());
            let _ = stdin.write_all(b"\n");
        }

        let mut stdout = child.stdout.take().expect("stdout piped");
        let mut stderr = child.stderr.take().expect("stderr piped");
        let (tx, rx) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut out = String::new();
            let res = stdout.read_to_string(&mut out).map(|_| out);
            let _ = tx.send(res);
        });
        let err_reader = std::thread::spawn(move || {
            let mut err = String::new();
            let _ = stderr.read_to_string(&mut err);
            err
        });

        let out = match rx.recv_timeout(self.timeout) {
            Ok(Ok(out)) => out,
            Ok(Err(e)) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(self.fail(format!("failed to read reply: {e}")));
            }
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(self.fail(format!(
                    "timed out after {:.3} s",
                    self.timeout.as_secs_f64()
                )));
            }
        };
        let status = child
            .wait()
            .map_err(|e| self.fail(format!("failed to reap child: {e}")))?;
        let stderr_text = err_reader.join().unwrap_or_default();
        let _ = reader.join();

        if !status.success() {
            return Err(self.fail(format!("exit {:?}: {}", status.code(), stderr_text.trim())));
        }
        let reply_line = out
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| self.fail("empty reply".to_string()))?;
        let reply: BackendReply = serde_json::from_str(reply_line)
            .map_err(|e| self.fail(format!("malformed reply {reply_line:?}: {e}")))?;
        if !reply.ok {
            return Err(self.fail(
                reply
                    .error
                    .unwrap_or_else(|| "backend reported failure".into()),
            ));
        }
        Ok(reply)
    }
}

impl GeneratorBackend for ExternalBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn encode(&self, image: &Image) -> Result<Latent> {
        let reply = self.call(&BackendRequest::Encode {
            image: BASE64.encode(image.png_bytes()?),
        })?;
        reply
            .latent
            .ok_or_else(|| self.fail("encode reply carried no latent"))
    }

    fn decode(&self, latent: &Latent) -> Result<Image> {
        let reply = self.call(&BackendRequest::Decode {
            latent: latent.clone(),
        })?;
        let b64 = reply
            .image
            .ok_or_else(|| self.fail("decode reply carried no image"))?;
        let bytes = BASE64
            .decode(&b64)
            .map_err(|e| self.fail(format!("reply image is not base64: {e}")))?;
        Image::from_png_bytes(&bytes)
    }

    fn key_images(&self, seed: &Image, style: &PromptContext, n: usize) -> Result<Vec<Image>> {
        let reply = self.call(&BackendRequest::KeyImages {
            image: BASE64.encode(seed.png_bytes()?),
            style_text: style.style_text.clone(),
            image_weight: style.image_weight,
            text_weight: style.text_weight,
            n,
            genre: style.genre.clone(),
        })?;
        let b64s = reply
            .images
            .ok_or_else(|| self.fail("key_images reply carried no images"))?;
        if b64s.len() != n {
            return Err(self.fail(format!("asked for {n} key images, got {}", b64s.len())));
        }
        b64s.iter()
            .map(|b64| {
                let bytes = BASE64
                    .decode(b64)
                    .map_err(|e| self.fail(format!("reply image is not base64: {e}")))?;
                Image::from_png_bytes(&bytes)
            })
            .collect()
    }
}

/// Serve one request on stdin with the in-process crossfade codec and print
/// the reply to stdout. This is the entire body of a protocol-conforming
/// backend executable; the CLI ships it as `vizsync-backend-stub` for tests
/// and as a template for real integrations.
pub fn serve_crossfade_request(input: &str) -> BackendReply {
    let request: BackendRequest = match serde_json::from_str(input.trim()) {
        Ok(r) => r,
        Err(e) => return BackendReply::failure(format!("bad request: {e}")),
    };
    let backend = CrossfadeBackend;
    let outcome = (|| -> Result<BackendReply> {
        match request {
            BackendRequest::Encode { image } => {
                let bytes = BASE64
                    .decode(&image)
                    .map_err(|e| Error::InvalidParam(format!("image not base64: {e}")))?;
                let latent = backend.encode(&Image::from_png_bytes(&bytes)?)?;
                Ok(BackendReply {
                    ok: true,
                    latent: Some(latent),
                    ..Default::default()
                })
            }
            BackendRequest::Decode { latent } => {
                let image = backend.decode(&latent)?;
                Ok(BackendReply {
                    ok: true,
                    image: Some(BASE64.encode(image.png_bytes()?)),
                    ..Default::default()
                })
            }
            BackendRequest::KeyImages {
                image,
                style_text,
                image_weight,
                text_weight,
                n,
                genre,
            } => {
                let bytes = BASE64
                    .decode(&image)
                    .map_err(|e| Error::InvalidParam(format!("image not base64: {e}")))?;
                let seed = Image::from_png_bytes(&bytes)?;
                let style = PromptContext {
                    genre,
                    style_text,
                    image_weight,
                    text_weight,
                };
                let images = oracle_key_images(&seed, &style, n)
                    .iter()
                    .map(|img| img.png_bytes().map(|b| BASE64.encode(b)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BackendReply {
                    ok: true,
                    images: Some(images),
                    ..Default::default()
                })
            }
        }
    })();
    outcome.unwrap_or_else(|e| BackendReply::failure(e.to_string()))
}
