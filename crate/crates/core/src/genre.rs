//! Genre lexicon, caption-to-genre classification, and the prompt context
//! handed to image generation.
//!
//! The built-in lexicon maps 23 genre labels to art-style descriptions; some
//! related genres (e.g. the electronic family) intentionally share one
//! description. Classification is plain phrase matching: case-insensitive,
//! token-boundary aware, most-frequent label wins with earliest occurrence
//! breaking ties.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::audio_io::{write_wav, Segment};
use crate::{Error, Result};

/// Default prompt weighting: the seed image dominates, the style text nudges.
pub const DEFAULT_IMAGE_WEIGHT: f64 = 0.70;
pub const DEFAULT_TEXT_WEIGHT: f64 = 0.30;

/// Label → style description, plus alias spellings that map onto labels.
#[derive(Debug, Clone)]
pub struct GenreLexicon {
    entries: BTreeMap<String, String>,
    aliases: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct LexiconRow {
    label: String,
    description: String,
}

const BUILTIN_LEXICON: &str = include_str!("../data/genres.jsonl");

/// (alias, canonical label) pairs applied when the label exists in the
/// loaded lexicon.
const ALIASES: &[(&str, &str)] = &[
    ("rnb", "r&b"),
    ("r and b", "r&b"),
    ("hip-hop", "hip hop"),
    ("hiphop", "hip hop"),
    ("edm", "electronic"),
];

impl GenreLexicon {
    /// The 23-genre lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("embedded lexicon is valid")
    }

    /// Load a custom lexicon: one JSON object per line with `label` and
    /// `description` fields.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: LexiconRow = serde_json::from_str(line)
                .map_err(|e| Error::InvalidParam(format!("lexicon line {}: {e}", lineno + 1)))?;
            let label = row.label.trim().to_lowercase();
            if label.is_empty() || row.description.trim().is_empty() {
                return Err(Error::InvalidParam(format!(
                    "lexicon line {}: empty label or description",
                    lineno + 1
                )));
            }
            if entries.insert(label.clone(), row.description).is_some() {
                return Err(Error::InvalidParam(format!(
                    "lexicon defines '{label}' twice"
                )));
            }
        }
        if entries.is_empty() {
            return Err(Error::InvalidParam("lexicon has no entries".into()));
        }
        let aliases = ALIASES
            .iter()
            .filter(|(_, label)| entries.contains_key(*label))
            .map(|(alias, label)| (alias.to_string(), label.to_string()))
            .collect();
        Ok(Self { entries, aliases })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The style description for a known label.
    pub fn style_for_genre(&self, genre: &str) -> Result<&str> {
        self.entries
            .get(&genre.to_lowercase())
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownGenre(genre.to_string()))
    }

    /// Match caption text to a genre. Returns `None` when no label or alias
    /// occurs in the caption.
    pub fn classify_caption(&self, caption: &str) -> Option<String> {
        let lower = caption.to_lowercase();
        // Longest phrases first so multi-word labels claim their span before
        // any single-word label inside them could.
        let mut phrases: Vec<(&str, &str)> = self
            .entries
            .keys()
            .map(|k| (k.as_str(), k.as_str()))
            .chain(self.aliases.iter().map(|(a, l)| (a.as_str(), l.as_str())))
            .collect();
        phrases.sort_by_key(|(pat, _)| std::cmp::Reverse(pat.len()));

        let mut consumed = vec![false; lower.len()];
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut earliest: BTreeMap<&str, usize> = BTreeMap::new();

        for (pat, label) in phrases {
            let mut from = 0;
            while let Some(off) = lower[from..].find(pat) {
                let start = from + off;
                let end = start + pat.len();
                from = start + 1;
                let left_ok = lower[..start]
                    .chars()
                    .next_back()
                    .is_none_or(|c| !c.is_alphanumeric());
                let right_ok = lower[end..]
                    .chars()
                    .next()
                    .is_none_or(|c| !c.is_alphanumeric());
                if !left_ok || !right_ok || consumed[start..end].iter().any(|&c| c) {
                    continue;
                }
                consumed[start..end].iter_mut().for_each(|c| *c = true);
                *counts.entry(label).or_default() += 1;
                let e = earliest.entry(label).or_insert(start);
                *e = (*e).min(start);
            }
        }

        counts
            .iter()
            .max_by(|(la, ca), (lb, cb)| {
                // Higher count wins; ties go to the earlier first occurrence.
                ca.cmp(cb).then_with(|| earliest[*lb].cmp(&earliest[*la]))
            })
            .map(|(label, _)| label.to_string())
    }
}

/// Majority vote over per-segment labels; `None` entries are abstentions.
/// A tie goes to the label that appeared in the earliest segment.
pub fn track_genre(per_segment: &[Option<String>]) -> Result<Option<String>> {
    if per_segment.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new(); // label -> (count, first index)
    for (i, label) in per_segment.iter().enumerate() {
        if let Some(l) = label {
            let entry = counts.entry(l.as_str()).or_insert((0, i));
            entry.0 += 1;
        }
    }
    Ok(counts
        .iter()
        .max_by(|(_, (ca, fa)), (_, (cb, fb))| ca.cmp(cb).then_with(|| fb.cmp(fa)))
        .map(|(label, _)| label.to_string()))
}

/// One caption row; mirrors the caption-file JSON schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Caption {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

/// All captions for a track, one per segment, in segment order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptionSet {
    pub captions: Vec<Caption>,
}

/// Where captions come from: a prepared file (one JSON object per line) or
/// an external captioner invoked once per segment with the segment's WAV
/// path as its only extra argument.
#[derive(Debug, Clone)]
pub enum CaptionSource {
    File(PathBuf),
    Command(Vec<String>),
}

/// Validate or produce one caption per segment.
pub fn ingest_captions(source: &CaptionSource, segments: &[Segment]) -> Result<CaptionSet> {
    match source {
        CaptionSource::File(path) => captions_from_file(path, segments),
        CaptionSource::Command(argv) => captions_from_command(argv, segments),
    }
}

fn captions_from_file(path: &Path, segments: &[Segment]) -> Result<CaptionSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut captions: Vec<Caption> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Caption = serde_json::from_str(line)
            .map_err(|e| Error::InvalidParam(format!("caption line {}: {e}", lineno + 1)))?;
        captions.push(row);
    }
    if captions.len() != segments.len() {
        return Err(Error::CaptionCountMismatch {
            rows: captions.len(),
            segments: segments.len(),
        });
    }
    captions.sort_by_key(|c| c.index);
    for (i, c) in captions.iter().enumerate() {
        if c.index != i {
            return Err(Error::InvalidParam(format!(
                "caption indices must cover 0..{} exactly; missing {i}",
                segments.len()
            )));
        }
        if c.text.trim().is_empty() {
            return Err(Error::InvalidParam(format!("caption {i} has empty text")));
        }
    }
    Ok(CaptionSet { captions })
}

fn captions_from_command(argv: &[String], segments: &[Segment]) -> Result<CaptionSet> {
    if argv.is_empty() {
        return Err(Error::InvalidParam("captioner command is empty".into()));
    }
    let dir = tempfile::tempdir().map_err(|e| Error::io(Path::new("tempdir"), e))?;
    let mut captions = Vec::with_capacity(segments.len());
    for seg in segments {
        let wav = dir.path().join(format!("segment_{:03}.wav", seg.index));
        write_wav(&wav, &seg.buffer)?;
        let output = Command::new(&argv[0])
            .args(&argv[1..])
            .arg(&wav)
            .output()
            .map_err(|e| Error::CaptionCommand {
                command: argv.join(" "),
                message: format!("failed to spawn: {e}"),
            })?;
        if !output.status.success() {
            return Err(Error::CaptionCommand {
                command: argv.join(" "),
                message: format!(
                    "exit {:?} on segment {}: {}",
                    output.status.code(),
                    seg.index,
                    String::from_utf8_lossy(&output.stderr).trim()
                ),
            });
        }
        let text = String::from_utf8_lossy(&output.stdout).trim().to_string();
        if text.is_empty() {
            return Err(Error::CaptionCommand {
                command: argv.join(" "),
                message: format!("empty caption for segment {}", seg.index),
            });
        }
        captions.push(Caption {
            index: seg.index,
            start_s: seg.start_s,
            end_s: seg.start_s + seg.duration_s,
            text,
        });
    }
    Ok(CaptionSet { captions })
}

/// Inputs to key-image generation: the chosen genre's style text plus the
/// image/text weighting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptContext {
    /// `None` when no genre was recognised; rendering then proceeds
    /// style-free.
    pub genre: Option<String>,
    pub style_text: String,
    pub image_weight: f64,
    pub text_weight: f64,
}

impl PromptContext {
    pub fn new(
        genre: Option<&str>,
        lex: &GenreLexicon,
        image_weight: f64,
        text_weight: f64,
    ) -> Result<Self> {
        if !(image_weight > 0.0) || !(text_weight > 0.0) {
            return Err(Error::InvalidParam(format!(
                "prompt weights must be positive, got ({image_weight}, {text_weight})"
            )));
        }
        if (image_weight + text_weight - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!(
                "prompt weights must sum to 1, got {}",
                image_weight + text_weight
            )));
        }
        let style_text = match genre {
            Some(g) => lex.style_for_genre(g)?.to_string(),
            None => String::new(),
        };
        Ok(Self {
            genre: genre.map(|g| g.to_lowercase()),
            style_text,
            image_weight,
            text_weight,
        })
    }
}

/// Write a caption set in the same line-oriented JSON format `ingest_captions`
/// reads.
pub fn write_caption_file(path: &Path, set: &CaptionSet) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for c in &set.captions {
        let line = serde_json::to_string(c)
            .map_err(|e| Error::InvalidParam(format!("caption serialization: {e}")))?;
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
