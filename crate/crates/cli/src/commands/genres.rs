use std::path::Path;

use vizsync_core::genre::GenreLexicon;

use crate::CliError;

pub fn run(out: Option<&Path>, stdout: bool) -> Result<(), CliError> {
    let lexicon = GenreLexicon::builtin();
    let entries: Vec<_> = lexicon
        .labels()
        .map(|label| {
            serde_json::json!({
                "label": label,
                "description": lexicon.style_for_genre(label).expect("builtin label"),
            })
        })
        .collect();
    match out {
        Some(path) => super::emit(&entries, path, stdout, "genre lexicon"),
        // No output path: the lexicon dump goes to stdout by default.
        None => super::emit(&entries, Path::new("genres.json"), true, "genre lexicon"),
    }
}
