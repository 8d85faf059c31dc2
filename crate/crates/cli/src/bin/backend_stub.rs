//! Reference implementation of the external generator-backend protocol.
//!
//! Reads one JSON request per line on stdin and answers each with one JSON
//! reply on stdout, backed by the in-process crossfade generator. Useful
//! for exercising `--backend external` without a real model server, and as
//! a template for writing one.

use std::io::{BufRead, Write};

fn main() {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        if line.trim().is_empty() {
            continue;
        }
        let reply = vizsync_core::generate::serve_crossfade_request(&line);
        let mut out = stdout.lock();
        if serde_json::to_writer(&mut out, &reply).is_err() {
            std::process::exit(1);
        }
        let _ = out.write_all(b"\n");
        let _ = out.flush();
    }
}
