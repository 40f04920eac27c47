use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use pixtile_core::semantics::{EmbeddingProvider, FileEmbeddings, HashingEmbedder};
use pixtile_core::tile::Rgba;

use crate::EmbedArgs;

pub(crate) fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

/// Writes to `out` when given, else to stdout.
pub(crate) fn emit_json<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            std::io::stdout().write_all(to_json(value)?.as_bytes())?;
            Ok(())
        }
    }
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("parsing {}:{}", path.display(), i + 1))
        })
        .collect()
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn parse_rgba(hex: &str) -> Result<Rgba> {
    let hex = hex.trim_start_matches('#');
    if hex.len() != 8 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
        bail!("color `{hex}` is not RRGGBBAA hex");
    }
    let mut out = [0u8; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)?;
    }
    Ok(out)
}

pub(crate) fn embedder(args: &EmbedArgs) -> Result<Box<dyn EmbeddingProvider>> {
    match (&args.embeddings, args.hashing_dim) {
        (Some(p), _) => Ok(Box::new(FileEmbeddings::load(p)?)),
        (None, Some(0)) => bail!("--hashing-dim must be positive"),
        (None, Some(d)) => Ok(Box::new(HashingEmbedder::new(d))),
        (None, None) => bail!("an embedding source is required: --embeddings or --hashing-dim"),
    }
}
