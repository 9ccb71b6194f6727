//! File formats: outline ingestion (CSV / JSON point lists), star function
//! and sketch JSON, a compact binary sketch format, and directory-backed
//! sketch indexes.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::SketchIndex;
use crate::error::{Error, Result};
use crate::geometry::{Outline, Point, StarFunction};
use crate::sketch::{PhiKind, PhiSpec, Sketch};

const SKETCH_MAGIC: &[u8; 4] = b"VSKT";
const SKETCH_VERSION: u32 = 1;

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        detail: detail.into(),
    }
}

/// Read an outline from a `.csv` file of `x,y` rows or a `.json` file
/// holding a `[[x, y], ...]` array; the format is picked by extension.
pub fn read_outline(path: impl AsRef<Path>) -> Result<Outline> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let text = fs::read_to_string(path)?;
    let points: Vec<Point> = match ext.as_deref() {
        Some("json") => serde_json::from_str(&text)
            .map_err(|e| format_err(path, format!("expected [[x, y], ...]: {e}")))?,
        Some("csv") => {
            let mut pts = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                // allow a "x,y" header row
                if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
                    continue;
                }
                let mut it = line.split(',');
                let parse = |s: Option<&str>| -> Result<f64> {
                    s.ok_or_else(|| {
                        format_err(path, format!("line {}: missing field", lineno + 1))
                    })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format_err(path, format!("line {}: {e}", lineno + 1)))
                };
                let x = parse(it.next())?;
                let y = parse(it.next())?;
                if it.next().is_some() {
                    return Err(format_err(
                        path,
                        format!("line {}: expected exactly two fields", lineno + 1),
                    ));
                }
                pts.push([x, y]);
            }
            pts
        }
        other => {
            return Err(format_err(
                path,
                format!("unsupported outline extension {other:?}; use .csv or .json"),
            ))
        }
    };
    Outline::new(points)
}

pub fn write_star_function(path: impl AsRef<Path>, f: &StarFunction) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(f)?)?;
    Ok(())
}

pub fn read_star_function(path: impl AsRef<Path>) -> Result<StarFunction> {
    let path = path.as_ref();
    let parsed: StarFunction = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| format_err(path, e.to_string()))?;
    if parsed.values.len() != parsed.m {
        return Err(format_err(path, "m does not match the number of values"));
    }
    StarFunction::new(parsed.values)
}

pub fn write_sketch_json(path: impl AsRef<Path>, sketch: &Sketch) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(sketch)?)?;
    Ok(())
}

pub fn read_sketch_json(path: impl AsRef<Path>) -> Result<Sketch> {
    let path = path.as_ref();
    let sketch: Sketch = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| format_err(path, e.to_string()))?;
    if sketch.values.len() != sketch.m {
        return Err(format_err(path, "m does not match the number of values"));
    }
    Ok(sketch)
}

fn phi_kind_tag(kind: PhiKind) -> u8 {
    match kind {
        PhiKind::NegExp => 0,
        PhiKind::Laplace => 1,
        PhiKind::Gaussian => 2,
    }
}

fn phi_kind_of_tag(tag: u8, path: &Path) -> Result<PhiKind> {
    match tag {
        0 => Ok(PhiKind::NegExp),
        1 => Ok(PhiKind::Laplace),
        2 => Ok(PhiKind::Gaussian),
        other => Err(format_err(path, format!("unknown phi kind tag {other}"))),
    }
}

/// Compact little-endian binary sketch: magic, version, m, phi, values.
pub fn write_sketch_binary(path: impl AsRef<Path>, sketch: &Sketch) -> Result<()> {
    let mut buf = Vec::with_capacity(4 + 4 + 8 + 1 + 8 + 8 * sketch.m);
    buf.extend_from_slice(SKETCH_MAGIC);
    buf.extend_from_slice(&SKETCH_VERSION.to_le_bytes());
    buf.extend_from_slice(&(sketch.m as u64).to_le_bytes());
    buf.push(phi_kind_tag(sketch.phi.kind));
    buf.extend_from_slice(&sketch.phi.lambda.to_le_bytes());
    for v in &sketch.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_sketch_binary(path: impl AsRef<Path>) -> Result<Sketch> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let take = |buf: &[u8], at: usize, len: usize| -> Result<Vec<u8>> {
        buf.get(at..at + len)
            .map(|s| s.to_vec())
            .ok_or_else(|| format_err(path, "truncated sketch file"))
    };
    if take(&buf, 0, 4)? != SKETCH_MAGIC {
        return Err(format_err(path, "bad magic; not a sketch file"));
    }
    let version = u32::from_le_bytes(take(&buf, 4, 4)?.try_into().unwrap());
    if version != SKETCH_VERSION {
        return Err(format_err(path, format!("unsupported version {version}")));
    }
    let m = u64::from_le_bytes(take(&buf, 8, 8)?.try_into().unwrap()) as usize;
    let kind = phi_kind_of_tag(take(&buf, 16, 1)?[0], path)?;
    let lambda = f64::from_le_bytes(take(&buf, 17, 8)?.try_into().unwrap());
    let phi = PhiSpec::new(kind, lambda)?;
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        values.push(f64::from_le_bytes(
            take(&buf, 25 + 8 * i, 8)?.try_into().unwrap(),
        ));
    }
    if buf.len() != 25 + 8 * m {
        return Err(format_err(path, "trailing bytes after sketch values"));
    }
    Ok(Sketch { m, phi, values })
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexManifest {
    m: usize,
    phi: PhiSpec,
    ids: Vec<String>,
}

/// Filesystem-safe entry file name; the manifest keeps the real ids.
fn entry_file_name(i: usize) -> String {
    format!("entry{i:06}.sketch")
}

/// Persist an index as a directory: `manifest.json` plus one binary sketch
/// file per entry.
pub fn write_index(dir: impl AsRef<Path>, index: &SketchIndex) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let manifest = IndexManifest {
        m: index.m,
        phi: index.phi,
        ids: index.entries.iter().map(|(id, _)| id.clone()).collect(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    for (i, (_, sketch)) in index.entries.iter().enumerate() {
        write_sketch_binary(dir.join(entry_file_name(i)), sketch)?;
    }
    Ok(())
}

pub fn read_index(dir: impl AsRef<Path>) -> Result<SketchIndex> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let manifest: IndexManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| format_err(&manifest_path, e.to_string()))?;
    let mut index = SketchIndex::new(manifest.m, manifest.phi);
    for (i, id) in manifest.ids.into_iter().enumerate() {
        let sketch = read_sketch_binary(dir.join(entry_file_name(i)))?;
        index.insert(id, sketch)?;
    }
    Ok(index)
}

/// `m,trial,accuracy` rows.
pub fn cluster_rows_csv(rows: &[crate::experiment::ClusterRow]) -> String {
    let mut out = String::from("m,trial,accuracy\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.m, r.trial, r.accuracy));
    }
    out
}

/// `rank,id,distance` rows, rank starting at 1.
pub fn knn_rows_csv(ranked: &[(String, f64)]) -> String {
    let mut out = String::from("rank,id,distance\n");
    for (i, (id, d)) in ranked.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, id, d));
    }
    out
}
