//! Artifact writers: atomic file replacement, sorted-key JSON, 17-digit CSV, heatmap SVG.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::{Gl4Error, Result};

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if bytes.is_empty() {
        return Err(Gl4Error::invalid(format!("refusing to write an empty artifact to {}", path.display())));
    }
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Gl4Error::invalid(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let io = |e: std::io::Error| Gl4Error::Io(format!("{}: {e}", path.display()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

/// Pretty JSON with object keys in sorted order.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v).map_err(|e| Gl4Error::invalid(format!("serialisation failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| Gl4Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write_atomic(path, to_json(v)?.as_bytes())
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV from a header and numeric rows; no rows is an error.
pub fn csv_table(header: &str, rows: &[Vec<f64>]) -> Result<String> {
    if rows.is_empty() {
        return Err(Gl4Error::invalid("empty table"));
    }
    let width = header.split(',').count();
    let mut s = String::with_capacity(rows.len() * width * 24);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        if r.len() != width {
            return Err(Gl4Error::invalid(format!("row has {} columns, header has {width}", r.len())));
        }
        let cells: Vec<String> = r.iter().map(|v| num(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn colour(t: f64) -> (u8, u8, u8) {
    // blue → white → red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = 2.0 * t;
        (u, u, 1.0)
    } else {
        let u = 2.0 * (1.0 - t);
        (1.0, u, u)
    };
    ((255.0 * r).round() as u8, (255.0 * g).round() as u8, (255.0 * b).round() as u8)
}

/// Self-contained heatmap of an n × n row-major grid, first index along x.
pub fn heatmap_svg(title: &str, n: usize, values: &[f64]) -> Result<String> {
    if n == 0 || values.len() != n * n {
        return Err(Gl4Error::invalid("heatmap needs n² values"));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = (480 / n).max(1);
    let side = cell * n;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <title>{title}</title>\n<text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"12\">{title}: [{lo:.4}, {hi:.4}]</text>\n",
        w = side + 8,
        h = side + 28,
    );
    for i in 0..n {
        for j in 0..n {
            let (r, g, b) = colour((values[i * n + j] - lo) / span);
            // j grows upward
            let y = 24 + (n - 1 - j) * cell;
            s.push_str(&format!(
                "<rect x=\"{}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>\n",
                4 + i * cell
            ));
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
