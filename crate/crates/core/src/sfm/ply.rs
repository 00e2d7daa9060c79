//! ASCII PLY export of sparse points and (optionally) camera centres.

use std::io::Write;

use super::Reconstruction;
use crate::error::{Error, Result};

/// Vertex colour used for exported camera centres.
pub const SHOT_COLOR: [u8; 3] = [0, 255, 0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlyVertex {
    pub position: [f64; 3],
    pub color: [u8; 3],
}

/// Points first, then shot centres in ascending shot id order.
pub fn vertices(rec: &Reconstruction, include_shots: bool) -> Vec<PlyVertex> {
    let mut out: Vec<PlyVertex> = rec
        .points
        .iter()
        .map(|p| PlyVertex {
            position: [p.position.x, p.position.y, p.position.z],
            color: p.color,
        })
        .collect();
    if include_shots {
        out.extend(rec.shots.values().map(|s| {
            let p = s.position();
            PlyVertex {
                position: [p.x, p.y, p.z],
                color: SHOT_COLOR,
            }
        }));
    }
    out
}

pub fn export_ply<W: Write>(rec: &Reconstruction, include_shots: bool, mut out: W) -> Result<()> {
    let verts = vertices(rec, include_shots);
    write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        verts.len()
    )?;
    for v in &verts {
        let [x, y, z] = v.position;
        let [r, g, b] = v.color;
        writeln!(out, "{x} {y} {z} {r} {g} {b}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read the `vertex` element of an ASCII PLY document. Properties are
/// located by name, so extra vertex properties are tolerated.
pub fn read_ply_vertices(text: &str) -> Result<Vec<PlyVertex>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Ply("missing `ply` magic".into()));
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut before_vertex = 0usize;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| Error::Ply("unterminated header".into()))?
            .trim();
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] if *fmt != "ascii" => {
                return Err(Error::Ply(format!("unsupported format {fmt}")))
            }
            ["element", name, n] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::Ply(format!("bad element count `{n}`")))?;
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n);
                } else if count.is_none() {
                    before_vertex += n;
                }
            }
            ["property", .., name] if in_vertex => props.push(name.to_string()),
            _ => {}
        }
    }
    let count = count.ok_or_else(|| Error::Ply("no vertex element".into()))?;
    let col = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::Ply(format!("missing vertex property `{name}`")))
    };
    let xyz = [col("x")?, col("y")?, col("z")?];
    let rgb = [col("red").ok(), col("green").ok(), col("blue").ok()];

    let mut out = Vec::with_capacity(count);
    for line in lines.skip(before_vertex).take(count) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != props.len() {
            return Err(Error::Ply(format!("vertex row has {} fields", fields.len())));
        }
        let num = |i: usize| {
            fields[i]
                .parse::<f64>()
                .map_err(|_| Error::Ply(format!("bad number `{}`", fields[i])))
        };
        let mut v = PlyVertex {
            position: [num(xyz[0])?, num(xyz[1])?, num(xyz[2])?],
            color: [0; 3],
        };
        for (c, idx) in v.color.iter_mut().zip(rgb) {
            if let Some(i) = idx {
                *c = fields[i]
                    .parse()
                    .map_err(|_| Error::Ply(format!("bad colour `{}`", fields[i])))?;
            }
        }
        out.push(v);
    }
    if out.len() != count {
        return Err(Error::Ply(format!(
            "expected {count} vertices, found {}",
            out.len()
        )));
    }
    Ok(out)
}
