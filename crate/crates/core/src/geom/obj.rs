//! Minimal Wavefront OBJ reader: `v`, `vt`, `vn`, `f`, `o`, `g`.

use std::collections::HashMap;
use std::path::Path;

use glam::{DVec2, DVec3};
use log::debug;

use super::Mesh;
use crate::error::{Error, Result};

/// Loads every object/group of an OBJ file as a separate mesh. Faces are
/// fan-triangulated and must carry both UV and normal indices.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Vec<Mesh>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

#[derive(Default)]
struct Builder {
    name: String,
    positions: Vec<DVec3>,
    normals: Vec<DVec3>,
    uvs: Vec<DVec2>,
    triangles: Vec<[u32; 3]>,
    lookup: HashMap<(usize, usize, usize), u32>,
}

impl Builder {
    fn named(name: &str) -> Self {
        Builder { name: name.to_owned(), ..Default::default() }
    }

    fn finish(self, out: &mut Vec<Mesh>) -> Result<()> {
        if self.triangles.is_empty() {
            return Ok(());
        }
        let id = out.len() as u32;
        let mesh = Mesh::new(self.name, self.positions, self.normals, self.uvs, self.triangles)?;
        out.push(mesh.with_ids(id, id));
        Ok(())
    }
}

/// Parses OBJ text; `path` is only used in error messages.
pub fn parse_obj(text: &str, path: &Path) -> Result<Vec<Mesh>> {
    let err = |line: usize, msg: String| Error::Obj { path: path.to_owned(), line, msg };

    let mut v = Vec::new();
    let mut vt = Vec::new();
    let mut vn = Vec::new();
    let mut meshes = Vec::new();
    let mut current = Builder::named("default");
    let mut face_no = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        let floats = |tokens: std::str::SplitWhitespace, n: usize| -> Result<Vec<f64>> {
            let vals = tokens
                .map(|t| t.parse::<f64>().map_err(|_| err(line_no, format!("cannot parse number {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() < n {
                return Err(err(line_no, format!("expected {n} numbers in {keyword:?} record")));
            }
            Ok(vals)
        };
        match keyword {
            "v" => {
                let f = floats(tokens, 3)?;
                v.push(DVec3::new(f[0], f[1], f[2]));
            }
            "vt" => {
                let f = floats(tokens, 2)?;
                vt.push(DVec2::new(f[0], f[1]));
            }
            "vn" => {
                let f = floats(tokens, 3)?;
                vn.push(DVec3::new(f[0], f[1], f[2]));
            }
            "o" | "g" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                let next = Builder::named(if name.is_empty() { "default" } else { &name });
                std::mem::replace(&mut current, next).finish(&mut meshes)?;
            }
            "f" => {
                face_no += 1;
                let mut corners = Vec::new();
                for token in tokens {
                    let mut parts = token.split('/');
                    let mut index = |what: &str, len: usize| -> Result<Option<usize>> {
                        match parts.next() {
                            None | Some("") => Ok(None),
                            Some(s) => {
                                let i: i64 =
                                    s.parse().map_err(|_| err(line_no, format!("face {face_no}: bad {what} index {s:?}")))?;
                                if i <= 0 {
                                    return Err(err(
                                        line_no,
                                        format!("face {face_no}: {what} index {i} unsupported (indices are 1-based, non-negative)"),
                                    ));
                                }
                                let i = i as usize - 1;
                                if i >= len {
                                    return Err(err(line_no, format!("face {face_no}: {what} index {} out of range", i + 1)));
                                }
                                Ok(Some(i))
                            }
                        }
                    };
                    let pi = index("position", v.len())?
                        .ok_or_else(|| err(line_no, format!("face {face_no}: missing position")))?;
                    let ti = index("uv", vt.len())?.ok_or_else(|| err(line_no, format!("face {face_no}: missing UV")))?;
                    let ni =
                        index("normal", vn.len())?.ok_or_else(|| err(line_no, format!("face {face_no}: missing normal")))?;
                    let key = (pi, ti, ni);
                    let vid = match current.lookup.get(&key) {
                        Some(&id) => id,
                        None => {
                            let id = current.positions.len() as u32;
                            current.positions.push(v[pi]);
                            current.uvs.push(vt[ti]);
                            current.normals.push(vn[ni]);
                            current.lookup.insert(key, id);
                            id
                        }
                    };
                    corners.push(vid);
                }
                if corners.len() < 3 {
                    return Err(err(line_no, format!("face {face_no}: fewer than 3 vertices")));
                }
                for w in 1..corners.len() - 1 {
                    current.triangles.push([corners[0], corners[w], corners[w + 1]]);
                }
            }
            "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => debug!("{}:{line_no}: skipping unsupported record {other:?}", path.display()),
        }
    }
    current.finish(&mut meshes)?;
    Ok(meshes)
}

/// Serializes meshes as OBJ, one `o` block per mesh.
pub fn write_obj(meshes: &[Mesh]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let mut base = 1usize;
    for m in meshes {
        let _ = writeln!(s, "o {}", m.name);
        for p in &m.positions {
            let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
        }
        for t in &m.uvs {
            let _ = writeln!(s, "vt {} {}", t.x, t.y);
        }
        for n in &m.normals {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
        for tri in &m.triangles {
            let c: Vec<String> = tri.iter().map(|&i| {
                let i = i as usize + base;
                format!("{i}/{i}/{i}")
            }).collect();
            let _ = writeln!(s, "f {}", c.join(" "));
        }
        base += m.vertex_count();
    }
    s
}
