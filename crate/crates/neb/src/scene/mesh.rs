//! Minimal ASCII triangle-list loader: `v x y z` vertex lines and 1-based
//! `f i j k` face lines, `#` comments. A deliberate OBJ subset.

use std::path::Path;

use crate::math::{vec3, Vector3};

use super::SceneError;

pub fn load_triangle_list(path: &Path) -> Result<Vec<[Vector3; 3]>, SceneError> {
    let text = std::fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut vertices: Vec<Vector3> = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let kind = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match kind {
            "v" => {
                let c = parse_floats::<3>(&rest)
                    .ok_or_else(|| parse_err(&display, line, "expected `v x y z`"))?;
                vertices.push(vec3(c[0], c[1], c[2]));
            }
            "f" => {
                let mut idxs = [0usize; 3];
                if rest.len() != 3 {
                    return Err(parse_err(&display, line, "expected `f i j k`"));
                }
                for (slot, tok) in idxs.iter_mut().zip(&rest) {
                    let i: usize = tok
                        .parse()
                        .map_err(|_| parse_err(&display, line, "face index is not an integer"))?;
                    if i == 0 || i > vertices.len() {
                        return Err(parse_err(
                            &display,
                            line,
                            &format!("face index {i} out of range (have {} vertices)", vertices.len()),
                        ));
                    }
                    *slot = i - 1;
                }
                triangles.push([vertices[idxs[0]], vertices[idxs[1]], vertices[idxs[2]]]);
            }
            other => {
                return Err(parse_err(&display, line, &format!("unknown directive `{other}`")));
            }
        }
    }
    Ok(triangles)
}

fn parse_floats<const N: usize>(tokens: &[&str]) -> Option<[f64; N]> {
    if tokens.len() != N {
        return None;
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(tokens) {
        *o = t.parse().ok()?;
    }
    Some(out)
}

fn parse_err(path: &str, line: usize, msg: &str) -> SceneError {
    SceneError::Parse { path: path.to_string(), line, msg: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_two_triangles() {
        let f = write_temp(
            "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n",
        );
        let tris = load_triangle_list(f.path()).unwrap();
        assert_eq!(tris.len(), 2);
        assert_eq!(tris[0][1], vec3(1.0, 0.0, 0.0));
        assert_eq!(tris[1][2], vec3(0.0, 1.0, 0.0));
    }

    #[test]
    fn out_of_range_face_reports_line() {
        let f = write_temp("v 0 0 0\nv 1 0 0\nf 1 2 9\n");
        let err = load_triangle_list(f.path()).unwrap_err();
        match err {
            SceneError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_vertex_reports_line() {
        let f = write_temp("v 0 0\n");
        let err = load_triangle_list(f.path()).unwrap_err();
        match err {
            SceneError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
