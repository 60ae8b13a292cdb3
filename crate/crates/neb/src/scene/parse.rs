//! Scene file ingestion.
//!
//! The format is line-oriented blocks closed by `end`; `#` starts a comment.
//! Lengths are meters, angles degrees. Blocks:
//!
//! ```text
//! camera                      material <name>            sphere
//!   position x y z              lambert r g b              center x y z
//!   look_at x y z               mirror r g b               radius r
//!   up x y z                    dielectric ior             material <name>
//!   vfov degrees                phong r g b exponent     end
//!   resolution w h            end
//! end
//!
//! quad                        point_light                area_light
//!   corner x y z                position x y z             corner x y z
//!   edge1 x y z                 intensity r g b            edge1 x y z
//!   edge2 x y z               end                          edge2 x y z
//!   material <name>                                        radiance r g b
//! end                                                    end
//!
//! mesh <path relative to the scene file>
//!   material <name>
//! end
//! ```
//!
//! Area lights emit from the side faced by `edge1 x edge2`; their geometry is
//! added automatically. `load_scene` also accepts `builtin:<fixture>`.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::color::{rgb, Rgb};
use crate::math::{vec3, Vector3};

use super::{fixtures, mesh, Bsdf, Geometry, Light, Pinhole, Scene, Shape};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("unknown builtin scene `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Load a scene from a file path or a `builtin:<name>` fixture reference.
pub fn load_scene(spec: &str) -> Result<Scene, SceneError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return fixtures::builtin(name);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)?;
    parse_scene_text(&text, path)
}

pub fn parse_scene_text(text: &str, path: &Path) -> Result<Scene, SceneError> {
    let display = path.display().to_string();
    let dir = path.parent().unwrap_or(Path::new("."));
    let err = |line: usize, msg: String| SceneError::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut camera = None;
    let mut materials: Vec<Bsdf> = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut shapes: Vec<Shape> = Vec::new();
    let mut lights: Vec<Light> = Vec::new();

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, body)| !body.is_empty());

    while let Some((line, body)) = lines.next() {
        let mut head = body.split_whitespace();
        let keyword = head.next().unwrap();
        let arg = head.next();
        if head.next().is_some() {
            return Err(err(line, format!("unexpected tokens after `{keyword}`")));
        }
        let mut block = Block::collect(&mut lines, &display, keyword, line)?;
        match keyword {
            "camera" => {
                let position = block.take_vec3("position")?;
                let look_at = block.take_vec3("look_at")?;
                let up = block.opt_vec3("up")?.unwrap_or(vec3(0.0, 1.0, 0.0));
                let vfov_degrees = block.take_f64("vfov")?;
                let (width, height) = match block.opt_pair_u32("resolution")? {
                    Some(wh) => wh,
                    None => (512, 512),
                };
                block.finish()?;
                camera = Some(Pinhole { position, look_at, up, vfov_degrees, width, height });
            }
            "material" => {
                let name = arg
                    .ok_or_else(|| err(line, "material needs a name".into()))?
                    .to_string();
                let (dline, def) = block
                    .lines
                    .pop()
                    .ok_or_else(|| err(line, format!("material `{name}` is empty")))?;
                block.finish()?;
                let toks: Vec<&str> = def.split_whitespace().collect();
                let bsdf = match toks[0] {
                    "lambert" => Bsdf::Lambert { albedo: triple(&toks[1..], &display, dline)? },
                    "mirror" => Bsdf::Mirror { reflectance: triple(&toks[1..], &display, dline)? },
                    "dielectric" => Bsdf::Dielectric {
                        ior: single(&toks[1..], &display, dline)?,
                    },
                    "phong" => {
                        if toks.len() != 5 {
                            return Err(err(dline, "expected `phong r g b exponent`".into()));
                        }
                        Bsdf::GlossyPhong {
                            albedo: triple(&toks[1..4], &display, dline)?,
                            exponent: single(&toks[4..], &display, dline)?,
                        }
                    }
                    other => return Err(err(dline, format!("unknown material model `{other}`"))),
                };
                if names.insert(name.clone(), materials.len()).is_some() {
                    return Err(err(line, format!("duplicate material `{name}`")));
                }
                materials.push(bsdf);
            }
            "sphere" => {
                let center = block.take_vec3("center")?;
                let radius = block.take_f64("radius")?;
                let material = block.take_material(&names)?;
                block.finish()?;
                shapes.push(Shape {
                    geometry: Geometry::Sphere { center, radius },
                    material,
                    emitter: None,
                });
            }
            "quad" => {
                let corner = block.take_vec3("corner")?;
                let edge1 = block.take_vec3("edge1")?;
                let edge2 = block.take_vec3("edge2")?;
                let material = block.take_material(&names)?;
                block.finish()?;
                let (a, b, c, d) = (corner, corner + edge1, corner + edge1 + edge2, corner + edge2);
                for tri in [[a, b, c], [a, c, d]] {
                    shapes.push(Shape {
                        geometry: Geometry::Triangle { p: tri, normals: None },
                        material,
                        emitter: None,
                    });
                }
            }
            "mesh" => {
                let rel = arg.ok_or_else(|| err(line, "mesh needs a file path".into()))?;
                let material = block.take_material(&names)?;
                block.finish()?;
                for p in mesh::load_triangle_list(&dir.join(rel))? {
                    shapes.push(Shape {
                        geometry: Geometry::Triangle { p, normals: None },
                        material,
                        emitter: None,
                    });
                }
            }
            "point_light" => {
                let position = block.take_vec3("position")?;
                let intensity = block.take_rgb("intensity")?;
                block.finish()?;
                lights.push(Light::Point { position, intensity });
            }
            "area_light" => {
                let corner = block.take_vec3("corner")?;
                let edge1 = block.take_vec3("edge1")?;
                let edge2 = block.take_vec3("edge2")?;
                let radiance = block.take_rgb("radiance")?;
                block.finish()?;
                lights.push(Light::AreaQuad { corner, edge1, edge2, radiance });
            }
            other => return Err(err(line, format!("unknown block `{other}`"))),
        }
    }

    let camera = camera.ok_or_else(|| SceneError::Validation("missing camera block".into()))?;
    Scene::new(camera, materials, shapes, lights)
}

fn single(toks: &[&str], path: &str, line: usize) -> Result<f64, SceneError> {
    if toks.len() == 1 {
        if let Ok(v) = toks[0].parse() {
            return Ok(v);
        }
    }
    Err(SceneError::Parse { path: path.into(), line, msg: "expected one number".into() })
}

fn triple(toks: &[&str], path: &str, line: usize) -> Result<Rgb, SceneError> {
    if toks.len() == 3 {
        let parsed: Result<Vec<f64>, _> = toks.iter().map(|t| t.parse()).collect();
        if let Ok(v) = parsed {
            return Ok(rgb(v[0], v[1], v[2]));
        }
    }
    Err(SceneError::Parse { path: path.into(), line, msg: "expected three numbers".into() })
}

/// Key/value lines of one block, consumed by the handlers above.
struct Block {
    path: String,
    keyword: String,
    open_line: usize,
    lines: Vec<(usize, String)>,
}

impl Block {
    fn collect<'a>(
        lines: &mut impl Iterator<Item = (usize, &'a str)>,
        path: &str,
        keyword: &str,
        open_line: usize,
    ) -> Result<Block, SceneError> {
        let mut collected = Vec::new();
        for (line, body) in lines {
            if body == "end" {
                return Ok(Block {
                    path: path.to_string(),
                    keyword: keyword.to_string(),
                    open_line,
                    lines: collected,
                });
            }
            collected.push((line, body.to_string()));
        }
        Err(SceneError::Parse {
            path: path.to_string(),
            line: open_line,
            msg: format!("`{keyword}` block never closed with `end`"),
        })
    }

    fn take(&mut self, key: &str) -> Result<(usize, Vec<String>), SceneError> {
        let pos = self
            .lines
            .iter()
            .position(|(_, l)| l.split_whitespace().next() == Some(key))
            .ok_or_else(|| SceneError::Parse {
                path: self.path.clone(),
                line: self.open_line,
                msg: format!("`{}` block is missing `{key}`", self.keyword),
            })?;
        let (line, body) = self.lines.remove(pos);
        Ok((line, body.split_whitespace().skip(1).map(str::to_string).collect()))
    }

    fn take_vec3(&mut self, key: &str) -> Result<Vector3, SceneError> {
        let (line, toks) = self.take(key)?;
        let refs: Vec<&str> = toks.iter().map(String::as_str).collect();
        let c = triple(&refs, &self.path, line)?;
        Ok(vec3(c.r, c.g, c.b))
    }

    fn opt_vec3(&mut self, key: &str) -> Result<Option<Vector3>, SceneError> {
        if self.lines.iter().any(|(_, l)| l.split_whitespace().next() == Some(key)) {
            Ok(Some(self.take_vec3(key)?))
        } else {
            Ok(None)
        }
    }

    fn take_rgb(&mut self, key: &str) -> Result<Rgb, SceneError> {
        let v = self.take_vec3(key)?;
        Ok(rgb(v.x, v.y, v.z))
    }

    fn take_f64(&mut self, key: &str) -> Result<f64, SceneError> {
        let (line, toks) = self.take(key)?;
        let refs: Vec<&str> = toks.iter().map(String::as_str).collect();
        single(&refs, &self.path, line)
    }

    fn opt_pair_u32(&mut self, key: &str) -> Result<Option<(u32, u32)>, SceneError> {
        if !self.lines.iter().any(|(_, l)| l.split_whitespace().next() == Some(key)) {
            return Ok(None);
        }
        let (line, toks) = self.take(key)?;
        let parsed: Option<Vec<u32>> = toks.iter().map(|t| t.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v[0] > 0 && v[1] > 0 => Ok(Some((v[0], v[1]))),
            _ => Err(SceneError::Parse {
                path: self.path.clone(),
                line,
                msg: "expected two positive integers".into(),
            }),
        }
    }

    fn take_material(&mut self, names: &HashMap<String, usize>) -> Result<usize, SceneError> {
        let (line, toks) = self.take("material")?;
        if toks.len() != 1 {
            return Err(SceneError::Parse {
                path: self.path.clone(),
                line,
                msg: "expected `material <name>`".into(),
            });
        }
        names.get(&toks[0]).copied().ok_or_else(|| SceneError::Parse {
            path: self.path.clone(),
            line,
            msg: format!("unknown material `{}`", toks[0]),
        })
    }

    fn finish(self) -> Result<(), SceneError> {
        match self.lines.first() {
            None => Ok(()),
            Some((line, body)) => Err(SceneError::Parse {
                path: self.path,
                line: *line,
                msg: format!("unexpected `{body}` in `{}` block", self.keyword),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "
# simple test scene
camera
  position 0 1 4
  look_at 0 1 0
  vfov 40
  resolution 64 48
end

material white
  lambert 0.7 0.7 0.7
end

material glass
  dielectric 1.5
end

sphere
  center 0 1 0
  radius 0.4
  material glass
end

quad
  corner -1 0 -1
  edge1 0 0 2
  edge2 2 0 0
  material white
end

area_light
  corner -0.2 1.99 -0.2
  edge1 0.4 0 0
  edge2 0 0 0.4
  radiance 10 10 10
end

point_light
  position 0.5 1.5 0.5
  intensity 0.2 0.2 0.2
end
";

    fn parse(text: &str) -> Result<Scene, SceneError> {
        parse_scene_text(text, Path::new("test.scene"))
    }

    #[test]
    fn full_scene_round_trip() {
        let scene = parse(GOOD).unwrap();
        assert_eq!(scene.lights.len(), 2);
        assert_eq!(scene.camera.width, 64);
        // Sphere + 2 quad triangles + 2 light triangles.
        assert_eq!(scene.shapes.len(), 5);
        assert!(scene.shapes.iter().filter(|s| s.emitter.is_some()).count() == 2);
        assert!(!scene.bounds.is_empty());
    }

    #[test]
    fn missing_camera_is_validation_error() {
        let text = "material m\n  lambert 0.5 0.5 0.5\nend\nsphere\n  center 0 0 0\n  radius 1\n  material m\nend\n";
        match parse(text) {
            Err(SceneError::Validation(msg)) => assert!(msg.contains("camera"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_radius_is_validation_error() {
        let text = "camera\n  position 0 0 4\n  look_at 0 0 0\n  vfov 40\nend\nmaterial m\n  lambert 0.5 0.5 0.5\nend\nsphere\n  center 0 0 0\n  radius -2\n  material m\nend\n";
        match parse(text) {
            Err(SceneError::Validation(msg)) => {
                assert!(msg.contains("sphere") && msg.contains("radius"), "{msg}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_material_reports_line() {
        let text = "camera\n  position 0 0 4\n  look_at 0 0 0\n  vfov 40\nend\nsphere\n  center 0 0 0\n  radius 1\n  material nope\nend\n";
        match parse(text) {
            Err(SceneError::Parse { line, msg, .. }) => {
                assert_eq!(line, 9);
                assert!(msg.contains("nope"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unclosed_block_reports_opening_line() {
        let text = "camera\n  position 0 0 4\n";
        match parse(text) {
            Err(SceneError::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("never closed"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mesh_block_loads_triangles() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("tri.txt"),
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n",
        )
        .unwrap();
        let text = "\
camera
  position 0 0 4
  look_at 0 0 0
  vfov 40
end
material m
  lambert 0.5 0.5 0.5
end
mesh tri.txt
  material m
end
point_light
  position 0 2 2
  intensity 1 1 1
end
";
        let scene_path = dir.path().join("scene.txt");
        std::fs::write(&scene_path, text).unwrap();
        let scene = load_scene(scene_path.to_str().unwrap()).unwrap();
        assert_eq!(scene.shapes.len(), 1);
    }

    #[test]
    fn builtin_prefix_resolves_fixtures() {
        let scene = load_scene("builtin:cornell_diffuse").unwrap();
        assert!(scene.lights.len() == 2);
        match load_scene("builtin:not_a_scene") {
            Err(SceneError::UnknownBuiltin(name)) => assert_eq!(name, "not_a_scene"),
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
