//! Animation assets: an OBJ file per frame, or a single raw binary file.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{Edge, Topology};
use crate::tensor::Tensor3;

pub const RAW_MAGIC: [u8; 4] = *b"MANM";
pub const RAW_VERSION: u32 = 1;

/// Vertex positions of every frame plus the shared connectivity.
#[derive(Clone, Debug, PartialEq)]
pub struct AnimationSequence {
    pub name: String,
    vertices: Tensor3,
    topology: Topology,
    /// Polygons used only when writing OBJ frames.
    faces: Vec<Vec<usize>>,
}

impl AnimationSequence {
    /// `vertices` is `K x 3 x F`.
    pub fn new(name: impl Into<String>, vertices: Tensor3, edges: Vec<Edge>) -> Result<Self> {
        if vertices.dims()[1] != 3 {
            return Err(Error::DimensionMismatch {
                context: "animation coordinates",
                expected: vec![3],
                actual: vec![vertices.dims()[1]],
            });
        }
        let topology = Topology::new(vertices.dims()[0], edges)?;
        Ok(Self {
            name: name.into(),
            vertices,
            topology,
            faces: Vec::new(),
        })
    }

    pub fn with_faces(
        name: impl Into<String>,
        vertices: Tensor3,
        faces: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let topology = Topology::from_faces(vertices.dims()[0], &faces)?;
        let mut anim = Self::new(name, vertices, topology.edges().to_vec())?;
        anim.faces = faces;
        Ok(anim)
    }

    pub fn vertices(&self) -> &Tensor3 {
        &self.vertices
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.dims()[0]
    }

    pub fn frame_count(&self) -> usize {
        self.vertices.dims()[2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnimationFormat {
    /// Directory of `.obj` files, one per frame, in file-name order.
    ObjSequence,
    /// Single `MANM` binary file.
    Raw,
}

impl AnimationFormat {
    /// Directories are OBJ sequences, files are raw.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            AnimationFormat::ObjSequence
        } else {
            AnimationFormat::Raw
        }
    }
}

pub fn load_animation(path: &Path, format: AnimationFormat) -> Result<AnimationSequence> {
    match format {
        AnimationFormat::ObjSequence => load_obj_sequence(path),
        AnimationFormat::Raw => load_raw(path),
    }
}

pub fn save_animation(
    anim: &AnimationSequence,
    path: &Path,
    format: AnimationFormat,
) -> Result<()> {
    match format {
        AnimationFormat::ObjSequence => save_obj_sequence(anim, path),
        AnimationFormat::Raw => save_raw(anim, path),
    }
}

fn name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

struct ObjFrame {
    points: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    lines: Vec<Edge>,
}

fn parse_index(token: &str, count: usize, path: &Path, line: usize) -> Result<usize> {
    let err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let first = token.split('/').next().unwrap_or("");
    let idx: i64 = first
        .parse()
        .map_err(|_| err(format!("bad vertex index `{token}`")))?;
    let resolved = if idx > 0 {
        idx - 1
    } else if idx < 0 {
        count as i64 + idx
    } else {
        return Err(err("vertex index 0".into()));
    };
    if resolved < 0 {
        return Err(err(format!("vertex index {idx} before first vertex")));
    }
    Ok(resolved as usize)
}

fn parse_obj(path: &Path) -> Result<ObjFrame> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut frame = ObjFrame {
        points: Vec::new(),
        faces: Vec::new(),
        lines: Vec::new(),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = n + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for c in &mut p {
                    let tok = tokens.next().ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Error::Parse {
                            path: path.to_path_buf(),
                            line: lineno,
                            message: format!("bad coordinate `{tok}`"),
                        })?;
                }
                frame.points.push(p);
            }
            Some("f") => {
                let count = frame.points.len();
                let face = tokens
                    .map(|t| parse_index(t, count, path, lineno))
                    .collect::<Result<Vec<_>>>()?;
                if face.len() < 3 {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        message: "face needs at least three vertices".into(),
                    });
                }
                frame.faces.push(face);
            }
            Some("l") => {
                let count = frame.points.len();
                let poly = tokens
                    .map(|t| parse_index(t, count, path, lineno))
                    .collect::<Result<Vec<_>>>()?;
                for w in poly.windows(2) {
                    if w[0] != w[1] {
                        frame.lines.push(Edge::new(w[0], w[1])?);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(frame)
}

fn obj_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("obj"))
        {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!(
            "no .obj files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn load_obj_sequence(dir: &Path) -> Result<AnimationSequence> {
    let files = obj_files(dir)?;
    let first = parse_obj(&files[0])?;
    let k = first.points.len();
    if k == 0 {
        return Err(Error::invalid(format!(
            "{} has no vertices",
            files[0].display()
        )));
    }
    let topology_of = |frame: &ObjFrame| -> Result<Topology> {
        let mut t = Topology::from_faces(k, &frame.faces)?.edges().to_vec();
        t.extend_from_slice(&frame.lines);
        Topology::new(k, t)
    };
    let reference = topology_of(&first)?;

    let mut data = vec![0.0; k * 3 * files.len()];
    let mut store = |f: usize, points: &[[f64; 3]]| {
        let base = f * 3 * k;
        for (i, p) in points.iter().enumerate() {
            for c in 0..3 {
                data[base + c * k + i] = p[c];
            }
        }
    };
    store(0, &first.points);
    for (f, path) in files.iter().enumerate().skip(1) {
        let frame = parse_obj(path)?;
        if frame.points.len() != k {
            return Err(Error::TopologyMismatch(format!(
                "{} has {} vertices, expected {k}",
                path.display(),
                frame.points.len()
            )));
        }
        if (!frame.faces.is_empty() || !frame.lines.is_empty()) && topology_of(&frame)? != reference
        {
            return Err(Error::TopologyMismatch(format!(
                "{} has a different edge set",
                path.display()
            )));
        }
        store(f, &frame.points);
    }
    let vertices = Tensor3::from_vec([k, 3, files.len()], data)?;
    let mut anim = AnimationSequence::new(name_of(dir), vertices, reference.edges().to_vec())?;
    anim.faces = first.faces;
    Ok(anim)
}

fn save_obj_sequence(anim: &AnimationSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = anim.frame_count().to_string().len().max(5);
    let k = anim.vertex_count();
    for (f, frame) in anim.vertices.frames().enumerate() {
        let path = dir.join(format!("frame_{f:0width$}.obj"));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            for i in 0..k {
                writeln!(w, "v {} {} {}", frame[i], frame[k + i], frame[2 * k + i])?;
            }
            if anim.faces.is_empty() {
                for e in anim.topology.edges() {
                    writeln!(w, "l {} {}", e.a() + 1, e.b() + 1)?;
                }
            } else {
                for face in &anim.faces {
                    write!(w, "f")?;
                    for v in face {
                        write!(w, " {}", v + 1)?;
                    }
                    writeln!(w)?;
                }
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Reads a raw animation from any byte stream.
pub fn read_raw(mut r: impl Read, name: impl Into<String>) -> Result<AnimationSequence> {
    let truncated = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("raw animation is truncated".into())
        } else {
            Error::Stream(e)
        }
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if magic != RAW_MAGIC {
        return Err(Error::Format("not a raw animation (bad magic)".into()));
    }
    let version = read_u32(&mut r).map_err(truncated)?;
    if version != RAW_VERSION {
        return Err(Error::Format(format!("unsupported raw version {version}")));
    }
    let k = read_u32(&mut r).map_err(truncated)? as usize;
    let f = read_u32(&mut r).map_err(truncated)? as usize;
    let n = k
        .checked_mul(3 * f)
        .ok_or_else(|| Error::Format("raw dimensions overflow".into()))?;
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(truncated)?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let vertices = Tensor3::from_vec([k, 3, f], data)?;
    let edge_count = read_u32(&mut r).map_err(truncated)? as usize;
    let mut edges = Vec::with_capacity(edge_count.min(1 << 24));
    for _ in 0..edge_count {
        let a = read_u32(&mut r).map_err(truncated)? as usize;
        let b = read_u32(&mut r).map_err(truncated)? as usize;
        edges.push(Edge::new(a, b)?);
    }
    AnimationSequence::new(name, vertices, edges)
}

pub fn write_raw(anim: &AnimationSequence, mut w: impl Write) -> Result<()> {
    let [k, _, f] = anim.vertices.dims();
    let to_u32 =
        |n: usize| u32::try_from(n).map_err(|_| Error::invalid(format!("{n} exceeds u32")));
    w.write_all(&RAW_MAGIC)?;
    w.write_all(&RAW_VERSION.to_le_bytes())?;
    w.write_all(&to_u32(k)?.to_le_bytes())?;
    w.write_all(&to_u32(f)?.to_le_bytes())?;
    for x in anim.vertices.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    let edges = anim.topology.edges();
    w.write_all(&to_u32(edges.len())?.to_le_bytes())?;
    for e in edges {
        w.write_all(&(e.a() as u32).to_le_bytes())?;
        w.write_all(&(e.b() as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn load_raw(path: &Path) -> Result<AnimationSequence> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_raw(BufReader::new(file), name_of(path)).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

fn save_raw(anim: &AnimationSequence, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_raw(anim, BufWriter::new(file)).map_err(|e| match e {
        Error::Stream(source) => Error::io(path, source),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(frames: usize) -> AnimationSequence {
        let t = Tensor3::from_fn([3, 3, frames], |i, j, k| {
            (i * 3 + j) as f64 + 0.25 * k as f64
        })
        .unwrap();
        AnimationSequence::with_faces("tri", t, vec![vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn raw_round_trip_is_bitwise() {
        let mut anim = triangle(4);
        anim.vertices = Tensor3::from_fn([3, 3, 4], |i, j, k| {
            ((i + 1) as f64).ln() * 1e-3 + (j * k) as f64 / 7.0
        })
        .unwrap();
        let mut buf = Vec::new();
        write_raw(&anim, &mut buf).unwrap();
        let back = read_raw(buf.as_slice(), "tri").unwrap();
        assert_eq!(back.vertices().data(), anim.vertices().data());
        assert_eq!(back.topology(), anim.topology());
        assert!(matches!(
            read_raw(&buf[..buf.len() - 3], "x"),
            Err(Error::Format(_))
        ));
        buf[0] = b'X';
        assert!(matches!(
            read_raw(buf.as_slice(), "x"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn obj_sequence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let anim = triangle(5);
        save_obj_sequence(&anim, dir.path()).unwrap();
        let back = load_obj_sequence(dir.path()).unwrap();
        assert_eq!(back.vertex_count(), 3);
        assert_eq!(back.frame_count(), 5);
        assert_eq!(back.topology().edges().len(), 3);
        assert_eq!(back.vertices().data(), anim.vertices().data());
    }

    #[test]
    fn obj_frame_with_other_vertex_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("a.obj"),
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n",
        )
        .unwrap();
        fs::write(dir.path().join("b.obj"), "v 0 0 0\nv 1 0 0\nf 1 2 -1\n").unwrap();
        match load_obj_sequence(dir.path()) {
            Err(Error::TopologyMismatch(msg)) => assert!(msg.contains("b.obj")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obj_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.obj"), "# c\nv 0 0 0\nv 1 x 0\n").unwrap();
        match load_obj_sequence(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obj_face_index_forms() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("a.obj"),
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nf 1/1/1 2//1 -2\nl 3 4\n",
        )
        .unwrap();
        let anim = load_obj_sequence(dir.path()).unwrap();
        assert_eq!(anim.topology().edges().len(), 4);
    }
}
