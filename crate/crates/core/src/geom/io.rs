//! Text mesh formats: Wavefront OBJ (`v`/`f` records, 1-based) for surfaces
//! and TetGen `.node`/`.ele` pairs for tetrahedral meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{TetMesh, TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    /// Triangle surface in OBJ format.
    SurfaceObj,
    /// TetGen `.node` file; the `.ele` file is found by swapping the extension.
    TetNodeEle,
}

#[derive(Clone, Debug)]
pub enum LoadedMesh {
    Surface(TriMesh),
    Volume(TetMesh),
}

pub fn load_mesh(path: &Path, kind: MeshKind) -> Result<LoadedMesh> {
    match kind {
        MeshKind::SurfaceObj => load_obj(path).map(LoadedMesh::Surface),
        MeshKind::TetNodeEle => {
            let node = path.with_extension("node");
            let ele = path.with_extension("ele");
            load_tetgen(&node, &ele).map(LoadedMesh::Volume)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_obj(path: &Path) -> Result<TriMesh> {
    parse_obj(&read(path)?, &path.display().to_string())
}

pub fn load_tetgen(node: &Path, ele: &Path) -> Result<TetMesh> {
    parse_tetgen(
        &read(node)?,
        &node.display().to_string(),
        &read(ele)?,
        &ele.display().to_string(),
    )
}

fn parse_f64(tok: Option<&str>, name: &str, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(name, line, format!("missing {what}")))?;
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(name, line, format!("invalid {what} `{tok}`")))
}

fn parse_i64(tok: Option<&str>, name: &str, line: usize, what: &str) -> Result<i64> {
    let tok = tok.ok_or_else(|| Error::parse(name, line, format!("missing {what}")))?;
    tok.parse::<i64>()
        .map_err(|_| Error::parse(name, line, format!("invalid {what} `{tok}`")))
}

pub fn parse_obj(text: &str, name: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), name, line, "x coordinate")?;
                let y = parse_f64(toks.next(), name, line, "y coordinate")?;
                let z = parse_f64(toks.next(), name, line, "z coordinate")?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let face = triangles.len();
                let refs: Vec<&str> = toks.collect();
                if refs.len() != 3 {
                    return Err(Error::parse(
                        name,
                        line,
                        format!("face {face} has {} vertices, only triangles are supported", refs.len()),
                    ));
                }
                let mut tri = [0u32; 3];
                for (k, r) in refs.iter().enumerate() {
                    let idx = r.split('/').next().unwrap_or("");
                    let idx: i64 = idx.parse().map_err(|_| {
                        Error::parse(name, line, format!("face {face}: invalid vertex reference `{r}`"))
                    })?;
                    if idx < 1 {
                        return Err(Error::parse(
                            name,
                            line,
                            format!("face {face}: vertex index {idx} (indices are 1-based and positive)"),
                        ));
                    }
                    if idx as usize > vertices.len() {
                        return Err(Error::parse(
                            name,
                            line,
                            format!("face {face}: vertex index {idx} exceeds {} vertices", vertices.len()),
                        ));
                    }
                    tri[k] = (idx - 1) as u32;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let c = l.split('#').next().unwrap_or("").trim();
        (!c.is_empty()).then_some((i + 1, c))
    })
}

pub fn parse_tetgen(node_text: &str, node_name: &str, ele_text: &str, ele_name: &str) -> Result<TetMesh> {
    let mut lines = data_lines(node_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(node_name, 1, "missing header"))?;
    let mut h = header.split_whitespace();
    let count = parse_i64(h.next(), node_name, hline, "point count")?;
    let dim = parse_i64(h.next(), node_name, hline, "dimension")?;
    if dim != 3 || count < 0 {
        return Err(Error::parse(node_name, hline, "expected `<count> 3 <attrs> <markers>` header"));
    }
    let mut vertices = Vec::with_capacity(count as usize);
    let mut base = None;
    for (line, row) in lines.by_ref().take(count as usize) {
        let mut t = row.split_whitespace();
        let idx = parse_i64(t.next(), node_name, line, "node index")?;
        let b = *base.get_or_insert(idx);
        if b != 0 && b != 1 {
            return Err(Error::parse(node_name, line, "node numbering must start at 0 or 1"));
        }
        if idx - b != vertices.len() as i64 {
            return Err(Error::parse(node_name, line, format!("node index {idx} out of sequence")));
        }
        let x = parse_f64(t.next(), node_name, line, "x coordinate")?;
        let y = parse_f64(t.next(), node_name, line, "y coordinate")?;
        let z = parse_f64(t.next(), node_name, line, "z coordinate")?;
        vertices.push(Vec3::new(x, y, z));
    }
    if vertices.len() != count as usize {
        return Err(Error::parse(
            node_name,
            node_text.lines().count(),
            format!("expected {count} nodes, found {}", vertices.len()),
        ));
    }
    let base = base.unwrap_or(0);

    let mut lines = data_lines(ele_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(ele_name, 1, "missing header"))?;
    let mut h = header.split_whitespace();
    let count = parse_i64(h.next(), ele_name, hline, "element count")?;
    let per = parse_i64(h.next(), ele_name, hline, "nodes per element")?;
    if per < 4 || count < 0 {
        return Err(Error::parse(ele_name, hline, "expected `<count> 4 <attrs>` header"));
    }
    let mut tets = Vec::with_capacity(count as usize);
    for (line, row) in lines.take(count as usize) {
        let mut t = row.split_whitespace();
        parse_i64(t.next(), ele_name, line, "element index")?;
        let mut tet = [0u32; 4];
        for slot in tet.iter_mut() {
            let v = parse_i64(t.next(), ele_name, line, "node reference")? - base;
            if v < 0 || v as usize >= vertices.len() {
                return Err(Error::parse(
                    ele_name,
                    line,
                    format!("element {}: node {} out of range", tets.len(), v + base),
                ));
            }
            *slot = v as u32;
        }
        tets.push(tet);
    }
    if tets.len() != count as usize {
        return Err(Error::parse(
            ele_name,
            ele_text.lines().count(),
            format!("expected {count} elements, found {}", tets.len()),
        ));
    }
    TetMesh::new(vertices, tets)
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.node` and `<stem>.ele` (0-based) and returns both paths.
pub fn write_tetgen(mesh: &TetMesh, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let node = stem.with_extension("node");
    let ele = stem.with_extension("ele");
    let mut s = format!("{} 3 0 0\n", mesh.vertices().len());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", v.x, v.y, v.z);
    }
    fs::write(&node, s).map_err(|e| Error::io(&node, e))?;
    let mut s = format!("{} 4 0\n", mesh.tets().len());
    for (i, t) in mesh.tets().iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    fs::write(&ele, s).map_err(|e| Error::io(&ele, e))?;
    Ok((node, ele))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "\
# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
";

    #[test]
    fn cube_obj() {
        let m = parse_obj(CUBE, "cube.obj").unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.triangle_count(), 12);
        assert!((m.signed_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_face_index_is_a_parse_error() {
        let bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n";
        let err = parse_obj(bad, "bad.obj").unwrap_err();
        match &err {
            Error::Parse { line, message, .. } => {
                assert_eq!(*line, 4);
                assert!(message.contains("face 0"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quads_and_garbage_rejected() {
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n", "q").is_err());
        assert!(parse_obj("v 0 zero 0\n", "g").is_err());
    }

    #[test]
    fn obj_slash_references() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n", "n").unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn unit_tet_node_ele_one_based() {
        let node = "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n";
        let ele = "# comment\n1 4 0\n1 1 2 3 4\n";
        let m = parse_tetgen(node, "t.node", ele, "t.ele").unwrap();
        assert_eq!(m.tets().len(), 1);
        assert!((m.volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn tetgen_zero_based_and_errors() {
        let node = "4 3 0 1\n0 0 0 0 0\n1 1 0 0 0\n2 0 1 0 0\n3 0 0 1 1\n";
        let ele = "1 4 0\n0 0 2 1 3\n";
        let m = parse_tetgen(node, "n", ele, "e").unwrap();
        assert!(m.volume(0) > 0.0);
        let bad = "1 4 0\n0 0 2 1 9\n";
        assert!(matches!(parse_tetgen(node, "n", bad, "e"), Err(Error::Parse { line: 2, .. })));
        let short = "5 3 0 0\n0 0 0 0\n";
        assert!(parse_tetgen(short, "n", ele, "e").is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_mesh(Path::new("/nonexistent/x.obj"), MeshKind::SurfaceObj),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = parse_obj(CUBE, "cube.obj").unwrap();
        let p = dir.path().join("c.obj");
        write_obj(&m, &p).unwrap();
        assert_eq!(load_obj(&p).unwrap(), m);

        let node = "4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1.25\n";
        let t = parse_tetgen(node, "n", "1 4 0\n0 0 1 2 3\n", "e").unwrap();
        let (n, e) = write_tetgen(&t, &dir.path().join("t")).unwrap();
        assert_eq!(load_tetgen(&n, &e).unwrap(), t);
        match load_mesh(&dir.path().join("t.node"), MeshKind::TetNodeEle).unwrap() {
            LoadedMesh::Volume(v) => assert_eq!(v, t),
            _ => panic!(),
        }
    }
}
