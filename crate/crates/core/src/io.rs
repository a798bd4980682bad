//! Point cloud readers and mesh/cloud writers for plain interchange formats.
//!
//! Readers: XYZ text (3 or 6 columns), PLY (ASCII or binary little-endian;
//! only the `vertex` element is kept), and OBJ `v`/`vn` lines.
//! Writers emit OBJ meshes and XYZ/PLY/OBJ clouds with shortest round-trip
//! float formatting, so reading a written file back is lossless.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{PointCloud, Point3, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFileFormat {
    XyzAscii,
    PlyAscii,
    PlyBinaryLe,
    ObjPoints,
}

impl CloudFileFormat {
    /// Guess from the extension. `.ply` resolves to ASCII here; the header
    /// decides the actual encoding when reading.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "xyz" => Ok(Self::XyzAscii),
            "ply" => Ok(Self::PlyAscii),
            "obj" => Ok(Self::ObjPoints),
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer a cloud format from '{}'",
                path.display()
            ))),
        }
    }
}

impl FromStr for CloudFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(Self::XyzAscii),
            "ply" | "ply-ascii" => Ok(Self::PlyAscii),
            "ply-binary" | "ply-binary-le" => Ok(Self::PlyBinaryLe),
            "obj" => Ok(Self::ObjPoints),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Reads a cloud; `format = None` infers it from the extension.
pub fn read_point_cloud(path: &Path, format: Option<CloudFileFormat>) -> Result<PointCloud> {
    let format = match format {
        Some(f) => f,
        None => CloudFileFormat::from_path(path)?,
    };
    let bytes = fs::read(path)?;
    match format {
        CloudFileFormat::XyzAscii => parse_xyz(as_text(&bytes)?),
        CloudFileFormat::ObjPoints => parse_obj_points(as_text(&bytes)?),
        CloudFileFormat::PlyAscii | CloudFileFormat::PlyBinaryLe => parse_ply(&bytes),
    }
}

fn as_text(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::parse_byte(e.valid_up_to(), "invalid UTF-8"))
}

fn parse_real(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse_line(line, format!("expected a number, found '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::parse_line(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn unit_normal(n: Point3, line: usize) -> Result<Point3> {
    n.normalized()
        .ok_or_else(|| Error::parse_line(line, "zero-length normal"))
}

fn finish(points: Vec<Point3>, normals: Vec<Point3>) -> PointCloud {
    if !normals.is_empty() && normals.len() == points.len() {
        PointCloud::with_normals(points, normals)
    } else {
        PointCloud::new(points)
    }
}

pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|t| parse_real(t, line))
            .collect::<Result<_>>()?;
        if vals.len() != 3 && vals.len() != 6 {
            return Err(Error::parse_line(
                line,
                format!("expected 3 or 6 values, found {}", vals.len()),
            ));
        }
        if *width.get_or_insert(vals.len()) != vals.len() {
            return Err(Error::parse_line(line, "inconsistent column count"));
        }
        points.push(Point3::new(vals[0], vals[1], vals[2]));
        if vals.len() == 6 {
            normals.push(unit_normal(Point3::new(vals[3], vals[4], vals[5]), line)?);
        }
    }
    Ok(finish(points, normals))
}

pub fn parse_obj_points(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let tag = toks.next();
        if tag != Some("v") && tag != Some("vn") {
            continue;
        }
        let vals: Vec<f64> = toks.take(3).map(|t| parse_real(t, line)).collect::<Result<_>>()?;
        if vals.len() != 3 {
            return Err(Error::parse_line(line, "expected 3 coordinates"));
        }
        let p = Point3::new(vals[0], vals[1], vals[2]);
        if tag == Some("v") {
            points.push(p);
        } else {
            normals.push(unit_normal(p, line)?);
        }
    }
    Ok(finish(points, normals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(Scalar, String),
    List(Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, PartialEq, Eq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
}

/// Indices of x, y, z and (optionally) nx, ny, nz among the vertex properties.
struct VertexLayout {
    pos: [usize; 3],
    normal: Option<[usize; 3]>,
}

impl VertexLayout {
    fn of(el: &Element) -> Result<Self> {
        let find = |name: &str| {
            el.props.iter().position(|p| matches!(p, Property::Scalar(_, n) if n == name))
        };
        let pos = match (find("x"), find("y"), find("z")) {
            (Some(x), Some(y), Some(z)) => [x, y, z],
            _ => return Err(Error::UnsupportedFormat("PLY vertex element lacks x/y/z".into())),
        };
        let normal = match (find("nx"), find("ny"), find("nz")) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        };
        Ok(Self { pos, normal })
    }
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    // header is ASCII, one declaration per line
    let mut offset = 0;
    let mut line_no = 0;
    let mut next_line = |offset: &mut usize| -> Result<(usize, String)> {
        let rest = &bytes[*offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse_byte(bytes.len(), "unterminated PLY header"))?;
        line_no += 1;
        let text = String::from_utf8_lossy(&rest[..end]).trim_end_matches('\r').to_string();
        *offset += end + 1;
        Ok((line_no, text))
    };

    let (_, magic) = next_line(&mut offset)?;
    if magic.trim() != "ply" {
        return Err(Error::parse_line(1, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (ln, text) = next_line(&mut offset)?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", _] => encoding = Some(PlyEncoding::BinaryLe),
            ["format", other, ..] => {
                return Err(Error::UnsupportedFormat(format!("PLY format '{other}'")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| Error::parse_line(ln, format!("bad element count '{count}'")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, _name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse_line(ln, "property before element"))?;
                let ct = Scalar::parse(ct).ok_or_else(|| Error::parse_line(ln, "bad list count type"))?;
                let it = Scalar::parse(it).ok_or_else(|| Error::parse_line(ln, "bad list item type"))?;
                el.props.push(Property::List(ct, it));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse_line(ln, "property before element"))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse_line(ln, format!("unknown property type '{ty}'")))?;
                el.props.push(Property::Scalar(ty, name.to_string()));
            }
            _ => return Err(Error::parse_line(ln, format!("unrecognized header line '{text}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse_line(1, "missing format line"))?;
    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::UnsupportedFormat("PLY has no vertex element".into()))?;
    let layout = VertexLayout::of(&elements[vertex_pos])?;
    let header_lines = line_no;
    match encoding {
        PlyEncoding::Ascii => {
            let body = as_text(&bytes[offset..])?;
            parse_ply_ascii(body, header_lines, &elements[..=vertex_pos], &layout)
        }
        PlyEncoding::BinaryLe => parse_ply_binary(bytes, offset, &elements[..=vertex_pos], &layout),
    }
}

fn parse_ply_ascii(
    body: &str,
    header_lines: usize,
    elements: &[Element],
    layout: &VertexLayout,
) -> Result<PointCloud> {
    let mut lines = body
        .lines()
        .enumerate()
        .map(|(i, l)| (header_lines + i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let last_line = header_lines + body.lines().count();
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for el in elements {
        let is_vertex = el.name == "vertex";
        for r in 0..el.count {
            let (ln, text) = lines.next().ok_or_else(|| {
                Error::parse_line(
                    last_line,
                    format!("element '{}' promises {} records, found {r}", el.name, el.count),
                )
            })?;
            if !is_vertex {
                continue;
            }
            let toks: Vec<&str> = text.split_whitespace().collect();
            let mut vals = Vec::with_capacity(el.props.len());
            let mut t = 0;
            for prop in &el.props {
                match prop {
                    Property::Scalar(..) => {
                        let tok = toks.get(t).ok_or_else(|| Error::parse_line(ln, "too few values"))?;
                        vals.push(parse_real(tok, ln)?);
                        t += 1;
                    }
                    Property::List(..) => {
                        let tok = toks.get(t).ok_or_else(|| Error::parse_line(ln, "too few values"))?;
                        let count = parse_real(tok, ln)? as usize;
                        vals.push(f64::NAN);
                        t += 1 + count;
                    }
                }
            }
            if t != toks.len() {
                return Err(Error::parse_line(ln, "unexpected extra values"));
            }
            points.push(Point3::new(vals[layout.pos[0]], vals[layout.pos[1]], vals[layout.pos[2]]));
            if let Some(n) = layout.normal {
                normals.push(unit_normal(Point3::new(vals[n[0]], vals[n[1]], vals[n[2]]), ln)?);
            }
        }
    }
    Ok(finish(points, normals))
}

fn parse_ply_binary(
    bytes: &[u8],
    mut offset: usize,
    elements: &[Element],
    layout: &VertexLayout,
) -> Result<PointCloud> {
    let take = |offset: &mut usize, n: usize| -> Result<&[u8]> {
        if *offset + n > bytes.len() {
            return Err(Error::parse_byte(bytes.len(), "truncated binary PLY body"));
        }
        let s = &bytes[*offset..*offset + n];
        *offset += n;
        Ok(s)
    };
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for el in elements {
        let is_vertex = el.name == "vertex";
        for _ in 0..el.count {
            let start = offset;
            let mut vals = Vec::with_capacity(el.props.len());
            for prop in &el.props {
                match *prop {
                    Property::Scalar(ty, _) => vals.push(ty.read_le(take(&mut offset, ty.size())?)),
                    Property::List(ct, it) => {
                        let count = ct.read_le(take(&mut offset, ct.size())?) as usize;
                        take(&mut offset, count * it.size())?;
                        vals.push(f64::NAN);
                    }
                }
            }
            if !is_vertex {
                continue;
            }
            let p = Point3::new(vals[layout.pos[0]], vals[layout.pos[1]], vals[layout.pos[2]]);
            if !p.is_finite() {
                return Err(Error::parse_byte(start, "non-finite vertex coordinate"));
            }
            points.push(p);
            if let Some(n) = layout.normal {
                let nv = Point3::new(vals[n[0]], vals[n[1]], vals[n[2]]);
                normals.push(
                    nv.normalized()
                        .ok_or_else(|| Error::parse_byte(start, "zero-length normal"))?,
                );
            }
        }
    }
    Ok(finish(points, normals))
}

/// OBJ text: `v x y z` lines, then `f i j k` with 1-based indices.
pub fn write_mesh_to<W: Write>(mesh: &TriangleMesh, w: &mut W) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn write_mesh(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_mesh_to(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads `v` and `f` records of an OBJ file; polygons are fan-triangulated.
pub fn parse_obj_mesh(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let vals: Vec<f64> = toks.take(3).map(|t| parse_real(t, line)).collect::<Result<_>>()?;
                if vals.len() != 3 {
                    return Err(Error::parse_line(line, "expected 3 coordinates"));
                }
                vertices.push(Point3::new(vals[0], vals[1], vals[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let v: i64 = head
                            .parse()
                            .map_err(|_| Error::parse_line(line, format!("bad face index '{t}'")))?;
                        let resolved = if v > 0 {
                            v - 1
                        } else {
                            vertices.len() as i64 + v
                        };
                        if v == 0 || resolved < 0 || resolved as usize >= vertices.len() {
                            return Err(Error::parse_line(line, format!("face index {v} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse_line(line, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriangleMesh::new(vertices, faces))
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let bytes = fs::read(path)?;
    parse_obj_mesh(as_text(&bytes)?)
}

/// Writes a cloud in the format implied by the extension (`.xyz`, `.ply`
/// as ASCII, or `.obj` with `vn` lines).
pub fn write_point_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let format = CloudFileFormat::from_path(path)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    let normals = cloud.normals.as_deref();
    match format {
        CloudFileFormat::XyzAscii => {
            for (i, p) in cloud.points.iter().enumerate() {
                match normals {
                    Some(n) => writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n[i].x, n[i].y, n[i].z)?,
                    None => writeln!(w, "{} {} {}", p.x, p.y, p.z)?,
                }
            }
        }
        CloudFileFormat::PlyAscii | CloudFileFormat::PlyBinaryLe => {
            writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
            writeln!(w, "property double x\nproperty double y\nproperty double z")?;
            if normals.is_some() {
                writeln!(w, "property double nx\nproperty double ny\nproperty double nz")?;
            }
            writeln!(w, "end_header")?;
            for (i, p) in cloud.points.iter().enumerate() {
                match normals {
                    Some(n) => writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, n[i].x, n[i].y, n[i].z)?,
                    None => writeln!(w, "{} {} {}", p.x, p.y, p.z)?,
                }
            }
        }
        CloudFileFormat::ObjPoints => {
            for p in &cloud.points {
                writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
            }
            for n in normals.unwrap_or(&[]) {
                writeln!(w, "vn {} {} {}", n.x, n.y, n.z)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Location;
    use proptest::prelude::*;

    #[test]
    fn xyz_examples() {
        let c = parse_xyz("0 0 0\n1 2 3\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points[1], Point3::new(1.0, 2.0, 3.0));
        assert!(c.normals.is_none());
        let n = parse_xyz("0 0 0 0 0 2\n").unwrap();
        assert_eq!(n.normals.unwrap()[0], Point3::new(0.0, 0.0, 1.0));
        match parse_xyz("0 0 0\n1 2\n") {
            Err(Error::Parse { location: Location::Line(2), .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_xyz("0 0 0 1\n").is_err());
        assert!(parse_xyz("0 0 x\n").is_err());
    }

    #[test]
    fn ply_ascii_with_normals() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nproperty float nx\nproperty float ny\nproperty float nz\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 1 0 0 1\n3 0 0 0\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(c.points, vec![Point3::new(0.0, 0.0, 1.0)]);
        assert_eq!(c.normals.unwrap(), vec![Point3::new(0.0, 0.0, 1.0)]);
    }

    #[test]
    fn truncated_ply_is_parse_error() {
        let mut text = String::from("ply\nformat ascii 1.0\nelement vertex 10\nproperty double x\nproperty double y\nproperty double z\nend_header\n");
        for i in 0..3 {
            text.push_str(&format!("{i} 0 0\n"));
        }
        assert!(matches!(parse_ply(text.as_bytes()), Err(Error::Parse { .. })));

        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        for _ in 0..3 {
            for v in [1.0f32, 2.0, 3.0] {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        assert!(matches!(
            parse_ply(&bin),
            Err(Error::Parse { location: Location::Byte(_), .. })
        ));
    }

    #[test]
    fn ply_binary_mixed_types() {
        let mut bin = b"ply\r\nformat binary_little_endian 1.0\r\nelement vertex 2\r\nproperty double x\r\nproperty double y\r\nproperty double z\r\nproperty uchar red\r\nproperty float nx\r\nproperty float ny\r\nproperty float nz\r\nend_header\r\n".to_vec();
        for (p, n) in [([0.5f64, -1.0, 2.0], [0.0f32, 1.0, 0.0]), ([1.25, 0.0, 3.5], [1.0, 0.0, 0.0])] {
            for v in p {
                bin.extend_from_slice(&v.to_le_bytes());
            }
            bin.push(200);
            for v in n {
                bin.extend_from_slice(&v.to_le_bytes());
            }
        }
        let c = parse_ply(&bin).unwrap();
        assert_eq!(c.points[0], Point3::new(0.5, -1.0, 2.0));
        assert_eq!(c.points[1], Point3::new(1.25, 0.0, 3.5));
        assert_eq!(c.normals.unwrap()[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn ply_rejects_big_endian() {
        let text = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(text.as_bytes()), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn obj_points() {
        let c = parse_obj_points("# c\nv 1 2 3\nv 4 5 6\nvn 0 0 1\nvn 0 1 0\nf 1 2 2\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.normals.unwrap()[1], Point3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn mesh_writer_format() {
        let mesh = TriangleMesh::new(
            vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let mut buf = Vec::new();
        write_mesh_to(&mesh, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let mut empty = Vec::new();
        write_mesh_to(&TriangleMesh::default(), &mut empty).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn files_and_extensions() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = PointCloud::with_normals(
            vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-1.0, 2.5, 1e-7)],
            vec![Point3::new(0.0, 0.0, 1.0), Point3::new(0.6, 0.8, 0.0)],
        );
        for name in ["c.xyz", "c.ply", "c.obj"] {
            let p = dir.path().join(name);
            write_point_cloud(&cloud, &p).unwrap();
            assert_eq!(read_point_cloud(&p, None).unwrap(), cloud, "{name}");
        }
        assert!(matches!(
            read_point_cloud(&dir.path().join("c.las"), None),
            Err(Error::UnsupportedFormat(_))
        ));
        let mesh_path = dir.path().join("m.obj");
        write_mesh(&TriangleMesh::default(), &mesh_path).unwrap();
        assert_eq!(fs::read(&mesh_path).unwrap().len(), 0);
    }

    #[test]
    fn obj_faces_fan_and_negative_indices() {
        let m = parse_obj_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\nf -1 -2 -3\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3], [3, 2, 1]]);
        assert!(parse_obj_mesh("v 0 0 0\nf 1 2 3\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mesh_round_trip(
            verts in proptest::collection::vec(proptest::array::uniform3(-1e3f64..1e3), 3..40),
            picks in proptest::collection::vec(proptest::array::uniform3(0usize..1000), 0..60),
        ) {
            let n = verts.len();
            let mesh = TriangleMesh::new(
                verts.iter().map(|&a| Point3::from(a)).collect(),
                picks.iter().map(|f| [f[0] % n, f[1] % n, (f[2] % n + 1) % n]).filter(|f| !(f[0] == f[1] && f[1] == f[2])).collect(),
            );
            let mut buf = Vec::new();
            write_mesh_to(&mesh, &mut buf).unwrap();
            let back = parse_obj_mesh(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(&back.faces, &mesh.faces);
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                prop_assert!((*a - *b).norm() <= 1e-9 * b.norm().max(1.0));
            }
        }
    }
}
