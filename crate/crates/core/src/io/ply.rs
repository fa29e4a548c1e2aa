//! PLY point clouds: ASCII and binary little-endian, any scalar type for
//! x/y/z, other properties and elements skipped.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
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

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    /// Byte offset of the payload.
    body: usize,
    /// Number of header lines, for ASCII line numbers.
    lines: usize,
}

fn header_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("line {line}"),
        message: message.into(),
    }
}

fn parse_header(data: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = data[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| header_err(line_no + 1, "header is not terminated by end_header"))?;
        line_no += 1;
        let raw = &data[pos..pos + end];
        pos += end + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header is not valid UTF-8"))?
            .trim();
        let mut words = line.split_whitespace();
        let Some(keyword) = words.next() else { continue };
        if line_no == 1 {
            if keyword != "ply" {
                return Err(header_err(1, "missing `ply` magic"));
            }
            continue;
        }
        match keyword {
            "format" => {
                encoding = Some(match words.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some("binary_big_endian") => {
                        return Err(Error::UnsupportedFormat("binary_big_endian PLY".into()))
                    }
                    other => return Err(header_err(line_no, format!("unknown format {other:?}"))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = words.next().ok_or_else(|| header_err(line_no, "element without a name"))?;
                let count = words
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| header_err(line_no, "element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ty = words.next().ok_or_else(|| header_err(line_no, "property without a type"))?;
                let prop = if ty == "list" {
                    let count = words.next().and_then(Scalar::parse);
                    let item = words.next().and_then(Scalar::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => Property::List { count, item },
                        _ => return Err(header_err(line_no, "malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(ty)
                        .ok_or_else(|| header_err(line_no, format!("unknown property type `{ty}`")))?;
                    let name = words.next().ok_or_else(|| header_err(line_no, "property without a name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            "end_header" => break,
            other => return Err(header_err(line_no, format!("unexpected header keyword `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body: pos,
        lines: line_no,
    })
}

/// Indices of x, y, z among the vertex element's properties.
fn xyz_slots(vertex: &Element) -> Result<[usize; 3]> {
    let find = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
            .ok_or_else(|| Error::Parse {
                location: "header".into(),
                message: format!("vertex element has no `{axis}` property"),
            })
    };
    Ok([find("x")?, find("y")?, find("z")?])
}

fn read_ascii(data: &[u8], header: &Header) -> Result<PointCloud> {
    let text = std::str::from_utf8(&data[header.body..]).map_err(|e| Error::Parse {
        location: format!("byte {}", header.body + e.valid_up_to()),
        message: "ASCII payload is not valid UTF-8".into(),
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header.lines + i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut last_line = header.lines;
    for element in &header.elements {
        let slots = if element.name == "vertex" { Some(xyz_slots(element)?) } else { None };
        let mut points = Vec::with_capacity(if slots.is_some() { element.count } else { 0 });
        for _ in 0..element.count {
            let (line_no, line) = lines.next().ok_or_else(|| Error::Parse {
                location: format!("line {}", last_line + 1),
                message: format!("unexpected end of file in element `{}`", element.name),
            })?;
            last_line = line_no;
            let Some(slots) = slots else { continue };
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| header_err(line_no, "non-numeric vertex value"))?;
            if values.len() < element.properties.len() {
                return Err(header_err(
                    line_no,
                    format!("expected {} values, found {}", element.properties.len(), values.len()),
                ));
            }
            points.push(Point3::new(values[slots[0]], values[slots[1]], values[slots[2]]));
        }
        if slots.is_some() {
            return Ok(PointCloud::new(points));
        }
    }
    Err(Error::Parse {
        location: "header".into(),
        message: "no vertex element".into(),
    })
}

fn read_binary(data: &[u8], header: &Header) -> Result<PointCloud> {
    let mut pos = header.body;
    let truncated = |needed: usize, pos: usize| Error::Parse {
        location: format!("byte {pos}"),
        message: format!(
            "truncated payload: expected {needed} more bytes, found {}",
            data.len().saturating_sub(pos)
        ),
    };
    for element in &header.elements {
        let is_vertex = element.name == "vertex";
        let slots = if is_vertex { Some(xyz_slots(element)?) } else { None };
        let fixed: Option<usize> = element
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar { ty, .. } => Some(ty.size()),
                Property::List { .. } => None,
            })
            .sum();
        if let (Some(stride), Some(slots)) = (fixed, slots) {
            let needed = stride * element.count;
            if data.len() < pos + needed {
                return Err(Error::Parse {
                    location: format!("byte {pos}"),
                    message: format!(
                        "truncated payload: expected {needed} bytes of vertex data, found {}",
                        data.len() - pos
                    ),
                });
            }
            let mut offsets = [0usize; 3];
            let mut types = [Scalar::F32; 3];
            for (k, &slot) in slots.iter().enumerate() {
                offsets[k] = element.properties[..slot]
                    .iter()
                    .map(|p| match p {
                        Property::Scalar { ty, .. } => ty.size(),
                        Property::List { .. } => unreachable!(),
                    })
                    .sum();
                if let Property::Scalar { ty, .. } = element.properties[slot] {
                    types[k] = ty;
                }
            }
            let points = data[pos..pos + needed]
                .chunks_exact(stride)
                .map(|rec| {
                    let v = |k: usize| types[k].decode(&rec[offsets[k]..]);
                    Point3::new(v(0), v(1), v(2))
                })
                .collect();
            return Ok(PointCloud::new(points));
        }
        // walk records one property at a time (list properties, or elements we skip)
        let mut points = Vec::new();
        for _ in 0..element.count {
            let mut values = [0.0; 3];
            for (i, p) in element.properties.iter().enumerate() {
                match *p {
                    Property::Scalar { ty, .. } => {
                        if data.len() < pos + ty.size() {
                            return Err(truncated(ty.size(), pos));
                        }
                        if let Some(k) = slots.and_then(|s| s.iter().position(|&s| s == i)) {
                            values[k] = ty.decode(&data[pos..]);
                        }
                        pos += ty.size();
                    }
                    Property::List { count, item } => {
                        if data.len() < pos + count.size() {
                            return Err(truncated(count.size(), pos));
                        }
                        let n = count.decode(&data[pos..]);
                        if !(n >= 0.0) {
                            return Err(Error::Parse {
                                location: format!("byte {pos}"),
                                message: "negative list length".into(),
                            });
                        }
                        pos += count.size();
                        let skip = n as usize * item.size();
                        if data.len() < pos + skip {
                            return Err(truncated(skip, pos));
                        }
                        pos += skip;
                    }
                }
            }
            if slots.is_some() {
                points.push(Point3::new(values[0], values[1], values[2]));
            }
        }
        if is_vertex {
            return Ok(PointCloud::new(points));
        }
    }
    Err(Error::Parse {
        location: "header".into(),
        message: "no vertex element".into(),
    })
}

/// Parses a PLY document held in memory.
pub fn parse_ply(data: &[u8]) -> Result<PointCloud> {
    let header = parse_header(data)?;
    match header.encoding {
        PlyEncoding::Ascii => read_ascii(data, &header),
        PlyEncoding::BinaryLittleEndian => read_binary(data, &header),
    }
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_ply(&data)
}

/// Serialises `cloud` with float64 coordinates and, when given, one RGB
/// colour per point.
pub fn encode_ply(
    cloud: &PointCloud,
    colors: Option<&[[u8; 3]]>,
    encoding: PlyEncoding,
    out: &mut impl Write,
) -> Result<()> {
    if let Some(c) = colors {
        if c.len() != cloud.len() {
            return Err(Error::invalid(format!(
                "{} colours for {} points",
                c.len(),
                cloud.len()
            )));
        }
    }
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    write!(
        out,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        cloud.len()
    )?;
    if colors.is_some() {
        write!(out, "property uchar red\nproperty uchar green\nproperty uchar blue\n")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.iter().enumerate() {
        let rgb = colors.map(|c| c[i]);
        match encoding {
            PlyEncoding::Ascii => {
                write!(out, "{} {} {}", p.x, p.y, p.z)?;
                if let Some([r, g, b]) = rgb {
                    write!(out, " {r} {g} {b}")?;
                }
                writeln!(out)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in [p.x, p.y, p.z] {
                    out.write_all(&v.to_le_bytes())?;
                }
                if let Some(rgb) = rgb {
                    out.write_all(&rgb)?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_ply(
    path: impl AsRef<Path>,
    cloud: &PointCloud,
    colors: Option<&[[u8; 3]]>,
    encoding: PlyEncoding,
) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    encode_ply(cloud, colors, encoding, &mut w)?;
    w.flush()?;
    Ok(())
}
