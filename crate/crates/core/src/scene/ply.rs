//! Binary little-endian point-cloud reader/writer for the common 3DGS layout:
//! `x y z [nx ny nz] f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Gaussian3D, GaussianModel, RawGaussian};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

struct Property {
    name: String,
    ty: ScalarType,
    offset: usize,
}

struct Header {
    vertex_count: usize,
    stride: usize,
    properties: Vec<Property>,
}

impl Header {
    fn parse<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut line = String::new();
        let mut next_line = |r: &mut R| -> Result<String> {
            line.clear();
            let n = r
                .read_line(&mut line)
                .map_err(|e| Error::Format(format!("reading header: {e}")))?;
            if n == 0 {
                return Err(Error::Format("unexpected end of file in header".into()));
            }
            Ok(line.trim_end_matches(['\n', '\r']).to_string())
        };

        if next_line(r)? != "ply" {
            return Err(Error::Format("missing 'ply' magic".into()));
        }
        let mut format_seen = false;
        let mut vertex_count = None;
        let mut in_vertex = false;
        let mut properties = Vec::new();
        let mut stride = 0;
        loop {
            let l = next_line(r)?;
            let tokens: Vec<&str> = l.split_whitespace().collect();
            match tokens.as_slice() {
                ["end_header"] => break,
                ["comment", ..] | ["obj_info", ..] | [] => {}
                ["format", fmt, _version] => {
                    if *fmt != "binary_little_endian" {
                        return Err(Error::Format(format!(
                            "unsupported format '{fmt}', expected binary_little_endian"
                        )));
                    }
                    format_seen = true;
                }
                ["element", name, count] => {
                    if vertex_count.is_some() && !in_vertex {
                        continue;
                    }
                    if *name == "vertex" {
                        if vertex_count.is_some() {
                            return Err(Error::Format("duplicate vertex element".into()));
                        }
                        let n = count
                            .parse()
                            .map_err(|_| Error::Format(format!("bad vertex count '{count}'")))?;
                        vertex_count = Some(n);
                        in_vertex = true;
                    } else if vertex_count.is_none() {
                        return Err(Error::Format(format!(
                            "element '{name}' precedes the vertex element"
                        )));
                    } else {
                        in_vertex = false;
                    }
                }
                ["property", "list", ..] if in_vertex => {
                    return Err(Error::Format("list properties on vertices are not supported".into()))
                }
                ["property", ty, name] if in_vertex => {
                    let ty = ScalarType::parse(ty)
                        .ok_or_else(|| Error::Format(format!("unknown property type '{ty}'")))?;
                    properties.push(Property {
                        name: name.to_string(),
                        ty,
                        offset: stride,
                    });
                    stride += ty.size();
                }
                ["property", ..] => {}
                _ => return Err(Error::Format(format!("unrecognized header line '{l}'"))),
            }
        }
        if !format_seen {
            return Err(Error::Format("missing format line".into()));
        }
        let vertex_count = vertex_count.ok_or_else(|| Error::Format("no vertex element".into()))?;
        Ok(Header {
            vertex_count,
            stride,
            properties,
        })
    }

    fn find(&self, name: &str) -> Result<&Property> {
        self.properties
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Format(format!("missing vertex property '{name}'")))
    }
}

/// Reads a model from any byte source.
pub fn read_model<R: Read>(reader: R, source: &str) -> Result<GaussianModel> {
    let mut r = BufReader::new(reader);
    let header = Header::parse(&mut r)?;

    let lookup = |name: String| header.find(&name).map(|p| (p.ty, p.offset));
    let pos: Vec<_> = ["x", "y", "z"]
        .iter()
        .map(|n| lookup(n.to_string()))
        .collect::<Result<_>>()?;
    let dc: Vec<_> = (0..3).map(|i| lookup(format!("f_dc_{i}"))).collect::<Result<_>>()?;
    let rest: Vec<_> = (0..45)
        .map(|i| lookup(format!("f_rest_{i}")))
        .collect::<Result<_>>()?;
    let opacity = lookup("opacity".into())?;
    let scale: Vec<_> = (0..3).map(|i| lookup(format!("scale_{i}"))).collect::<Result<_>>()?;
    let rot: Vec<_> = (0..4).map(|i| lookup(format!("rot_{i}"))).collect::<Result<_>>()?;

    let mut record = vec![0u8; header.stride];
    let mut gaussians = Vec::with_capacity(header.vertex_count);
    for index in 0..header.vertex_count {
        r.read_exact(&mut record).map_err(|e| {
            Error::Format(format!(
                "truncated vertex data at vertex {index} of {}: {e}",
                header.vertex_count
            ))
        })?;
        let get = |(ty, off): (ScalarType, usize)| ty.read(&record[off..]);
        let mut non_finite = None;
        let mut get_f32 = |p: (ScalarType, usize), name: &str| {
            let v = get(p);
            if !v.is_finite() && non_finite.is_none() {
                non_finite = Some(name.to_string());
            }
            v as f32
        };
        let raw = RawGaussian {
            position: [get_f32(pos[0], "x"), get_f32(pos[1], "y"), get_f32(pos[2], "z")],
            f_dc: std::array::from_fn(|i| get_f32(dc[i], "f_dc")),
            f_rest: std::array::from_fn(|i| get_f32(rest[i], "f_rest")),
            opacity_logit: get_f32(opacity, "opacity"),
            log_scale: std::array::from_fn(|i| get_f32(scale[i], "scale")),
            rotation: std::array::from_fn(|i| get_f32(rot[i], "rot")),
        };
        if let Some(name) = non_finite {
            return Err(Error::Data {
                index,
                msg: format!("non-finite value in property '{name}'"),
            });
        }
        let g = Gaussian3D::from_raw(&raw).map_err(|e| Error::Data {
            index,
            msg: e.to_string(),
        })?;
        gaussians.push(g);
    }
    Ok(GaussianModel::new(gaussians, source))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GaussianModel> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(file, &path.display().to_string())
}

/// Writes the model in the standard float layout (no normals).
pub fn write_model<W: Write>(model: &GaussianModel, mut w: W) -> std::io::Result<()> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", model.count()));
    let mut names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..45).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    for n in &names {
        header.push_str(&format!("property float {n}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes())?;

    let mut buf = Vec::with_capacity(names.len() * 4 * model.count());
    for g in &model.gaussians {
        let raw = g.to_raw();
        let values = raw
            .position
            .iter()
            .chain(&raw.f_dc)
            .chain(&raw.f_rest)
            .chain(std::iter::once(&raw.opacity_logit))
            .chain(&raw.log_scale)
            .chain(&raw.rotation);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()
}

pub fn save_model(model: &GaussianModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
