//! Array containers read and written by `chopkit quantize`.
//!
//! Binary files start with one text line, e.g. `CHOPKIT1 dtype=f32 shape=2,3`,
//! followed by the row-major values in little-endian order. Anything else is
//! read as CSV: one row per line, all rows the same length.

use std::fmt::Write as _;

pub const MAGIC: &str = "CHOPKIT1";

#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Data {
    pub fn dtype(&self) -> &'static str {
        match self {
            Data::F32(_) => "f32",
            Data::F64(_) => "f64",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayFile {
    pub layout: Layout,
    pub shape: Vec<usize>,
    pub data: Data,
}

fn parse_header(line: &str) -> Result<(String, Vec<usize>), String> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(format!("header must start with {MAGIC}"));
    }
    let (mut dtype, mut shape) = (None, None);
    for field in fields {
        match field.split_once('=') {
            Some(("dtype", v)) => dtype = Some(v.to_string()),
            Some(("shape", "")) => shape = Some(Vec::new()),
            Some(("shape", v)) => {
                let dims = v
                    .split(',')
                    .map(|d| d.parse::<usize>().map_err(|_| format!("bad dimension `{d}` in header")))
                    .collect::<Result<Vec<_>, _>>()?;
                shape = Some(dims);
            }
            _ => return Err(format!("unknown header field `{field}`")),
        }
    }
    Ok((
        dtype.ok_or("header lacks dtype=")?,
        shape.ok_or("header lacks shape=")?,
    ))
}

fn read_binary(bytes: &[u8]) -> Result<ArrayFile, String> {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("header line is not terminated")?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| "header is not UTF-8")?;
    let (dtype, shape) = parse_header(header)?;
    let count: usize = shape.iter().product();
    let payload = &bytes[end + 1..];
    let width = match dtype.as_str() {
        "f32" => 4,
        "f64" => 8,
        other => return Err(format!("unsupported dtype `{other}`; use f32 or f64")),
    };
    if payload.len() != count * width {
        return Err(format!(
            "shape {shape:?} needs {} payload bytes, found {}",
            count * width,
            payload.len()
        ));
    }
    let data = if width == 4 {
        Data::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                .collect(),
        )
    } else {
        Data::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        )
    };
    Ok(ArrayFile {
        layout: Layout::Binary,
        shape,
        data,
    })
}

fn read_csv(text: &str) -> Result<ArrayFile, String> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: `{}` is not a number", i + 1, f.trim()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(format!("line {}: expected {c} columns, found {}", i + 1, row.len()))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let shape = match cols {
        None => vec![0],
        Some(1) => vec![rows],
        Some(c) => vec![rows, c],
    };
    Ok(ArrayFile {
        layout: Layout::Csv,
        shape,
        data: Data::F64(values),
    })
}

impl ArrayFile {
    pub fn parse(bytes: &[u8]) -> Result<ArrayFile, String> {
        if bytes.starts_with(MAGIC.as_bytes()) {
            read_binary(bytes)
        } else {
            let text = std::str::from_utf8(bytes).map_err(|_| "input is neither a CHOPKIT1 file nor text CSV")?;
            read_csv(text)
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self.layout {
            Layout::Binary => {
                let dims: Vec<String> = self.shape.iter().map(|d| d.to_string()).collect();
                let mut out = format!("{MAGIC} dtype={} shape={}\n", self.data.dtype(), dims.join(",")).into_bytes();
                match &self.data {
                    Data::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                    Data::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                }
                out
            }
            Layout::Csv => {
                let cols = if self.shape.len() == 2 { self.shape[1].max(1) } else { 1 };
                let values: Vec<String> = match &self.data {
                    Data::F32(v) => v.iter().map(|x| x.to_string()).collect(),
                    Data::F64(v) => v.iter().map(|x| x.to_string()).collect(),
                };
                let mut out = String::new();
                for row in values.chunks(cols) {
                    let _ = writeln!(out, "{}", row.join(","));
                }
                out.into_bytes()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let f = ArrayFile {
            layout: Layout::Binary,
            shape: vec![2, 2],
            data: Data::F32(vec![1.0, -2.5, 3.25, f32::INFINITY]),
        };
        let bytes = f.to_bytes();
        assert!(bytes.starts_with(b"CHOPKIT1 dtype=f32 shape=2,2\n"));
        assert_eq!(ArrayFile::parse(&bytes).unwrap(), f);
    }

    #[test]
    fn csv_shapes() {
        let f = ArrayFile::parse(b"1.0\n2\n\n3e-1\n").unwrap();
        assert_eq!(f.shape, vec![3]);
        assert_eq!(f.data, Data::F64(vec![1.0, 2.0, 0.3]));
        assert_eq!(f.to_bytes(), b"1\n2\n0.3\n");
        let g = ArrayFile::parse(b"1,2,3\n4,5,6\n").unwrap();
        assert_eq!(g.shape, vec![2, 3]);
        assert_eq!(String::from_utf8(g.to_bytes()).unwrap(), "1,2,3\n4,5,6\n");
    }

    #[test]
    fn malformed() {
        assert!(ArrayFile::parse(b"1,2\n3\n").is_err());
        assert!(ArrayFile::parse(b"abc\n").is_err());
        assert!(ArrayFile::parse(b"CHOPKIT1 dtype=f64 shape=2\n\x00\x00").is_err());
        assert!(ArrayFile::parse(b"CHOPKIT1 dtype=i8 shape=1\n\x00").is_err());
        assert!(ArrayFile::parse(b"CHOPKIT1 shape=1\n").is_err());
    }
}
