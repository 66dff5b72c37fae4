//! Binary array container (NPY v1.0), bit-exact for f32 and f64 payloads
//! of up to three dimensions.

use std::io::Write;
use std::path::Path;

use ndarray::{ArrayD, ArrayViewD, IxDyn};

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// A decoded array together with its stored element type.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    F32(ArrayD<f32>),
    F64(ArrayD<f64>),
}

impl NpyData {
    pub fn shape(&self) -> &[usize] {
        match self {
            NpyData::F32(a) => a.shape(),
            NpyData::F64(a) => a.shape(),
        }
    }

    /// The payload widened to f64 regardless of storage type.
    pub fn to_f64(&self) -> ArrayD<f64> {
        match self {
            NpyData::F32(a) => a.mapv(|v| v as f64),
            NpyData::F64(a) => a.clone(),
        }
    }
}

fn shape_literal(shape: &[usize]) -> String {
    match shape {
        [n] => format!("({n},)"),
        _ => {
            let inner: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("({})", inner.join(", "))
        }
    }
}

fn header_bytes(descr: &str, shape: &[usize]) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': {}, }}",
        shape_literal(shape)
    );
    // magic (6) + version (2) + header length (2) + dict + padding + newline,
    // padded with spaces to a multiple of 64 bytes
    let unpadded = 10 + dict.len() + 1;
    let total = unpadded.div_ceil(64) * 64;
    let pad = total - unpadded;

    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&((dict.len() + pad + 1) as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    out
}

fn check_writable(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 3 {
        return Err(Error::InvalidInput(format!(
            "arrays of {} dimensions are not supported (1..=3)",
            shape.len()
        )));
    }
    if shape.iter().product::<usize>() == 0 {
        return Err(Error::InvalidInput("array must be non-empty".into()));
    }
    Ok(())
}

/// Write an f64 array in row-major order.
pub fn write_array_f64(path: impl AsRef<Path>, array: ArrayViewD<'_, f64>) -> Result<()> {
    check_writable(array.shape())?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&header_bytes("<f8", array.shape()))?;
    // iteration over a standard-layout copy is row-major
    let owned = array.to_owned();
    for v in owned.iter() {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write an f32 array in row-major order.
pub fn write_array_f32(path: impl AsRef<Path>, array: ArrayViewD<'_, f32>) -> Result<()> {
    check_writable(array.shape())?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(&header_bytes("<f4", array.shape()))?;
    let owned = array.to_owned();
    for v in owned.iter() {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn header_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let at = header
        .find(&pat)
        .ok_or_else(|| Error::UnsupportedFormat(format!("header lacks `{key}`")))?;
    Ok(header[at + pat.len()..].trim_start())
}

/// Read an array container written by `write_array_f32`/`write_array_f64`
/// (or any C-order little-endian float NPY v1.0 file).
pub fn read_array(path: impl AsRef<Path>) -> Result<NpyData> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::UnsupportedFormat("bad magic".into()));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(Error::UnsupportedFormat(format!(
            "container version {}.{}",
            bytes[6], bytes[7]
        )));
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    if bytes.len() < 10 + hlen {
        return Err(Error::CorruptFile("truncated header".into()));
    }
    let header = std::str::from_utf8(&bytes[10..10 + hlen])
        .map_err(|_| Error::UnsupportedFormat("header is not ascii".into()))?;

    let descr_field = header_field(header, "descr")?;
    let descr = descr_field
        .strip_prefix('\'')
        .and_then(|s| s.split('\'').next())
        .ok_or_else(|| Error::UnsupportedFormat("malformed descr".into()))?;
    let order_field = header_field(header, "fortran_order")?;
    if !order_field.starts_with("False") {
        return Err(Error::UnsupportedFormat(
            "fortran-order payloads are not supported".into(),
        ));
    }
    let shape_field = header_field(header, "shape")?;
    let open = shape_field
        .strip_prefix('(')
        .ok_or_else(|| Error::UnsupportedFormat("malformed shape".into()))?;
    let close = open
        .find(')')
        .ok_or_else(|| Error::UnsupportedFormat("malformed shape".into()))?;
    let shape: Vec<usize> = open[..close]
        .split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::UnsupportedFormat(format!("bad dimension `{t}`")))
        })
        .collect::<Result<_>>()?;
    if shape.is_empty() {
        return Err(Error::UnsupportedFormat("scalar containers are not supported".into()));
    }

    let count: usize = shape.iter().product();
    let payload = &bytes[10 + hlen..];
    match descr {
        "<f8" => {
            if payload.len() != count * 8 {
                return Err(Error::CorruptFile(format!(
                    "payload {} bytes, shape implies {}",
                    payload.len(),
                    count * 8
                )));
            }
            let data: Vec<f64> = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(NpyData::F64(
                ArrayD::from_shape_vec(IxDyn(&shape), data)
                    .map_err(|e| Error::CorruptFile(e.to_string()))?,
            ))
        }
        "<f4" => {
            if payload.len() != count * 4 {
                return Err(Error::CorruptFile(format!(
                    "payload {} bytes, shape implies {}",
                    payload.len(),
                    count * 4
                )));
            }
            let data: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(NpyData::F32(
                ArrayD::from_shape_vec(IxDyn(&shape), data)
                    .map_err(|e| Error::CorruptFile(e.to_string()))?,
            ))
        }
        other => Err(Error::UnsupportedFormat(format!("dtype `{other}`"))),
    }
}
