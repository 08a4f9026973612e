//! Feature file formats.
//!
//! Binary layout (little-endian): magic `FSFT`, u16 version = 1, u32
//! dimension D, u32 class count C, u64 record count R, then C class names
//! (u16 byte length + UTF-8 bytes), then R records of (u32 class index,
//! D little-endian f64). Round-trips are bit-exact.
//!
//! CSV layout: header `label,f0,...,f{D-1}`, one record per line, `.` decimal
//! separator, no quoting; labels are arbitrary UTF-8 without commas.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{FeatureDataset, FeatureVector};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"FSFT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Binary,
    Csv,
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<FeatureDataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    read_dataset(&mut reader, format)
}

/// Reads a dataset from any byte source; `load_dataset` is the file wrapper.
pub fn read_dataset<R: Read>(reader: &mut R, format: FileFormat) -> Result<FeatureDataset> {
    match format {
        FileFormat::Binary => read_binary(reader),
        FileFormat::Csv => read_csv(reader),
    }
}

pub fn write_dataset(d: &FeatureDataset, path: &Path, format: FileFormat) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    write_dataset_to(d, &mut writer, format)?;
    writer.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_dataset_to<W: Write>(
    d: &FeatureDataset,
    writer: &mut W,
    format: FileFormat,
) -> Result<()> {
    match format {
        FileFormat::Binary => write_binary(d, writer),
        FileFormat::Csv => write_csv(d, writer),
    }
}

fn truncated(what: &str) -> Error {
    Error::Format(format!("unexpected end of file while reading {what}"))
}

fn read_binary<R: Read>(r: &mut R) -> Result<FeatureDataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| truncated("magic"))?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic bytes {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = r
        .read_u16::<LittleEndian>()
        .map_err(|_| truncated("version"))?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let dim = r.read_u32::<LittleEndian>().map_err(|_| truncated("dim"))? as usize;
    let n_classes = r
        .read_u32::<LittleEndian>()
        .map_err(|_| truncated("class count"))? as usize;
    let n_records = r
        .read_u64::<LittleEndian>()
        .map_err(|_| truncated("record count"))? as usize;

    let mut classes = Vec::with_capacity(n_classes);
    for i in 0..n_classes {
        let len = r
            .read_u16::<LittleEndian>()
            .map_err(|_| truncated("class name length"))? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)
            .map_err(|_| truncated("class name"))?;
        let name = String::from_utf8(buf)
            .map_err(|_| Error::Format(format!("class name {i} is not valid UTF-8")))?;
        classes.push(name);
    }

    let mut records = Vec::with_capacity(n_records);
    for row in 1..=n_records {
        let class = r
            .read_u32::<LittleEndian>()
            .map_err(|_| truncated("record class index"))? as usize;
        let mut values = Vec::with_capacity(dim);
        for column in 0..dim {
            let v = r
                .read_f64::<LittleEndian>()
                .map_err(|_| truncated("record value"))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row, column });
            }
            values.push(v);
        }
        records.push((class, FeatureVector { values }));
    }

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|_| truncated("eof"))? != 0 {
        return Err(Error::Format("trailing data after last record".into()));
    }

    FeatureDataset::new(dim, classes, records).map_err(|e| Error::Format(e.to_string()))
}

fn write_binary<W: Write>(d: &FeatureDataset, w: &mut W) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<writer>".into(),
        source,
    };
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_u16::<LittleEndian>(VERSION).map_err(io_err)?;
    w.write_u32::<LittleEndian>(d.dim() as u32).map_err(io_err)?;
    w.write_u32::<LittleEndian>(d.n_classes() as u32)
        .map_err(io_err)?;
    w.write_u64::<LittleEndian>(d.len() as u64).map_err(io_err)?;
    for name in d.classes() {
        let bytes = name.as_bytes();
        if bytes.len() > u16::MAX as usize {
            return Err(Error::Argument(format!(
                "class name longer than {} bytes",
                u16::MAX
            )));
        }
        w.write_u16::<LittleEndian>(bytes.len() as u16)
            .map_err(io_err)?;
        w.write_all(bytes).map_err(io_err)?;
    }
    for (class, vector) in d.records() {
        w.write_u32::<LittleEndian>(*class as u32).map_err(io_err)?;
        for &v in vector.as_slice() {
            w.write_f64::<LittleEndian>(v).map_err(io_err)?;
        }
    }
    Ok(())
}

fn read_csv<R: Read>(r: &mut R) -> Result<FeatureDataset> {
    let mut content = String::new();
    r.read_to_string(&mut content)
        .map_err(|_| Error::Format("file is not valid UTF-8".into()))?;
    let mut lines = content.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 2 || fields[0] != "label" {
        return Err(Error::Format(format!(
            "header must be `label,f0,...`, got {header:?}"
        )));
    }
    for (i, field) in fields[1..].iter().enumerate() {
        if *field != format!("f{i}") {
            return Err(Error::Format(format!(
                "header column {} must be `f{i}`, got {field:?}",
                i + 1
            )));
        }
    }
    let dim = fields.len() - 1;

    let mut classes: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::RowWidth {
                row,
                expected: dim,
                found: fields.len().saturating_sub(1),
            });
        }
        let label = fields[0].to_string();
        let class = *class_index.entry(label.clone()).or_insert_with(|| {
            classes.push(label);
            classes.len() - 1
        });
        let mut values = Vec::with_capacity(dim);
        for (column, field) in fields[1..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::RowParse {
                row,
                message: format!("column {column}: invalid float {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row, column });
            }
            values.push(v);
        }
        records.push((class, FeatureVector { values }));
    }

    FeatureDataset::new(dim, classes, records).map_err(|e| Error::Format(e.to_string()))
}

fn write_csv<W: Write>(d: &FeatureDataset, w: &mut W) -> Result<()> {
    for name in d.classes() {
        if name.contains(',') || name.contains('\n') || name.contains('\r') {
            return Err(Error::Argument(format!(
                "class name {name:?} contains a comma or newline, not representable in CSV"
            )));
        }
    }
    let io_err = |source| Error::Io {
        path: "<writer>".into(),
        source,
    };
    let mut line = String::from("label");
    for i in 0..d.dim() {
        line.push_str(&format!(",f{i}"));
    }
    line.push('\n');
    w.write_all(line.as_bytes()).map_err(io_err)?;
    for (class, vector) in d.records() {
        let mut line = d.classes()[*class].clone();
        for v in vector.as_slice() {
            // default Display emits the shortest representation that parses
            // back to the same f64
            line.push_str(&format!(",{v}"));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}
