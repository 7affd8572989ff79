//! Snapshot containers and CSV series.
//!
//! A snapshot file is the magic `PCFSNAP1`, a little-endian `u64` header
//! length, a JSON header (grid and channel list), then each channel's values
//! as little-endian `f64`, complex channels with real and imaginary parts
//! interleaved, all arrays in row-major grid order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{HermitianField, C64};
use crate::grid::ChartGrid;

const MAGIC: &[u8; 8] = b"PCFSNAP1";

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelData {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    pub data: ChannelData,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: ChartGrid,
    /// Free-form metadata (time, experiment, ...).
    pub meta: serde_json::Map<String, serde_json::Value>,
    pub channels: Vec<Channel>,
}

#[derive(Serialize, Deserialize)]
struct ChannelHeader {
    name: String,
    kind: String,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: [usize; 4],
    periods: [f64; 4],
    meta: serde_json::Map<String, serde_json::Value>,
    channels: Vec<ChannelHeader>,
}

impl Snapshot {
    pub fn new(grid: &ChartGrid) -> Self {
        Self { grid: grid.clone(), meta: Default::default(), channels: vec![] }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn push_real(&mut self, name: &str, v: Vec<f64>) {
        self.channels.push(Channel { name: name.into(), data: ChannelData::Real(v) });
    }

    pub fn push_complex(&mut self, name: &str, v: Vec<C64>) {
        self.channels.push(Channel { name: name.into(), data: ChannelData::Complex(v) });
    }

    /// Channels `h11`, `h22` (real) and `h12` (complex).
    pub fn from_hermitian(w: &HermitianField) -> Self {
        let mut s = Self::new(&w.grid);
        s.push_real("h11", w.u[0].clone());
        s.push_real("h22", w.u[1].clone());
        s.push_complex("h12", w.u[2].iter().zip(&w.u[3]).map(|(&a, &b)| C64::new(a, b)).collect());
        s
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelData> {
        self.channels.iter().find(|c| c.name == name).map(|c| &c.data)
    }

    pub fn to_hermitian(&self) -> Result<HermitianField> {
        let real = |name: &str| match self.channel(name) {
            Some(ChannelData::Real(v)) => Ok(v.clone()),
            _ => Err(Error::Parameter(format!("snapshot lacks real channel {name}"))),
        };
        let off = match self.channel("h12") {
            Some(ChannelData::Complex(v)) => v.clone(),
            _ => return Err(Error::Parameter("snapshot lacks complex channel h12".into())),
        };
        Ok(HermitianField { grid: self.grid.clone(), u: [real("h11")?, real("h22")?, off.iter().map(|z| z.re).collect(), off.iter().map(|z| z.im).collect()] })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = Header {
            n: self.grid.n,
            periods: self.grid.periods,
            meta: self.meta.clone(),
            channels: self
                .channels
                .iter()
                .map(|c| match &c.data {
                    ChannelData::Real(v) => ChannelHeader { name: c.name.clone(), kind: "real".into(), len: v.len() },
                    ChannelData::Complex(v) => ChannelHeader { name: c.name.clone(), kind: "complex".into(), len: v.len() },
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for c in &self.channels {
            match &c.data {
                ChannelData::Real(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                ChannelData::Complex(v) => v.iter().try_for_each(|z| {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())
                })?,
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parameter("not a snapshot container".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut json)?;
        let header: Header = serde_json::from_slice(&json)?;
        let grid = ChartGrid::new(header.n, header.periods)?;
        let mut f = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let mut channels = Vec::new();
        for c in header.channels {
            let data = match c.kind.as_str() {
                "real" => ChannelData::Real((0..c.len).map(|_| f()).collect::<Result<_>>()?),
                "complex" => ChannelData::Complex((0..c.len).map(|_| Ok(C64::new(f()?, f()?))).collect::<Result<_>>()?),
                k => return Err(Error::Parameter(format!("unknown channel kind {k}"))),
            };
            channels.push(Channel { name: c.name, data });
        }
        Ok(Self { grid, meta: header.meta, channels })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// Writes a numeric table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let g = ChartGrid::new([8, 8, 16, 8], [1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = HermitianField::from_fn(&g, |x| crate::field::channels_to_hermitian(&[1.0 + 0.1 * x[0].sin(), 2.0, 0.1 * x[1], -0.2 * x[3]]));
        let mut s = Snapshot::from_hermitian(&w).with_meta("t", 1.5);
        s.push_real("f", g.sample(|x| x[2]));
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_hermitian().unwrap().u, w.u);
        // little-endian payload after the header
        let hl = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        assert_eq!(f64::from_le_bytes(buf[16 + hl..24 + hl].try_into().unwrap()), w.u[0][0]);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(Snapshot::read_from(&b"NOTASNAPSHOT...."[..]).is_err());
    }
}
