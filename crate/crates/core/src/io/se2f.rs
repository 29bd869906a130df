use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Se2Grid;

pub const SE2F_MAGIC: &[u8; 4] = b"SE2F";
pub const SE2F_VERSION: u32 = 1;

/// Values over a grid. Layout (little-endian): magic `SE2F`, `u32` version,
/// `u32` nx, ny, ntheta, four `f64` window bounds, then `nx·ny·ntheta` `f64`
/// values in grid index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Se2Field {
    pub grid: Se2Grid,
    pub values: Vec<f64>,
}

impl Se2Field {
    pub fn new(grid: Se2Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Se2Field { grid, values })
    }

    pub fn to_writer(&self, mut w: impl Write) -> Result<()> {
        w.write_all(SE2F_MAGIC)?;
        w.write_all(&SE2F_VERSION.to_le_bytes())?;
        for n in self.grid.dims() {
            let n = u32::try_from(n).map_err(|_| Error::format("se2f", "dimension exceeds u32"))?;
            w.write_all(&n.to_le_bytes())?;
        }
        for v in self.grid.window().iter().chain(&self.values) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_reader(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::format("se2f", "truncated header"))?;
        if &magic != SE2F_MAGIC {
            return Err(Error::format("se2f", "bad magic"));
        }
        let mut word = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut word).map_err(|_| Error::format("se2f", "truncated header"))?;
            Ok(u32::from_le_bytes(word))
        };
        let version = read_u32(&mut r)?;
        if version != SE2F_VERSION {
            return Err(Error::format("se2f", format!("unsupported version {version}")));
        }
        let dims = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        let read_f64 = |r: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| Error::format("se2f", "truncated data"))?;
            Ok(f64::from_le_bytes(b))
        };
        let mut window = [0.0; 4];
        for w in &mut window {
            *w = read_f64(&mut r)?;
        }
        let grid = Se2Grid::new(dims[0] as usize, dims[1] as usize, dims[2] as usize, window)
            .map_err(|e| Error::format("se2f", e.to_string()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != grid.len() * 8 {
            return Err(Error::format(
                "se2f",
                format!("expected {} values, found {} bytes", grid.len(), bytes.len()),
            ));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Se2Field { grid, values })
    }
}

pub fn write_se2f(path: impl AsRef<Path>, field: &Se2Field) -> Result<()> {
    field.to_writer(BufWriter::new(File::create(path)?))
}

pub fn read_se2f(path: impl AsRef<Path>) -> Result<Se2Field> {
    Se2Field::from_reader(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_identical() {
        let grid = Se2Grid::new(3, 2, 4, [-1.0, 2.5, 0.0, 1e-3]).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|i| (i as f64).sin() * 1e-300 + f64::EPSILON * i as f64).collect();
        let field = Se2Field::new(grid, values).unwrap();
        let mut buf = Vec::new();
        field.to_writer(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SE2F");
        assert_eq!(buf.len(), 4 + 4 + 12 + 32 + 8 * grid.len());
        let back = Se2Field::from_reader(&buf[..]).unwrap();
        assert_eq!(back, field);
        let mut again = Vec::new();
        back.to_writer(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(Se2Field::from_reader(&b"NOPE"[..]).is_err());
        let grid = Se2Grid::new(2, 2, 4, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        Se2Field::new(grid, vec![0.0; 16]).unwrap().to_writer(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(Se2Field::from_reader(&buf[..]), Err(Error::Format { .. })));
    }
}
