//! Binary snapshot dumps (layout version 1, little-endian):
//!
//! | offset      | type          | content            |
//! |-------------|---------------|--------------------|
//! | 0           | u64           | N                  |
//! | 8           | f64           | R                  |
//! | 16          | f64           | ν (grid order)     |
//! | 24          | f64           | t                  |
//! | 32 + 16·m   | f64, f64      | Re u(r_m), Im u(r_m) |

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hankel::{make_grid, RadialField, RadialGrid};
use crate::specfun::BesselOrder;

pub const LAYOUT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n_modes: usize,
    pub radius: f64,
    pub nu: f64,
    pub t: f64,
    pub samples: Vec<Complex64>,
}

impl Snapshot {
    pub fn of(f: &RadialField, t: f64) -> Self {
        let g = f.grid();
        Snapshot { n_modes: g.n_modes(), radius: g.radius(), nu: g.nu().value(), t, samples: f.samples().to_vec() }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(HEADER_BYTES + 16 * self.samples.len());
        buf.extend_from_slice(&(self.n_modes as u64).to_le_bytes());
        buf.extend_from_slice(&self.radius.to_le_bytes());
        buf.extend_from_slice(&self.nu.to_le_bytes());
        buf.extend_from_slice(&self.t.to_le_bytes());
        for z in &self.samples {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Config(format!("snapshot too short: {} bytes", bytes.len())));
        }
        let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
        let n = u64::from_le_bytes(word(0)) as usize;
        let expected = n.checked_mul(16).and_then(|b| b.checked_add(HEADER_BYTES));
        if expected != Some(bytes.len()) {
            return Err(Error::Config(format!("snapshot declares N = {n} but holds {} bytes", bytes.len())));
        }
        let f = |i: usize| f64::from_le_bytes(word(i));
        let samples = (0..n).map(|m| Complex64::new(f(HEADER_BYTES + 16 * m), f(HEADER_BYTES + 16 * m + 8))).collect();
        Ok(Snapshot { n_modes: n, radius: f(8), nu: f(16), t: f(24), samples })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut file)?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Rebuild the grid (or reuse a matching one) and the field of dimension `dim`.
    pub fn to_field(&self, dim: usize, grid: Option<&Arc<RadialGrid>>) -> Result<RadialField> {
        let grid = match grid {
            Some(g) if g.n_modes() == self.n_modes && g.radius() == self.radius && g.nu().value() == self.nu => Arc::clone(g),
            Some(_) => return Err(Error::GridMismatch("snapshot header does not match the supplied grid".into())),
            None => make_grid(BesselOrder::new(self.nu)?, self.n_modes, self.radius)?,
        };
        RadialField::new(grid, self.samples.clone(), dim, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let s = Snapshot { n_modes: 2, radius: 3.0, nu: 0.5, t: 1.25, samples: vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)] };
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 32);
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1.25f64.to_le_bytes());
        assert_eq!(&buf[40..48], &(-2.0f64).to_le_bytes());
        assert_eq!(Snapshot::read_from(&mut buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn truncated_file_rejected() {
        let s = Snapshot { n_modes: 3, radius: 1.0, nu: 0.0, t: 0.0, samples: vec![Complex64::new(0.0, 0.0); 3] };
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        buf.pop();
        assert!(Snapshot::read_from(&mut buf.as_slice()).is_err());
        assert!(Snapshot::read_from(&mut &buf[..10]).is_err());
    }

    #[test]
    fn field_round_trip_through_file() {
        let g = make_grid(BesselOrder::new(0.5).unwrap(), 16, 5.0).unwrap();
        let f = RadialField::from_fn(Arc::clone(&g), 3, 0, |r| Complex64::new((-r * r).exp(), r)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        Snapshot::of(&f, 2.0).save(&path).unwrap();
        let back = Snapshot::load(&path).unwrap();
        assert_eq!(back.t, 2.0);
        assert_eq!(back.to_field(3, Some(&g)).unwrap().samples(), f.samples());
        assert_eq!(back.to_field(3, None).unwrap().samples(), f.samples());
        let other = make_grid(BesselOrder::new(0.5).unwrap(), 16, 6.0).unwrap();
        assert!(back.to_field(3, Some(&other)).is_err());
    }
}
