//! Precomputed tail tables and their on-disk cache.
//!
//! Cache layout (little endian):
//! `b"EACJTAIL"`, `u32` version, `f64` p, `f64` density step, `f64` grid step,
//! `u32` max J, then for each J in `1..=max J`: `u32` count followed by
//! `count` `f64` tail values.

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::density::GammaDensity;
use super::tail::TailEvaluator;

const MAGIC: &[u8; 8] = b"EACJTAIL";
const VERSION: u32 = 1;

/// `F(t; J)` sampled at `t = i·step` for every `J` in `1..=j_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailTable {
    p: f64,
    density_step: f64,
    step: f64,
    rows: Vec<Vec<f64>>,
}

impl TailTable {
    pub fn build(density: &GammaDensity, j_max: usize, step: f64) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::Param("tail table needs at least J = 1".into()));
        }
        if !(step > 0.0 && step <= 0.1) {
            return Err(Error::Param(format!("tail grid step {step} must lie in (0, 0.1]")));
        }
        let mut ev = TailEvaluator::new(density);
        ev.prepare(j_max);
        let rows = (1..=j_max)
            .map(|j| {
                let w = ev.weights(j);
                let n = (j as f64 / step).ceil() as usize;
                let mut row: Vec<f64> = (0..=n).map(|i| ev.tail_with(i as f64 * step, &w)).collect();
                // enforce monotonicity against rounding in the mixture sum
                for i in 1..row.len() {
                    if row[i] > row[i - 1] {
                        row[i] = row[i - 1];
                    }
                }
                row
            })
            .collect();
        Ok(Self {
            p: density.p(),
            density_step: density.step(),
            step,
            rows,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn density_step(&self) -> f64 {
        self.density_step
    }

    pub fn j_max(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, j: usize) -> Option<&[f64]> {
        self.rows.get(j.checked_sub(1)?).map(Vec::as_slice)
    }

    /// Interpolated `F(t; j)`, clamped to `[0, 1]`.
    pub fn lookup(&self, t: f64, j: usize) -> Result<f64> {
        let row = self.row(j).ok_or(Error::Range {
            what: "sector size",
            value: j as f64,
            lo: 1.0,
            hi: self.j_max() as f64,
        })?;
        if t.is_nan() {
            return Err(Error::Param("strength is NaN".into()));
        }
        if t <= 0.0 {
            return Ok(1.0);
        }
        if t > j as f64 {
            return Ok(0.0);
        }
        let u = t / self.step;
        let i = u.floor() as usize;
        if i + 1 >= row.len() {
            return Ok(row[row.len() - 1].clamp(0.0, 1.0));
        }
        let frac = u - i as f64;
        let v = if frac == 0.0 {
            row[i]
        } else {
            row[i] + frac * (row[i + 1] - row[i])
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Whether this table was built for the given parameters.
    pub fn matches(&self, p: f64, density_step: f64, step: f64, j_max: usize) -> bool {
        self.p == p && self.density_step == density_step && self.step == step && self.j_max() >= j_max
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.p.to_le_bytes())?;
        w.write_all(&self.density_step.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u32).to_le_bytes())?;
        for row in &self.rows {
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Decodes a cache file. Rejects anything that is not a well-formed,
    /// internally consistent table.
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(cur.bad("not a tail cache"));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(cur.bad(&format!("unsupported cache version {version}")));
        }
        let p = cur.f64()?;
        let density_step = cur.f64()?;
        let step = cur.f64()?;
        if !(p > 0.0 && p < 1.0) || !(density_step > 0.0 && density_step <= 1e-2) || !(step > 0.0 && step <= 0.1) {
            return Err(cur.bad("cache parameters out of range"));
        }
        let j_max = cur.u32()? as usize;
        if j_max == 0 {
            return Err(cur.bad("empty cache"));
        }
        let mut rows = Vec::new();
        for j in 1..=j_max {
            let n = cur.u32()? as usize;
            let expect = (j as f64 / step).ceil() as usize + 1;
            if n != expect {
                return Err(cur.bad(&format!("row {j} has {n} entries, expected {expect}")));
            }
            if cur.remaining() < n * 8 {
                return Err(cur.bad("truncated cache"));
            }
            let mut row = Vec::with_capacity(n);
            for _ in 0..n {
                let v = cur.f64()?;
                if !(0.0..=1.0).contains(&v) || row.last().is_some_and(|&prev| v > prev) {
                    return Err(cur.bad(&format!("row {j} is not a tail function")));
                }
                row.push(v);
            }
            rows.push(row);
        }
        if cur.remaining() != 0 {
            return Err(cur.bad("trailing bytes"));
        }
        Ok(Self {
            p,
            density_step,
            step,
            rows,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn bad(&self, msg: &str) -> Error {
        Error::Parse {
            line: 0,
            msg: format!("tail cache byte {}: {msg}", self.pos),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.bad("unexpected end of file"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> (GammaDensity, TailTable) {
        let d = GammaDensity::new(0.21, 1.0 / 512.0).unwrap();
        let t = TailTable::build(&d, 12, 1.0 / 512.0).unwrap();
        (d, t)
    }

    #[test]
    fn grid_points_match_direct_evaluation() {
        let (d, table) = table();
        let mut ev = TailEvaluator::new(&d);
        for j in [1, 4, 12] {
            for i in [1usize, 37, 256, 511, 512, 1000] {
                let t = i as f64 * table.step();
                if t > j as f64 {
                    continue;
                }
                assert_eq!(table.lookup(t, j).unwrap(), ev.tail(t, j).unwrap(), "j={j} i={i}");
            }
        }
    }

    #[test]
    fn between_grid_points_lies_between_neighbours() {
        let (_, table) = table();
        let s = table.step();
        for j in [1, 7, 12] {
            for i in [3usize, 100, 700] {
                if (i + 1) as f64 * s > j as f64 {
                    continue;
                }
                let a = table.lookup(i as f64 * s, j).unwrap();
                let b = table.lookup((i + 1) as f64 * s, j).unwrap();
                let m = table.lookup((i as f64 + 0.3) * s, j).unwrap();
                assert!(m <= a && m >= b);
            }
        }
    }

    #[test]
    fn table_invariants() {
        let (_, table) = table();
        for j in 1..=12 {
            assert_eq!(table.lookup(0.0, j).unwrap(), 1.0);
            assert_eq!(table.lookup(j as f64 + 1e-9, j).unwrap(), 0.0);
            let row = table.row(j).unwrap();
            assert!(row.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn out_of_range_sector_is_range_error() {
        let (_, table) = table();
        assert!(matches!(table.lookup(1.0, 13), Err(Error::Range { .. })));
        assert!(matches!(table.lookup(1.0, 0), Err(Error::Range { .. })));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let (_, table) = table();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        assert_eq!(TailTable::read_from(&buf[..]).unwrap(), table);

        assert!(TailTable::decode(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(TailTable::decode(&bad).is_err());
        let mut bad = buf.clone();
        bad.push(0);
        assert!(TailTable::decode(&bad).is_err());
    }
}
