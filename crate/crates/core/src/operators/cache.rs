//! Operator cache files (`pmops v1`).
//!
//! ASCII header (`pmops v1`, `mesh <sha256>`, `radius <a>`, `end`), then
//! binary blocks: cell areas and dual areas (u64 count + f64 values), the
//! sparse operators D1 D2 Dbar1 Dbar2 L M N R W H J I in that order (see
//! [`SparseOp::write_to`]), and the T blocks (u64 cell count, then per cell
//! u64 edge count n and n*n f64 values, row-major).

use std::io::{BufRead, Read, Write};
use std::path::Path;

use super::OperatorSet;
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::sparse::SparseOp;

const MAGIC: &str = "pmops v1";

fn write_vec(w: &mut impl Write, v: &[f64]) -> Result<()> {
    w.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b) as usize)
}

fn read_vec(r: &mut impl Read) -> Result<Vec<f64>> {
    let n = read_u64(r)?;
    let mut b = vec![0u8; 8 * n];
    r.read_exact(&mut b)?;
    Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl OperatorSet {
    fn sparse_blocks(&self) -> [&SparseOp; 12] {
        [
            &self.d1, &self.d2, &self.db1, &self.db2, &self.l, &self.m, &self.n, &self.r, &self.w, &self.h, &self.j,
            &self.i,
        ]
    }

    pub fn write_cache(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "mesh {}", self.mesh_hash)?;
        writeln!(w, "radius {:e}", self.radius)?;
        writeln!(w, "end")?;
        write_vec(w, &self.cell_areas)?;
        write_vec(w, &self.dual_areas)?;
        for op in self.sparse_blocks() {
            op.write_to(w)?;
        }
        w.write_all(&(self.t.len() as u64).to_le_bytes())?;
        for blk in &self.t {
            let n = (blk.len() as f64).sqrt() as u64;
            w.write_all(&n.to_le_bytes())?;
            for x in blk {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a cache; fails if it was built for a different mesh.
    pub fn read_cache(r: &mut impl BufRead, mesh: &PolyMesh) -> Result<Self> {
        let mut header = Vec::new();
        let mut line = String::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("unterminated operator cache header".into()));
            }
            let l = line.trim_end().to_string();
            if l == "end" {
                break;
            }
            header.push(l);
        }
        if header.first().map(String::as_str) != Some(MAGIC) {
            return Err(Error::Format("not a `pmops v1` operator cache".into()));
        }
        let field = |key: &str| {
            header
                .iter()
                .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
                .ok_or_else(|| Error::Format(format!("operator cache header lacks `{key}`")))
        };
        let hash = field("mesh ")?;
        if hash != mesh.content_hash() {
            return Err(Error::Format("operator cache was built for a different mesh".into()));
        }
        let radius: f64 = field("radius ")?
            .parse()
            .map_err(|_| Error::Format("bad radius in operator cache".into()))?;
        let cell_areas = read_vec(r)?;
        let dual_areas = read_vec(r)?;
        let mut ops = Vec::with_capacity(12);
        for _ in 0..12 {
            ops.push(SparseOp::read_from(r)?);
        }
        let nblk = read_u64(r)?;
        let mut t = Vec::with_capacity(nblk);
        for _ in 0..nblk {
            let n = read_u64(r)?;
            let mut b = vec![0u8; 8 * n * n];
            r.read_exact(&mut b)?;
            t.push(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
        }
        let mut it = ops.into_iter();
        let mut next = || it.next().unwrap();
        Ok(OperatorSet {
            radius,
            mesh_hash: hash,
            cell_areas,
            dual_areas,
            d1: next(),
            d2: next(),
            db1: next(),
            db2: next(),
            l: next(),
            m: next(),
            n: next(),
            r: next(),
            w: next(),
            h: next(),
            j: next(),
            i: next(),
            t,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_cache(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, mesh: &PolyMesh) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_cache(&mut f, mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn cache_round_trip_and_mesh_check() {
        let mesh = gen_hex_icos(1).unwrap();
        let ops = OperatorSet::build(&mesh).unwrap();
        let mut buf = Vec::new();
        ops.write_cache(&mut buf).unwrap();
        let back = OperatorSet::read_cache(&mut buf.as_slice(), &mesh).unwrap();
        assert_eq!(ops, back);
        let other = gen_hex_icos(2).unwrap();
        assert!(matches!(
            OperatorSet::read_cache(&mut buf.as_slice(), &other),
            Err(Error::Format(_))
        ));
    }
}
