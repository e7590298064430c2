//! `pmesh v1` mesh files.
//!
//! Layout: an ASCII header of `key value` lines terminated by a line
//! `end`, then binary blocks in this order (little endian):
//!
//! | block          | type | length             |
//! |----------------|------|--------------------|
//! | primal verts   | f64  | 3 * verts          |
//! | dual verts     | f64  | 3 * cells          |
//! | cell offsets   | i32  | cells + 1          |
//! | cell verts     | i32  | slots              |
//! | edge cells     | i32  | 2 * edges          |
//! | edge verts     | i32  | 2 * edges          |
//!
//! Cell cycles are stored counterclockwise seen from outside. Edge `e`
//! has its normal pointing from `edge_cells[2e]` to `edge_cells[2e + 1]`
//! and its tangent `t = k x n` pointing from `edge_verts[2e]` to
//! `edge_verts[2e + 1]`. Everything else (dual cells, crossings,
//! supermesh) is rebuilt on load and checked against the stored edges.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{MeshFamily, PolyMesh, Vec3};
use crate::error::{Error, Result};

const MAGIC: &str = "pmesh v1";

impl PolyMesh {
    pub fn write_pmesh(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "family {}", self.family.code())?;
        writeln!(w, "level {}", self.level)?;
        writeln!(w, "verts {}", self.n_verts())?;
        writeln!(w, "cells {}", self.n_cells())?;
        writeln!(w, "slots {}", self.cell_verts.len())?;
        writeln!(w, "edges {}", self.n_edges())?;
        writeln!(w, "end")?;
        let mut buf = Vec::new();
        for p in self.verts.iter().chain(&self.centers) {
            for x in p.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        let ints = self
            .cell_offsets
            .iter()
            .chain(&self.cell_verts)
            .chain(self.edge_cells.iter().flatten())
            .chain(self.edge_verts.iter().flatten());
        for &i in ints {
            let i = i32::try_from(i).map_err(|_| Error::Resource("mesh too large for int32 connectivity".into()))?;
            buf.extend_from_slice(&i.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_pmesh(r: &mut impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(Error::Format(format!("expected `{MAGIC}` header, found `{}`", line.trim_end())));
        }
        let (mut family, mut level) = (None, 0u32);
        let (mut nv, mut nc, mut ns, mut ne) = (None, None, None, None);
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("unterminated header".into()));
            }
            let l = line.trim_end();
            if l == "end" {
                break;
            }
            let (key, val) = l
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("bad header line `{l}`")))?;
            let num = || val.parse::<usize>().map_err(|_| Error::Format(format!("bad value in `{l}`")));
            match key {
                "family" => family = Some(val.parse::<MeshFamily>()?),
                "level" => level = num()? as u32,
                "verts" => nv = Some(num()?),
                "cells" => nc = Some(num()?),
                "slots" => ns = Some(num()?),
                "edges" => ne = Some(num()?),
                _ => return Err(Error::Format(format!("unknown header key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("header lacks `{k}`"));
        let family = family.ok_or_else(|| missing("family"))?;
        let nv = nv.ok_or_else(|| missing("verts"))?;
        let nc = nc.ok_or_else(|| missing("cells"))?;
        let ns = ns.ok_or_else(|| missing("slots"))?;
        let ne = ne.ok_or_else(|| missing("edges"))?;

        let read_f64 = |n: usize, r: &mut dyn Read| -> Result<Vec<f64>> {
            let mut b = vec![0u8; 8 * n];
            r.read_exact(&mut b)?;
            Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let coords = read_f64(3 * (nv + nc), r)?;
        let mut b = vec![0u8; 4 * (nc + 1 + ns + 4 * ne)];
        r.read_exact(&mut b)?;
        let ints: Vec<usize> = b
            .chunks_exact(4)
            .map(|c| {
                let v = i32::from_le_bytes(c.try_into().unwrap());
                usize::try_from(v).map_err(|_| Error::Format(format!("negative index {v}")))
            })
            .collect::<Result<_>>()?;
        let pts: Vec<Vec3> = coords.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let (verts, centers) = (pts[..nv].to_vec(), pts[nv..].to_vec());
        let offsets = &ints[..nc + 1];
        let slots = &ints[nc + 1..nc + 1 + ns];
        if offsets[nc] != ns || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("inconsistent cell offsets".into()));
        }
        if slots.iter().any(|&v| v >= nv) {
            return Err(Error::Format("cell vertex index out of range".into()));
        }
        let cells = offsets.windows(2).map(|w| slots[w[0]..w[1]].to_vec()).collect();
        let mesh = PolyMesh::from_parts(family, level, verts, centers, cells)?;
        let stored = &ints[nc + 1 + ns..];
        let rebuilt: Vec<usize> = mesh
            .edge_cells
            .iter()
            .flatten()
            .chain(mesh.edge_verts.iter().flatten())
            .copied()
            .collect();
        if mesh.n_edges() != ne || stored != rebuilt.as_slice() {
            return Err(Error::Format("stored edges disagree with the cell cycles".into()));
        }
        Ok(mesh)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pmesh(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_pmesh(&mut f)
    }

    /// SHA-256 of the `pmesh` serialization, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_pmesh(&mut buf).expect("in-memory write");
        Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect()
    }
}
