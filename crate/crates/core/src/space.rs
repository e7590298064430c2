//! Function-space tags and coefficient vectors.

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;

/// The six compound finite element spaces.
///
/// Primal spaces carry DOFs on primal vertices (`V0`), edges (`V1`) and
/// cells (`V2`). The dual spaces carry DOFs on dual vertices (one per primal
/// cell), dual edges (one per primal edge) and dual cells (one per primal
/// vertex).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    V0,
    V1,
    V2,
    DualV0,
    DualV1,
    DualV2,
}

impl Space {
    pub fn dim(self, mesh: &PolyMesh) -> usize {
        match self {
            Space::V0 | Space::DualV2 => mesh.n_verts(),
            Space::V1 | Space::DualV1 => mesh.n_edges(),
            Space::V2 | Space::DualV0 => mesh.n_cells(),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Space::V0 => 0,
            Space::V1 => 1,
            Space::V2 => 2,
            Space::DualV0 => 3,
            Space::DualV1 => 4,
            Space::DualV2 => 5,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Space::V0,
            1 => Space::V1,
            2 => Space::V2,
            3 => Space::DualV0,
            4 => Space::DualV1,
            5 => Space::DualV2,
            _ => return Err(Error::Format(format!("unknown space code {code}"))),
        })
    }

    pub fn is_dual(self) -> bool {
        matches!(self, Space::DualV0 | Space::DualV1 | Space::DualV2)
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Space::V0 => "V0",
            Space::V1 => "V1",
            Space::V2 => "V2",
            Space::DualV0 => "V^0",
            Space::DualV1 => "V^1",
            Space::DualV2 => "V^2",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "v0" => Space::V0,
            "v1" => Space::V1,
            "v2" => Space::V2,
            "dv0" | "dual-v0" => Space::DualV0,
            "dv1" | "dual-v1" => Space::DualV1,
            "dv2" | "dual-v2" => Space::DualV2,
            other => return Err(Error::Config(format!("unknown space `{other}`"))),
        })
    }
}

/// A coefficient vector tagged with the space it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub space: Space,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(space: Space, values: Vec<f64>) -> Self {
        Field { space, values }
    }

    pub fn zeros(space: Space, mesh: &PolyMesh) -> Self {
        Field {
            space,
            values: vec![0.0; space.dim(mesh)],
        }
    }

    pub fn check(&self, mesh: &PolyMesh) -> Result<()> {
        let n = self.space.dim(mesh);
        if self.values.len() != n {
            return Err(Error::Dimension(format!(
                "field in {} has {} coefficients, mesh needs {n}",
                self.space,
                self.values.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
