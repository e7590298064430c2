//! Weak derivatives, Hodge maps, averaging and Laplacians, with operator
//! inverses applied by tight Krylov solves.

use super::OperatorSet;
use crate::error::Result;
use crate::linsolve::{cg, norm, tight_solve, FnOp};
use crate::sparse::SparseOp;

/// Inverse applications and derived operators on top of an operator set.
pub struct Calculus<'a> {
    pub ops: &'a OperatorSet,
    pub tol: f64,
    m_diag: Vec<f64>,
    n_diag: Vec<f64>,
    h_diag: Vec<f64>,
    j_diag: Vec<f64>,
    i_diag: Vec<f64>,
}

fn nonzero_diag(op: &SparseOp) -> Vec<f64> {
    op.diag().into_iter().map(|d| if d == 0.0 { 1.0 } else { d }).collect()
}

impl<'a> Calculus<'a> {
    pub fn new(ops: &'a OperatorSet) -> Self {
        Self::with_tol(ops, 1e-12)
    }

    pub fn with_tol(ops: &'a OperatorSet, tol: f64) -> Self {
        Calculus {
            ops,
            tol,
            m_diag: nonzero_diag(&ops.m),
            n_diag: nonzero_diag(&ops.n),
            h_diag: nonzero_diag(&ops.h),
            j_diag: nonzero_diag(&ops.j),
            i_diag: nonzero_diag(&ops.i),
        }
    }

    pub fn m_inv(&self, b: &[f64]) -> Result<Vec<f64>> {
        tight_solve(&self.ops.m, &self.m_diag, b, self.tol)
    }

    pub fn n_inv(&self, b: &[f64]) -> Result<Vec<f64>> {
        tight_solve(&self.ops.n, &self.n_diag, b, self.tol)
    }

    pub fn h_inv(&self, b: &[f64]) -> Result<Vec<f64>> {
        tight_solve(&self.ops.h, &self.h_diag, b, self.tol)
    }

    pub fn j_inv(&self, b: &[f64]) -> Result<Vec<f64>> {
        tight_solve(&self.ops.j, &self.j_diag, b, self.tol)
    }

    pub fn i_inv(&self, b: &[f64]) -> Result<Vec<f64>> {
        tight_solve(&self.ops.i, &self.i_diag, b, self.tol)
    }

    pub fn l_inv(&self, b: &[f64]) -> Vec<f64> {
        b.iter().zip(&self.ops.cell_areas).map(|(x, a)| x * a).collect()
    }

    /// `G` with `M G = Dbar1 L Phi`.
    pub fn weak_grad(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.m_inv(&self.ops.db1.apply(&self.ops.l.apply(phi)))
    }

    /// `Xi` with `N Xi = Dbar2 M U`.
    pub fn weak_curl(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.n_inv(&self.ops.db2.apply(&self.ops.m.apply(u)))
    }

    /// `D2 M^-1 Dbar1 L Phi`.
    pub fn laplacian_v2(&self, phi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.ops.d2.apply(&self.weak_grad(phi)?))
    }

    /// `-N^-1 Dbar2 M D1 Psi`.
    pub fn laplacian_v0(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let u = self.ops.d1.apply(psi);
        let x = self.n_inv(&self.ops.db2.apply(&self.ops.m.apply(&u)))?;
        Ok(x.into_iter().map(|v| -v).collect())
    }

    /// `U_perp` with `M U_perp = -W U`.
    pub fn perp(&self, u: &[f64]) -> Result<Vec<f64>> {
        let wu: Vec<f64> = self.ops.w.apply(u).into_iter().map(|v| -v).collect();
        self.m_inv(&wu)
    }

    /// `Phi_hat` with `I Phi_hat = L Phi`.
    pub fn hodge_v2(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.i_inv(&self.ops.l.apply(phi))
    }

    /// `Phi = L^-1 I Phi_hat`.
    pub fn hodge_v2_inv(&self, phi_hat: &[f64]) -> Vec<f64> {
        self.l_inv(&self.ops.i.apply(phi_hat))
    }

    /// `U_hat` with `H U_hat = M U`.
    pub fn hodge_v1(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.h_inv(&self.ops.m.apply(u))
    }

    /// `U = M^-1 H U_hat`.
    pub fn hodge_v1_inv(&self, u_hat: &[f64]) -> Result<Vec<f64>> {
        self.m_inv(&self.ops.h.apply(u_hat))
    }

    /// `Xi_hat` with `J Xi_hat = N Xi`.
    pub fn hodge_v0(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.j_inv(&self.ops.n.apply(xi))
    }

    /// `Xi = N^-1 J Xi_hat`.
    pub fn hodge_v0_inv(&self, xi_hat: &[f64]) -> Result<Vec<f64>> {
        self.n_inv(&self.ops.j.apply(xi_hat))
    }

    /// `(Phi_tilde, Phi_bar)` with `N Phi_tilde = J Phi_bar = R Phi`.
    pub fn average_phi(&self, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let rp = self.ops.r.apply(phi);
        Ok((self.n_inv(&rp)?, self.j_inv(&rp)?))
    }

    /// Splits `U = M^-1 Dbar1 L Phi - D1 Psi`. Both potentials are
    /// returned with zero mean (`Phi` in area-integral form).
    pub fn helmholtz_decompose(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let ops = self.ops;
        // D2 M^-1 D2^T chi = -D2 U with chi = L Phi
        let rhs: Vec<f64> = ops.d2.apply(u).into_iter().map(|v| -v).collect();
        let nc = ops.n_cells();
        let inner = |x: &[f64], y: &mut [f64]| {
            let g = self.m_inv(&ops.d2.apply_transpose(x)).expect("inner mass solve");
            ops.d2.apply_into(&g, y);
        };
        let op = FnOp { n: nc, f: inner };
        let mut chi = vec![0.0; nc];
        let pd: Vec<f64> = (0..nc)
            .map(|i| ops.d2.row(i).iter().map(|&(e, _)| 1.0 / ops.m.get(e, e)).sum())
            .collect();
        // D2 D1 = 0 leaves only roundoff for purely rotational input
        if norm(&rhs) > 1e-14 * norm(u) {
            cg(&op, &rhs, &mut chi, &pd, self.tol, 10 * nc + 100)?;
        }
        let mean = chi.iter().sum::<f64>() / nc as f64;
        let phi = self.l_inv(&chi.iter().map(|c| c - mean).collect::<Vec<_>>());

        // D1^T M D1 Psi = -Dbar2 M U
        let nv = ops.n_verts();
        let lap0 = ops.db2.compose(&ops.m).compose(&ops.d1).with_symmetric(true);
        let rhs0: Vec<f64> = ops.db2.apply(&ops.m.apply(u)).into_iter().map(|v| -v).collect();
        let mut psi = vec![0.0; nv];
        let pd0 = nonzero_diag(&lap0);
        cg(&lap0, &rhs0, &mut psi, &pd0, self.tol, 10 * nv + 100)?;
        let mean = psi.iter().sum::<f64>() / nv as f64;
        psi.iter_mut().for_each(|p| *p -= mean);
        Ok((phi, psi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn constants_are_reproduced() {
        let mesh = gen_hex_icos(2).unwrap();
        let ops = OperatorSet::build(&mesh).unwrap();
        let calc = Calculus::new(&ops);
        let phi: Vec<f64> = ops.cell_areas.iter().map(|a| 3.0 * a).collect();
        let hat = calc.hodge_v2(&phi).unwrap();
        assert!(hat.iter().all(|v| (v - 3.0).abs() < 1e-10));
        let (tilde, bar) = calc.average_phi(&phi).unwrap();
        assert!(tilde.iter().all(|v| (v - 3.0).abs() < 1e-10));
        for (b, a) in bar.iter().zip(&ops.dual_areas) {
            assert!((b / a - 3.0).abs() < 1e-10);
        }
        let lap = calc.laplacian_v2(&phi).unwrap();
        assert!(norm(&lap) < 1e-12);
    }

    #[test]
    fn perp_is_energy_orthogonal() {
        let mesh = gen_hex_icos(2).unwrap();
        let ops = OperatorSet::build(&mesh).unwrap();
        let calc = Calculus::new(&ops);
        let u: Vec<f64> = (0..mesh.n_edges()).map(|e| ((e * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let up = calc.perp(&u).unwrap();
        let mu = ops.m.apply(&u);
        let s: f64 = mu.iter().zip(&up).map(|(a, b)| a * b).sum();
        assert!(s.abs() < 1e-10 * norm(&mu) * norm(&up));
        assert_eq!(calc.perp(&vec![0.0; mesh.n_edges()]).unwrap(), vec![0.0; mesh.n_edges()]);
    }

    #[test]
    fn decomposition_of_rotational_flow_has_no_divergent_part() {
        let mesh = gen_hex_icos(2).unwrap();
        let ops = OperatorSet::build(&mesh).unwrap();
        let calc = Calculus::new(&ops);
        let psi: Vec<f64> = mesh.verts().iter().map(|v| v.x * v.y + v.z).collect();
        let u: Vec<f64> = ops.d1.apply(&psi).into_iter().map(|x| -x).collect();
        let (phi, psi2) = calc.helmholtz_decompose(&u).unwrap();
        let g = ops.db1.apply(&ops.l.apply(&phi));
        let unorm = ops.m.apply(&u).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().sqrt();
        assert!(norm(&g) <= 1e-10 * unorm);
        let mean = psi.iter().sum::<f64>() / psi.len() as f64;
        for (a, b) in psi.iter().zip(&psi2) {
            assert!((a - mean - b).abs() < 1e-8);
        }
    }
}
