//! Iterative solvers: relaxed Jacobi with probe-based diagonal
//! approximations, the one-step sparse approximate inverse of M, and
//! preconditioned Krylov methods (CG, restarted GMRES).

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::operators::OperatorSet;
use crate::sparse::SparseOp;

/// Anything that can be applied to a vector.
pub trait LinOp {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinOp for SparseOp {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        SparseOp::apply_into(self, x, y)
    }
}

/// Adapter for closures.
pub struct FnOp<F: Fn(&[f64], &mut [f64])> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> LinOp for FnOp<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Which operator a diagonal approximation stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagKind {
    J,
    I,
    M,
    H,
}

/// `A*`: a diagonal matrix matching `A` on a probe field, plus the Jacobi
/// relaxation parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagApprox {
    pub kind: DiagKind,
    pub diag: Vec<f64>,
    pub mu: f64,
}

/// Jacobi relaxation parameters for `(J, M, H)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relaxation {
    pub j: f64,
    pub m: f64,
    pub h: f64,
    pub i: f64,
}

impl Relaxation {
    pub fn for_family(family: crate::mesh::MeshFamily) -> Self {
        match family {
            crate::mesh::MeshFamily::Cube => Relaxation {
                j: 1.4,
                m: 0.9,
                h: 1.4,
                i: 1.0,
            },
            _ => Relaxation {
                j: 1.4,
                m: 1.4,
                h: 1.4,
                i: 1.0,
            },
        }
    }
}

fn lump(kind: DiagKind, mu: f64, response: Vec<f64>, probe: &[f64]) -> Result<DiagApprox> {
    if !(mu > 0.0 && mu < 2.0) {
        return Err(Error::Config(format!("relaxation parameter {mu} outside (0, 2)")));
    }
    let scale = probe.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let diag = response
        .iter()
        .zip(probe)
        .enumerate()
        .map(|(k, (r, p))| {
            let d = r / p;
            if p.abs() <= 1e-12 * scale || !d.is_finite() || d == 0.0 {
                Err(Error::Lumping { dof: k })
            } else {
                Ok(d)
            }
        })
        .collect::<Result<_>>()?;
    Ok(DiagApprox { kind, diag, mu })
}

impl DiagApprox {
    /// `J*` from the V^2 representation of a constant field.
    pub fn j_star(ops: &OperatorSet, mu: f64) -> Result<Self> {
        let probe = ops.dual_areas.clone();
        lump(DiagKind::J, mu, ops.j.apply(&probe), &probe)
    }

    /// `I*` from the V^0 representation of a constant field.
    pub fn i_star(ops: &OperatorSet, mu: f64) -> Result<Self> {
        let probe = vec![1.0; ops.n_cells()];
        lump(DiagKind::I, mu, ops.i.apply(&probe), &probe)
    }

    /// `M*`: for every edge, a solid-body rotation whose velocity at the
    /// edge crossing is the unit edge normal.
    pub fn m_star(mesh: &PolyMesh, ops: &OperatorSet, mu: f64) -> Result<Self> {
        let ne = mesh.n_edges();
        let mut diag = Vec::with_capacity(ne);
        for e in 0..ne {
            let u = solid_body_normal_probe(mesh, e);
            let (resp, probe) = (row_apply(&ops.m, e, &u), u(e));
            diag.push((resp, probe));
        }
        let (resp, probe): (Vec<f64>, Vec<f64>) = diag.into_iter().unzip();
        lump(DiagKind::M, mu, resp, &probe)
    }

    /// `H*`: for every edge, a solid-body rotation whose velocity at the
    /// edge crossing is the unit dual-edge tangent.
    pub fn h_star(mesh: &PolyMesh, ops: &OperatorSet, mu: f64) -> Result<Self> {
        let ne = mesh.n_edges();
        let mut resp = Vec::with_capacity(ne);
        let mut probe = Vec::with_capacity(ne);
        for e in 0..ne {
            let x = mesh.crossings()[e];
            let omega = x.cross(&mesh.dual_edge_tangent(e));
            let circ = |k: usize| {
                let [c0, c1] = mesh.edge_cells(k);
                let (p, q, xk) = (mesh.centers()[c0], mesh.centers()[c1], mesh.crossings()[k]);
                omega.dot(&p.cross(&xk)) + omega.dot(&xk.cross(&q))
            };
            resp.push(row_apply(&ops.h, e, circ));
            probe.push(circ(e));
        }
        lump(DiagKind::H, mu, resp, &probe)
    }

    pub fn solve_diag(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.diag).map(|(x, d)| x / d).collect()
    }
}

fn row_apply(op: &SparseOp, row: usize, x: impl Fn(usize) -> f64) -> f64 {
    op.row(row).iter().map(|&(c, v)| v * x(c)).sum()
}

/// Edge fluxes `U = -D1 Psi` of the solid-body rotation whose velocity at
/// the crossing of edge `e` equals the edge normal, as a lazy per-edge map.
fn solid_body_normal_probe(mesh: &PolyMesh, e: usize) -> impl Fn(usize) -> f64 + '_ {
    let x = mesh.crossings()[e];
    let omega = x.cross(&mesh.edge_normal(e));
    move |k: usize| {
        // Psi_j = -omega . v_j and U = -D1 Psi
        let [v0, v1] = mesh.edge_verts(k);
        let psi = |j: usize| -omega.dot(&mesh.verts()[j]);
        -(psi(v1) - psi(v0))
    }
}

/// Relaxed Jacobi iteration `x <- x + mu (A*)^-1 (R - A x)`.
///
/// Without a first guess the iteration starts from `(A*)^-1 R`, which
/// counts as the first of `iters` iterations.
pub fn jacobi_solve(a: &impl LinOp, astar: &DiagApprox, r: &[f64], x0: Option<&[f64]>, iters: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    assert_eq!(r.len(), n);
    let (mut x, start) = match x0 {
        Some(x0) => (x0.to_vec(), 0),
        None => (astar.solve_diag(r), 1),
    };
    let mut res = vec![0.0; n];
    let mut history = Vec::new();
    let mut growth = 0;
    for _ in start..iters {
        a.apply_into(&x, &mut res);
        for (ri, bi) in res.iter_mut().zip(r) {
            *ri = bi - *ri;
        }
        let rn = norm(&res);
        if let Some(&prev) = history.last() {
            if rn > prev {
                growth += 1;
            } else {
                growth = 0;
            }
        }
        history.push(rn);
        if growth >= 3 || !rn.is_finite() {
            return Err(Error::Divergence {
                solver: "jacobi",
                history,
            });
        }
        for ((xi, ri), d) in x.iter_mut().zip(&res).zip(&astar.diag) {
            *xi += astar.mu * ri / d;
        }
    }
    Ok(x)
}

/// Sparse approximate inverse of M with the stencil of M:
/// `(M*)^-1 ((1 + mu) Id - mu M (M*)^-1)`, or just `(M*)^-1` when
/// `one_jacobi` is false.
pub fn sparse_m_inverse(m: &SparseOp, mstar: &DiagApprox, one_jacobi: bool) -> SparseOp {
    let inv: Vec<f64> = mstar.diag.iter().map(|d| 1.0 / d).collect();
    let diag = SparseOp::diagonal(m.source, &inv);
    if !one_jacobi {
        return diag;
    }
    let mu = mstar.mu;
    let inner = m.scale_rows_cols(Some(&inv), Some(&inv)).scaled(-mu);
    inner.add_scaled(1.0 + mu, &diag).with_symmetric(m.symmetric)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradients for SPD `a` with diagonal
/// preconditioner `pdiag`. Stops at relative residual `tol`.
pub fn cg(
    a: &impl LinOp,
    b: &[f64],
    x: &mut [f64],
    pdiag: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveInfo> {
    let n = a.dim();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveInfo {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = a.apply(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(pdiag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / bn;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(SolveInfo {
                iterations: it,
                residual: rel,
            });
        }
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver {
                solver: "cg",
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        rel = norm(&r) / bn;
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(pdiag) {
            *zi = ri / d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    if rel <= tol {
        return Ok(SolveInfo {
            iterations: max_iter,
            residual: rel,
        });
    }
    Err(Error::Solver {
        solver: "cg",
        iterations: max_iter,
        residual: rel,
    })
}

/// Restarted GMRES with right diagonal preconditioning.
pub fn gmres(
    a: &impl LinOp,
    b: &[f64],
    x: &mut [f64],
    pdiag: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<SolveInfo> {
    let n = a.dim();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveInfo {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut total = 0;
    let mut rel;
    loop {
        let mut r = a.apply(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        rel = beta / bn;
        if rel <= tol {
            return Ok(SolveInfo {
                iterations: total,
                residual: rel,
            });
        }
        if total >= max_iter {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut hmat = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let z: Vec<f64> = v[k].iter().zip(pdiag).map(|(vi, d)| vi / d).collect();
            let mut w = a.apply(&z);
            for (i, vi) in v.iter().enumerate().take(k + 1) {
                hmat[i][k] = dot(&w, vi);
                axpy(&mut w, -hmat[i][k], vi);
            }
            hmat[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let den = hmat[k][k].hypot(hmat[k + 1][k]);
            cs[k] = hmat[k][k] / den;
            sn[k] = hmat[k + 1][k] / den;
            hmat[k][k] = den;
            let hk1 = hmat[k + 1][k];
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bn;
            if rel <= tol || total >= max_iter || hk1 == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hmat[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hmat[i][i];
        }
        let mut dx = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut dx, *yi, &v[i]);
        }
        for ((xi, di), p) in x.iter_mut().zip(&dx).zip(pdiag) {
            *xi += di / p;
        }
        if !rel.is_finite() {
            break;
        }
    }
    Err(Error::Solver {
        solver: "gmres",
        iterations: total,
        residual: rel,
    })
}

/// Tight solve of `A x = b` for a general operator using GMRES with the
/// diagonal approximation as preconditioner.
pub fn tight_solve(a: &SparseOp, pdiag: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x: Vec<f64> = b.iter().zip(pdiag).map(|(b, d)| b / d).collect();
    if a.symmetric {
        cg(a, b, &mut x, pdiag, tol, 10 * a.nrows() + 100)?;
    } else {
        gmres(a, b, &mut x, pdiag, tol, 60, 20 * a.nrows() + 200)?;
    }
    Ok(x)
}

/// The semi-implicit Helmholtz problem
/// `c D2 phi* Minv Dbar1 L x - x = rhs`, `c = (alpha dt)^2`, solved in the
/// equivalent form `(L + c L D2 phi* Minv D2^T L) x = -L rhs`.
#[derive(Clone, Debug)]
pub struct Helmholtz {
    pub matrix: SparseOp,
    pdiag: Vec<f64>,
    l_diag: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Helmholtz {
    pub fn new(ops: &OperatorSet, minv: &SparseOp, phi_star: &[f64], c: f64, tol: f64) -> Self {
        let ld = ops.l_diag();
        let ld2 = ops.d2.scale_rows_cols(Some(&ld), None);
        let inner = minv.scale_rows_cols(Some(phi_star), None);
        let lap = ld2.compose(&inner).compose(&ld2.transpose());
        let symmetric = minv.nnz() == minv.nrows();
        let matrix = lap.scaled(c).add_scaled(1.0, &ops.l).with_symmetric(symmetric);
        let pdiag = matrix.diag();
        Helmholtz {
            matrix,
            pdiag,
            l_diag: ld,
            tol,
            max_iter: 2000,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
        let b: Vec<f64> = rhs.iter().zip(&self.l_diag).map(|(r, l)| -r * l).collect();
        let mut x: Vec<f64> = b.iter().zip(&self.pdiag).map(|(b, d)| b / d).collect();
        let info = if self.matrix.symmetric {
            cg(&self.matrix, &b, &mut x, &self.pdiag, self.tol, self.max_iter)?
        } else {
            gmres(&self.matrix, &b, &mut x, &self.pdiag, self.tol, 50, self.max_iter)?
        };
        Ok((x, info))
    }
}
