//! Q1 assembly of the PML sesquilinear forms into 4×4 block-sparse storage.
//!
//! Unknowns per node are (u₁, u₂, u₃, p). Block (a, b) row r column c holds
//! the form with trial N_b e_c and test N_a e_r, so B(U, Ψ) = Ψᴴ M U for
//! real nodal bases.

use crate::mesh::{Cell, HexMesh};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use tepml::{MaterialParams, PmlProfile};

pub type Vec4 = [C64; 4];
pub type Block = [[C64; 4]; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);
const ZB: Block = [[ZERO; 4]; 4];

/// Which terms of the form are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// The full truncated form B_D.
    Full,
    /// Only the principal part A_D: σ̃(ũ)A : ∇ψ̄ + ∇p̄′·K∇p̃.
    Principal,
}

/// Node-blocked CSR matrix; rows and columns are mesh node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl BlockMatrix {
    /// Zero matrix with the node-coupling pattern of `mesh`.
    pub fn pattern(mesh: &HexMesh) -> Self {
        let n = mesh.n_nodes();
        let rows: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| mesh.neighbours(i)).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let blocks = vec![ZB; cols.len()];
        Self { row_ptr, cols, blocks }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, r: usize) -> (&[usize], &[Block]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.blocks[a..b])
    }

    pub fn find(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&Block> {
        self.find(r, c).map(|k| &self.blocks[k])
    }

    pub fn mul(&self, x: &[Vec4]) -> Vec<Vec4> {
        (0..self.n_rows())
            .into_par_iter()
            .map(|r| {
                let (cols, blocks) = self.row(r);
                let mut acc = [ZERO; 4];
                for (c, b) in cols.iter().zip(blocks) {
                    for i in 0..4 {
                        for j in 0..4 {
                            acc[i] += b[i][j] * x[*c][j];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// vᴴ M u.
    pub fn form(&self, u: &[Vec4], v: &[Vec4]) -> C64 {
        self.mul(u).iter().zip(v).map(|(mu, vv)| (0..4).map(|i| vv[i].conj() * mu[i]).sum::<C64>()).sum()
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.cols, other.cols);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| (0..16).map(move |k| (a[k / 4][k % 4] - b[k / 4][k % 4]).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn scatter(&mut self, cell: &Cell, ke: &[[Block; 8]; 8]) {
        for a in 0..8 {
            for b in 0..8 {
                let k = self.find(cell.nodes[a], cell.nodes[b]).expect("cell nodes are coupled");
                for r in 0..4 {
                    for c in 0..4 {
                        self.blocks[k][r][c] += ke[a][b][r][c];
                    }
                }
            }
        }
    }
}

const G2: f64 = 0.577_350_269_189_625_8;

/// Values and reference-gradient of the eight trilinear shape functions.
pub(crate) fn shape(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 3]; 8];
    for c in 0..8 {
        let s = [(c & 1) as f64 * 2.0 - 1.0, ((c >> 1) & 1) as f64 * 2.0 - 1.0, (c >> 2) as f64 * 2.0 - 1.0];
        let f = [0.5 * (1.0 + s[0] * xi[0]), 0.5 * (1.0 + s[1] * xi[1]), 0.5 * (1.0 + s[2] * xi[2])];
        n[c] = f[0] * f[1] * f[2];
        dn[c] = [0.5 * s[0] * f[1] * f[2], 0.5 * s[1] * f[0] * f[2], 0.5 * s[2] * f[0] * f[1]];
    }
    (n, dn)
}

/// Tensor Gauss points on a cell: (x, weight, N, ∇N).
pub(crate) fn cell_points(cell: &Cell, order: usize) -> Vec<([f64; 3], f64, [f64; 8], [[f64; 3]; 8])> {
    let rule = tepml::gauss::GaussRule::legendre(order);
    let jac = cell.volume() / 8.0;
    let mut out = Vec::with_capacity(order.pow(3));
    for (k, wz) in rule.nodes.iter().zip(&rule.weights) {
        for (j, wy) in rule.nodes.iter().zip(&rule.weights) {
            for (i, wx) in rule.nodes.iter().zip(&rule.weights) {
                let xi = [*i, *j, *k];
                let (n, dn) = shape(xi);
                let x = std::array::from_fn(|a| cell.lo[a] + 0.5 * cell.size[a] * (1.0 + xi[a]));
                let grad = dn.map(|d| std::array::from_fn(|a| d[a] * 2.0 / cell.size[a]));
                out.push((x, wx * wy * wz * jac, n, grad));
            }
        }
    }
    out
}

fn two_point(cell: &Cell) -> impl Iterator<Item = ([f64; 3], f64, [f64; 8], [[f64; 3]; 8])> + '_ {
    let jac = cell.volume() / 8.0;
    (0..8).map(move |q| {
        let xi = [G2 * ((q & 1) as f64 * 2.0 - 1.0), G2 * (((q >> 1) & 1) as f64 * 2.0 - 1.0), G2 * ((q >> 2) as f64 * 2.0 - 1.0)];
        let (n, dn) = shape(xi);
        let x = std::array::from_fn(|a| cell.lo[a] + 0.5 * cell.size[a] * (1.0 + xi[a]));
        let grad = dn.map(|d| std::array::from_fn(|a| d[a] * 2.0 / cell.size[a]));
        (x, jac, n, grad)
    })
}

/// Element matrix of B_D (or A_D) with stretched coefficients.
pub fn element_matrix(cell: &Cell, params: &MaterialParams, profile: &PmlProfile, kind: FormKind) -> [[Block; 8]; 8] {
    let (lam, mu) = (params.lame_lambda, params.lame_mu);
    let full = kind == FormKind::Full;
    let rw2 = params.rho * params.omega * params.omega;
    let q = params.q();
    let gam = params.gamma;
    let iwe = I * params.omega * params.eta;
    let mut ke = [[ZB; 8]; 8];
    for (x, w, n, dn) in two_point(cell) {
        let s = profile.stretch(x).s;
        let j = s[0] * s[1] * s[2];
        let wj = j * w;
        // stretched gradients g = ∂N / s
        let g: [[C64; 3]; 8] = dn.map(|d| std::array::from_fn(|e| d[e] / s[e]));
        for a in 0..8 {
            for b in 0..8 {
                let blk = &mut ke[a][b];
                let ga = &g[a];
                let gb = &g[b];
                let dot = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
                let nn = n[a] * n[b];
                for r in 0..3 {
                    for c in 0..3 {
                        let mut v = lam * ga[r] * gb[c] + mu * ga[c] * gb[r];
                        if r == c {
                            v += mu * dot;
                            if full {
                                v -= rw2 * nn;
                            }
                        }
                        blk[r][c] += wj * v;
                    }
                }
                blk[3][3] += wj * dot;
                if full {
                    blk[3][3] -= wj * q * nn;
                    for r in 0..3 {
                        blk[r][3] -= wj * gam * n[b] * ga[r];
                        blk[3][r] -= wj * iwe * n[a] * gb[r];
                    }
                }
            }
        }
    }
    ke
}

/// Element matrix of the classical (unstretched) thermoelastic form.
pub fn standard_element_matrix(cell: &Cell, params: &MaterialParams, kind: FormKind) -> [[Block; 8]; 8] {
    let (lam, mu) = (params.lame_lambda, params.lame_mu);
    let mut ke = [[ZB; 8]; 8];
    for (_, w, n, dn) in two_point(cell) {
        for a in 0..8 {
            for b in 0..8 {
                for r in 0..3 {
                    for c in 0..3 {
                        // σ(N_b e_c) : ∇(N_a e_r) with σ = λ tr ε I + 2µ ε
                        let mut sigma = [[0.0; 3]; 3];
                        for i in 0..3 {
                            sigma[i][i] += lam * dn[b][c];
                        }
                        for i in 0..3 {
                            sigma[c][i] += mu * dn[b][i];
                            sigma[i][c] += mu * dn[b][i];
                        }
                        let mut v = C64::from((0..3).map(|i| sigma[r][i] * dn[a][i]).sum::<f64>());
                        if kind == FormKind::Full && r == c {
                            v -= params.rho * params.omega.powi(2) * n[a] * n[b];
                        }
                        ke[a][b][r][c] += w * v;
                    }
                }
                let grad_dot: f64 = (0..3).map(|i| dn[a][i] * dn[b][i]).sum();
                ke[a][b][3][3] += w * grad_dot;
                if kind == FormKind::Full {
                    ke[a][b][3][3] -= w * params.q() * n[a] * n[b];
                    for r in 0..3 {
                        // −γ p ∇·ψ and −iωη p′ ∇·u
                        ke[a][b][r][3] -= w * params.gamma * n[b] * dn[a][r];
                        ke[a][b][3][r] -= w * I * params.omega * params.eta * n[a] * dn[b][r];
                    }
                }
            }
        }
    }
    ke
}

fn assemble_with(mesh: &HexMesh, element: impl Fn(&Cell) -> [[Block; 8]; 8] + Sync) -> BlockMatrix {
    let mut m = BlockMatrix::pattern(mesh);
    let cells: Vec<Cell> = mesh.cells().collect();
    // element matrices in parallel, scattered in a fixed order
    for chunk in cells.chunks(4096) {
        let kes: Vec<_> = chunk.par_iter().map(|c| element(c)).collect();
        for (cell, ke) in chunk.iter().zip(&kes) {
            m.scatter(cell, ke);
        }
    }
    m
}

/// Assembles B_D (or A_D) on the active cells of `mesh` with the mesh's PML profile.
pub fn assemble(mesh: &HexMesh, params: &MaterialParams, kind: FormKind) -> BlockMatrix {
    let profile = mesh.profile.clone();
    assemble_with(mesh, |c| element_matrix(c, params, &profile, kind))
}

/// The classical thermoelastic form on the same cells, without any stretching.
pub fn assemble_standard(mesh: &HexMesh, params: &MaterialParams, kind: FormKind) -> BlockMatrix {
    assemble_with(mesh, |c| standard_element_matrix(c, params, kind))
}

/// Load vector −∫ J Q·N_a for a volume source Q.
pub fn load_vector(mesh: &HexMesh, source: &(dyn Fn([f64; 3]) -> Vec4 + Sync)) -> Vec<Vec4> {
    let mut f = vec![[ZERO; 4]; mesh.n_nodes()];
    let cells: Vec<Cell> = mesh.cells().collect();
    for chunk in cells.chunks(4096) {
        let parts: Vec<[Vec4; 8]> = chunk
            .par_iter()
            .map(|cell| {
                let mut fe = [[ZERO; 4]; 8];
                for (x, w, n, _) in cell_points(cell, 3) {
                    let jq = mesh.profile.pml_matrices(x).j;
                    let qv = source(x);
                    for a in 0..8 {
                        for c in 0..4 {
                            fe[a][c] -= w * jq * qv[c] * n[a];
                        }
                    }
                }
                fe
            })
            .collect();
        for (cell, fe) in chunk.iter().zip(&parts) {
            for a in 0..8 {
                for c in 0..4 {
                    f[cell.nodes[a]][c] += fe[a][c];
                }
            }
        }
    }
    f
}

/// Direct quadrature of B_D(U, Ψ) from nodal fields, bypassing the matrix.
pub fn form_by_quadrature(mesh: &HexMesh, params: &MaterialParams, u: &[Vec4], v: &[Vec4]) -> C64 {
    let profile = &mesh.profile;
    let (lam, mu) = (params.lame_lambda, params.lame_mu);
    let cells: Vec<Cell> = mesh.cells().collect();
    // test functions enter through conjugated coefficients only; the stretching is not conjugated
    let vc: Vec<Vec4> = v.iter().map(|x| x.map(|c| c.conj())).collect();
    let parts: Vec<C64> = cells
        .par_iter()
        .map(|cell| {
            let mut acc = ZERO;
            for (x, w, n, dn) in two_point(cell) {
                let s = profile.stretch(x).s;
                let j = s[0] * s[1] * s[2];
                let field = |f: &[Vec4]| -> (Vec4, [[C64; 3]; 4]) {
                    let mut val = [ZERO; 4];
                    let mut grad = [[ZERO; 3]; 4];
                    for a in 0..8 {
                        for c in 0..4 {
                            val[c] += f[cell.nodes[a]][c] * n[a];
                            for e in 0..3 {
                                grad[c][e] += f[cell.nodes[a]][c] * dn[a][e] / s[e];
                            }
                        }
                    }
                    (val, grad)
                };
                let (uv, ug) = field(u);
                let (vv, vg) = field(&vc);
                // σ̃ from the stretched gradient, contracted with the stretched test gradient
                let div_u = ug[0][0] + ug[1][1] + ug[2][2];
                let div_v = vg[0][0] + vg[1][1] + vg[2][2];
                let mut t = ZERO;
                for r in 0..3 {
                    for c in 0..3 {
                        let sigma = if r == c { lam * div_u } else { ZERO } + mu * (ug[r][c] + ug[c][r]);
                        t += sigma * vg[r][c];
                    }
                }
                t -= params.rho * params.omega * params.omega * (0..3).map(|r| uv[r] * vv[r]).sum::<C64>();
                t -= params.gamma * uv[3] * div_v;
                t += (0..3).map(|e| ug[3][e] * vg[3][e]).sum::<C64>();
                t -= params.q() * uv[3] * vv[3];
                t -= I * params.omega * params.eta * vv[3] * div_u;
                acc += w * j * t;
            }
            acc
        })
        .collect();
    parts.iter().sum()
}
