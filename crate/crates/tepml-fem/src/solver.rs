//! Nested-dissection multifrontal LU for block-structured grid matrices.
//!
//! The elimination tree comes from recursive bisection of the node grid by
//! coordinate planes. Each front is factored densely (partial pivoting within
//! the front's own unknowns) with faer kernels; Schur complements are passed
//! to the parent by extend-add. Factors stay in memory or, above a byte
//! budget, go to an anonymous temporary file.

use crate::assembly::BlockMatrix;
use crate::error::{FemError, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::reborrow::*;
use faer::{Accum, MatMut, MatRef, Par};
use num_complex::Complex64 as C64;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::time::Instant;

const ZERO: C64 = C64::new(0.0, 0.0);
const NONE: u32 = u32::MAX;

/// Map from (node, component) to a free unknown, or `NONE` if constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub index: Vec<u32>,
    pub n_free: usize,
}

impl DofMap {
    pub const NONE: u32 = NONE;

    /// Numbers the components for which `free(node, c)` holds, node by node.
    pub fn new(n_nodes: usize, free: impl Fn(usize, usize) -> bool) -> Self {
        let mut index = vec![NONE; 4 * n_nodes];
        let mut k = 0u32;
        for n in 0..n_nodes {
            for c in 0..4 {
                if free(n, c) {
                    index[4 * n + c] = k;
                    k += 1;
                }
            }
        }
        Self { index, n_free: k as usize }
    }

    pub fn get(&self, node: usize, c: usize) -> Option<usize> {
        let v = self.index[4 * node + c];
        (v != NONE).then_some(v as usize)
    }

    fn has_free(&self, node: usize) -> bool {
        self.index[4 * node..4 * node + 4].iter().any(|v| *v != NONE)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Factors larger than this many bytes are kept on disk.
    pub memory_budget: usize,
    /// Grids with at most this many nodes in a box are not dissected further.
    pub leaf_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { memory_budget: 1 << 30, leaf_nodes: 64 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub n_unknowns: usize,
    pub n_fronts: usize,
    pub max_front: usize,
    pub flops: f64,
    pub factor_bytes: usize,
    pub on_disk: bool,
    /// max |u_ii| / min |u_ii| over all pivots; a crude conditioning signal.
    pub pivot_ratio: f64,
    pub factor_seconds: f64,
}

struct Front {
    own_nodes: Vec<u32>,
    own: Vec<u32>,
    upd: Vec<u32>,
    children: Vec<usize>,
}

struct Factors {
    perm: Vec<usize>,
    lu: Vec<C64>,
    u12: Vec<C64>,
    l21: Vec<C64>,
}

enum Store {
    Memory(Vec<Factors>),
    Disk { file: File, offsets: Vec<u64> },
}

pub struct Factorization {
    fronts: Vec<Front>,
    store: Store,
    pub stats: SolverStats,
}

/// Recursive coordinate bisection; returns fronts in postorder (node lists only).
fn dissect(
    lo: [usize; 3],
    hi: [usize; 3],
    dims: [usize; 3],
    keep: &dyn Fn(usize) -> bool,
    leaf: usize,
    out: &mut Vec<(Vec<u32>, Vec<usize>)>,
) -> Option<usize> {
    let node = |i: usize, j: usize, k: usize| i + dims[0] * (j + dims[1] * k);
    let collect = |lo: [usize; 3], hi: [usize; 3]| -> Vec<u32> {
        let mut v = Vec::new();
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let n = node(i, j, k);
                    if keep(n) {
                        v.push(n as u32);
                    }
                }
            }
        }
        v
    };
    let ext: [usize; 3] = std::array::from_fn(|a| hi[a] - lo[a]);
    if ext.iter().any(|e| *e == 0) {
        return None;
    }
    let volume: usize = ext.iter().product();
    if volume <= leaf || ext.iter().all(|e| *e <= 2) {
        let own = collect(lo, hi);
        if own.is_empty() {
            return None;
        }
        out.push((own, Vec::new()));
        return Some(out.len() - 1);
    }
    let axis = (0..3).max_by_key(|a| (ext[*a], 2 - *a)).unwrap();
    let mid = lo[axis] + ext[axis] / 2;
    let (mut hi_a, mut lo_b, mut sep_lo, mut sep_hi) = (hi, lo, lo, hi);
    hi_a[axis] = mid;
    lo_b[axis] = mid + 1;
    sep_lo[axis] = mid;
    sep_hi[axis] = mid + 1;
    let children: Vec<usize> = [dissect(lo, hi_a, dims, keep, leaf, out), dissect(lo_b, hi, dims, keep, leaf, out)]
        .into_iter()
        .flatten()
        .collect();
    let own = collect(sep_lo, sep_hi);
    if own.is_empty() && children.len() <= 1 {
        return children.first().copied();
    }
    out.push((own, children));
    Some(out.len() - 1)
}

fn symbolic(matrix: &BlockMatrix, dofs: &DofMap, dims: [usize; 3], opts: &SolverOptions) -> Vec<Front> {
    let n_nodes = dims.iter().product::<usize>();
    let keep = |n: usize| dofs.has_free(n);
    let mut tree = Vec::new();
    let root = dissect([0; 3], dims, dims, &keep, opts.leaf_nodes, &mut tree);
    // several disjoint roots cannot occur: the top call either returns one root or nothing
    let _ = root;
    let mut eliminated = vec![false; n_nodes];
    let mut stamp = vec![usize::MAX; n_nodes];
    let mut upd_nodes: Vec<Vec<u32>> = Vec::with_capacity(tree.len());
    let mut fronts = Vec::with_capacity(tree.len());
    for (t, (own, children)) in tree.into_iter().enumerate() {
        for n in &own {
            stamp[*n as usize] = t;
        }
        let mut upd = Vec::new();
        let mut consider = |m: usize, upd: &mut Vec<u32>| {
            if stamp[m] != t && !eliminated[m] && dofs.has_free(m) {
                stamp[m] = t;
                upd.push(m as u32);
            }
        };
        for c in &children {
            for m in std::mem::take(&mut upd_nodes[*c]) {
                consider(m as usize, &mut upd);
            }
        }
        for n in &own {
            let (cols, _) = matrix.row(*n as usize);
            for m in cols {
                consider(*m, &mut upd);
            }
        }
        upd.sort_unstable();
        for n in &own {
            eliminated[*n as usize] = true;
        }
        let to_dofs = |nodes: &[u32]| -> Vec<u32> {
            nodes
                .iter()
                .flat_map(|n| (0..4).filter_map(move |c| dofs.get(*n as usize, c).map(|d| d as u32)))
                .collect()
        };
        fronts.push(Front { own: to_dofs(&own), upd: to_dofs(&upd), own_nodes: own, children });
        upd_nodes.push(upd);
    }
    fronts
}

impl Store {
    fn push(&mut self, f: Factors) -> Result<()> {
        match self {
            Store::Memory(v) => v.push(f),
            Store::Disk { file, offsets } => {
                let perm: Vec<u64> = f.perm.iter().map(|p| *p as u64).collect();
                file.write_all(bytemuck::cast_slice(&perm))?;
                for part in [&f.lu, &f.u12, &f.l21] {
                    file.write_all(bytemuck::cast_slice(part))?;
                }
                let last = *offsets.last().unwrap();
                let bytes = 8 * perm.len() + 16 * (f.lu.len() + f.u12.len() + f.l21.len());
                offsets.push(last + bytes as u64);
            }
        }
        Ok(())
    }

    fn load(&mut self, t: usize, front: &Front, want_l: bool, want_u: bool) -> Result<std::borrow::Cow<'_, Factors>> {
        match self {
            Store::Memory(v) => Ok(std::borrow::Cow::Borrowed(&v[t])),
            Store::Disk { file, offsets } => {
                let (no, nu) = (front.own.len(), front.upd.len());
                file.seek(SeekFrom::Start(offsets[t]))?;
                let mut perm = vec![0u64; no];
                file.read_exact(bytemuck::cast_slice_mut(&mut perm))?;
                let mut lu = vec![ZERO; no * no];
                file.read_exact(bytemuck::cast_slice_mut(&mut lu))?;
                let mut u12 = Vec::new();
                if want_u {
                    u12 = vec![ZERO; no * nu];
                    file.read_exact(bytemuck::cast_slice_mut(&mut u12))?;
                } else {
                    file.seek(SeekFrom::Current((16 * no * nu) as i64))?;
                }
                let mut l21 = Vec::new();
                if want_l {
                    l21 = vec![ZERO; nu * no];
                    file.read_exact(bytemuck::cast_slice_mut(&mut l21))?;
                }
                Ok(std::borrow::Cow::Owned(Factors { perm: perm.into_iter().map(|p| p as usize).collect(), lu, u12, l21 }))
            }
        }
    }
}

impl Clone for Factors {
    fn clone(&self) -> Self {
        Self { perm: self.perm.clone(), lu: self.lu.clone(), u12: self.u12.clone(), l21: self.l21.clone() }
    }
}

impl Factorization {
    /// Factors the free-free part of `matrix`. `dims` is the node grid.
    pub fn new(matrix: &BlockMatrix, dofs: &DofMap, dims: [usize; 3], opts: SolverOptions) -> Result<Self> {
        let t0 = Instant::now();
        let fronts = symbolic(matrix, dofs, dims, &opts);
        let mut stats = SolverStats { n_unknowns: dofs.n_free, n_fronts: fronts.len(), ..Default::default() };
        let mut bytes = 0usize;
        for f in &fronts {
            let (no, nu) = (f.own.len() as f64, f.upd.len() as f64);
            stats.max_front = stats.max_front.max(f.own.len() + f.upd.len());
            bytes += 16 * (f.own.len() * f.own.len() + 2 * f.own.len() * f.upd.len()) + 8 * f.own.len();
            stats.flops += 8.0 * (no * no * no / 3.0 + no * no * nu + no * nu * nu);
        }
        stats.factor_bytes = bytes;
        let mut store = if bytes > opts.memory_budget {
            stats.on_disk = true;
            Store::Disk { file: tempfile::tempfile()?, offsets: vec![0] }
        } else {
            Store::Memory(Vec::with_capacity(fronts.len()))
        };

        let n = dofs.n_free;
        let mut pos = vec![NONE; n];
        let mut updates: Vec<Option<Vec<C64>>> = (0..fronts.len()).map(|_| None).collect();
        let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
        for (t, front) in fronts.iter().enumerate() {
            let (no, nu) = (front.own.len(), front.upd.len());
            let m = no + nu;
            for (k, d) in front.own.iter().chain(&front.upd).enumerate() {
                pos[*d as usize] = k as u32;
            }
            let mut f = vec![ZERO; m * m];
            // original entries: rows and columns of the own unknowns
            for node in front.own_nodes.iter().map(|n| *n as usize) {
                let (cols, blocks) = matrix.row(node);
                for (&mn, blk) in cols.iter().zip(blocks) {
                    for r in 0..4 {
                        let Some(dr) = dofs.get(node, r) else { continue };
                        let pr = pos[dr] as usize;
                        for c in 0..4 {
                            let Some(dc) = dofs.get(mn, c) else { continue };
                            let pc = pos[dc];
                            if pc == NONE {
                                continue;
                            }
                            f[pr + m * pc as usize] += blk[r][c];
                        }
                    }
                    // the transposed position when the neighbour is an update unknown
                    let neighbour_is_update = (0..4).any(|c| dofs.get(mn, c).is_some_and(|d| pos[d] as usize >= no && pos[d] != NONE));
                    if neighbour_is_update {
                        let back = matrix.get(mn, node).expect("pattern is symmetric");
                        for r in 0..4 {
                            let Some(dr) = dofs.get(mn, r) else { continue };
                            let pr = pos[dr];
                            if pr == NONE || (pr as usize) < no {
                                continue;
                            }
                            for c in 0..4 {
                                let Some(dc) = dofs.get(node, c) else { continue };
                                f[pr as usize + m * pos[dc] as usize] += back[r][c];
                            }
                        }
                    }
                }
            }
            for &c in &front.children {
                let s = updates[c].take().expect("child update present");
                let cu = &fronts[c].upd;
                let map: Vec<usize> = cu.iter().map(|d| pos[*d as usize] as usize).collect();
                let k = cu.len();
                for (j, &pj) in map.iter().enumerate() {
                    let col = &s[j * k..(j + 1) * k];
                    let dst = &mut f[pj * m..(pj + 1) * m];
                    for (i, &pi) in map.iter().enumerate() {
                        dst[pi] += col[i];
                    }
                }
            }
            for d in front.own.iter().chain(&front.upd) {
                pos[*d as usize] = NONE;
            }

            let mut perm = vec![0usize; no];
            if no > 0 {
                let mut fm = MatMut::from_column_major_slice_mut(&mut f, m, m);
                let (mut f11, mut f12, mut f21, mut f22) = fm.rb_mut().split_at_mut(no, no);
                let scale = max_abs_view(f11.rb());
                let mut perm_inv = vec![0usize; no];
                let mut buf = MemBuffer::new(lu_in_place_scratch::<usize, C64>(no, no, Par::Seq, Default::default()));
                lu_in_place(f11.rb_mut(), &mut perm, &mut perm_inv, Par::Seq, MemStack::new(&mut buf), Default::default());
                for i in 0..no {
                    let p = f11[(i, i)].norm();
                    if !p.is_finite() || p <= 1e-14 * scale {
                        return Err(FemError::Breakdown { pivot_ratio: if p > 0.0 { pmax.max(p) / p } else { f64::INFINITY } });
                    }
                    pmin = pmin.min(p);
                    pmax = pmax.max(p);
                }
                if nu > 0 {
                    permute_rows(f12.rb_mut(), &perm);
                    solve_unit_lower_triangular_in_place(f11.rb(), f12.rb_mut(), Par::Seq);
                    solve_lower_triangular_in_place(f11.rb().transpose(), f21.rb_mut().transpose_mut(), Par::Seq);
                    matmul(f22.rb_mut(), Accum::Add, f21.rb(), f12.rb(), C64::new(-1.0, 0.0), Par::Seq);
                }
            }
            let take = |r0: usize, r1: usize, c0: usize, c1: usize| -> Vec<C64> {
                let mut v = Vec::with_capacity((r1 - r0) * (c1 - c0));
                for j in c0..c1 {
                    v.extend_from_slice(&f[r0 + m * j..r1 + m * j]);
                }
                v
            };
            let factors = Factors { perm, lu: take(0, no, 0, no), u12: take(0, no, no, m), l21: take(no, m, 0, no) };
            let s = take(no, m, no, m);
            drop(f);
            store.push(factors)?;
            if nu > 0 {
                updates[t] = Some(s);
            }
        }
        if let Store::Disk { file, .. } = &mut store {
            file.flush()?;
        }
        stats.pivot_ratio = if pmin.is_finite() { pmax / pmin } else { 1.0 };
        stats.factor_seconds = t0.elapsed().as_secs_f64();
        Ok(Self { fronts, store, stats })
    }

    /// Solves A x = b for the free unknowns.
    pub fn solve(&mut self, b: &[C64]) -> Result<Vec<C64>> {
        let mut w = b.to_vec();
        for t in 0..self.fronts.len() {
            let front = &self.fronts[t];
            let (no, nu) = (front.own.len(), front.upd.len());
            if no == 0 {
                continue;
            }
            let fac = self.store.load(t, front, true, false)?;
            let mut y: Vec<C64> = fac.perm.iter().map(|p| w[front.own[*p] as usize]).collect();
            let lu = MatRef::from_column_major_slice(&fac.lu, no, no);
            solve_unit_lower_triangular_in_place(lu, MatMut::from_column_major_slice_mut(&mut y, no, 1), Par::Seq);
            for (i, d) in front.own.iter().enumerate() {
                w[*d as usize] = y[i];
            }
            if nu > 0 {
                let l21 = MatRef::from_column_major_slice(&fac.l21, nu, no);
                let mut z = vec![ZERO; nu];
                matmul(MatMut::from_column_major_slice_mut(&mut z, nu, 1), Accum::Replace, l21, MatRef::from_column_major_slice(&y, no, 1), C64::new(1.0, 0.0), Par::Seq);
                for (k, d) in front.upd.iter().enumerate() {
                    w[*d as usize] -= z[k];
                }
            }
        }
        let mut x = vec![ZERO; b.len()];
        for t in (0..self.fronts.len()).rev() {
            let front = &self.fronts[t];
            let (no, nu) = (front.own.len(), front.upd.len());
            if no == 0 {
                continue;
            }
            let fac = self.store.load(t, front, false, true)?;
            let mut y: Vec<C64> = front.own.iter().map(|d| w[*d as usize]).collect();
            if nu > 0 {
                let xu: Vec<C64> = front.upd.iter().map(|d| x[*d as usize]).collect();
                let u12 = MatRef::from_column_major_slice(&fac.u12, no, nu);
                matmul(MatMut::from_column_major_slice_mut(&mut y, no, 1), Accum::Add, u12, MatRef::from_column_major_slice(&xu, nu, 1), C64::new(-1.0, 0.0), Par::Seq);
            }
            let lu = MatRef::from_column_major_slice(&fac.lu, no, no);
            solve_upper_triangular_in_place(lu, MatMut::from_column_major_slice_mut(&mut y, no, 1), Par::Seq);
            for (i, d) in front.own.iter().enumerate() {
                x[*d as usize] = y[i];
            }
        }
        Ok(x)
    }
}

fn max_abs_view(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

fn permute_rows(mut a: MatMut<'_, C64>, perm: &[usize]) {
    let mut tmp = vec![ZERO; perm.len()];
    for j in 0..a.ncols() {
        for (i, p) in perm.iter().enumerate() {
            tmp[i] = a[(*p, j)];
        }
        for (i, v) in tmp.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
}
