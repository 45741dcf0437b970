//! Dirichlet problems on the truncated domain and on the absorbing layer,
//! error norms, traction recovery on ∂B₁ and the coercivity probes.

use crate::assembly::{assemble, cell_points, BlockMatrix, FormKind, Vec4};
use crate::error::{FemError, Result};
use crate::mesh::{Cell, Extent, HexMesh, NodeTag, Region};
use crate::solver::{DofMap, Factorization, SolverOptions, SolverStats};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use tepml::potentials::{ExactField, FieldSample, PointSource};
use tepml::{apply_r, check_pml_constraints, MaterialParams};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Accepted relative residual of a solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Mirror parity of column `column` of Φ(x) about the coordinate planes:
/// component c is odd in x_a exactly when one of c, column equals a.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry {
    pub column: usize,
}

impl Symmetry {
    pub fn odd(&self, c: usize, axis: usize) -> bool {
        (c == axis) != (self.column == axis)
    }
}

/// Nodal coefficients, four per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<Vec4>,
}

impl DiscreteField {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { values: vec![[ZERO; 4]; n_nodes] }
    }

    /// Value and gradient in `cell` from shape values and physical gradients.
    pub fn eval(&self, cell: &Cell, n: &[f64; 8], dn: &[[f64; 3]; 8]) -> FieldSample {
        let mut s = FieldSample::zero();
        for a in 0..8 {
            let v = self.values[cell.nodes[a]];
            for c in 0..4 {
                s.value[c] += v[c] * n[a];
                for e in 0..3 {
                    s.grad[c][e] += v[c] * dn[a][e];
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: DiscreteField,
    pub stats: SolverStats,
    pub residual: f64,
}

fn check_symmetry(mesh: &HexMesh, symmetry: Option<Symmetry>) -> Result<()> {
    match (mesh.extent, symmetry) {
        (Extent::Octant, None) => Err(FemError::Precondition("octant meshes need a symmetry".into())),
        (Extent::Full, Some(_)) => Err(FemError::Precondition("symmetry given for a full mesh".into())),
        (_, Some(s)) if s.column > 3 => Err(FemError::Precondition(format!("column {}", s.column))),
        _ => Ok(()),
    }
}

/// Whether the node carries prescribed data.
pub fn is_dirichlet_node(mesh: &HexMesh, n: usize) -> bool {
    match mesh.tag(n) {
        NodeTag::Obstacle | NodeTag::Outer => true,
        NodeTag::Interface => mesh.region == Region::Layer,
        NodeTag::Interior | NodeTag::Unused => false,
    }
}

/// Component c of node n vanishes by mirror symmetry.
fn mirror_zero(mesh: &HexMesh, symmetry: Option<Symmetry>, n: usize, c: usize) -> bool {
    let Some(sym) = symmetry else { return false };
    let m = mesh.on_mirror(n);
    (0..3).any(|a| m[a] && sym.odd(c, a))
}

/// Unknown numbering for a mesh: everything that is neither prescribed,
/// mirror-constrained nor unused.
pub fn dof_map(mesh: &HexMesh, symmetry: Option<Symmetry>) -> DofMap {
    DofMap::new(mesh.n_nodes(), |n, c| {
        mesh.tag(n) != NodeTag::Unused && !is_dirichlet_node(mesh, n) && !mirror_zero(mesh, symmetry, n, c)
    })
}

/// Solves M U = load with U prescribed by `data` on the Dirichlet nodes
/// (only those entries of `data` are read). Prescribed columns are moved to
/// the right-hand side, so the reduced matrix keeps a symmetric pattern.
pub fn solve_dirichlet(
    mesh: &HexMesh,
    matrix: &BlockMatrix,
    data: &[Vec4],
    load: Option<&[Vec4]>,
    symmetry: Option<Symmetry>,
    opts: SolverOptions,
) -> Result<Solution> {
    Ok(solve_dirichlet_many(mesh, matrix, &[data], load, symmetry, opts)?.remove(0))
}

/// [`solve_dirichlet`] for several data sets sharing one factorization.
pub fn solve_dirichlet_many(
    mesh: &HexMesh,
    matrix: &BlockMatrix,
    data_sets: &[&[Vec4]],
    load: Option<&[Vec4]>,
    symmetry: Option<Symmetry>,
    opts: SolverOptions,
) -> Result<Vec<Solution>> {
    check_symmetry(mesh, symmetry)?;
    let n_nodes = mesh.n_nodes();
    if data_sets.iter().any(|d| d.len() != n_nodes) || load.is_some_and(|l| l.len() != n_nodes) {
        return Err(FemError::Precondition("data length differs from node count".into()));
    }
    let dofs = dof_map(mesh, symmetry);
    let mut fac = Factorization::new(matrix, &dofs, mesh.dims(), opts)?;
    let mut out = Vec::with_capacity(data_sets.len());
    for data in data_sets {
        let mut x = vec![[ZERO; 4]; n_nodes];
        for n in 0..n_nodes {
            if is_dirichlet_node(mesh, n) {
                for c in 0..4 {
                    if !mirror_zero(mesh, symmetry, n, c) {
                        x[n][c] = data[n][c];
                    }
                }
            }
        }
        let residual_of = |xf: &[C64]| -> Vec<C64> {
            let mut full = x.clone();
            scatter_free(&dofs, xf, &mut full);
            let ax = matrix.mul(&full);
            let mut r = vec![ZERO; dofs.n_free];
            for n in 0..n_nodes {
                for c in 0..4 {
                    if let Some(d) = dofs.get(n, c) {
                        r[d] = load.map_or(ZERO, |l| l[n][c]) - ax[n][c];
                    }
                }
            }
            r
        };
        let zero = vec![ZERO; dofs.n_free];
        let b = residual_of(&zero);
        let bnorm = norm(&b);
        let mut xf = if bnorm == 0.0 { zero } else { fac.solve(&b)? };
        let mut residual = 0.0;
        if bnorm > 0.0 {
            for step in 0..4 {
                let r = residual_of(&xf);
                residual = norm(&r) / bnorm;
                if residual < 1e-3 * RESIDUAL_TOL || step == 3 {
                    break;
                }
                let dx = fac.solve(&r)?;
                for (a, b) in xf.iter_mut().zip(&dx) {
                    *a += b;
                }
            }
        }
        if !(residual < RESIDUAL_TOL) {
            return Err(FemError::Residual(residual));
        }
        scatter_free(&dofs, &xf, &mut x);
        out.push(Solution { field: DiscreteField { values: x }, stats: fac.stats, residual });
    }
    Ok(out)
}

fn scatter_free(dofs: &DofMap, xf: &[C64], full: &mut [Vec4]) {
    for (n, v) in full.iter_mut().enumerate() {
        for (c, slot) in v.iter_mut().enumerate() {
            if let Some(d) = dofs.get(n, c) {
                *slot = xf[d];
            }
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// What the truncated problem prescribes on ∂B₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterData {
    /// The homogeneous condition of the truncated PML problem.
    Zero,
    /// The stretched point-source field itself: no truncation error, so the
    /// discrete solution differs from the exact field by discretization alone.
    Stretched,
}

/// Nodal vector holding `f(x)` on the Dirichlet nodes and zero elsewhere.
pub fn dirichlet_data(mesh: &HexMesh, f: impl Fn(usize, [f64; 3]) -> tepml::Result<Vec4> + Sync) -> Result<Vec<Vec4>> {
    (0..mesh.n_nodes())
        .into_par_iter()
        .map(|n| if is_dirichlet_node(mesh, n) { Ok(f(n, mesh.coord(n))?) } else { Ok([ZERO; 4]) })
        .collect()
}

/// Symmetry matching a point source, if the mesh is an octant.
pub fn point_source_symmetry(mesh: &HexMesh, source: &PointSource) -> Result<Option<Symmetry>> {
    match mesh.extent {
        Extent::Full => Ok(None),
        Extent::Octant if source.y0 == [0.0; 3] => Ok(Some(Symmetry { column: source.k })),
        Extent::Octant => Err(FemError::Precondition("octant meshes need a source at the origin".into())),
    }
}

/// Truncated PML problem with exact point-source data on the obstacle.
pub fn solve_point_source(
    mesh: &HexMesh,
    params: &MaterialParams,
    source: &PointSource,
    outer: OuterData,
    opts: SolverOptions,
) -> Result<Solution> {
    Ok(solve_point_source_many(mesh, params, source, &[outer], opts)?.remove(0))
}

/// [`solve_point_source`] for several outer conditions, factorizing once.
pub fn solve_point_source_many(
    mesh: &HexMesh,
    params: &MaterialParams,
    source: &PointSource,
    outers: &[OuterData],
    opts: SolverOptions,
) -> Result<Vec<Solution>> {
    if mesh.region != Region::Truncated {
        return Err(FemError::Precondition("the point-source problem lives on the truncated domain".into()));
    }
    let symmetry = point_source_symmetry(mesh, source)?;
    let matrix = assemble(mesh, params, FormKind::Full);
    let profile = &mesh.profile;
    let data: Vec<Vec<Vec4>> = outers
        .iter()
        .map(|outer| {
            dirichlet_data(mesh, |n, x| match mesh.tag(n) {
                NodeTag::Obstacle => source.value(x),
                _ => match outer {
                    OuterData::Zero => Ok([ZERO; 4]),
                    OuterData::Stretched => {
                        let m = source.kernel.eval_phi_stretched(x, source.y0, profile)?.m;
                        Ok(std::array::from_fn(|c| m[c][source.k]))
                    }
                },
            })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&[Vec4]> = data.iter().map(|d| d.as_slice()).collect();
    solve_dirichlet_many(mesh, &matrix, &refs, None, symmetry, opts)
}

/// Integration over a mesh region; octant integrals are scaled to the full box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRegion {
    /// Active cells inside B₁.
    Inner,
    All,
}

fn region_cells(mesh: &HexMesh, region: NormRegion) -> Vec<Cell> {
    mesh.cells().filter(|c| region == NormRegion::All || mesh.cell_in_inner(c)).collect()
}

fn octant_factor(mesh: &HexMesh) -> f64 {
    match mesh.extent {
        Extent::Full => 1.0,
        Extent::Octant => 8.0,
    }
}

/// Absolute H¹ error of `field` against `exact`, with the H¹ norm of `exact`
/// for scale; 3×3×3 Gauss points per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1Error {
    pub error: f64,
    pub exact_norm: f64,
}

impl H1Error {
    pub fn relative(&self) -> f64 {
        self.error / self.exact_norm
    }
}

pub fn h1_error(mesh: &HexMesh, field: &DiscreteField, exact: &dyn ExactField, region: NormRegion) -> Result<H1Error> {
    let cells = region_cells(mesh, region);
    let parts: Vec<tepml::Result<(f64, f64)>> = cells
        .par_iter()
        .map(|cell| {
            let (mut e2, mut n2) = (0.0, 0.0);
            for (x, w, n, dn) in cell_points(cell, 3) {
                let ex = exact.sample(x)?;
                let fh = field.eval(cell, &n, &dn);
                for c in 0..4 {
                    e2 += w * (fh.value[c] - ex.value[c]).norm_sqr();
                    n2 += w * ex.value[c].norm_sqr();
                    for e in 0..3 {
                        e2 += w * (fh.grad[c][e] - ex.grad[c][e]).norm_sqr();
                        n2 += w * ex.grad[c][e].norm_sqr();
                    }
                }
            }
            Ok((e2, n2))
        })
        .collect();
    let (mut e2, mut n2) = (0.0, 0.0);
    for p in parts {
        let (a, b) = p?;
        e2 += a;
        n2 += b;
    }
    let s = octant_factor(mesh);
    Ok(H1Error { error: (s * e2).sqrt(), exact_norm: (s * n2).sqrt() })
}

/// ‖v‖²_{L²} and ‖∇v‖²_{L²} of the displacement and temperature parts:
/// returns (‖u‖², ‖∇u‖², ‖p‖², ‖∇p‖²).
pub fn field_norms(mesh: &HexMesh, field: &DiscreteField, region: NormRegion) -> [f64; 4] {
    let cells = region_cells(mesh, region);
    let parts: Vec<[f64; 4]> = cells
        .par_iter()
        .map(|cell| {
            let mut acc = [0.0; 4];
            for (_, w, n, dn) in cell_points(cell, 2) {
                let s = field.eval(cell, &n, &dn);
                for c in 0..4 {
                    let slot = if c < 3 { 0 } else { 2 };
                    acc[slot] += w * s.value[c].norm_sqr();
                    acc[slot + 1] += w * s.grad[c].iter().map(|g| g.norm_sqr()).sum::<f64>();
                }
            }
            acc
        })
        .collect();
    let s = octant_factor(mesh);
    parts.iter().fold([0.0; 4], |a, b| std::array::from_fn(|k| a[k] + s * b[k]))
}

pub fn h1_norm(mesh: &HexMesh, field: &DiscreteField, region: NormRegion) -> f64 {
    field_norms(mesh, field, region).iter().sum::<f64>().sqrt()
}

/// Traction on ∂B₁ recovered from a layer solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TractionRecovery {
    /// Nodal average of the element gradients of the adjacent layer cells,
    /// face by face.
    Averaged,
    /// The weak residual at the interface nodes divided by the lumped
    /// boundary mass.
    Variational,
}

/// Nodal traction values on ∂B₁ with their quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTraction {
    pub recovery: TractionRecovery,
    pub nodes: Vec<usize>,
    /// Outward normal of B₁ used at each entry (zero for the variational
    /// recovery, which has no single normal at edges).
    pub normals: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub values: Vec<Vec4>,
}

/// A face of an active cell lying on ∂B₁: the cell, the normal axis and the side.
#[derive(Debug, Clone, Copy)]
struct InterfaceFace {
    cell: Cell,
    axis: usize,
    upper: bool,
}

impl InterfaceFace {
    fn normal(&self) -> [f64; 3] {
        let mut nu = [0.0; 3];
        let x = self.cell.lo[self.axis] + if self.upper { self.cell.size[self.axis] } else { 0.0 };
        nu[self.axis] = if x > 0.0 { 1.0 } else { -1.0 };
        nu
    }

    /// Local node indices (0..8) of the face.
    fn local_nodes(&self) -> [usize; 4] {
        let bit = 1 << self.axis;
        let want = if self.upper { bit } else { 0 };
        let mut out = [0; 4];
        let mut k = 0;
        for c in 0..8 {
            if c & bit == want {
                out[k] = c;
                k += 1;
            }
        }
        out
    }

    fn area(&self) -> f64 {
        (0..3).filter(|a| *a != self.axis).map(|a| self.cell.size[a]).product()
    }
}

fn interface_faces(mesh: &HexMesh) -> Vec<InterfaceFace> {
    let mut out = Vec::new();
    for cell in mesh.cells() {
        for axis in 0..3 {
            for upper in [false, true] {
                let f = InterfaceFace { cell, axis, upper };
                if f.local_nodes().iter().all(|c| mesh.tag(cell.nodes[*c]) == NodeTag::Interface) {
                    out.push(f);
                }
            }
        }
    }
    out
}

/// Recovers R U on ∂B₁ from a layer solution.
pub fn interface_traction(
    mesh: &HexMesh,
    matrix: &BlockMatrix,
    params: &MaterialParams,
    field: &DiscreteField,
    symmetry: Option<Symmetry>,
    recovery: TractionRecovery,
) -> Result<InterfaceTraction> {
    if mesh.region != Region::Layer {
        return Err(FemError::Precondition("traction recovery needs a layer mesh".into()));
    }
    check_symmetry(mesh, symmetry)?;
    let faces = interface_faces(mesh);
    match recovery {
        TractionRecovery::Variational => {
            let mut mass = vec![0.0; mesh.n_nodes()];
            for f in &faces {
                for c in f.local_nodes() {
                    mass[f.cell.nodes[c]] += f.area() / 4.0;
                }
            }
            let r = matrix.mul(&field.values);
            let mut out = InterfaceTraction { recovery, nodes: vec![], normals: vec![], weights: vec![], values: vec![] };
            for (n, m) in mass.iter().enumerate() {
                if *m > 0.0 {
                    out.nodes.push(n);
                    out.normals.push([0.0; 3]);
                    out.weights.push(*m);
                    // the layer's outward normal on ∂B₁ is −ν
                    out.values.push(std::array::from_fn(|c| if mirror_zero(mesh, symmetry, n, c) { ZERO } else { -r[n][c] / *m }));
                }
            }
            Ok(out)
        }
        TractionRecovery::Averaged => {
            // per-node averaged gradient over all adjacent active cells
            let mut grad = vec![[[ZERO; 3]; 4]; mesh.n_nodes()];
            let mut count = vec![0usize; mesh.n_nodes()];
            let mut is_interface = vec![false; mesh.n_nodes()];
            for f in &faces {
                for c in f.local_nodes() {
                    is_interface[f.cell.nodes[c]] = true;
                }
            }
            for cell in mesh.cells() {
                for (a, node) in cell.nodes.iter().enumerate() {
                    if !is_interface[*node] {
                        continue;
                    }
                    let xi = [(a & 1) as f64 * 2.0 - 1.0, ((a >> 1) & 1) as f64 * 2.0 - 1.0, (a >> 2) as f64 * 2.0 - 1.0];
                    let (n, dn) = crate::assembly::shape(xi);
                    let dn = dn.map(|d| std::array::from_fn(|e| d[e] * 2.0 / cell.size[e]));
                    let s = field.eval(&cell, &n, &dn);
                    for c in 0..4 {
                        for e in 0..3 {
                            grad[*node][c][e] += s.grad[c][e];
                        }
                    }
                    count[*node] += 1;
                }
            }
            let mut out = InterfaceTraction { recovery, nodes: vec![], normals: vec![], weights: vec![], values: vec![] };
            let mut seen = std::collections::HashMap::new();
            for f in &faces {
                let nu = f.normal();
                for c in f.local_nodes() {
                    let node = f.cell.nodes[c];
                    let key = (node, f.axis);
                    let k = *seen.entry(key).or_insert_with(|| {
                        let mut g = grad[node];
                        for row in g.iter_mut() {
                            for v in row.iter_mut() {
                                *v /= count[node] as f64;
                            }
                        }
                        if let Some(sym) = symmetry {
                            // what averaging over the mirrored cells would give
                            let m = mesh.on_mirror(node);
                            for a in (0..3).filter(|a| m[*a]) {
                                for (comp, row) in g.iter_mut().enumerate() {
                                    if sym.odd(comp, a) {
                                        for (e, v) in row.iter_mut().enumerate() {
                                            if e != a {
                                                *v = ZERO;
                                            }
                                        }
                                    } else {
                                        row[a] = ZERO;
                                    }
                                }
                            }
                        }
                        let t = apply_r(field.values[node], g, nu, params);
                        out.nodes.push(node);
                        out.normals.push(nu);
                        out.weights.push(0.0);
                        out.values.push(t);
                        out.values.len() - 1
                    });
                    out.weights[k] += f.area() / 4.0;
                }
            }
            Ok(out)
        }
    }
}

impl InterfaceTraction {
    /// The same discrete functional applied to an exact traction field
    /// `t(x, ν)`: point values for the averaged recovery, lumped L²
    /// projections (face by face, exact normals) for the variational one.
    pub fn exact_counterpart(
        &self,
        mesh: &HexMesh,
        symmetry: Option<Symmetry>,
        t: &(dyn Fn([f64; 3], [f64; 3]) -> tepml::Result<Vec4> + Sync),
    ) -> Result<Vec<Vec4>> {
        match self.recovery {
            TractionRecovery::Averaged => self
                .nodes
                .par_iter()
                .zip(&self.normals)
                .map(|(n, nu)| {
                    let v = t(mesh.coord(*n), *nu)?;
                    Ok(std::array::from_fn(|c| if mirror_zero(mesh, symmetry, *n, c) { ZERO } else { v[c] }))
                })
                .collect(),
            TractionRecovery::Variational => {
                let rule = tepml::gauss::GaussRule::legendre(3);
                let faces = interface_faces(mesh);
                let parts: Vec<tepml::Result<Vec<(usize, Vec4)>>> = faces
                    .par_iter()
                    .map(|f| {
                        let nu = f.normal();
                        let local = f.local_nodes();
                        let mut acc = [[ZERO; 4]; 4];
                        let jac = f.area() / 4.0;
                        let (b, c2) = ((f.axis + 1) % 3, (f.axis + 2) % 3);
                        for (u, wu) in rule.nodes.iter().zip(&rule.weights) {
                            for (v, wv) in rule.nodes.iter().zip(&rule.weights) {
                                let mut xi = [0.0; 3];
                                xi[f.axis] = if f.upper { 1.0 } else { -1.0 };
                                xi[b] = *u;
                                xi[c2] = *v;
                                let (n, _) = crate::assembly::shape(xi);
                                let x = std::array::from_fn(|a| f.cell.lo[a] + 0.5 * f.cell.size[a] * (1.0 + xi[a]));
                                let val = t(x, nu)?;
                                for (k, ln) in local.iter().enumerate() {
                                    for c in 0..4 {
                                        acc[k][c] += wu * wv * jac * n[*ln] * val[c];
                                    }
                                }
                            }
                        }
                        Ok(local.iter().enumerate().map(|(k, ln)| (f.cell.nodes[*ln], acc[k])).collect())
                    })
                    .collect();
                let mut sums = vec![[ZERO; 4]; mesh.n_nodes()];
                for p in parts {
                    for (n, v) in p? {
                        for c in 0..4 {
                            sums[n][c] += v[c];
                        }
                    }
                }
                Ok(self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(n, m)| std::array::from_fn(|c| if mirror_zero(mesh, symmetry, *n, c) { ZERO } else { sums[*n][c] / *m }))
                    .collect())
            }
        }
    }

    /// Weighted L² norm of `values` (full-box scaled).
    pub fn weighted_norm(&self, mesh: &HexMesh, values: &[Vec4]) -> f64 {
        let s: f64 = values.iter().zip(&self.weights).map(|(v, w)| w * v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        (octant_factor(mesh) * s).sqrt()
    }

    /// Weighted L² distance to `other`.
    pub fn distance(&self, mesh: &HexMesh, other: &[Vec4]) -> f64 {
        let diff: Vec<Vec4> = self.values.iter().zip(other).map(|(a, b)| std::array::from_fn(|c| a[c] - b[c])).collect();
        self.weighted_norm(mesh, &diff)
    }
}

/// The layer problem: data `g` on ∂B₁ and `f` on ∂B₂.
pub fn solve_layer(
    mesh: &HexMesh,
    matrix: &BlockMatrix,
    g: &(dyn Fn([f64; 3]) -> tepml::Result<Vec4> + Sync),
    f: &(dyn Fn([f64; 3]) -> tepml::Result<Vec4> + Sync),
    symmetry: Option<Symmetry>,
    opts: SolverOptions,
) -> Result<Solution> {
    if mesh.region != Region::Layer {
        return Err(FemError::Precondition("layer problem needs a layer mesh".into()));
    }
    let data = dirichlet_data(mesh, |n, x| if mesh.tag(n) == NodeTag::Interface { g(x) } else { f(x) })?;
    solve_dirichlet(mesh, matrix, &data, None, symmetry, opts)
}

/// Discrete approximation N̂G of the PML DtN map for data G on ∂B₁.
pub fn discrete_dtn(
    mesh: &HexMesh,
    params: &MaterialParams,
    g: &(dyn Fn([f64; 3]) -> tepml::Result<Vec4> + Sync),
    symmetry: Option<Symmetry>,
    recovery: TractionRecovery,
    opts: SolverOptions,
) -> Result<(InterfaceTraction, Solution)> {
    let matrix = assemble(mesh, params, FormKind::Full);
    let zero = |_: [f64; 3]| Ok([ZERO; 4]);
    let sol = solve_layer(mesh, &matrix, g, &zero, symmetry, opts)?;
    let t = interface_traction(mesh, &matrix, params, &sol.field, symmetry, recovery)?;
    Ok((t, sol))
}

/// Random field with independent standard complex normal-ish entries at
/// every node off the Dirichlet set, zero on it (a discrete H₀¹ field).
pub fn random_h0_field(mesh: &HexMesh, rng: &mut impl rand::Rng) -> DiscreteField {
    let mut f = DiscreteField::zeros(mesh.n_nodes());
    for (n, v) in f.values.iter_mut().enumerate() {
        if mesh.tag(n) == NodeTag::Interior || (mesh.tag(n) == NodeTag::Interface && mesh.region == Region::Truncated) {
            for c in v.iter_mut() {
                *c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
    }
    f
}

/// Re A_D(Φ,Φ) / (‖∇u‖² + ‖∇p‖²).
pub fn ellipticity_ratio(mesh: &HexMesh, principal: &BlockMatrix, field: &DiscreteField) -> Result<f64> {
    let n = field_norms(mesh, field, NormRegion::All);
    let den = n[1] + n[3];
    if den == 0.0 {
        return Err(FemError::ZeroField);
    }
    Ok(principal.form(&field.values, &field.values).re * octant_factor(mesh) / den)
}

/// Re B_D(Φ,Φ) / ‖Φ‖²_{H¹} at ω = (γ/η)i, under the constraint set.
pub fn special_frequency_ratio(mesh: &HexMesh, params: &MaterialParams, full: &BlockMatrix, field: &DiscreteField) -> Result<f64> {
    let expected = C64::new(0.0, params.gamma / params.eta);
    if (params.omega - expected).norm() > 1e-12 * expected.norm() {
        return Err(FemError::Precondition(format!("ω = {} is not (γ/η)i", params.omega)));
    }
    let report = check_pml_constraints(params, mesh.profile.zeta, mesh.profile.alpha0);
    if !report.all_pass() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(FemError::Precondition(format!("constraints violated: {}", names.join(", "))));
    }
    let den: f64 = field_norms(mesh, field, NormRegion::All).iter().sum();
    if den == 0.0 {
        return Err(FemError::ZeroField);
    }
    Ok(full.form(&field.values, &field.values).re * octant_factor(mesh) / den)
}
