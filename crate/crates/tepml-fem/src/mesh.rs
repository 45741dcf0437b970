//! Structured hexahedral grids on B₂ minus a cuboid obstacle, with node lines
//! snapped to every material breakpoint.

use crate::error::{FemError, Result};
use tepml::PmlProfile;

/// Which part of B₂ carries active cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Ω₂ = B₂ minus the obstacle.
    Truncated,
    /// The absorbing layer B₂ minus B̄₁.
    Layer,
}

/// Whole box, or the positive octant with mirror planes at x_j = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    Full,
    Octant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    /// On ∂B₁.
    Interface,
    /// On the obstacle surface ∂Ω.
    Obstacle,
    /// On ∂B₂.
    Outer,
    /// Not a vertex of any active cell.
    Unused,
}

#[derive(Debug, Clone)]
pub struct HexMesh {
    pub lines: [Vec<f64>; 3],
    pub profile: PmlProfile,
    pub obstacle_half: [f64; 3],
    pub region: Region,
    pub extent: Extent,
    /// Largest cell edge.
    pub h: f64,
    dims: [usize; 3],
    cell_active: Vec<bool>,
    tags: Vec<NodeTag>,
}

/// An active cell: lower corner index, its eight nodes and its edge lengths.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub corner: [usize; 3],
    pub nodes: [usize; 8],
    pub lo: [f64; 3],
    pub size: [f64; 3],
}

impl Cell {
    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.lo[a] + 0.5 * self.size[a])
    }

    pub fn volume(&self) -> f64 {
        self.size.iter().product()
    }
}

fn axis_lines(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 1e-12 * (1.0 + b.abs()) {
            continue;
        }
        let n = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(a + (b - a) * k as f64 / n as f64);
        }
        out.push(b);
    }
    out
}

impl HexMesh {
    pub fn new(profile: &PmlProfile, obstacle_half: [f64; 3], h_target: f64, region: Region, extent: Extent) -> Result<Self> {
        profile.validate()?;
        if !(h_target > 0.0) || !h_target.is_finite() {
            return Err(FemError::Mesh(format!("h_target = {h_target}")));
        }
        for j in 0..3 {
            if !(obstacle_half[j] > 0.0 && obstacle_half[j] < profile.l[j]) {
                return Err(FemError::Core(tepml::Error::InvalidGeometry(format!(
                    "obstacle half-width {} on axis {j} must lie strictly inside (0, {})",
                    obstacle_half[j], profile.l[j]
                ))));
            }
        }
        let outer = profile.outer();
        let lines: [Vec<f64>; 3] = std::array::from_fn(|j| {
            let pos = [obstacle_half[j], profile.l[j], profile.lbar[j], outer[j]];
            let mut breaks: Vec<f64> = match extent {
                Extent::Full => pos.iter().rev().map(|v| -v).chain(pos.iter().copied()).collect(),
                Extent::Octant => std::iter::once(0.0).chain(pos.iter().copied()).collect(),
            };
            breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
            axis_lines(&breaks, h_target)
        });
        let dims = [lines[0].len(), lines[1].len(), lines[2].len()];
        let h = lines.iter().flat_map(|l| l.windows(2).map(|w| w[1] - w[0])).fold(0.0, f64::max);
        let mut mesh = Self {
            lines,
            profile: profile.clone(),
            obstacle_half,
            region,
            extent,
            h,
            dims,
            cell_active: Vec::new(),
            tags: Vec::new(),
        };
        mesh.classify();
        Ok(mesh)
    }

    fn classify(&mut self) {
        let [nx, ny, nz] = self.dims;
        let mut active = vec![false; (nx - 1) * (ny - 1) * (nz - 1)];
        let mut used = vec![false; nx * ny * nz];
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let c = [
                        0.5 * (self.lines[0][i] + self.lines[0][i + 1]),
                        0.5 * (self.lines[1][j] + self.lines[1][j + 1]),
                        0.5 * (self.lines[2][k] + self.lines[2][k + 1]),
                    ];
                    let inside = |half: &[f64; 3]| (0..3).all(|a| c[a].abs() < half[a]);
                    let on = match self.region {
                        Region::Truncated => !inside(&self.obstacle_half),
                        Region::Layer => !inside(&self.profile.l),
                    };
                    if on {
                        active[i + (nx - 1) * (j + (ny - 1) * k)] = true;
                        for c in 0..8 {
                            used[self.node_index([i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2)])] = true;
                        }
                    }
                }
            }
        }
        self.cell_active = active;
        let outer = self.profile.outer();
        let within = |x: [f64; 3], half: [f64; 3]| (0..3).all(|a| x[a].abs() <= half[a]);
        self.tags = (0..nx * ny * nz)
            .map(|n| {
                if !used[n] {
                    return NodeTag::Unused;
                }
                let x = self.coord(n);
                if (0..3).any(|a| x[a].abs() == outer[a]) {
                    NodeTag::Outer
                } else if within(x, self.obstacle_half) {
                    NodeTag::Obstacle
                } else if within(x, self.profile.l) && (0..3).any(|a| x[a].abs() == self.profile.l[a]) {
                    NodeTag::Interface
                } else {
                    NodeTag::Interior
                }
            })
            .collect();
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_nodes(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        [n % self.dims[0], (n / self.dims[0]) % self.dims[1], n / (self.dims[0] * self.dims[1])]
    }

    pub fn coord(&self, n: usize) -> [f64; 3] {
        let ijk = self.node_ijk(n);
        std::array::from_fn(|a| self.lines[a][ijk[a]])
    }

    pub fn tag(&self, n: usize) -> NodeTag {
        self.tags[n]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    /// Mirror planes through node `n` (octant meshes only).
    pub fn on_mirror(&self, n: usize) -> [bool; 3] {
        let ijk = self.node_ijk(n);
        std::array::from_fn(|a| self.extent == Extent::Octant && ijk[a] == 0)
    }

    fn cell_flat(&self, corner: [usize; 3]) -> usize {
        corner[0] + (self.dims[0] - 1) * (corner[1] + (self.dims[1] - 1) * corner[2])
    }

    pub fn cell_active(&self, corner: [usize; 3]) -> bool {
        (0..3).all(|a| corner[a] + 1 < self.dims[a]) && self.cell_active[self.cell_flat(corner)]
    }

    pub fn cell(&self, corner: [usize; 3]) -> Cell {
        let nodes = std::array::from_fn(|c| self.node_index([corner[0] + (c & 1), corner[1] + ((c >> 1) & 1), corner[2] + (c >> 2)]));
        let lo = std::array::from_fn(|a| self.lines[a][corner[a]]);
        let size = std::array::from_fn(|a| self.lines[a][corner[a] + 1] - self.lines[a][corner[a]]);
        Cell { corner, nodes, lo, size }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let [nx, ny, nz] = self.dims;
        (0..nz - 1)
            .flat_map(move |k| (0..ny - 1).flat_map(move |j| (0..nx - 1).map(move |i| [i, j, k])))
            .filter(|c| self.cell_active[self.cell_flat(*c)])
            .map(|c| self.cell(c))
    }

    pub fn n_cells(&self) -> usize {
        self.cell_active.iter().filter(|a| **a).count()
    }

    /// Active cell lying inside B₁ (the region Ω₁ when the obstacle is cut out).
    pub fn cell_in_inner(&self, cell: &Cell) -> bool {
        let c = cell.center();
        (0..3).all(|a| c[a].abs() < self.profile.l[a])
    }

    /// Nodes sharing an active cell with `n`, including `n`, in increasing order.
    pub fn neighbours(&self, n: usize) -> Vec<usize> {
        let ijk = self.node_ijk(n);
        let mut out = Vec::with_capacity(27);
        if self.tags[n] == NodeTag::Unused {
            return out;
        }
        for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let d = [di, dj, dk];
                    let m: Option<[usize; 3]> = (0..3)
                        .map(|a| {
                            let v = ijk[a] as i64 + d[a];
                            (v >= 0 && (v as usize) < self.dims[a]).then_some(v as usize)
                        })
                        .collect::<Option<Vec<_>>>()
                        .map(|v| [v[0], v[1], v[2]]);
                    let Some(m) = m else { continue };
                    // cells holding both nodes have corners in [max-1, min] per axis
                    let ranges: [(usize, usize); 3] = std::array::from_fn(|a| {
                        let (lo, hi) = (ijk[a].min(m[a]), ijk[a].max(m[a]));
                        (hi.saturating_sub(1), lo)
                    });
                    let mut shared = false;
                    'search: for ck in ranges[2].0..=ranges[2].1 {
                        for cj in ranges[1].0..=ranges[1].1 {
                            for ci in ranges[0].0..=ranges[0].1 {
                                if self.cell_active([ci, cj, ck]) {
                                    shared = true;
                                    break 'search;
                                }
                            }
                        }
                    }
                    if shared {
                        out.push(self.node_index(m));
                    }
                }
            }
        }
        out
    }

    /// Every coordinate that must appear as a grid line on axis `a`.
    pub fn breakpoints(&self, a: usize) -> Vec<f64> {
        let pos = [self.obstacle_half[a], self.profile.l[a], self.profile.lbar[a], self.profile.outer()[a]];
        match self.extent {
            Extent::Full => pos.iter().flat_map(|v| [*v, -*v]).collect(),
            Extent::Octant => std::iter::once(0.0).chain(pos).collect(),
        }
    }
}
