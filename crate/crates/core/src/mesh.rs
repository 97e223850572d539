//! Finite-difference meshes: the truncated strip rectangle and round disks
//! embedded in a Cartesian lattice with Shortley–Weller boundary arms.
//!
//! Both are lowered to a [`StencilMesh`]: a node list where every node that
//! can carry an unknown has four arms (east, west, north, south) with their
//! lengths, and nodes carry optional three-point derivative stencils.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    /// Half-length `L` of the truncated strip in x.
    pub half_length: f64,
    /// Strip half-width `m`.
    pub half_width: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectGrid {
    pub fn new(half_length: f64, half_width: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 5 || ny < 5 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 5x5 nodes, got {nx}x{ny}"
            )));
        }
        if !(half_length > 0.0 && half_width > 0.0)
            || !half_length.is_finite()
            || !half_width.is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "degenerate rectangle [-{half_length}, {half_length}] x [-{half_width}, {half_width}]"
            )));
        }
        Ok(Self {
            half_length,
            half_width,
            nx,
            ny,
        })
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.half_length / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.half_width / (self.ny - 1) as f64
    }

    pub fn h_max(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.half_length
        } else {
            -self.half_length + i as f64 * self.hx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny - 1 {
            self.half_width
        } else {
            -self.half_width + j as f64 * self.hy()
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major node index, x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Same rectangle with twice the resolution in each direction.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            ..*self
        }
    }

    /// Bilinear interpolation of nodal values at `(x, y)` inside the rectangle.
    pub fn bilinear(&self, values: &[f64], x: f64, y: f64) -> f64 {
        let fx = ((x + self.half_length) / self.hx()).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((y + self.half_width) / self.hy()).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |a, b| values[self.index(a, b)];
        (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j))
            + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
    }
}

/// A closed round disk discretized on a Cartesian lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskDomain {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub hx: f64,
    pub hy: f64,
    /// A lattice node; all lattice nodes are `origin + (i hx, j hy)`.
    pub origin: (f64, f64),
}

impl DiskDomain {
    /// Disk with a square lattice through its center.
    pub fn centered(cx: f64, cy: f64, radius: f64, h: f64) -> Result<Self> {
        let d = Self {
            cx,
            cy,
            radius,
            hx: h,
            hy: h,
            origin: (cx, cy),
        };
        d.validate()?;
        Ok(d)
    }

    /// Disk whose lattice is the node lattice of `grid`.
    pub fn on_grid(grid: &RectGrid, cx: f64, cy: f64, radius: f64) -> Result<Self> {
        let d = Self {
            cx,
            cy,
            radius,
            hx: grid.hx(),
            hy: grid.hy(),
            origin: (-grid.half_length, -grid.half_width),
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.hx > 0.0 && self.hy > 0.0)
            || ![self.cx, self.cy, self.radius].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput(format!("degenerate disk {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        dx * dx + dy * dy < self.radius * self.radius * (1.0 - 1e-10)
    }

    /// Closed disk lies inside the open rectangle of `grid`.
    pub fn inside(&self, grid: &RectGrid) -> bool {
        self.cx.abs() + self.radius < grid.half_length
            && self.cy.abs() + self.radius < grid.half_width
    }
}

/// Neighbour reached along one of the four grid directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub node: usize,
    pub len: f64,
}

/// Three-point linear derivative stencil (unused slots have weight 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil3 {
    pub idx: [usize; 3],
    pub w: [f64; 3],
}

impl Stencil3 {
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.w[0] * u[self.idx[0]] + self.w[1] * u[self.idx[1]] + self.w[2] * u[self.idx[2]]
    }

    /// Second-order derivative at `center` from neighbours at distance
    /// `hp` (forward) and `hm` (backward).
    pub fn nonuniform(minus: usize, center: usize, plus: usize, hm: f64, hp: f64) -> Self {
        Self {
            idx: [minus, center, plus],
            w: [
                -hp / (hm * (hm + hp)),
                (hp - hm) / (hp * hm),
                hm / (hp * (hm + hp)),
            ],
        }
    }
}

pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const NORTH: usize = 2;
pub const SOUTH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshNode {
    pub x: f64,
    pub y: f64,
    /// Present for nodes that may carry an unknown.
    pub arms: Option<[Arm; 4]>,
    pub dx: Option<Stencil3>,
    pub dy: Option<Stencil3>,
}

impl MeshNode {
    /// All arms are full lattice steps to nodes that have arms themselves.
    pub fn is_regular(&self, nodes: &[MeshNode], hx: f64, hy: f64) -> bool {
        match &self.arms {
            None => false,
            Some(arms) => arms.iter().enumerate().all(|(k, a)| {
                let h = if k < 2 { hx } else { hy };
                (a.len - h).abs() <= 1e-12 * h && nodes[a.node].arms.is_some()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Rect(RectGrid),
    Disk(DiskDomain),
}

#[derive(Debug, Clone)]
pub struct StencilMesh {
    pub geometry: Geometry,
    pub nodes: Vec<MeshNode>,
    /// Nodes with arms, in the elimination order used by the band solver.
    pub interior: Vec<usize>,
}

impl StencilMesh {
    pub fn rect(grid: &RectGrid) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = (grid.hx(), grid.hy());
        let mut nodes = Vec::with_capacity(grid.len());
        for j in 0..ny {
            for i in 0..nx {
                let id = grid.index(i, j);
                let interior = !grid.is_boundary(i, j);
                let along_x = |i: usize| {
                    Stencil3::nonuniform(grid.index(i - 1, j), id, grid.index(i + 1, j), hx, hx)
                };
                let along_y = |j: usize| {
                    Stencil3::nonuniform(grid.index(i, j - 1), id, grid.index(i, j + 1), hy, hy)
                };
                let (arms, dx, dy) = if interior {
                    let arms = [
                        Arm { node: grid.index(i + 1, j), len: hx },
                        Arm { node: grid.index(i - 1, j), len: hx },
                        Arm { node: grid.index(i, j + 1), len: hy },
                        Arm { node: grid.index(i, j - 1), len: hy },
                    ];
                    (Some(arms), Some(along_x(i)), Some(along_y(j)))
                } else {
                    // Boundary nodes only know the derivative along their edge.
                    let on_row = (j == 0 || j == ny - 1) && i > 0 && i < nx - 1;
                    let on_col = (i == 0 || i == nx - 1) && j > 0 && j < ny - 1;
                    (
                        None,
                        on_row.then(|| along_x(i)),
                        on_col.then(|| along_y(j)),
                    )
                };
                nodes.push(MeshNode {
                    x: grid.x(i),
                    y: grid.y(j),
                    arms,
                    dx,
                    dy,
                });
            }
        }
        // Order unknowns so the short direction varies fastest.
        let mut interior = Vec::with_capacity((nx - 2) * (ny - 2));
        if ny <= nx {
            for i in 1..nx - 1 {
                for j in 1..ny - 1 {
                    interior.push(grid.index(i, j));
                }
            }
        } else {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    interior.push(grid.index(i, j));
                }
            }
        }
        Self {
            geometry: Geometry::Rect(*grid),
            nodes,
            interior,
        }
    }

    /// Shortley–Weller discretization of a disk: lattice nodes strictly inside
    /// carry unknowns; arms that leave the disk end on the circle, where a
    /// boundary node is created. Boundary nodes have no derivative stencils.
    pub fn disk(disk: &DiskDomain) -> Self {
        let (hx, hy) = (disk.hx, disk.hy);
        let (ox, oy) = disk.origin;
        let i_lo = ((disk.cx - disk.radius - ox) / hx).floor() as i64 - 1;
        let i_hi = ((disk.cx + disk.radius - ox) / hx).ceil() as i64 + 1;
        let j_lo = ((disk.cy - disk.radius - oy) / hy).floor() as i64 - 1;
        let j_hi = ((disk.cy + disk.radius - oy) / hy).ceil() as i64 + 1;
        let width = (i_hi - i_lo + 1) as usize;
        let height = (j_hi - j_lo + 1) as usize;
        let lattice_x = |i: i64| ox + i as f64 * hx;
        let lattice_y = |j: i64| oy + j as f64 * hy;

        let mut id_of = vec![usize::MAX; width * height];
        let mut nodes = Vec::new();
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let (x, y) = (lattice_x(i), lattice_y(j));
                if disk.contains(x, y) {
                    id_of[(i - i_lo) as usize + width * (j - j_lo) as usize] = nodes.len();
                    nodes.push(MeshNode {
                        x,
                        y,
                        arms: None,
                        dx: None,
                        dy: None,
                    });
                }
            }
        }
        let interior: Vec<usize> = (0..nodes.len()).collect();
        let lookup = |i: i64, j: i64| {
            if i < i_lo || i > i_hi || j < j_lo || j > j_hi {
                usize::MAX
            } else {
                id_of[(i - i_lo) as usize + width * (j - j_lo) as usize]
            }
        };
        let r2 = disk.radius * disk.radius;
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let id = lookup(i, j);
                if id == usize::MAX {
                    continue;
                }
                let (x, y) = (nodes[id].x, nodes[id].y);
                let mut arms = [Arm { node: 0, len: 0.0 }; 4];
                let dirs = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
                for (k, (di, dj)) in dirs.into_iter().enumerate() {
                    let nb = lookup(i + di, j + dj);
                    if nb != usize::MAX {
                        arms[k] = Arm {
                            node: nb,
                            len: if k < 2 { hx } else { hy },
                        };
                        continue;
                    }
                    // Distance to the circle along the lattice line.
                    let (bx, by, len) = if k < 2 {
                        let half = (r2 - (y - disk.cy).powi(2)).max(0.0).sqrt();
                        let bx = disk.cx + di as f64 * half;
                        (bx, y, ((bx - x) * di as f64).clamp(1e-12 * hx, hx))
                    } else {
                        let half = (r2 - (x - disk.cx).powi(2)).max(0.0).sqrt();
                        let by = disk.cy + dj as f64 * half;
                        (x, by, ((by - y) * dj as f64).clamp(1e-12 * hy, hy))
                    };
                    arms[k] = Arm {
                        node: nodes.len(),
                        len,
                    };
                    nodes.push(MeshNode {
                        x: bx,
                        y: by,
                        arms: None,
                        dx: None,
                        dy: None,
                    });
                }
                nodes[id].dx = Some(Stencil3::nonuniform(
                    arms[WEST].node,
                    id,
                    arms[EAST].node,
                    arms[WEST].len,
                    arms[EAST].len,
                ));
                nodes[id].dy = Some(Stencil3::nonuniform(
                    arms[SOUTH].node,
                    id,
                    arms[NORTH].node,
                    arms[SOUTH].len,
                    arms[NORTH].len,
                ));
                nodes[id].arms = Some(arms);
            }
        }
        Self {
            geometry: Geometry::Disk(*disk),
            nodes,
            interior,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> (f64, f64) {
        match &self.geometry {
            Geometry::Rect(g) => (g.hx(), g.hy()),
            Geometry::Disk(d) => (d.hx, d.hy),
        }
    }

    pub fn h_max(&self) -> f64 {
        let (hx, hy) = self.spacing();
        hx.max(hy)
    }

    pub fn is_unknown_capable(&self, k: usize) -> bool {
        self.nodes[k].arms.is_some()
    }

    /// Nodes whose values are prescribed Dirichlet data.
    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].arms.is_none())
    }

    /// Evaluate `f` at every node.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|n| f(n.x, n.y)).collect()
    }
}
