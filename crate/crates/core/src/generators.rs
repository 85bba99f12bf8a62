//! Deterministic constructions of the graph families: tree-like fractals,
//! generalized Vicsek fractals, and ring/path/torus baselines.
//!
//! Generation indexing: the two-node seed of the tree-like family is
//! generation 0 and the `(m+3)`-node star is generation 1, so that
//! `N_g = (m+2)^g + 1` holds for every `g`. Vicsek generation 1 is the star
//! `K_{1,v}`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_MAX_NODES: usize = 10_000_000;
pub const DEFAULT_MAX_DENSE: usize = 5000;

pub const MAX_NODES_ENV: &str = "FRACOH_MAX_NODES";
pub const MAX_DENSE_ENV: &str = "FRACOH_MAX_DENSE";

/// Node-count limits: `max_nodes` for graph construction, `max_dense` for
/// anything that needs a dense `N x N` factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_nodes: usize,
    pub max_dense: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_nodes: DEFAULT_MAX_NODES,
            max_dense: DEFAULT_MAX_DENSE,
        }
    }
}

impl Caps {
    /// Defaults overridden by `FRACOH_MAX_NODES` / `FRACOH_MAX_DENSE`.
    pub fn from_env() -> Result<Self> {
        let mut caps = Self::default();
        for (var, slot) in [
            (MAX_NODES_ENV, &mut caps.max_nodes),
            (MAX_DENSE_ENV, &mut caps.max_dense),
        ] {
            if let Ok(raw) = std::env::var(var) {
                *slot = raw.trim().parse().map_err(|_| {
                    Error::InvalidParameter(format!("{var}={raw:?} is not a node count"))
                })?;
            }
        }
        Ok(caps)
    }

    pub fn check_nodes(&self, requested: u128) -> Result<()> {
        if requested > self.max_nodes as u128 {
            return Err(Error::CapExceeded {
                what: "graph generation",
                requested,
                cap: self.max_nodes,
            });
        }
        Ok(())
    }

    pub fn check_dense(&self, requested: usize) -> Result<()> {
        if requested > self.max_dense {
            return Err(Error::CapExceeded {
                what: "dense eigensolve",
                requested: requested as u128,
                cap: self.max_dense,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Family {
    TreeLike { m: u32 },
    Vicsek { v: u32 },
    Ring,
    Path,
    Torus2D,
}

impl Family {
    pub fn is_fractal(&self) -> bool {
        matches!(self, Family::TreeLike { .. } | Family::Vicsek { .. })
    }

    /// Short family name as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Family::TreeLike { .. } => "tree",
            Family::Vicsek { .. } => "vicsek",
            Family::Ring => "ring",
            Family::Path => "path",
            Family::Torus2D => "torus",
        }
    }

    /// The family parameter (`m` or `v`), zero for baselines.
    pub fn param(&self) -> u32 {
        match *self {
            Family::TreeLike { m } => m,
            Family::Vicsek { v } => v,
            _ => 0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::TreeLike { m } => write!(f, "tree(m={m})"),
            Family::Vicsek { v } => write!(f, "vicsek(v={v})"),
            Family::Ring => f.write_str("ring"),
            Family::Path => f.write_str("path"),
            Family::Torus2D => f.write_str("torus2d"),
        }
    }
}

/// A family plus its size argument: the generation `g` for fractals, the
/// node count for ring/path, the side length for the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub size: u32,
}

impl FamilySpec {
    pub fn tree(m: u32, g: u32) -> Self {
        Self {
            family: Family::TreeLike { m },
            size: g,
        }
    }

    pub fn vicsek(v: u32, g: u32) -> Self {
        Self {
            family: Family::Vicsek { v },
            size: g,
        }
    }

    pub fn ring(n: u32) -> Self {
        Self {
            family: Family::Ring,
            size: n,
        }
    }

    pub fn path(n: u32) -> Self {
        Self {
            family: Family::Path,
            size: n,
        }
    }

    pub fn torus2d(side: u32) -> Self {
        Self {
            family: Family::Torus2D,
            size: side,
        }
    }

    /// Closed-form node count, `None` on overflow.
    pub fn node_count(&self) -> Option<u128> {
        let s = self.size;
        match self.family {
            Family::TreeLike { m } => (u128::from(m) + 2).checked_pow(s)?.checked_add(1),
            Family::Vicsek { v } => (u128::from(v) + 1).checked_pow(s),
            Family::Ring | Family::Path => Some(u128::from(s)),
            Family::Torus2D => Some(u128::from(s) * u128::from(s)),
        }
    }

    pub fn build(&self, caps: &Caps) -> Result<Graph> {
        match self.family {
            Family::TreeLike { m } => tree_like_capped(m, self.size, caps),
            Family::Vicsek { v } => vicsek_capped(v, self.size, caps),
            Family::Ring => ring(self.size as usize),
            Family::Path => path(self.size as usize),
            Family::Torus2D => torus2d(self.size as usize),
        }
    }

    pub fn dimensions(&self) -> DimensionInfo {
        analytic_dimensions(self.family)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::TreeLike { .. } | Family::Vicsek { .. } => write!(f, "{} g={}", self.family, self.size),
            Family::Torus2D => write!(f, "{} side={}", self.family, self.size),
            _ => write!(f, "{} n={}", self.family, self.size),
        }
    }
}

fn overflow() -> Error {
    Error::CapExceeded {
        what: "graph generation",
        requested: u128::MAX,
        cap: usize::MAX,
    }
}

pub fn tree_like(m: u32, g: u32) -> Result<Graph> {
    tree_like_capped(m, g, &Caps::default())
}

/// Tree-like fractal: every edge `(i, j)` becomes `(i, k), (k, j)` with a
/// fresh node `k`, which then receives `m` fresh leaves. Edges are processed
/// in the previous generation's construction order and fresh labels are
/// handed out consecutively.
pub fn tree_like_capped(m: u32, g: u32, caps: &Caps) -> Result<Graph> {
    if m == 0 {
        return Err(Error::InvalidParameter("tree-like fractal needs m >= 1".into()));
    }
    let spec = FamilySpec::tree(m, g);
    caps.check_nodes(spec.node_count().ok_or_else(overflow)?)?;

    let m = m as usize;
    let mut num_nodes = 2;
    let mut edges = vec![(0usize, 1usize)];
    for _ in 0..g {
        let mut next = Vec::with_capacity(edges.len() * (m + 2));
        for &(i, j) in &edges {
            let k = num_nodes;
            next.push((i, k));
            next.push((k, j));
            for leaf in k + 1..=k + m {
                next.push((k, leaf));
            }
            num_nodes += m + 1;
        }
        edges = next;
    }
    Ok(Graph::new(num_nodes, edges)?.with_label(spec.to_string()))
}

pub fn vicsek(v: u32, g: u32) -> Result<Graph> {
    vicsek_capped(v, g, &Caps::default())
}

/// Generalized Vicsek fractal.
///
/// Generation 1 is the star with center 0 and corners (leaves) `1..=v`.
/// Generation `g+1` places `v+1` copies of `G_g` in label blocks of size
/// `N_g`, copy 0 being the center. Corner `j` of the center copy is joined to
/// corner `(j + v/2) mod v` of copy `j+1`, and corner `j` of the new graph is
/// the image of corner `j` in copy `j+1`. All corners of `G_g` are pairwise
/// equidistant, so the new corner is always one farthest from the attaching
/// corner.
pub fn vicsek_capped(v: u32, g: u32, caps: &Caps) -> Result<Graph> {
    if v < 2 {
        return Err(Error::InvalidParameter("Vicsek fractal needs v >= 2".into()));
    }
    if g == 0 {
        return Err(Error::InvalidParameter("Vicsek generations start at 1".into()));
    }
    let spec = FamilySpec::vicsek(v, g);
    caps.check_nodes(spec.node_count().ok_or_else(overflow)?)?;

    let v = v as usize;
    let mut num_nodes = v + 1;
    let mut edges: Vec<(usize, usize)> = (1..=v).map(|leaf| (0, leaf)).collect();
    let mut corners: Vec<usize> = (1..=v).collect();
    for _ in 1..g {
        let block = num_nodes;
        let mut next = Vec::with_capacity((v + 1) * edges.len() + v);
        for copy in 0..=v {
            let off = copy * block;
            next.extend(edges.iter().map(|&(a, b)| (a + off, b + off)));
        }
        let mut next_corners = Vec::with_capacity(v);
        for (j, &corner) in corners.iter().enumerate() {
            let off = (j + 1) * block;
            let attach = corners[(j + v / 2) % v];
            next.push((corner, attach + off));
            next_corners.push(corner + off);
        }
        edges = next;
        corners = next_corners;
        num_nodes = block * (v + 1);
    }
    Ok(Graph::new(num_nodes, edges)?.with_label(spec.to_string()))
}

/// Cycle `C_n`, `n >= 3`.
pub fn ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter("ring needs n >= 3".into()));
    }
    Ok(Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))?.with_label(format!("ring n={n}")))
}

/// Path `P_n`, `n >= 2`.
pub fn path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter("path needs n >= 2".into()));
    }
    Ok(Graph::new(n, (1..n).map(|i| (i - 1, i)))?.with_label(format!("path n={n}")))
}

/// `side x side` 4-neighbour torus, node `(r, c)` labelled `r * side + c`.
/// For `side = 2` the wraparound neighbours coincide and the result is `C_4`.
pub fn torus2d(side: usize) -> Result<Graph> {
    if side < 2 {
        return Err(Error::InvalidParameter("torus needs side >= 2".into()));
    }
    let idx = |r: usize, c: usize| (r % side) * side + (c % side);
    let mut edges = BTreeSet::new();
    for r in 0..side {
        for c in 0..side {
            for (a, b) in [(idx(r, c), idx(r, c + 1)), (idx(r, c), idx(r + 1, c))] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    Ok(Graph::new(side * side, edges)?.with_label(format!("torus2d side={side}")))
}

/// Fractal dimension `d_f` and spectral dimension `d_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionInfo {
    pub fractal: f64,
    pub spectral: f64,
}

/// `d_f = log(m+2)/log 2` (tree-like) or `log(v+1)/log 3` (Vicsek) with
/// `d_s = 2 d_f / (d_f + 1)`; lattice baselines have `d_f = d_s` equal to
/// their integer dimension.
pub fn analytic_dimensions(family: Family) -> DimensionInfo {
    let fractal_pair = |df: f64| DimensionInfo {
        fractal: df,
        spectral: 2.0 * df / (df + 1.0),
    };
    match family {
        Family::TreeLike { m } => fractal_pair(f64::from(m + 2).ln() / 2f64.ln()),
        Family::Vicsek { v } => fractal_pair(f64::from(v + 1).ln() / 3f64.ln()),
        Family::Ring | Family::Path => DimensionInfo {
            fractal: 1.0,
            spectral: 1.0,
        },
        Family::Torus2D => DimensionInfo {
            fractal: 2.0,
            spectral: 2.0,
        },
    }
}
