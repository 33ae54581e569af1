//! Graphs: finite patches of ℤ^d and of comb graphs ℤ^d ⊣ ℤ, custom edge lists,
//! adapted functions and the K operator, admissibility, and PF weights.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Site;

/// Finitely supported vector on the vertices of a patch.
pub type SparseVec = BTreeMap<usize, Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Infinite graphs with integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Lattice {
    /// ℤ^d
    Zd(usize),
    /// ℤ^d ⊣ ℤ: sites are `(J_1, ..., J_d, x)`, teeth attached at `x = 0`.
    Comb(usize),
}

impl Lattice {
    pub fn coords(&self) -> usize {
        match *self {
            Lattice::Zd(d) => d,
            Lattice::Comb(d) => d + 1,
        }
    }

    pub fn neighbors(&self, s: &[i64]) -> Vec<Site> {
        let mut out = Vec::new();
        match *self {
            Lattice::Zd(d) => {
                for k in 0..d {
                    for step in [-1, 1] {
                        let mut t = s.to_vec();
                        t[k] += step;
                        out.push(t);
                    }
                }
            }
            Lattice::Comb(d) => {
                for step in [-1, 1] {
                    let mut t = s.to_vec();
                    t[d] += step;
                    out.push(t);
                }
                if s[d] == 0 {
                    for k in 0..d {
                        for step in [-1, 1] {
                            let mut t = s.to_vec();
                            t[k] += step;
                            out.push(t);
                        }
                    }
                }
            }
        }
        out
    }

    /// Coordinate-sum function Φ(s) = Σ_k s_k.
    pub fn coordinate_sum(s: &[i64]) -> f64 {
        s.iter().sum::<i64>() as f64
    }

    /// `‖A‖` of the infinite graph.
    pub fn spectral_radius(&self) -> f64 {
        match *self {
            Lattice::Zd(d) => 2.0 * d as f64,
            Lattice::Comb(d) => 2.0 * ((d * d + 1) as f64).sqrt(),
        }
    }

    /// `K δ_site` on the infinite graph with the coordinate-sum Φ.
    pub fn k_delta(&self, site: &[i64]) -> Vec<(Site, Complex64)> {
        let p = Self::coordinate_sum(site);
        self.neighbors(site)
            .into_iter()
            .filter_map(|y| {
                let w = p - Self::coordinate_sum(&y);
                (w != 0.0).then(|| (y, I * w))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PatchKind {
    /// Open box `[-radius, radius]^d`.
    ZdPatch { d: usize, radius: usize },
    /// Comb with base `[-base_radius, base_radius]^d` (or a periodic torus of side
    /// `2 base_radius` when `periodic_base`) and teeth `[-tooth_length, tooth_length]`.
    CombPatch {
        d: usize,
        base_radius: usize,
        tooth_length: usize,
        periodic_base: bool,
    },
    Custom,
}

/// Finite graph in compressed adjacency form with a distance-to-boundary map.
#[derive(Clone, Debug)]
pub struct GraphPatch {
    pub kind: PatchKind,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    /// Graph distance to the nearest truncated vertex (`u32::MAX` if none).
    depth: Vec<u32>,
    pub boundary_margin: usize,
    names: Vec<String>,
}

fn box_index(s: &[i64], lo: &[i64], side: &[i64]) -> Option<usize> {
    let mut idx = 0usize;
    for k in (0..s.len()).rev() {
        let off = s[k] - lo[k];
        if off < 0 || off >= side[k] {
            return None;
        }
        idx = idx * side[k] as usize + off as usize;
    }
    Some(idx)
}

fn box_site(mut idx: usize, lo: &[i64], side: &[i64]) -> Site {
    let mut s = vec![0; lo.len()];
    for k in 0..lo.len() {
        let m = side[k] as usize;
        s[k] = lo[k] + (idx % m) as i64;
        idx /= m;
    }
    s
}

impl GraphPatch {
    fn from_lists(kind: PatchKind, lists: Vec<Vec<u32>>, truncated: Vec<bool>, margin: usize, names: Vec<String>) -> Self {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for l in &lists {
            neighbors.extend_from_slice(l);
            offsets.push(neighbors.len());
        }
        let mut depth = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for (v, &t) in truncated.iter().enumerate() {
            if t {
                depth[v] = 0;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &neighbors[offsets[v]..offsets[v + 1]] {
                let w = w as usize;
                if depth[w] == u32::MAX {
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        GraphPatch {
            kind,
            offsets,
            neighbors,
            depth,
            boundary_margin: margin,
            names,
        }
    }

    /// Open box of ℤ^d.
    pub fn zd(d: usize, radius: usize, margin: usize) -> Self {
        let r = radius as i64;
        let lo = vec![-r; d];
        let side = vec![2 * r + 1; d];
        let n = (2 * radius + 1).pow(d as u32);
        let lat = Lattice::Zd(d);
        let (lists, trunc): (Vec<_>, Vec<_>) = (0..n)
            .into_par_iter()
            .map(|v| {
                let s = box_site(v, &lo, &side);
                let all = lat.neighbors(&s);
                let inside: Vec<u32> = all
                    .iter()
                    .filter_map(|t| box_index(t, &lo, &side).map(|i| i as u32))
                    .collect();
                let t = inside.len() < all.len();
                (inside, t)
            })
            .unzip();
        GraphPatch::from_lists(PatchKind::ZdPatch { d, radius }, lists, trunc, margin, Vec::new())
    }

    /// Comb patch; with `periodic_base` the base is a torus of side `2 base_radius`.
    pub fn comb(d: usize, base_radius: usize, tooth_length: usize, periodic_base: bool, margin: usize) -> Self {
        let b = base_radius as i64;
        let t = tooth_length as i64;
        let side_base = if periodic_base { 2 * b } else { 2 * b + 1 };
        let mut lo = vec![-b; d];
        lo.push(-t);
        let mut side = vec![side_base; d];
        side.push(2 * t + 1);
        let n: usize = side.iter().map(|&s| s as usize).product();
        let lat = Lattice::Comb(d);
        let wrap = |s: &mut Site| {
            if periodic_base {
                for k in 0..d {
                    s[k] = (s[k] + b).rem_euclid(2 * b) - b;
                }
            }
        };
        let (lists, trunc): (Vec<_>, Vec<_>) = (0..n)
            .into_par_iter()
            .map(|v| {
                let s = box_site(v, &lo, &side);
                let all = lat.neighbors(&s);
                let inside: Vec<u32> = all
                    .into_iter()
                    .map(|mut y| {
                        wrap(&mut y);
                        y
                    })
                    .filter_map(|y| box_index(&y, &lo, &side).map(|i| i as u32))
                    .collect();
                let full = if s[d] == 0 { 2 * d + 2 } else { 2 };
                let t = inside.len() < full;
                (inside, t)
            })
            .unzip();
        GraphPatch::from_lists(
            PatchKind::CombPatch {
                d,
                base_radius,
                tooth_length,
                periodic_base,
            },
            lists,
            trunc,
            margin,
            Vec::new(),
        )
    }

    /// Graph from an undirected edge list; every vertex counts as interior.
    pub fn custom(edges: &[(String, String)]) -> Result<Self> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut names = Vec::new();
        let mut id = |s: &str, names: &mut Vec<String>| -> usize {
            if let Some(&i) = ids.get(s) {
                i
            } else {
                ids.insert(s.to_string(), names.len());
                names.push(s.to_string());
                names.len() - 1
            }
        };
        let mut pairs = Vec::new();
        for (u, v) in edges {
            let a = id(u, &mut names);
            let b = id(v, &mut names);
            if a == b {
                return Err(Error::Invalid(format!("loop at vertex {u}")));
            }
            pairs.push((a, b));
        }
        let mut lists = vec![Vec::new(); names.len()];
        for &(a, b) in &pairs {
            if lists[a].contains(&(b as u32)) {
                return Err(Error::Invalid(format!("multiple edge {} {}", names[a], names[b])));
            }
            lists[a].push(b as u32);
            lists[b].push(a as u32);
        }
        let n = names.len();
        let patch = GraphPatch::from_lists(PatchKind::Custom, lists, vec![false; n], 0, names);
        if n > 0 && !patch.is_connected() {
            return Err(Error::Invalid("graph is not connected".into()));
        }
        Ok(patch)
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn depth(&self, v: usize) -> u32 {
        self.depth[v]
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.depth[v] as usize >= self.boundary_margin
    }

    pub fn name(&self, v: usize) -> String {
        match self.kind {
            PatchKind::Custom => self.names[v].clone(),
            _ => format!("{:?}", self.site(v)),
        }
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn layout(&self) -> (Vec<i64>, Vec<i64>, Option<(usize, i64)>) {
        match self.kind {
            PatchKind::ZdPatch { d, radius } => {
                let r = radius as i64;
                (vec![-r; d], vec![2 * r + 1; d], None)
            }
            PatchKind::CombPatch {
                d,
                base_radius,
                tooth_length,
                periodic_base,
            } => {
                let b = base_radius as i64;
                let t = tooth_length as i64;
                let sb = if periodic_base { 2 * b } else { 2 * b + 1 };
                let mut lo = vec![-b; d];
                lo.push(-t);
                let mut side = vec![sb; d];
                side.push(2 * t + 1);
                (lo, side, periodic_base.then_some((d, b)))
            }
            PatchKind::Custom => (Vec::new(), Vec::new(), None),
        }
    }

    /// Coordinates of vertex `v` (empty for custom graphs).
    pub fn site(&self, v: usize) -> Site {
        let (lo, side, _) = self.layout();
        if lo.is_empty() {
            return Vec::new();
        }
        box_site(v, &lo, &side)
    }

    /// Vertex with coordinates `s`, wrapping periodic base coordinates.
    pub fn index(&self, s: &[i64]) -> Option<usize> {
        let (lo, side, periodic) = self.layout();
        if lo.is_empty() || s.len() != lo.len() {
            return None;
        }
        let mut t = s.to_vec();
        if let Some((d, b)) = periodic {
            for k in 0..d {
                t[k] = (t[k] + b).rem_euclid(2 * b) - b;
            }
        }
        box_index(&t, &lo, &side)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// `y = A x` for real vectors.
    pub fn apply_adjacency(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(4096).for_each(|(v, out)| {
            *out = self.neighbors(v).iter().map(|&w| x[w as usize]).sum();
        });
    }

    /// `A ξ` for a finitely supported vector.
    pub fn adjacency_sparse(&self, xi: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&y, &c) in xi {
            for &x in self.neighbors(y) {
                *out.entry(x as usize).or_default() += c;
            }
        }
        out.retain(|_, c| c.norm() != 0.0);
        out
    }

    /// Maps `(site, coefficient)` pairs onto patch vertices.
    pub fn embed(&self, coeffs: &[(Site, Complex64)]) -> Result<SparseVec> {
        let mut out = SparseVec::new();
        for (s, c) in coeffs {
            let v = self
                .index(s)
                .ok_or_else(|| Error::Invalid(format!("site {s:?} lies outside the patch")))?;
            *out.entry(v).or_default() += *c;
        }
        Ok(out)
    }

    pub fn check_support_interior(&self, xi: &SparseVec) -> Result<()> {
        for &v in xi.keys() {
            if !self.is_interior(v) {
                return Err(Error::Invalid(format!(
                    "support touches boundary margin at vertex {} (depth {}, margin {})",
                    self.name(v),
                    self.depth[v],
                    self.boundary_margin
                )));
            }
        }
        Ok(())
    }
}

/// Function Φ on the vertices of a patch with its claimed edge-increment bound.
#[derive(Clone, Debug)]
pub struct AdaptedFunction {
    pub phi: Vec<f64>,
    pub lipschitz_c: f64,
}

impl AdaptedFunction {
    pub fn from_fn(patch: &GraphPatch, lipschitz_c: f64, f: impl Fn(&[i64]) -> f64 + Sync) -> Self {
        let phi = (0..patch.len()).into_par_iter().map(|v| f(&patch.site(v))).collect();
        AdaptedFunction { phi, lipschitz_c }
    }

    /// Φ = sum of all coordinates (on combs: base coordinates plus tooth coordinate).
    pub fn coordinate_sum(patch: &GraphPatch) -> Self {
        Self::from_fn(patch, 1.0, Lattice::coordinate_sum)
    }
}

/// `(K ξ)(x) = i Σ_{y ∈ N(x)} [Φ(y) - Φ(x)] ξ(y)`.
pub fn k_apply(patch: &GraphPatch, phi: &AdaptedFunction, xi: &SparseVec) -> Result<SparseVec> {
    patch.check_support_interior(xi)?;
    let mut out = SparseVec::new();
    for (&y, &c) in xi {
        for &x in patch.neighbors(y) {
            let x = x as usize;
            let w = phi.phi[y] - phi.phi[x];
            if w != 0.0 {
                *out.entry(x).or_default() += I * w * c;
            }
        }
    }
    out.retain(|_, c| c.norm() != 0.0);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct PairViolation {
    /// Which condition of the adapted-function definition fails (1, 2 or 3).
    pub condition: u8,
    pub x: String,
    pub y: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdaptedVerdict {
    pub pass: bool,
    pub max_increment: f64,
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// First violations in vertex order (capped).
    pub violations: Vec<PairViolation>,
}

const VIOLATION_CAP: usize = 64;

/// Checks the three adapted-function conditions on all interior vertex pairs.
pub fn check_adapted(patch: &GraphPatch, phi: &AdaptedFunction) -> AdaptedVerdict {
    let tol = 1e-9;
    // Vertices whose two-step neighbourhood lies inside the patch.
    let core: Vec<usize> = (0..patch.len())
        .filter(|&v| patch.is_interior(v) && patch.depth(v) >= 2)
        .collect();
    let results: Vec<(f64, usize, Vec<(usize, usize, u8, f64)>)> = core
        .par_iter()
        .map(|&x| {
            let mut bad = Vec::new();
            let mut max_inc: f64 = 0.0;
            for &z in patch.neighbors(x) {
                let inc = (phi.phi[z as usize] - phi.phi[x]).abs();
                max_inc = max_inc.max(inc);
                if inc > phi.lipschitz_c + tol {
                    bad.push((x, z as usize, 1, inc));
                }
            }
            let mut sums: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
            for &z in patch.neighbors(x) {
                let z = z as usize;
                for &y in patch.neighbors(z) {
                    let y = y as usize;
                    if y < x {
                        continue;
                    }
                    let (px, py, pz) = (phi.phi[x], phi.phi[y], phi.phi[z]);
                    let e = sums.entry(y).or_default();
                    e.0 += 2.0 * pz - px - py;
                    e.1 += (pz - px) * (pz - py) * (2.0 * pz - px - py);
                }
            }
            let pairs = sums.len();
            for (y, (s2, s3)) in sums {
                if s2.abs() > tol {
                    bad.push((x, y, 2, s2));
                }
                if s3.abs() > tol {
                    bad.push((x, y, 3, s3));
                }
            }
            (max_inc, pairs, bad)
        })
        .collect();
    let mut max_increment: f64 = 0.0;
    let mut pairs_checked = 0;
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for (m, p, bad) in results {
        max_increment = max_increment.max(m);
        pairs_checked += p;
        violation_count += bad.len();
        for (x, y, c, val) in bad {
            if violations.len() < VIOLATION_CAP {
                violations.push(PairViolation {
                    condition: c,
                    x: patch.name(x),
                    y: patch.name(y),
                    value: val,
                });
            }
        }
    }
    AdaptedVerdict {
        pass: violation_count == 0,
        max_increment,
        pairs_checked,
        violation_count,
        violations,
    }
}

/// Edge orientation: `less[v]` lists the neighbours `w` with `v < w`.
#[derive(Clone, Debug)]
pub struct Orientation {
    less: Vec<Vec<u32>>,
}

impl Orientation {
    /// Orients every edge `(u, v)` as `u < v`.
    pub fn from_pairs(patch: &GraphPatch, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut less = vec![Vec::new(); patch.len()];
        for &(u, v) in pairs {
            if !patch.neighbors(u).contains(&(v as u32)) {
                return Err(Error::Invalid(format!("{} {} is not an edge", patch.name(u), patch.name(v))));
            }
            less[u].push(v as u32);
        }
        let o = Orientation { less };
        for v in 0..patch.len() {
            for &w in patch.neighbors(v) {
                let fwd = o.lt(v, w as usize);
                let bwd = o.lt(w as usize, v);
                if fwd == bwd {
                    return Err(Error::Invalid(format!(
                        "edge {} {} must be oriented exactly once",
                        patch.name(v),
                        patch.name(w as usize)
                    )));
                }
            }
        }
        Ok(o)
    }

    /// `x < y` iff `Φ(y) = Φ(x) + 1` for the coordinate sum Φ.
    pub fn coordinate(patch: &GraphPatch) -> Self {
        let less = (0..patch.len())
            .map(|v| {
                let p = Lattice::coordinate_sum(&patch.site(v));
                patch
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&w| Lattice::coordinate_sum(&patch.site(w as usize)) > p)
                    .collect()
            })
            .collect();
        Orientation { less }
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        self.less[x].contains(&(y as u32))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibleVerdict {
    pub univoque: bool,
    pub uniform: bool,
    /// Closed path with nonzero index when univoque fails.
    pub witness_cycle: Option<Vec<String>>,
    pub witness_index: i64,
    /// Closed walks enumerated exhaustively up to the length bound.
    pub closed_walks_checked: usize,
    pub uniformity_failures: Vec<(String, String)>,
    /// Position function found by breadth-first search, if univoque.
    pub position: Option<Vec<i64>>,
}

impl AdmissibleVerdict {
    pub fn pass(&self) -> bool {
        self.univoque && self.uniform
    }
}

fn path_index(o: &Orientation, path: &[usize]) -> i64 {
    path.windows(2)
        .map(|w| if o.lt(w[0], w[1]) { 1 } else { -1 })
        .sum()
}

/// Univoque and uniform checks for a directed graph.
///
/// The position function is built by breadth-first search; an inconsistent edge
/// yields an explicit closed path with nonzero index. Closed walks up to
/// `max_len` are additionally enumerated from every vertex while the walk budget lasts.
pub fn check_admissible(patch: &GraphPatch, o: &Orientation, max_len: usize) -> AdmissibleVerdict {
    let n = patch.len();
    let mut pos: Vec<Option<i64>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut witness = None;
    if n > 0 {
        pos[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        'bfs: while let Some(v) = queue.pop_front() {
            for &w in patch.neighbors(v) {
                let w = w as usize;
                let want = pos[v].unwrap() + if o.lt(v, w) { 1 } else { -1 };
                match pos[w] {
                    None => {
                        pos[w] = Some(want);
                        parent[w] = v;
                        queue.push_back(w);
                    }
                    Some(p) if p != want => {
                        let up = |mut x: usize| {
                            let mut p = vec![x];
                            while parent[x] != usize::MAX {
                                x = parent[x];
                                p.push(x);
                            }
                            p
                        };
                        // root -> v, v -> w, w -> root
                        let mut cycle: Vec<usize> = up(v).into_iter().rev().collect();
                        cycle.extend(up(w));
                        witness = Some(cycle);
                        break 'bfs;
                    }
                    _ => {}
                }
            }
        }
    }
    let mut walks = 0usize;
    let mut steps = 0usize;
    let mut walk_fail = None;
    let budget = 2_000_000usize;
    'outer: for start in 0..n {
        if !patch.is_interior(start) {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        let mut path = vec![start];
        let mut idx = 0i64;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if steps > budget {
                break 'outer;
            }
            let nb = patch.neighbors(v);
            if *next >= nb.len() || path.len() > max_len {
                stack.pop();
                if path.len() >= 2 {
                    let last = path.pop().unwrap();
                    let prev = *path.last().unwrap();
                    idx -= if o.lt(prev, last) { 1 } else { -1 };
                } else {
                    path.pop();
                }
                continue;
            }
            let w = nb[*next] as usize;
            *next += 1;
            steps += 1;
            idx += if o.lt(v, w) { 1 } else { -1 };
            path.push(w);
            if w == start {
                walks += 1;
                if idx != 0 && walk_fail.is_none() {
                    walk_fail = Some(path.clone());
                }
            }
            stack.push((w, 0));
        }
    }
    let witness = witness.or(walk_fail);
    let univoque = witness.is_none();
    let uniform_fail: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .filter(|&x| patch.is_interior(x) && (matches!(patch.kind, PatchKind::Custom) || patch.depth(x) >= 2))
        .flat_map_iter(|x| {
            let mut ys: Vec<usize> = vec![x];
            for &z in patch.neighbors(x) {
                ys.extend(patch.neighbors(z as usize).iter().map(|&y| y as usize));
            }
            ys.sort_unstable();
            ys.dedup();
            ys.into_iter()
                .filter(move |&y| y >= x)
                .filter_map(move |y| {
                    let (mut minus, mut plus) = (0, 0);
                    for &z in patch.neighbors(x) {
                        let z = z as usize;
                        if !patch.neighbors(y).contains(&(z as u32)) {
                            continue;
                        }
                        if o.lt(z, x) && o.lt(z, y) {
                            minus += 1;
                        }
                        if o.lt(x, z) && o.lt(y, z) {
                            plus += 1;
                        }
                    }
                    (minus != plus).then_some((x, y))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let witness_index = witness.as_ref().map(|c| path_index(o, c)).unwrap_or(0);
    AdmissibleVerdict {
        univoque,
        uniform: uniform_fail.is_empty(),
        witness_cycle: witness.map(|c| c.into_iter().map(|v| patch.name(v)).collect()),
        witness_index,
        closed_walks_checked: walks,
        uniformity_failures: uniform_fail
            .into_iter()
            .take(VIOLATION_CAP)
            .map(|(x, y)| (patch.name(x), patch.name(y)))
            .collect(),
        position: if univoque { pos.into_iter().collect() } else { None },
    }
}

/// `‖(w - A_ℤ)^{-1} δ_0‖²` for `w > 2`, in closed form `w (w² - 4)^{-3/2}`.
pub fn chain_resolvent_norm_sq(w: f64) -> f64 {
    w / (w * w - 4.0).powf(1.5)
}

/// Positive generalized eigenvector of the adjacency operator at `‖A‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PfWeight {
    ConstantOne,
    CombClosedForm { d: usize, theta: f64, norm_sq: f64 },
}

impl PfWeight {
    pub fn for_lattice(lat: Lattice) -> Self {
        match lat {
            Lattice::Zd(_) => PfWeight::ConstantOne,
            Lattice::Comb(d) => PfWeight::comb(d),
        }
    }

    /// `v(J, x) = e^{-|x|θ} / (2 ‖(2 cosh θ - A_ℤ)^{-1} δ_0‖ sinh θ)`, `cosh θ = √(d²+1)`.
    pub fn comb(d: usize) -> Self {
        let c = ((d * d + 1) as f64).sqrt();
        let theta = c.acosh();
        PfWeight::CombClosedForm {
            d,
            theta,
            norm_sq: chain_resolvent_norm_sq(2.0 * c),
        }
    }

    pub fn eval(&self, site: &[i64]) -> f64 {
        match *self {
            PfWeight::ConstantOne => 1.0,
            PfWeight::CombClosedForm { d, theta, norm_sq } => {
                let x = site[d].abs() as f64;
                (-x * theta).exp() / (2.0 * norm_sq.sqrt() * comb_sinh_theta(d))
            }
        }
    }

    pub fn spectral_radius(&self, lat: Lattice) -> f64 {
        lat.spectral_radius()
    }
}

/// `sinh θ_d` for `cosh θ_d = √(d²+1)`; equal to `d` since `cosh² - 1 = d²`.
pub fn comb_sinh_theta(d: usize) -> f64 {
    let c2 = (d * d + 1) as u64;
    ((c2 - 1) as f64).sqrt()
}

/// `⟨v, ψ⟩ = Σ_x v(x) ψ(x)`.
pub fn pf_pairing(v: &PfWeight, psi: &[(Site, Complex64)]) -> Complex64 {
    psi.iter().map(|(s, c)| *c * v.eval(s)).sum()
}

/// `max |(A v)(x) - ‖A‖ v(x)| / v(x)` over interior vertices of the patch.
pub fn pf_residual(patch: &GraphPatch, v: &PfWeight, lat: Lattice) -> f64 {
    let spr = lat.spectral_radius();
    (0..patch.len())
        .into_par_iter()
        .filter(|&x| patch.depth(x) >= 1)
        .map(|x| {
            let own = v.eval(&patch.site(x));
            let s: f64 = patch.neighbors(x).iter().map(|&y| v.eval(&patch.site(y as usize))).sum();
            ((s - spr * own) / own).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Parses an edge list with one `u v` pair per line; `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(u), Some(v), None) => out.push((u.to_string(), v.to_string())),
            _ => return Err(Error::Invalid(format!("edge list line {}: expected 'u v'", n + 1))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zd_k_delta_matches_closed_form() {
        let k = Lattice::Zd(3).k_delta(&[1, 2, 3]);
        assert_eq!(k.len(), 6);
        for (s, c) in k {
            let diff: i64 = s.iter().zip([1, 2, 3]).map(|(a, b)| a - b).sum();
            // i(δ_{x-e} - δ_{x+e})
            assert_eq!(c, I * (-diff as f64));
        }
    }

    #[test]
    fn comb_k_delta_on_tooth() {
        let k = Lattice::Comb(3).k_delta(&[0, 0, 0, 5]);
        assert_eq!(k, vec![(vec![0, 0, 0, 4], I), (vec![0, 0, 0, 6], -I)]);
    }

    #[test]
    fn patch_k_apply_agrees_with_lattice_formula() {
        let p = GraphPatch::zd(3, 4, 2);
        let phi = AdaptedFunction::coordinate_sum(&p);
        let xi: SparseVec = [(p.index(&[0, 1, 0]).unwrap(), Complex64::new(1.0, 0.0))].into();
        let k = k_apply(&p, &phi, &xi).unwrap();
        let want = p.embed(&Lattice::Zd(3).k_delta(&[0, 1, 0])).unwrap();
        assert_eq!(k, want);
    }

    #[test]
    fn k_apply_rejects_boundary_support() {
        let p = GraphPatch::zd(3, 3, 2);
        let phi = AdaptedFunction::coordinate_sum(&p);
        let xi: SparseVec = [(p.index(&[3, 0, 0]).unwrap(), Complex64::new(1.0, 0.0))].into();
        assert!(k_apply(&p, &phi, &xi).is_err());
    }

    #[test]
    fn constant_phi_gives_zero() {
        let p = GraphPatch::zd(3, 3, 1);
        let phi = AdaptedFunction::from_fn(&p, 0.0, |_| 2.5);
        let xi: SparseVec = [(p.index(&[0, 0, 0]).unwrap(), Complex64::new(1.0, 2.0))].into();
        assert!(k_apply(&p, &phi, &xi).unwrap().is_empty());
    }

    #[test]
    fn periodic_comb_wraps_base() {
        let p = GraphPatch::comb(3, 2, 3, true, 1);
        let a = p.index(&[-2, 0, 0, 0]).unwrap();
        let b = p.index(&[2, 0, 0, 0]).unwrap();
        assert_eq!(a, b);
        let base = p.index(&[1, 1, 1, 0]).unwrap();
        assert_eq!(p.degree(base), 8);
        let end = p.index(&[0, 0, 0, 3]).unwrap();
        assert_eq!(p.depth(end), 0);
    }

    #[test]
    fn custom_graph_rejects_loops_and_duplicates() {
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert!(GraphPatch::custom(&[e("a", "a")]).is_err());
        assert!(GraphPatch::custom(&[e("a", "b"), e("b", "a")]).is_err());
        assert!(GraphPatch::custom(&[e("a", "b"), e("c", "d")]).is_err());
        let g = GraphPatch::custom(&[e("a", "b"), e("b", "c")]).unwrap();
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn edge_list_parser() {
        let e = parse_edge_list("# ring\na b\nb c # tail\n\nc a\n").unwrap();
        assert_eq!(e.len(), 3);
        assert!(parse_edge_list("a b c").is_err());
    }

    #[test]
    fn chain_norm_matches_value_at_d3() {
        let w = 2.0 * 10f64.sqrt();
        assert!((chain_resolvent_norm_sq(w) - 10f64.sqrt() / 108.0).abs() < 1e-15);
    }
}
