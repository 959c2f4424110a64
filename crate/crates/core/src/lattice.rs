//! Areal adjacency: lattices, contiguity matrices of any neighbor order and
//! the degree matrix used by the CAR precision forms.
//!
//! Higher-order contiguity is defined by exact shortest-path distance in the
//! first-order graph: `W_j[i, k] = 1` iff units `i` and `k` are exactly `j`
//! steps apart. The shells are therefore disjoint (`W_j ∘ W_k = 0` for
//! `j != k`), so each linking coefficient `η_j` weights its own ring of
//! neighbors rather than everything within distance `j`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::Read;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A set of `n` areal units and the unordered pairs that share a boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    ids: Vec<String>,
}

impl Lattice {
    /// Builds a lattice with ids `"0"`, `"1"`, ...
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::with_ids(ids, edges)
    }

    pub fn with_ids(
        ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a lattice needs at least two units, got {n}"
            )));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {n} units"
                )));
            }
            if a == b {
                return Err(Error::SelfLoop(ids[a].clone()));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut degree = vec![0usize; n];
        for &(a, b) in &set {
            degree[a] += 1;
            degree[b] += 1;
        }
        if let Some(i) = degree.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedUnit(ids[i].clone()));
        }
        Ok(Self { n, edges: set, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }
}

/// Symmetric 0/1 matrix marking pairs at a given neighbor order.
#[derive(Debug, Clone, PartialEq)]
pub struct ContiguityMatrix {
    order: usize,
    entries: DMatrix<f64>,
}

impl ContiguityMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_set(&self, i: usize, k: usize) -> bool {
        self.entries[(i, k)] != 0.0
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&k| self.is_set(i, k))
    }
}

/// Diagonal of first-order neighbor counts `w_{i+}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeMatrix {
    diagonal: Vec<usize>,
}

impl DegreeMatrix {
    pub fn diagonal(&self) -> &[usize] {
        &self.diagonal
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.diagonal.len(), self.diagonal.len(), |i, j| {
            if i == j {
                self.diagonal[i] as f64
            } else {
                0.0
            }
        })
    }
}

pub fn build_contiguity(lattice: &Lattice) -> ContiguityMatrix {
    let mut entries = DMatrix::zeros(lattice.n, lattice.n);
    for (a, b) in lattice.edges() {
        entries[(a, b)] = 1.0;
        entries[(b, a)] = 1.0;
    }
    ContiguityMatrix { order: 1, entries }
}

/// Contiguity of order `order`: pairs at shortest-path distance exactly `order`.
///
/// Orders at or beyond the graph diameter give the zero matrix.
pub fn higher_order_contiguity(w1: &ContiguityMatrix, order: usize) -> Result<ContiguityMatrix> {
    if order < 1 {
        return Err(Error::InvalidArgument(
            "neighbor order must be at least 1".into(),
        ));
    }
    if w1.order != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a first-order contiguity matrix, got order {}",
            w1.order
        )));
    }
    let n = w1.n();
    let adjacency: Vec<Vec<usize>> = (0..n).map(|i| w1.neighbors(i).collect()).collect();
    let mut entries = DMatrix::zeros(n, n);
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        dist.fill(usize::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            if dist[u] == order {
                entries[(source, u)] = 1.0;
                continue;
            }
            for &v in &adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(ContiguityMatrix { order, entries })
}

pub fn degree_matrix(w1: &ContiguityMatrix) -> Result<DegreeMatrix> {
    if w1.order != 1 {
        return Err(Error::InvalidArgument(format!(
            "degree matrix needs first-order contiguity, got order {}",
            w1.order
        )));
    }
    let diagonal: Vec<usize> = (0..w1.n()).map(|i| w1.neighbors(i).count()).collect();
    if let Some(i) = diagonal.iter().position(|&d| d == 0) {
        return Err(Error::IsolatedUnit(i.to_string()));
    }
    Ok(DegreeMatrix { diagonal })
}

/// Rook-adjacency grid, units numbered row-major.
pub fn grid_lattice(rows: usize, cols: usize) -> Result<Lattice> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if rows * cols == 1 {
        return Err(Error::IsolatedUnit("0".into()));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    Lattice::new(rows * cols, edges)
}

/// Reads an `ID1,ID2` edge list. Lines starting with `#` are comments.
pub fn load_adjacency(path: impl AsRef<Path>, has_header: bool) -> Result<Lattice> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_adjacency(file, has_header, path)
}

pub fn parse_adjacency<R: Read>(reader: R, has_header: bool, source: &Path) -> Result<Lattice> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line,
                msg: format!("expected two fields, found {}", record.len()),
            });
        }
        let mut lookup = |id: &str| -> usize {
            *index.entry(id.to_string()).or_insert_with(|| {
                ids.push(id.to_string());
                ids.len() - 1
            })
        };
        let a = lookup(&record[0]);
        let b = lookup(&record[1]);
        if a == b {
            return Err(Error::SelfLoop(record[0].to_string()));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            warn!(
                "{}:{line}: duplicate edge {},{} ignored",
                source.display(),
                &record[0],
                &record[1]
            );
            continue;
        }
        edges.push((a, b));
    }
    Lattice::with_ids(ids, edges)
}

/// Everything the GMCAR layer needs from a lattice, computed once.
///
/// Holds `W_1 ..= W_p`, the degree matrix, and the eigenvalues of
/// `D_w^{-1/2} W_1 D_w^{-1/2}`, which give
/// `log det(D_w - ρ W_1) = log det D_w + Σ log(1 - ρ λ_i)` in O(n).
#[derive(Debug, Clone)]
pub struct SpatialStructure {
    lattice: Lattice,
    contiguity: Vec<ContiguityMatrix>,
    degree: DegreeMatrix,
    scaled_spectrum: Vec<f64>,
    /// Columns are eigenvectors of the scaled adjacency, premultiplied by `D_w^{-1/2}`.
    scaled_basis: DMatrix<f64>,
    log_det_degree: f64,
}

impl SpatialStructure {
    /// `max_order` is the highest neighbor order that linking matrices may use.
    pub fn new(lattice: Lattice, max_order: usize) -> Result<Self> {
        if max_order < 1 {
            return Err(Error::InvalidArgument(
                "max neighbor order must be at least 1".into(),
            ));
        }
        let w1 = build_contiguity(&lattice);
        let degree = degree_matrix(&w1)?;
        let mut contiguity = vec![w1];
        for j in 2..=max_order {
            contiguity.push(higher_order_contiguity(&contiguity[0], j)?);
        }
        let n = lattice.n();
        let inv_sqrt: Vec<f64> = degree
            .diagonal()
            .iter()
            .map(|&d| 1.0 / (d as f64).sqrt())
            .collect();
        let scaled = DMatrix::from_fn(n, n, |i, k| {
            contiguity[0].entries[(i, k)] * inv_sqrt[i] * inv_sqrt[k]
        });
        let eigen = SymmetricEigen::new(scaled);
        let scaled_spectrum = eigen.eigenvalues.as_slice().to_vec();
        let mut scaled_basis = eigen.eigenvectors;
        for (i, mut row) in scaled_basis.row_iter_mut().enumerate() {
            row *= inv_sqrt[i];
        }
        let log_det_degree = degree.diagonal().iter().map(|&d| (d as f64).ln()).sum();
        Ok(Self {
            lattice,
            contiguity,
            degree,
            scaled_spectrum,
            scaled_basis,
            log_det_degree,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn max_order(&self) -> usize {
        self.contiguity.len()
    }

    pub fn w1(&self) -> &ContiguityMatrix {
        &self.contiguity[0]
    }

    /// `W_1 ..= W_p`.
    pub fn contiguity(&self) -> &[ContiguityMatrix] {
        &self.contiguity
    }

    pub fn degree(&self) -> &DegreeMatrix {
        &self.degree
    }

    /// `D_w - ρ W_1`.
    pub fn car_kernel(&self, rho: f64) -> DMatrix<f64> {
        let w = self.w1().matrix();
        let d = self.degree.diagonal();
        DMatrix::from_fn(self.n(), self.n(), |i, k| {
            if i == k {
                d[i] as f64
            } else {
                -rho * w[(i, k)]
            }
        })
    }

    /// `log det(D_w - ρ W_1)`; `None` when the kernel is not positive definite.
    pub fn log_det_car_kernel(&self, rho: f64) -> Option<f64> {
        if !(rho.abs() < 1.0) {
            return None;
        }
        let mut acc = self.log_det_degree;
        for &lambda in &self.scaled_spectrum {
            let f = 1.0 - rho * lambda;
            if f <= 0.0 {
                return None;
            }
            acc += f.ln();
        }
        Some(acc)
    }

    /// Projects `u` onto the basis used by [`Self::car_inverse_form`].
    pub fn spectral_coordinates(&self, u: &DVector<f64>) -> DVector<f64> {
        self.scaled_basis.tr_mul(u)
    }

    /// `uᵀ [τ(D_w − ρW_1)]⁻¹ v` from spectral coordinates of `u` and `v`.
    pub fn car_inverse_form(&self, rho: f64, tau: f64, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for ((lambda, a), b) in self.scaled_spectrum.iter().zip(u.iter()).zip(v.iter()) {
            acc += a * b / (1.0 - rho * lambda);
        }
        acc / tau
    }
}
