//! Agent dynamics, the communication graph and the lifted multi-agent system.
//!
//! Every agent runs the same `x_i(k+1) = A x_i(k) + B u_i(k) + w_i(k)`; the
//! lifted system stacks all agents into `x(k+1) = Ā x(k) + B̄ u(k) + w(k)` with
//! `Ā = I_N ⊗ A` and `B̄ = I_N ⊗ B`. Agent `i` measures the whole lifted state
//! through its own `C_i` (shape `p_i × nN`).
//!
//! Agent indices are zero-based throughout the crate.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};

/// Relative tolerance deciding whether a product `C v` is nonzero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Relative tolerance for eigenvalue clustering and Jordan-chain kernels.
const EIGEN_CLUSTER_TOL: f64 = 1e-5;
const EIGEN_RANK_TOL: f64 = 1e-7;

/// Common per-agent dynamics `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if !linalg::all_finite(&a) || !linalg::all_finite(&b) {
            return Err(Error::InvalidInput("A and B must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Undirected, connected communication graph with its Laplacian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    neighbors: Vec<Vec<usize>>,
    laplacian: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl CommGraph {
    /// Builds a graph from a symmetric 0/1 adjacency matrix with zero diagonal.
    pub fn from_adjacency(adjacency: &DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency must be square and nonempty, got {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let v = adjacency[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "adjacency entry ({i},{j}) = {v} is not 0/1"
                    )));
                }
                if v != adjacency[(j, i)] {
                    return Err(Error::InvalidInput("adjacency must be symmetric".into()));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidInput("adjacency diagonal must be zero".into()));
                }
                if v == 1.0 {
                    neighbors[i].push(j);
                }
            }
        }
        Self::from_neighbor_lists_unchecked(neighbors)
    }

    /// Builds a graph from an undirected edge list over `n` agents.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidInput(format!("invalid edge ({i},{j})")));
            }
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
        Self::from_adjacency(&adj)
    }

    /// Agents `i` and `j` are adjacent iff `0 < |i - j| <= reach`.
    pub fn banded(n: usize, reach: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n.min(i + reach + 1) {
                edges.push((i, j));
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::banded(n, 1)
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::banded(n, n)
    }

    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        Self::from_edges(n, &edges)
    }

    fn from_neighbor_lists_unchecked(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        let mut laplacian = DMatrix::zeros(n, n);
        for (i, nb) in neighbors.iter().enumerate() {
            laplacian[(i, i)] = nb.len() as f64;
            for &j in nb {
                laplacian[(i, j)] = -1.0;
            }
        }
        let eigenvalues = linalg::symmetric_eigenvalues(&laplacian);
        let graph = Self {
            neighbors,
            laplacian,
            eigenvalues,
        };
        if n > 1 {
            let scale = graph.laplacian.norm().max(1.0);
            let lambda2 = graph.eigenvalues[1];
            if lambda2 <= 1e-9 * scale {
                return Err(Error::DisconnectedGraph { lambda2 });
            }
        }
        Ok(graph)
    }

    pub fn agent_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.agent_count();
        let mut adj = DMatrix::zeros(n, n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                adj[(i, j)] = 1.0;
            }
        }
        adj
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Second-smallest Laplacian eigenvalue; zero for a single agent.
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0).max(0.0)
    }

    /// Longest shortest-path length (BFS from every agent).
    pub fn diameter(&self) -> usize {
        let n = self.agent_count();
        let mut best = 0;
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            best = best.max(dist.into_iter().max().unwrap_or(0));
        }
        best
    }
}

/// Returns `(lambda2, lambda_max)` of the graph Laplacian.
pub fn laplacian_spectrum(graph: &CommGraph) -> Result<(f64, f64)> {
    if graph.agent_count() < 2 {
        return Err(Error::DisconnectedGraph { lambda2: 0.0 });
    }
    Ok((graph.lambda2(), graph.lambda_max()))
}

/// The lifted multi-agent system `(Ā, B̄, C̄)` over a communication graph.
#[derive(Debug, Clone)]
pub struct MultiAgentSystem {
    model: LtiModel,
    graph: CommGraph,
    c: Vec<DMatrix<f64>>,
    a_bar: DMatrix<f64>,
    b_bar: DMatrix<f64>,
    c_bar: DMatrix<f64>,
    row_offsets: Vec<usize>,
}

/// Assembles the lifted system and checks that `(Ā, C̄)` is detectable.
pub fn lift_system(model: LtiModel, graph: CommGraph, c: Vec<DMatrix<f64>>) -> Result<MultiAgentSystem> {
    let n_agents = graph.agent_count();
    let n = model.state_dim();
    let nn = n * n_agents;
    if c.len() != n_agents {
        return Err(Error::DimensionMismatch(format!(
            "{} measurement matrices for {} agents",
            c.len(),
            n_agents
        )));
    }
    let mut row_offsets = Vec::with_capacity(n_agents + 1);
    row_offsets.push(0);
    for (i, ci) in c.iter().enumerate() {
        if ci.ncols() != nn {
            return Err(Error::DimensionMismatch(format!(
                "C_{} has {} columns, expected {}",
                i + 1,
                ci.ncols(),
                nn
            )));
        }
        if !linalg::all_finite(ci) {
            return Err(Error::InvalidInput(format!("C_{} has non-finite entries", i + 1)));
        }
        row_offsets.push(row_offsets[i] + ci.nrows());
    }
    let p = row_offsets[n_agents];
    let mut c_bar = DMatrix::zeros(p, nn);
    for (i, ci) in c.iter().enumerate() {
        c_bar.view_mut((row_offsets[i], 0), (ci.nrows(), nn)).copy_from(ci);
    }
    let eye = DMatrix::<f64>::identity(n_agents, n_agents);
    let a_bar = eye.kronecker(model.a());
    let b_bar = eye.kronecker(model.b());
    let system = MultiAgentSystem {
        model,
        graph,
        c,
        a_bar,
        b_bar,
        c_bar,
        row_offsets,
    };
    if !system.pbh_detectable() {
        return Err(Error::UndetectablePair);
    }
    Ok(system)
}

impl MultiAgentSystem {
    pub fn model(&self) -> &LtiModel {
        &self.model
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn agent_count(&self) -> usize {
        self.graph.agent_count()
    }

    pub fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    /// Dimension `nN` of the lifted state.
    pub fn lifted_dim(&self) -> usize {
        self.state_dim() * self.agent_count()
    }

    /// Total measurement count `p = Σ p_i`.
    pub fn output_dim(&self) -> usize {
        self.row_offsets[self.agent_count()]
    }

    pub fn agent_output_dim(&self, i: usize) -> usize {
        self.c[i].nrows()
    }

    pub fn c(&self, i: usize) -> &DMatrix<f64> {
        &self.c[i]
    }

    pub fn measurement_matrices(&self) -> &[DMatrix<f64>] {
        &self.c
    }

    pub fn a_bar(&self) -> &DMatrix<f64> {
        &self.a_bar
    }

    pub fn b_bar(&self) -> &DMatrix<f64> {
        &self.b_bar
    }

    pub fn c_bar(&self) -> &DMatrix<f64> {
        &self.c_bar
    }

    /// Rows of `C̄` (and of `y`) owned by agent `i`.
    pub fn output_block(&self, i: usize) -> Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    /// Entries of the lifted state that belong to agent `i`.
    pub fn state_block(&self, i: usize) -> Range<usize> {
        let n = self.state_dim();
        i * n..(i + 1) * n
    }

    /// `C̄_Γ`: the measurement blocks of the agents in `set`, stacked in order.
    pub fn stacked_measurements(&self, set: &[usize]) -> DMatrix<f64> {
        let rows: usize = set.iter().map(|&i| self.c[i].nrows()).sum();
        let mut out = DMatrix::zeros(rows, self.lifted_dim());
        let mut r = 0;
        for &i in set {
            let ci = &self.c[i];
            out.view_mut((r, 0), (ci.nrows(), ci.ncols())).copy_from(ci);
            r += ci.nrows();
        }
        out
    }

    /// Classical PBH test over the eigenvalues with `|λ| >= 1`: for each such λ,
    /// no nonzero `x ∈ ker(Ā - λI)` may satisfy `C̄ x = 0`.
    fn pbh_detectable(&self) -> bool {
        let n = self.state_dim();
        let n_agents = self.agent_count();
        let a = linalg::to_complex(self.model.a());
        let scale = self.c_bar.norm().max(f64::MIN_POSITIVE);
        for lambda in distinct_eigenvalues(self.model.a()) {
            if lambda.norm() < 1.0 - 1e-9 {
                continue;
            }
            let shifted = &a - CMatrix::identity(n, n) * lambda;
            let local = linalg::complex_null_space(&shifted, EIGEN_RANK_TOL, 1e-12);
            if local.ncols() == 0 {
                continue;
            }
            let d = local.ncols();
            let mut lifted = CMatrix::zeros(n * n_agents, d * n_agents);
            for i in 0..n_agents {
                lifted.view_mut((i * n, i * d), (n, d)).copy_from(&local);
            }
            let c = linalg::to_complex(&self.c_bar);
            let observed = &c * &lifted;
            let kernel = linalg::complex_null_space(&observed, DEFAULT_ZERO_TOL, DEFAULT_ZERO_TOL * scale);
            if kernel.ncols() > 0 {
                return false;
            }
        }
        true
    }
}

fn distinct_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    cluster_eigenvalues(a).into_iter().map(|(l, _)| l).collect()
}

/// Eigenvalues of `a` grouped by proximity: `(mean, algebraic multiplicity)`,
/// sorted by real part then imaginary part.
fn cluster_eigenvalues(a: &DMatrix<f64>) -> Vec<(Complex<f64>, usize)> {
    let ev = a.complex_eigenvalues();
    let scale = linalg::spectral_norm(a).max(1.0);
    let tol = EIGEN_CLUSTER_TOL * scale;
    let mut clusters: Vec<(Complex<f64>, Vec<Complex<f64>>)> = Vec::new();
    for &l in ev.iter() {
        match clusters.iter_mut().find(|(c, _)| (*c - l).norm() <= tol) {
            Some((center, members)) => {
                members.push(l);
                let sum: Complex<f64> = members.iter().sum();
                *center = sum / members.len() as f64;
            }
            None => clusters.push((l, vec![l])),
        }
    }
    let mut out: Vec<(Complex<f64>, usize)> = clusters
        .into_iter()
        .map(|(c, m)| {
            let c = if c.im.abs() <= tol { Complex::new(c.re, 0.0) } else { c };
            (c, m.len())
        })
        .collect();
    out.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    out
}

/// Which local vectors an [`EigenmodeBasis`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisKind {
    /// Full Jordan-chain basis: `n` vectors per agent.
    #[default]
    Jordan,
    /// True eigenvectors only (bases of `ker(A - λI)`).
    Eigen,
}

/// A lifted mode `e_i ⊗ v`.
#[derive(Debug, Clone)]
pub struct Mode {
    pub agent: usize,
    /// Position of `v` in the local basis of `A`.
    pub local: usize,
    pub eigenvalue: Complex<f64>,
    /// Jordan-chain level: 1 for eigenvectors, 2 for first generalized vectors, ...
    pub chain_level: usize,
    /// Unit-norm local vector `v` (length `n`).
    pub vector: CVector,
}

impl Mode {
    /// `e_i ⊗ v` as a vector of length `nN`.
    pub fn lifted(&self, n_agents: usize) -> CVector {
        let n = self.vector.len();
        let mut out = CVector::zeros(n * n_agents);
        out.rows_mut(self.agent * n, n).copy_from(&self.vector);
        out
    }
}

/// Ordered eigenmodes of `Ā = I_N ⊗ A`, agent-major.
#[derive(Debug, Clone)]
pub struct EigenmodeBasis {
    kind: BasisKind,
    agents: usize,
    state_dim: usize,
    modes: Vec<Mode>,
}

impl EigenmodeBasis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Local (per-agent) basis vectors of `A` with eigenvalue and chain level.
fn local_basis(a: &DMatrix<f64>, kind: BasisKind) -> Result<Vec<(Complex<f64>, usize, CVector)>> {
    let n = a.nrows();
    let ac = linalg::to_complex(a);
    let mut out = Vec::new();
    for (lambda, mult) in cluster_eigenvalues(a) {
        let shifted = &ac - CMatrix::identity(n, n) * lambda;
        let shifted_norm = shifted.norm().max(1.0);
        // Q accumulates an orthonormal basis of ker(A - λI)^k, level by level.
        let mut q = CMatrix::zeros(n, 0);
        for level in 1..=mult {
            let power = linalg::matrix_power_c(&shifted, level);
            let thr = EIGEN_RANK_TOL * libm::pow(shifted_norm, level as f64);
            let (sv, small) = linalg::smallest_right_singular(&power, mult);
            let mut dim = sv.iter().take(mult).filter(|&&s| s <= thr).count();
            if level == mult {
                dim = mult;
            }
            if dim <= q.ncols() {
                if level == mult {
                    return Err(Error::EigenFailure(format!(
                        "generalized eigenspace of {lambda} has dimension below {mult}"
                    )));
                }
                continue;
            }
            let kernel = small.columns(0, dim).into_owned();
            let projected = if q.ncols() == 0 {
                kernel
            } else {
                &kernel - &q * (q.adjoint() * &kernel)
            };
            let fresh = linalg::dominant_range(&projected, dim - q.ncols());
            for j in 0..fresh.ncols() {
                let v = linalg::normalize_phase(&fresh.column(j).into_owned());
                let v = if lambda.im == 0.0 {
                    v.map(|z| Complex::new(z.re, 0.0))
                } else {
                    v
                };
                let norm = linalg::norm_c(&v);
                if kind == BasisKind::Jordan || level == 1 {
                    out.push((lambda, level, v / Complex::new(norm, 0.0)));
                }
            }
            q = CMatrix::from_fn(n, q.ncols() + fresh.ncols(), |r, c| {
                if c < q.ncols() {
                    q[(r, c)]
                } else {
                    fresh[(r, c - q.ncols())]
                }
            });
            if q.ncols() == mult {
                break;
            }
        }
    }
    if kind == BasisKind::Jordan && out.len() != n {
        return Err(Error::EigenFailure(format!(
            "Jordan basis has {} vectors, expected {n}",
            out.len()
        )));
    }
    Ok(out)
}

/// Builds the mode list `e_i ⊗ v_j` of the lifted dynamics.
pub fn eigenmode_basis(model: &LtiModel, n_agents: usize, kind: BasisKind) -> Result<EigenmodeBasis> {
    let local = local_basis(model.a(), kind)?;
    let mut modes = Vec::with_capacity(local.len() * n_agents);
    for agent in 0..n_agents {
        for (j, (lambda, level, v)) in local.iter().enumerate() {
            modes.push(Mode {
                agent,
                local: j,
                eigenvalue: *lambda,
                chain_level: *level,
                vector: v.clone(),
            });
        }
    }
    Ok(EigenmodeBasis {
        kind,
        agents: n_agents,
        state_dim: model.state_dim(),
        modes,
    })
}

/// Lifted product `Ā x` computed agent by agent.
pub fn blockwise_apply(model: &LtiModel, x: &DVector<f64>) -> DVector<f64> {
    let n = model.state_dim();
    let mut out = DVector::zeros(x.len());
    for i in 0..x.len() / n {
        let xi = x.rows(i * n, n);
        out.rows_mut(i * n, n).copy_from(&(model.a() * xi));
    }
    out
}
