//! Interior-point oracles for the anisotropic TV programs, small grids only.
#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
};

use frametv::grid::TorusSignal;
use frametv::noise::Observations;

/// Sparse column-major builder.
struct Columns {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl Columns {
    fn new(rows: usize, ncols: usize) -> Self {
        Self {
            rows,
            cols: vec![Vec::new(); ncols],
        }
    }

    fn push(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.cols[col].push((row, v));
        }
    }

    fn build(mut self) -> CscMatrix<f64> {
        let mut colptr = vec![0];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        for c in self.cols.iter_mut() {
            c.sort_by_key(|e| e.0);
            for (r, v) in c.iter() {
                rowval.push(*r);
                nzval.push(*v);
            }
            colptr.push(rowval.len());
        }
        CscMatrix::new(self.rows, self.cols.len(), colptr, rowval, nzval)
    }
}

/// `(axis stride, next index)` pairs of the periodic forward differences.
fn neighbours(dim: usize, side: usize) -> Vec<(usize, usize)> {
    let len = side.pow(dim as u32);
    let mut out = Vec::with_capacity(len * dim);
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        for i in 0..len {
            let c = (i / stride) % side;
            let next = if c + 1 < side {
                i + stride
            } else {
                i + stride - side * stride
            };
            out.push((i, next));
        }
    }
    out
}

fn solve(
    p: CscMatrix<f64>,
    q: Vec<f64>,
    a: CscMatrix<f64>,
    b: Vec<f64>,
    rows: usize,
) -> (Vec<f64>, f64) {
    let cones: Vec<SupportedConeT<f64>> = vec![NonnegativeConeT(rows)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .max_iter(400)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).unwrap();
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "oracle status {:?}",
        solver.solution.status
    );
    (solver.solution.x.clone(), solver.solution.obj_val)
}

/// Constraint rows of the tube program over `(g, t)`, plus the linear cost
/// of `bv`. With `cap`, an extra row `bv(g) ≤ cap` is appended.
fn tube_rows(
    obs: &Observations,
    beta: f64,
    cap: Option<f64>,
) -> (Columns, Vec<f64>, Vec<f64>, usize) {
    let frame = obs.frame.as_ref();
    let (dim, side, len, m) = (frame.dim(), frame.side(), frame.grid_len(), frame.len());
    let weight = (side as f64).powi(1 - dim as i32);
    let edges = neighbours(dim, side);
    let e = edges.len();
    // variables: g (len), t (e)
    let nvar = len + e;
    let rows = 2 * e + 2 * m + 2 * len;
    let mut a = Columns::new(rows, nvar);
    let mut b = vec![0.0; rows];
    for (k, (i, next)) in edges.iter().enumerate() {
        // ±(g_next - g_i) - t_k ≤ 0
        a.push(k, *next, 1.0);
        a.push(k, *i, -1.0);
        a.push(k, len + k, -1.0);
        a.push(e + k, *next, -1.0);
        a.push(e + k, *i, 1.0);
        a.push(e + k, len + k, -1.0);
    }
    let mut unit = vec![0.0; len];
    let mut col = vec![0.0; m];
    for i in 0..len {
        unit[i] = 1.0;
        frame.analyze_into(&unit, &mut col);
        unit[i] = 0.0;
        for (w, v) in col.iter().enumerate() {
            a.push(2 * e + w, i, *v);
            a.push(2 * e + m + w, i, -*v);
        }
        a.push(2 * e + 2 * m + i, i, 1.0);
        a.push(2 * e + 2 * m + len + i, i, -1.0);
    }
    for (w, y) in obs.coefficients.values().iter().enumerate() {
        b[2 * e + w] = y + obs.gamma;
        b[2 * e + m + w] = -(y - obs.gamma);
    }
    for i in 0..2 * len {
        b[2 * e + 2 * m + i] = beta;
    }
    let mut q = vec![0.0; nvar];
    q[len..].iter_mut().for_each(|v| *v = weight);
    if let Some(cap) = cap {
        a.rows += 1;
        for k in 0..e {
            a.push(rows, len + k, weight);
        }
        b.push(cap);
    }
    (a, b, q, len)
}

/// `min bv(g)` subject to the tube and `‖g‖_∞ ≤ beta`; returns `(bv, g)`.
pub fn lp_constrained_tv(obs: &Observations, beta: f64) -> (f64, Vec<f64>) {
    let (a, b, q, len) = tube_rows(obs, beta, None);
    let (nvar, rows) = (q.len(), b.len());
    let (x, obj) = solve(CscMatrix::zeros((nvar, nvar)), q, a.build(), b, rows);
    (obj, x[..len].to_vec())
}

/// Grid `L²` distance from `target` to the set of feasible `g` with
/// `bv(g) ≤ cap`, i.e. to the optimal set when `cap` is the optimal value.
pub fn distance_to_optimal_set(obs: &Observations, beta: f64, cap: f64, target: &[f64]) -> f64 {
    let (a, b, q_lin, len) = tube_rows(obs, beta, Some(cap));
    let (nvar, rows) = (q_lin.len(), b.len());
    let cell = 1.0 / len as f64;
    let mut p = Columns::new(nvar, nvar);
    let mut q = vec![0.0; nvar];
    for i in 0..len {
        p.push(i, i, 2.0 * cell);
        q[i] = -2.0 * cell * target[i];
    }
    let (_, obj) = solve(p.build(), q, a.build(), b, rows);
    let constant = cell * target.iter().map(|v| v * v).sum::<f64>();
    (obj + constant).max(0.0).sqrt()
}

/// `min N^{-d} Σ (g - y)² + λ bv(g)`; returns `(objective, g)`.
pub fn qp_rof(pixels: &TorusSignal, lambda: f64) -> (f64, Vec<f64>) {
    let (dim, side, len) = (pixels.dim(), pixels.side(), pixels.len());
    let weight = (side as f64).powi(1 - dim as i32);
    let cell = 1.0 / len as f64;
    let edges = neighbours(dim, side);
    let e = edges.len();
    let nvar = len + e;
    let rows = 2 * e;
    let mut a = Columns::new(rows, nvar);
    for (k, (i, next)) in edges.iter().enumerate() {
        a.push(k, *next, 1.0);
        a.push(k, *i, -1.0);
        a.push(k, len + k, -1.0);
        a.push(e + k, *next, -1.0);
        a.push(e + k, *i, 1.0);
        a.push(e + k, len + k, -1.0);
    }
    let mut p = Columns::new(nvar, nvar);
    for i in 0..len {
        p.push(i, i, 2.0 * cell);
    }
    let y = pixels.values();
    let mut q = vec![lambda * weight; nvar];
    for i in 0..len {
        q[i] = -2.0 * cell * y[i];
    }
    let (x, obj) = solve(p.build(), q, a.build(), vec![0.0; rows], rows);
    let constant = cell * y.iter().map(|v| v * v).sum::<f64>();
    (obj + constant, x[..len].to_vec())
}
