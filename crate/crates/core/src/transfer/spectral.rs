//! `λ = lim (1/n) ln ‖Aⁿ1‖` and the exact matrix oracle on shifts of finite type.

use super::TransferOperator;
use crate::error::{Error, Result};
use crate::graph;
use crate::measures::{interval_grid, symbolic_representatives};
use crate::observable::Observable;
use crate::systems::{Point, Subset, SystemKind, SystemModel};
use crate::trace::EstimateTrace;
use serde::Serialize;
use std::collections::HashMap;

/// How `‖Aⁿ1‖` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMethod {
    /// Exact recursion over cylinder states of a shift of finite type.
    SymbolicTransfer,
    /// Exact recursion over the nodes of a finite map.
    FiniteMap,
    /// Single-branch models: the product of weights along the backward branch, sup over a grid.
    OrbitFollowing,
    /// Multi-branch interval maps: iteration on a grid with linear interpolation.
    GridIteration,
    /// Exact preimage-tree sums at grid points.
    TreeSum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralParams {
    pub n_max: usize,
    /// Initial cells per axis on metric models (0 picks a default).
    pub grid: usize,
    /// Largest cells per axis tried by refinement (0 picks a default).
    pub max_grid: usize,
    /// Refinement stops once `s_{n_max}` moves by less than this.
    pub refine_tol: f64,
}

impl SpectralParams {
    pub fn new(n_max: usize) -> Self {
        SpectralParams {
            n_max,
            grid: 0,
            max_grid: 0,
            refine_tol: 1e-4,
        }
    }
}

/// Sample points of the (restricted) state space, about `cells` per axis.
pub fn sample_grid(host: &SystemModel, cells: usize) -> Vec<Point> {
    let cells = cells.max(1);
    let raw: Vec<Point> = match &host.kind {
        SystemKind::FiniteMap { image } => (0..image.len()).map(Point::Node).collect(),
        SystemKind::Subshift { .. } | SystemKind::CantorFixture => {
            let depth = (cells as f64).log2().ceil().clamp(1.0, 10.0) as usize;
            symbolic_representatives(host, depth).unwrap_or_default()
        }
        SystemKind::PiecewiseCover(c) => {
            interval_grid(c.lo(), c.hi(), (c.hi() - c.lo()) / cells as f64, c.circle)
        }
        SystemKind::CircleRotation { .. } => interval_grid(0.0, 1.0, 1.0 / cells as f64, true),
        SystemKind::SquareFixture => {
            let axis: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| Point::Pair([a, b])))
                .collect()
        }
        SystemKind::LadderFixture { levels } => {
            let mut rungs = vec![0.0];
            rungs.extend((0..=*levels).map(|j| 0.5f64.powi(j as i32)));
            let axis: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
            rungs
                .iter()
                .flat_map(|&s| axis.iter().map(move |&t| Point::Pair([t, s])))
                .collect()
        }
    };
    raw.into_iter().filter(|p| host.in_restriction(p)).collect()
}

pub(crate) fn check_points(host: &SystemModel) -> Vec<Point> {
    let cells = match host.kind {
        SystemKind::SquareFixture | SystemKind::LadderFixture { .. } => 32,
        _ => 256,
    };
    sample_grid(&host.unrestricted(), cells)
}

fn default_cells(host: &SystemModel) -> (usize, usize) {
    match host.kind {
        SystemKind::SquareFixture | SystemKind::LadderFixture { .. } => (64, 512),
        _ => (1024, 1 << 15),
    }
}

/// `(n, ln ‖Aⁿ1‖)` for `n = 1..=n_max`, with `cells` grid cells per axis on metric models.
pub fn log_norms(
    t: &TransferOperator,
    n_max: usize,
    cells: usize,
) -> Result<(EvaluationMethod, Vec<(usize, f64)>)> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    match &t.host.kind {
        SystemKind::Subshift { .. } => Ok((
            EvaluationMethod::SymbolicTransfer,
            symbolic_norms(t, n_max)?,
        )),
        SystemKind::FiniteMap { .. } => Ok((EvaluationMethod::FiniteMap, finite_norms(t, n_max)?)),
        SystemKind::CantorFixture => Err(Error::Precondition(
            "spectral potential is not implemented on the Cantor fixture".into(),
        )),
        _ => {
            let grid = sample_grid(&t.host, cells);
            if grid.is_empty() {
                return Err(Error::Precondition(
                    "the restriction contains no grid point".into(),
                ));
            }
            if let Some(v) = orbit_following(t, &grid, n_max)? {
                return Ok((EvaluationMethod::OrbitFollowing, v));
            }
            if let SystemKind::PiecewiseCover(c) = &t.host.kind {
                return Ok((
                    EvaluationMethod::GridIteration,
                    grid_iteration(t, c.lo(), c.hi(), c.circle, cells, n_max)?,
                ));
            }
            Ok((EvaluationMethod::TreeSum, tree_sums(t, &grid, n_max)?))
        }
    }
}

/// Trace of `s_n = (1/n) ln ‖Aⁿ1‖`; the headline is `min_n s_n`.
///
/// On metric models the grid is doubled until `s_{n_max}` moves by less
/// than `refine_tol` or the grid cap is reached.
pub fn spectral_potential(t: &TransferOperator, params: &SpectralParams) -> Result<EstimateTrace> {
    let (init, cap) = default_cells(&t.host);
    let mut cells = if params.grid == 0 { init } else { params.grid };
    let cap = if params.max_grid == 0 {
        cap.max(cells)
    } else {
        params.max_grid.max(cells)
    };
    let (mut method, mut norms) = log_norms(t, params.n_max, cells)?;
    let mut history = vec![(cells, norms.last().map(|v| v.1 / v.0 as f64))];
    let metric = matches!(
        method,
        EvaluationMethod::OrbitFollowing
            | EvaluationMethod::GridIteration
            | EvaluationMethod::TreeSum
    );
    if metric {
        while cells * 2 <= cap {
            let (m2, n2) = log_norms(t, params.n_max, cells * 2)?;
            cells *= 2;
            let old = norms.last().map(|v| v.1).unwrap_or(0.0);
            let new = n2.last().map(|v| v.1).unwrap_or(0.0);
            let n_last = n2.last().map(|v| v.0).unwrap_or(1) as f64;
            let settled = (old == new) || ((new - old) / n_last).abs() < params.refine_tol;
            method = m2;
            norms = n2;
            history.push((cells, norms.last().map(|v| v.1 / v.0 as f64)));
            if settled {
                break;
            }
        }
    }
    let mut trace = EstimateTrace::subadditive("lambda", method_name(method), &norms)
        .with_meta("n_max", params.n_max)
        .with_meta("method", method);
    if metric {
        trace = trace
            .with_meta("grid_cells_per_axis", cells)
            .with_meta("refinement", history);
    }
    Ok(trace)
}

fn method_name(m: EvaluationMethod) -> &'static str {
    match m {
        EvaluationMethod::SymbolicTransfer => "symbolic transfer recursion",
        EvaluationMethod::FiniteMap => "finite map recursion",
        EvaluationMethod::OrbitFollowing => "orbit following on grid",
        EvaluationMethod::GridIteration => "grid iteration with interpolation",
        EvaluationMethod::TreeSum => "preimage tree sums on grid",
    }
}

/// Symbols from which an infinite admissible continuation exists.
pub(crate) fn live_symbols(t: &[Vec<u8>]) -> Vec<bool> {
    let a = t.len();
    let mut live = vec![true; a];
    loop {
        let mut changed = false;
        for i in 0..a {
            if live[i] && !(0..a).any(|j| live[j] && t[i][j] == 1) {
                live[i] = false;
                changed = true;
            }
        }
        if !changed {
            return live;
        }
    }
}

/// Transition matrix in force for the operator (the restriction's when it is a sub-shift).
pub(crate) fn effective_transitions(host: &SystemModel) -> Result<Vec<Vec<u8>>> {
    match (&host.restriction, host.transitions()) {
        (None, Some(t)) => Ok(t.clone()),
        (Some(Subset::Sft { transitions }), Some(_)) => Ok(transitions.clone()),
        (Some(_), Some(_)) => Err(Error::Precondition(
            "shift restrictions must be sub-shifts of finite type".into(),
        )),
        _ => Err(Error::Precondition("not a shift of finite type".into())),
    }
}

pub(crate) fn live_words(t: &[Vec<u8>], live: &[bool], len: usize) -> Vec<Vec<u8>> {
    let mut words: Vec<Vec<u8>> = (0..t.len())
        .filter(|&s| live[s])
        .map(|s| vec![s as u8])
        .collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for w in &words {
            let last = *w.last().unwrap() as usize;
            for s in 0..t.len() {
                if live[s] && t[last][s] == 1 {
                    let mut u = w.clone();
                    u.push(s as u8);
                    next.push(u);
                }
            }
        }
        words = next;
    }
    words
}

fn symbolic_norms(op: &TransferOperator, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let w = op.branch_weight();
    if !w.is_locally_constant() {
        return Err(Error::Observable(
            "shift operators need a locally constant cocycle".into(),
        ));
    }
    let t = effective_transitions(&op.host)?;
    let live = live_symbols(&t);
    let k = w.depth().max(1);
    let len = (k - 1).max(1);
    let states = live_words(&t, &live, len);
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let steps: Vec<Vec<(usize, f64)>> = states
        .iter()
        .map(|s| {
            (0..t.len())
                .filter(|&c| live[c] && t[c][s[0] as usize] == 1)
                .map(|c| {
                    let mut cs = Vec::with_capacity(len + 1);
                    cs.push(c as u8);
                    cs.extend_from_slice(s);
                    (index[&cs[..len]], w.eval_symbols(&cs))
                })
                .collect()
        })
        .collect();
    Ok(iterate_states(&steps, |_| true, n_max))
}

fn finite_norms(op: &TransferOperator, n_max: usize) -> Result<Vec<(usize, f64)>> {
    let SystemKind::FiniteMap { image } = &op.host.kind else {
        unreachable!()
    };
    let inside = |v: usize| op.host.in_restriction(&Point::Node(v));
    let mut steps = vec![Vec::new(); image.len()];
    for (y, &x) in image.iter().enumerate() {
        if inside(y) && inside(x) {
            steps[x].push((y, op.mass(&Point::Node(y))));
        }
    }
    Ok(iterate_states(&steps, inside, n_max))
}

/// `v_n(s) = Σ w·v_{n−1}(next)` with log-scaled normalization; returns `ln max_s v_n(s)`.
fn iterate_states(
    steps: &[Vec<(usize, f64)>],
    inside: impl Fn(usize) -> bool,
    n_max: usize,
) -> Vec<(usize, f64)> {
    let mut v = vec![1.0f64; steps.len()];
    let mut acc = 0.0f64;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if acc == f64::NEG_INFINITY {
            out.push((n, acc));
            continue;
        }
        let next: Vec<f64> = steps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(j, w)| if w == 0.0 { 0.0 } else { w * v[j] })
                    .sum()
            })
            .collect();
        let m = (0..next.len())
            .filter(|&i| inside(i))
            .map(|i| next[i])
            .fold(0.0, f64::max);
        if m == 0.0 {
            acc = f64::NEG_INFINITY;
        } else {
            acc += m.ln();
            v = next.iter().map(|x| x / m).collect();
        }
        out.push((n, acc));
    }
    out
}

/// `None` when some grid point has more than one charged branch.
fn orbit_following(
    op: &TransferOperator,
    grid: &[Point],
    n_max: usize,
) -> Result<Option<Vec<(usize, f64)>>> {
    let mut best = vec![f64::NEG_INFINITY; n_max];
    for x in grid {
        let mut p = x.clone();
        let mut acc = 0.0f64;
        for slot in best.iter_mut() {
            let phi = op.functional(&p)?;
            let mut charged = phi.atoms.into_iter().filter(|a| a.1 != 0.0);
            let Some((y, m)) = charged.next() else { break };
            if charged.next().is_some() {
                return Ok(None);
            }
            acc += m.ln();
            *slot = slot.max(acc);
            p = y;
        }
    }
    Ok(Some(
        best.into_iter()
            .enumerate()
            .map(|(i, v)| (i + 1, v))
            .collect(),
    ))
}

fn grid_iteration(
    op: &TransferOperator,
    lo: f64,
    hi: f64,
    circle: bool,
    cells: usize,
    n_max: usize,
) -> Result<Vec<(usize, f64)>> {
    // On the circle the node at `hi` carries the left limit, so weights that jump
    // at the base point are not smeared across it.
    let nodes = cells + 1;
    let h = (hi - lo) / cells as f64;
    let xs: Vec<f64> = (0..nodes).map(|j| lo + j as f64 * h).collect();
    let mut steps: Vec<Vec<(usize, usize, f64, f64)>> = Vec::with_capacity(nodes);
    let mut inside = Vec::with_capacity(nodes);
    for (j, &x) in xs.iter().enumerate() {
        let x = if circle && j == cells {
            hi - h * 1e-3
        } else {
            x
        };
        let p = Point::Real(x);
        inside.push(op.host.in_restriction(&p));
        let phi = op.functional(&p)?;
        let row = phi
            .atoms
            .into_iter()
            .filter(|a| a.1 != 0.0)
            .map(|(y, m)| {
                let pos = ((y.real().unwrap() - lo) / h).clamp(0.0, cells as f64);
                let i = (pos.floor() as usize).min(cells - 1);
                (i, i + 1, pos - i as f64, m)
            })
            .collect();
        steps.push(row);
    }
    let mut v = vec![1.0f64; nodes];
    let mut acc = 0.0f64;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if acc == f64::NEG_INFINITY {
            out.push((n, acc));
            continue;
        }
        let next: Vec<f64> = steps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(i0, i1, f, m)| m * (v[i0] * (1.0 - f) + v[i1] * f))
                    .sum()
            })
            .collect();
        let mx = (0..nodes)
            .filter(|&j| inside[j])
            .map(|j| next[j])
            .fold(0.0, f64::max);
        if mx == 0.0 {
            acc = f64::NEG_INFINITY;
        } else {
            acc += mx.ln();
            v = next.iter().map(|x| x / mx).collect();
        }
        out.push((n, acc));
    }
    Ok(out)
}

fn tree_sums(op: &TransferOperator, grid: &[Point], n_max: usize) -> Result<Vec<(usize, f64)>> {
    let sheets = op.host.sheet_bound().unwrap_or(2).max(2) as f64;
    let budget = (1u64 << 22) as f64 / grid.len() as f64;
    let n_cap = (budget.ln() / sheets.ln()).floor().max(1.0) as usize;
    let n_top = n_max.min(n_cap);
    let mut best = vec![0.0f64; n_top];
    for x in grid {
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.max(op.power_one(x, i + 1)?);
        }
    }
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i + 1, crate::observable::ln0(v)))
        .collect())
}

/// The weighted matrix on admissible `k`-words: `M[u][v] = w(u)` when `v` follows `u`.
pub fn weighted_matrix(
    host: &SystemModel,
    weight: &Observable,
) -> Result<(Vec<Vec<u8>>, Vec<Vec<f64>>)> {
    if !weight.is_locally_constant() {
        return Err(Error::Observable(
            "the matrix oracle needs a locally constant weight".into(),
        ));
    }
    let t = effective_transitions(host)?;
    let live = live_symbols(&t);
    let k = weight.depth().max(1);
    let states = live_words(&t, &live, k);
    let index: HashMap<&[u8], usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut m = vec![vec![0.0; states.len()]; states.len()];
    for (i, u) in states.iter().enumerate() {
        let w = weight.eval_symbols(u);
        for s in 0..t.len() {
            if live[s] && t[*u.last().unwrap() as usize][s] == 1 {
                let mut v = u[1..].to_vec();
                v.push(s as u8);
                m[i][index[v.as_slice()]] = w;
            }
        }
    }
    Ok((states, m))
}

/// `ln` of the spectral radius of the weighted cylinder matrix, by shifted power iteration.
pub fn sft_spectral_oracle(host: &SystemModel, weight: &Observable) -> Result<f64> {
    let (_, m) = weighted_matrix(host, weight)?;
    Ok(spectral_radius(&m).ln())
}

/// Spectral radius of a nonnegative matrix.
pub fn spectral_radius(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let adj: Vec<Vec<usize>> = m
        .iter()
        .map(|r| (0..n).filter(|&j| r[j] > 0.0).collect())
        .collect();
    if !graph::sccs(&adj).iter().any(|c| graph::is_cyclic(&adj, c)) {
        return 0.0;
    }
    let scale = m.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    // (M/scale + I) has the dominant eigenvalue ρ/scale + 1 and no rival of equal modulus.
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| m[i][j] / scale + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut v = vec![1.0f64; n];
    let mut r = 0.0f64;
    for _ in 0..500_000 {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| b[i][j] * v[j]).sum())
            .collect();
        let r_new = w.iter().copied().fold(0.0, f64::max);
        let w: Vec<f64> = w.iter().map(|x| x / r_new).collect();
        let delta = (0..n).map(|i| (w[i] - v[i]).abs()).fold(0.0, f64::max);
        v = w;
        let done = (r_new - r).abs() <= 1e-15 * r_new && delta < 1e-13;
        r = r_new;
        if done {
            break;
        }
    }
    ((r - 1.0) * scale).max(0.0)
}
