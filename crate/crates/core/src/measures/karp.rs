//! Maximum cycle mean (Karp) and the exact maximum of ergodic averages of
//! locally constant observables.

use super::{periodic_orbit, InvariantMeasure};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::systems::{Point, SystemKind, SystemModel, Word};

/// Maximum mean weight over the cycles of a weighted digraph.
///
/// `edges[v]` lists `(target, weight)`. Returns the mean and one optimal
/// cycle as a vertex sequence `v₀ → v₁ → … → v₀` (the closing vertex is not repeated).
pub fn max_cycle_mean(edges: &[Vec<(usize, f64)>]) -> Result<(f64, Vec<usize>)> {
    let n = edges.len();
    if n == 0 {
        return Err(Error::NoCycle);
    }
    let neg = f64::NEG_INFINITY;
    // best[k][v]: heaviest walk with exactly k edges ending at v, from any start.
    let mut best = vec![vec![neg; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    best[0].iter_mut().for_each(|b| *b = 0.0);
    for k in 1..=n {
        for u in 0..n {
            let bu = best[k - 1][u];
            if bu == neg {
                continue;
            }
            for &(v, w) in &edges[u] {
                let cand = bu + w;
                if cand > best[k][v] {
                    best[k][v] = cand;
                    pred[k][v] = u;
                }
            }
        }
    }
    let mut lambda = neg;
    let mut arg = None;
    for v in 0..n {
        if best[n][v] == neg {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| best[k][v] > neg)
            .map(|k| (best[n][v] - best[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        if worst > lambda {
            lambda = worst;
            arg = Some(v);
        }
    }
    let Some(start) = arg else {
        return Err(Error::NoCycle);
    };

    let mut candidates = vec![start];
    candidates.extend((0..n).filter(|&v| v != start && best[n][v] > neg));
    let mut found: Option<(f64, Vec<usize>)> = None;
    for v in candidates {
        for cycle in walk_cycles(&pred, n, v) {
            let m = cycle_mean(edges, &cycle);
            if found.as_ref().map_or(true, |(b, _)| m > *b) {
                found = Some((m, cycle));
            }
        }
        if let Some((m, _)) = &found {
            if (m - lambda).abs() <= 1e-9 * (1.0 + lambda.abs()) {
                break;
            }
        }
    }
    let (mean, cycle) = found.ok_or(Error::NoCycle)?;
    Ok((mean, cycle))
}

/// Cycles met while walking the predecessor chain of a length-`n` walk ending at `v`.
fn walk_cycles(pred: &[Vec<usize>], n: usize, v: usize) -> Vec<Vec<usize>> {
    let mut walk = vec![v];
    let mut cur = v;
    for k in (1..=n).rev() {
        cur = pred[k][cur];
        if cur == usize::MAX {
            break;
        }
        walk.push(cur);
    }
    walk.reverse();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for &x in &walk {
        if let Some(pos) = stack.iter().position(|&y| y == x) {
            out.push(stack[pos..].to_vec());
            stack.truncate(pos);
        }
        stack.push(x);
    }
    out
}

fn cycle_mean(edges: &[Vec<(usize, f64)>], cycle: &[usize]) -> f64 {
    let len = cycle.len();
    let total: f64 = (0..len)
        .map(|i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % len]);
            edges[u]
                .iter()
                .filter(|e| e.0 == v)
                .map(|e| e.1)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / len as f64
}

/// The maximum of `μ[w]` over invariant measures together with an optimal periodic orbit.
#[derive(Clone, Debug)]
pub struct ErgodicMaximum {
    pub value: f64,
    pub cycle: Vec<usize>,
    pub measure: InvariantMeasure,
}

/// `max_μ μ[w]` for a locally constant `w` on a shift of finite type or a finite map.
///
/// On a shift, `w` of depth `k` lives on the graph of admissible `k`-words
/// (edges are admissible `(k+1)`-words); its cycles are exactly the periodic
/// orbits, whose averages are the ergodic maxima candidates.
pub fn max_ergodic_average(host: &SystemModel, w: &Observable) -> Result<ErgodicMaximum> {
    match &host.kind {
        SystemKind::FiniteMap { image } => {
            let edges: Vec<Vec<(usize, f64)>> = image
                .iter()
                .enumerate()
                .map(|(v, &t)| vec![(t, w.eval_node(v))])
                .collect();
            let (value, cycle) = max_cycle_mean(&edges)?;
            let measure = periodic_orbit(host, Point::Node(cycle[0]))?;
            Ok(ErgodicMaximum {
                value,
                cycle,
                measure,
            })
        }
        SystemKind::Subshift { alphabet, .. } => {
            if !w.is_locally_constant() {
                return Err(Error::Observable(
                    "ergodic maximum needs a locally constant observable".into(),
                ));
            }
            let depth = w.depth().max(1);
            let words = host.words(depth)?;
            let index: std::collections::HashMap<&[u8], usize> = words
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_slice(), i))
                .collect();
            let edges: Vec<Vec<(usize, f64)>> = words
                .iter()
                .map(|u| {
                    let value = w.eval_symbols(u);
                    (0..*alphabet as u8)
                        .filter(|&s| host.allowed(*u.last().unwrap(), s))
                        .map(|s| {
                            let mut next = u[1..].to_vec();
                            next.push(s);
                            (index[next.as_slice()], value)
                        })
                        .collect()
                })
                .collect();
            let (value, cycle) = max_cycle_mean(&edges)?;
            let symbols: Vec<u8> = cycle.iter().map(|&v| words[v][0]).collect();
            let measure = periodic_orbit(host, Point::Word(Word::periodic(symbols)))?;
            Ok(ErgodicMaximum {
                value,
                cycle,
                measure,
            })
        }
        _ => Err(Error::Precondition(
            "exact ergodic maxima need a shift of finite type or a finite map".into(),
        )),
    }
}
