//! Greedy spanning and separated nets for the Bowen metrics `d_n`.
//!
//! Shift models are handled exactly through cylinder words; metric models
//! through a finite sample of the (restricted) state space.

use crate::error::{Error, Result};
use crate::measures::interval_grid;
use crate::observable::{ln0, Observable};
use crate::systems::{
    circle_dist, ladder_level, BoxSet, Point, Subset, SystemKind, SystemModel, Word,
};
use crate::transfer::spectral::{effective_transitions, live_symbols, live_words};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use std::collections::HashMap;

/// Largest number of points sampled from a metric state space.
pub const MAX_SAMPLE: usize = 1 << 18;

/// Which kind of net a greedy pass builds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetKind {
    /// Every sample point is `d_n`-closer than `ε` to a chosen point.
    Spanning,
    /// Chosen points are pairwise more than `ε` apart in `d_n`.
    Separated,
}

/// An ordered run of sample points. Consecutive points of a continuous strand are neighbours.
#[derive(Clone, Debug)]
pub struct Strand {
    pub points: Vec<Point>,
    pub continuous: bool,
}

/// Samples the (restricted) state space of a metric model at about the given spacing.
pub fn sample_strands(host: &SystemModel, spacing: f64) -> Result<Vec<Strand>> {
    if host.is_symbolic() {
        return Err(Error::Precondition(
            "symbolic models are handled by cylinder words".into(),
        ));
    }
    if !(spacing > 0.0) {
        return Err(Error::Precondition(format!(
            "sample spacing must be positive, got {spacing}"
        )));
    }
    let mut spacing = spacing;
    loop {
        let strands = raw_strands(host, spacing);
        let total: usize = strands.iter().map(|s| s.points.len()).sum();
        if total <= MAX_SAMPLE {
            return Ok(strands
                .into_iter()
                .map(|s| Strand {
                    points: s
                        .points
                        .into_iter()
                        .filter(|p| host.contains(p) && host.in_restriction(p))
                        .collect(),
                    continuous: s.continuous,
                })
                .filter(|s| !s.points.is_empty())
                .collect());
        }
        spacing *= 2.0;
    }
}

fn raw_strands(host: &SystemModel, spacing: f64) -> Vec<Strand> {
    let circle = matches!(&host.kind, SystemKind::PiecewiseCover(c) if c.circle)
        || matches!(host.kind, SystemKind::CircleRotation { .. });
    match &host.restriction {
        Some(Subset::Points { points }) => vec![Strand {
            points: points.clone(),
            continuous: false,
        }],
        Some(Subset::Nodes { nodes }) => {
            vec![Strand {
                points: nodes.iter().map(|&v| Point::Node(v)).collect(),
                continuous: false,
            }]
        }
        Some(Subset::Boxes { boxes }) => boxes
            .iter()
            .flat_map(|b| box_strands(b, spacing, circle))
            .collect(),
        Some(Subset::Sft { .. }) => Vec::new(),
        None => match &host.kind {
            SystemKind::FiniteMap { image } => {
                vec![Strand {
                    points: (0..image.len()).map(Point::Node).collect(),
                    continuous: false,
                }]
            }
            SystemKind::PiecewiseCover(c) => {
                vec![Strand {
                    points: interval_grid(c.lo(), c.hi(), spacing, c.circle),
                    continuous: true,
                }]
            }
            SystemKind::CircleRotation { .. } => {
                vec![Strand {
                    points: interval_grid(0.0, 1.0, spacing, true),
                    continuous: true,
                }]
            }
            SystemKind::SquareFixture => {
                box_strands(&BoxSet::rect([0.0, 0.0], [1.0, 1.0]), spacing, false)
            }
            SystemKind::LadderFixture { levels } => {
                let mut rungs = vec![0.0];
                rungs.extend((0..=*levels).map(|j| 0.5f64.powi(j as i32)));
                rungs
                    .into_iter()
                    .map(|s| Strand {
                        points: interval_grid(0.0, 1.0, spacing, false)
                            .into_iter()
                            .map(|t| Point::Pair([t.coords()[0], s]))
                            .filter(|p| ladder_level(p.coords()[1], *levels).is_some())
                            .collect(),
                        continuous: true,
                    })
                    .collect()
            }
            SystemKind::Subshift { .. } | SystemKind::CantorFixture => Vec::new(),
        },
    }
}

fn box_strands(b: &BoxSet, spacing: f64, circle: bool) -> Vec<Strand> {
    let free: Vec<usize> = (0..b.lo.len()).filter(|&i| b.hi[i] > b.lo[i]).collect();
    let point = |c: Vec<f64>| {
        if c.len() == 1 {
            Point::Real(c[0])
        } else {
            Point::Pair([c[0], c[1]])
        }
    };
    match free.len() {
        0 => vec![Strand {
            points: vec![point(b.lo.clone())],
            continuous: false,
        }],
        1 => {
            let axis = free[0];
            let pts = interval_grid(
                b.lo[axis],
                b.hi[axis],
                spacing,
                circle && b.lo[axis] == 0.0 && b.hi[axis] == 1.0,
            )
            .into_iter()
            .map(|t| {
                let mut c = b.lo.clone();
                c[axis] = t.coords()[0];
                point(c)
            })
            .collect();
            vec![Strand {
                points: pts,
                continuous: true,
            }]
        }
        _ => {
            let row_spacing = spacing.max(1.0 / 512.0);
            interval_grid(b.lo[1], b.hi[1], row_spacing, false)
                .into_iter()
                .map(|y| Strand {
                    points: interval_grid(b.lo[0], b.hi[0], row_spacing, false)
                        .into_iter()
                        .map(|x| Point::Pair([x.coords()[0], y.coords()[0]]))
                        .collect(),
                    continuous: true,
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Metric {
    Circle,
    Line,
    Plane,
    Discrete,
}

impl Metric {
    fn of(host: &SystemModel) -> Metric {
        match &host.kind {
            SystemKind::FiniteMap { .. } => Metric::Discrete,
            SystemKind::PiecewiseCover(c) if c.circle => Metric::Circle,
            SystemKind::CircleRotation { .. } => Metric::Circle,
            SystemKind::PiecewiseCover(_) => Metric::Line,
            _ => Metric::Plane,
        }
    }

    fn dim(self) -> usize {
        if self == Metric::Plane {
            2
        } else {
            1
        }
    }

    fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Circle => circle_dist(a[0], b[0]),
            Metric::Line => (a[0] - b[0]).abs(),
            Metric::Plane => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
            Metric::Discrete => {
                if a[0] == b[0] {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Orbit segments of a sample, with optional potential values along them.
pub(crate) struct OrbitTable {
    metric: Metric,
    steps: usize,
    points: Vec<Point>,
    coords: Vec<f64>,
    potential: Vec<f64>,
    neighbours: Vec<(usize, usize)>,
}

impl OrbitTable {
    /// Orbits of length `steps`; `log_weight` is evaluated along them when given.
    pub(crate) fn build(
        host: &SystemModel,
        strands: &[Strand],
        steps: usize,
        log_weight: Option<&Observable>,
    ) -> Result<Self> {
        let metric = Metric::of(host);
        let mut points = Vec::new();
        let mut neighbours = Vec::new();
        for s in strands {
            let start = points.len();
            points.extend(s.points.iter().cloned());
            if s.continuous {
                neighbours.extend((start..points.len().saturating_sub(1)).map(|i| (i, i + 1)));
            }
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = points
            .par_iter()
            .map(|p| {
                let mut c = Vec::with_capacity(steps * metric.dim());
                let mut w = Vec::new();
                let mut q = p.clone();
                for i in 0..steps {
                    match &q {
                        Point::Node(v) => c.push(*v as f64),
                        other => c.extend(other.coords()),
                    }
                    if let Some(g) = log_weight {
                        w.push(g.eval(&q));
                    }
                    if i + 1 < steps {
                        q = host.apply_unchecked(&q);
                    }
                }
                (c, w)
            })
            .collect();
        let mut coords = Vec::with_capacity(points.len() * steps * metric.dim());
        let mut potential = Vec::new();
        for (c, w) in rows {
            coords.extend(c);
            potential.extend(w);
        }
        if let Some(i) = potential.iter().position(|v| v.is_nan()) {
            return Err(Error::Observable(format!(
                "potential is undefined at {}",
                points[i / steps]
            )));
        }
        Ok(OrbitTable {
            metric,
            steps,
            points,
            coords,
            potential,
            neighbours,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.points.len()
    }

    pub(crate) fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    fn at(&self, p: usize, i: usize) -> &[f64] {
        let d = self.metric.dim();
        let o = (p * self.steps + i) * d;
        &self.coords[o..o + d]
    }

    /// `d_n(p, q)`, stopping early once it exceeds `cap`.
    fn dn(&self, p: usize, q: usize, n: usize, cap: f64) -> f64 {
        let mut best = 0.0f64;
        for i in 0..n {
            best = best.max(self.metric.dist(self.at(p, i), self.at(q, i)));
            if best > cap {
                break;
            }
        }
        best
    }

    /// Whether the sample resolves `d_n` at scale `ε`: at most 1% of neighbouring
    /// sample pairs are `ε/64` or more apart in `d_n`.
    ///
    /// Greedy nets overshoot by up to one sample gap per point, so the gap must
    /// stay a small fraction of `ε` for the growth rate to be unbiased.
    pub(crate) fn resolves(&self, n: usize, eps: f64) -> bool {
        if self.neighbours.is_empty() {
            return true;
        }
        let far = self
            .neighbours
            .iter()
            .filter(|&&(a, b)| self.dn(a, b, n, eps) >= eps / 64.0)
            .count();
        far * 100 <= self.neighbours.len()
    }

    fn cell(&self, x: f64, eps: f64) -> i64 {
        match self.metric {
            Metric::Circle => {
                let cells = (1.0 / eps).floor().max(1.0);
                ((x * cells).floor() as i64).rem_euclid(cells as i64)
            }
            Metric::Discrete => {
                if eps >= 1.0 {
                    0
                } else {
                    x as i64
                }
            }
            _ => (x / eps).floor() as i64,
        }
    }

    fn key(&self, p: usize, n: usize, eps: f64) -> [i64; 4] {
        let d = self.metric.dim();
        let mut k = [0i64; 4];
        for j in 0..d {
            k[j] = self.cell(self.at(p, 0)[j], eps);
            k[d + j] = self.cell(self.at(p, n - 1)[j], eps);
        }
        k
    }

    /// Whether `hit` holds for some key within one cell of `key` in every active coordinate.
    fn any_neighbour(
        &self,
        key: &[i64; 4],
        eps: f64,
        mut hit: impl FnMut(&[i64; 4]) -> bool,
    ) -> bool {
        let active = if self.metric == Metric::Discrete {
            0
        } else {
            2 * self.metric.dim()
        };
        let wrap = (self.metric == Metric::Circle).then(|| (1.0 / eps).floor().max(1.0) as i64);
        let combos = 3usize.pow(active as u32);
        (0..combos).any(|mut code| {
            let mut m = *key;
            for slot in m.iter_mut().take(active) {
                *slot += (code % 3) as i64 - 1;
                code /= 3;
                if let Some(c) = wrap {
                    *slot = slot.rem_euclid(c);
                }
            }
            hit(&m)
        })
    }

    /// Indices of a greedy net, scanning the sample in order.
    pub(crate) fn greedy(&self, n: usize, eps: f64, kind: NetKind) -> Vec<usize> {
        let mut buckets: FxHashMap<[i64; 4], Vec<usize>> = FxHashMap::default();
        let mut chosen = Vec::new();
        for p in 0..self.len() {
            let key = self.key(p, n, eps);
            let blocked = self.any_neighbour(&key, eps, |k| {
                buckets.get(k).is_some_and(|list| {
                    list.iter().any(|&c| {
                        let d = self.dn(c, p, n, eps);
                        match kind {
                            NetKind::Spanning => d < eps,
                            NetKind::Separated => d <= eps,
                        }
                    })
                })
            });
            if !blocked {
                chosen.push(p);
                buckets.entry(key).or_default().push(p);
            }
        }
        chosen
    }

    /// `ln Σ_{c} exp(S_n ψ(c))` over the chosen points (`ln |C|` without a potential).
    pub(crate) fn log_sum(&self, chosen: &[usize], n: usize) -> f64 {
        if self.potential.is_empty() {
            return ln0(chosen.len() as f64);
        }
        log_sum_exp(chosen.iter().map(|&c| {
            self.potential[c * self.steps..c * self.steps + n]
                .iter()
                .sum()
        }))
    }

    /// Number of distinct points among `αⁿ(c)`, identified within `1e-12`.
    pub(crate) fn distinct_images(&self, host: &SystemModel, chosen: &[usize], n: usize) -> usize {
        let mut images: Vec<Vec<f64>> = chosen
            .iter()
            .map(|&c| {
                let q = if n < self.steps {
                    self.at(c, n).to_vec()
                } else {
                    let last = self.point_at(c, self.steps - 1);
                    let mut q = last;
                    for _ in self.steps - 1..n {
                        q = host.apply_unchecked(&q);
                    }
                    match q {
                        Point::Node(v) => vec![v as f64],
                        other => other.coords(),
                    }
                };
                q.iter().map(|v| (v * 1e12).round() / 1e12).collect()
            })
            .collect();
        images.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        images.dedup();
        images.len()
    }

    fn point_at(&self, p: usize, i: usize) -> Point {
        let c = self.at(p, i);
        match (&self.points[p], self.metric) {
            (Point::Node(_), _) => Point::Node(c[0] as usize),
            (_, Metric::Plane) => Point::Pair([c[0], c[1]]),
            _ => Point::Real(c[0]),
        }
    }
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Symbols two shift points must share so that `d < ε`.
pub(crate) fn shared_symbols(eps: f64) -> usize {
    ((1.0 / eps).log2() + 1e-9).floor().max(0.0) as usize
}

/// Length of the cylinder words forming a minimal `(n, ε)`-spanning set of a shift.
pub fn spanning_word_length(n: usize, eps: f64) -> usize {
    match shared_symbols(eps) {
        0 => 0,
        m => n + m - 1,
    }
}

/// Length of the cylinder words forming a maximal `(n, ε)`-separated set of a shift.
pub fn separated_word_length(n: usize, eps: f64) -> usize {
    let c = ((1.0 / eps).log2() - 1e-9).ceil().max(0.0) as usize;
    if c >= 2 {
        n + c - 2
    } else {
        0
    }
}

/// Transition matrix and live symbols of a shift host (its restriction when it has one).
pub(crate) fn shift_graph(host: &SystemModel) -> Result<(Vec<Vec<u8>>, Vec<bool>)> {
    if matches!(host.kind, SystemKind::CantorFixture) {
        return Err(Error::Precondition(
            "nets are not implemented on the Cantor fixture".into(),
        ));
    }
    let t = effective_transitions(host)?;
    let live = live_symbols(&t);
    if !live.iter().any(|&l| l) {
        return Err(Error::NoCycle);
    }
    Ok((t, live))
}

/// The canonical continuation of `w` inside the live part of the graph.
pub(crate) fn extend_live(t: &[Vec<u8>], live: &[bool], w: &[u8]) -> Word {
    let first = (0..t.len()).find(|&s| live[s]).unwrap_or(0) as u8;
    let last = w.last().copied().unwrap_or(first);
    let mut seq = vec![last];
    loop {
        let cur = *seq.last().unwrap() as usize;
        let next = (0..t.len())
            .find(|&j| live[j] && t[cur][j] == 1)
            .unwrap_or(cur) as u8;
        if let Some(p) = seq.iter().position(|&s| s == next) {
            let mut prefix = if w.is_empty() {
                Vec::new()
            } else {
                w[..w.len() - 1].to_vec()
            };
            prefix.extend_from_slice(&seq[..p]);
            return Word::new(prefix, seq[p..].to_vec());
        }
        seq.push(next);
    }
}

/// One representative per live word of the given length.
pub(crate) fn word_net(host: &SystemModel, len: usize) -> Result<Vec<Point>> {
    let (t, live) = shift_graph(host)?;
    if len == 0 {
        return Ok(vec![Point::Word(extend_live(&t, &live, &[]))]);
    }
    Ok(live_words(&t, &live, len)
        .iter()
        .map(|w| Point::Word(extend_live(&t, &live, w)))
        .collect())
}

/// `ln Σ_w exp(Σ_{i<n} ψ(σⁱ w))` over live words `w` of length `len`, words lengthened
/// when `ψ` reads past their end.
pub(crate) fn shift_log_sum(
    host: &SystemModel,
    log_weight: Option<&Observable>,
    n: usize,
    len: usize,
) -> Result<f64> {
    let (t, live) = shift_graph(host)?;
    let a = t.len();
    let depth = match log_weight {
        Some(g) if !g.is_locally_constant() => {
            return Err(Error::Precondition(
                "shift potentials must be locally constant".into(),
            ))
        }
        Some(g) => g.depth().max(1),
        None => 1,
    };
    let len = len.max(n + depth - 1).max(1);
    let state_len = (depth - 1).max(1);
    let encode = |w: &[u8]| w.iter().fold(0usize, |acc, &s| acc * a + s as usize);
    let window_weight = |w: &[u8]| log_weight.map_or(0.0, |g| g.eval_symbols(w));
    let mut values: HashMap<usize, (Vec<u8>, f64)> = HashMap::new();
    for w in live_words(&t, &live, state_len.min(len)) {
        let mut total = 0.0;
        for i in 0..n.min(w.len().saturating_sub(depth) + 1) {
            if i + depth <= w.len() {
                total += window_weight(&w[i..i + depth]);
            }
        }
        values.insert(encode(&w), (w, total));
    }
    for j in state_len.min(len)..len {
        let mut next: HashMap<usize, (Vec<u8>, f64)> = HashMap::new();
        let mut keys: Vec<&usize> = values.keys().collect();
        keys.sort_unstable();
        for k in keys {
            let (w, v) = &values[k];
            let last = *w.last().unwrap() as usize;
            for b in 0..a {
                if !(live[b] && t[last][b] == 1) {
                    continue;
                }
                let mut u = w.clone();
                u.push(b as u8);
                let mut val = *v;
                if j + 1 >= depth && j + 1 - depth < n {
                    val += window_weight(&u[u.len() - depth..]);
                }
                let keep = u[u.len() - state_len..].to_vec();
                let e = next
                    .entry(encode(&keep))
                    .or_insert((keep, f64::NEG_INFINITY));
                e.1 = log_sum_exp([e.1, val].into_iter());
            }
        }
        values = next;
    }
    let mut keys: Vec<&usize> = values.keys().collect();
    keys.sort_unstable();
    Ok(log_sum_exp(keys.into_iter().map(|k| values[k].1)))
}

/// A greedy `(n, ε)`-spanning set of the (restricted) state space.
///
/// Shifts: one representative per cylinder of the exact minimal length. Metric
/// models: greedy net over a sample of the given spacing.
pub fn spanning_set(host: &SystemModel, n: usize, eps: f64, spacing: f64) -> Result<Vec<Point>> {
    net(host, n, eps, spacing, NetKind::Spanning)
}

/// A greedy maximal `(n, ε)`-separated set of the (restricted) state space.
pub fn separated_set(host: &SystemModel, n: usize, eps: f64, spacing: f64) -> Result<Vec<Point>> {
    net(host, n, eps, spacing, NetKind::Separated)
}

fn net(host: &SystemModel, n: usize, eps: f64, spacing: f64, kind: NetKind) -> Result<Vec<Point>> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Schedule(format!(
            "need n ≥ 1 and ε > 0, got n = {n}, ε = {eps}"
        )));
    }
    if host.is_symbolic() {
        let len = match kind {
            NetKind::Spanning => spanning_word_length(n, eps),
            NetKind::Separated => separated_word_length(n, eps),
        };
        return word_net(host, len);
    }
    let strands = sample_strands(host, spacing)?;
    let table = OrbitTable::build(host, &strands, n, None)?;
    Ok(table
        .greedy(n, eps, kind)
        .into_iter()
        .map(|i| table.point(i).clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_cylinder_nets() {
        let s = SystemModel::full_shift(2);
        assert_eq!(spanning_set(&s, 1, 0.5, 0.0).unwrap().len(), 2);
        assert_eq!(separated_set(&s, 2, 0.25, 0.0).unwrap().len(), 4);
        assert_eq!(spanning_set(&s, 3, 0.75, 0.0).unwrap().len(), 1);
        assert_eq!(separated_set(&s, 3, 0.75, 0.0).unwrap().len(), 1);
    }

    #[test]
    fn shift_sum_counts_words() {
        let g = SystemModel::golden_mean();
        let v = shift_log_sum(&g, None, 5, 5).unwrap();
        assert!((v - 13f64.ln()).abs() < 1e-12);
        let w = Observable::first_symbol(vec![0.0, 1.0]);
        // words 00, 01, 10 weighted by their first symbol
        let v = shift_log_sum(&SystemModel::golden_mean(), Some(&w), 1, 2).unwrap();
        assert!((v - (2.0 + std::f64::consts::E).ln()).abs() < 1e-12);
    }

    #[test]
    fn doubling_grid_net_sizes() {
        let d = SystemModel::doubling();
        let net = spanning_set(&d, 3, 1.0 / 8.0, 1.0 / 4096.0).unwrap();
        assert!(net.len() >= 32 && net.len() <= 128, "{}", net.len());
        for pair in separated_set(&d, 3, 1.0 / 8.0, 1.0 / 4096.0)
            .unwrap()
            .windows(2)
        {
            assert!(d.dn_distance(&pair[0], &pair[1], 3).unwrap() > 1.0 / 8.0);
        }
    }

    #[test]
    fn large_radius_gives_one_point() {
        let d = SystemModel::doubling();
        assert_eq!(spanning_set(&d, 4, 0.6, 1.0 / 256.0).unwrap().len(), 1);
        assert_eq!(separated_set(&d, 4, 0.6, 1.0 / 256.0).unwrap().len(), 1);
    }
}
