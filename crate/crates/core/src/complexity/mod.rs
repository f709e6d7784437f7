//! Metric complexity: spanning and separated nets, topological entropy and
//! pressure, inverse rami-rate, forward entropy, essential spectral potential
//! and the pull-back net property.

mod nets;
mod preimage;
mod star;

pub use nets::{
    sample_strands, separated_set, separated_word_length, spanning_set, spanning_word_length,
    NetKind, Strand, MAX_SAMPLE,
};
pub use preimage::{
    cocycle_spectral_potential, essential_spectral_potential, inverse_rami_rate, tree_sample,
    PreimageParams,
};
pub use star::{check_property_star, non_contracting_radius, PropertyStar};

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::systems::{Point, SystemModel};
use crate::trace::{
    ext_f64, fmt_value, growth_fit, linear_slope, BoundFlag, EstimateTrace, TraceCell,
};
use nets::{shift_log_sum, word_net, OrbitTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Discretization of the double limit `ε → 0`, `n → ∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSchedule {
    /// Strictly decreasing radii.
    pub eps_ladder: Vec<f64>,
    /// Strictly increasing orbit lengths.
    pub n_ladder: Vec<usize>,
    /// Sample spacing used at each radius (metric models).
    pub resolution: Vec<f64>,
}

impl NetSchedule {
    pub fn new(eps_ladder: Vec<f64>, n_ladder: Vec<usize>, resolution: Vec<f64>) -> Result<Self> {
        let s = NetSchedule {
            eps_ladder,
            n_ladder,
            resolution,
        };
        s.validate()?;
        Ok(s)
    }

    /// Radii `2⁻⁴ … 2⁻¹⁰`, `n ≤ 20` on shifts and `n ≤ 14` elsewhere, spacing `ε/2¹⁴` (at least `2⁻¹⁸`).
    pub fn for_host(host: &SystemModel) -> Self {
        let eps_ladder: Vec<f64> = (4..=10).map(|k| 0.5f64.powi(k)).collect();
        let n_max = if host.is_symbolic() { 20 } else { 14 };
        let resolution = eps_ladder
            .iter()
            .map(|e| (e / 16384.0).max(0.5f64.powi(18)))
            .collect();
        NetSchedule {
            eps_ladder,
            n_ladder: (1..=n_max).collect(),
            resolution,
        }
    }

    /// Same ladders with the radii replaced; spacing follows the default rule.
    pub fn with_eps(mut self, eps_ladder: Vec<f64>) -> Result<Self> {
        self.resolution = eps_ladder
            .iter()
            .map(|e| (e / 16384.0).max(0.5f64.powi(18)))
            .collect();
        self.eps_ladder = eps_ladder;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.n_ladder = (1..=n_max).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_ladder.is_empty() || self.n_ladder.is_empty() {
            return Err(Error::Schedule("ladders must not be empty".into()));
        }
        if self.eps_ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Schedule("radii must be positive and finite".into()));
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Schedule("radii must be strictly decreasing".into()));
        }
        if self.n_ladder[0] == 0 || self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schedule(
                "orbit lengths must be positive and strictly increasing".into(),
            ));
        }
        if self.resolution.len() != self.eps_ladder.len()
            || self.resolution.iter().any(|r| !(*r > 0.0))
        {
            return Err(Error::Schedule(
                "one positive sample spacing per radius is required".into(),
            ));
        }
        Ok(())
    }

    fn n_max(&self) -> usize {
        *self.n_ladder.last().unwrap()
    }
}

/// One `(n, ε)` cell of a net computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetRow {
    pub n: usize,
    pub epsilon: f64,
    /// `(1/n) ln` of the spanning sum.
    #[serde(with = "ext_f64::option")]
    pub spanning_value: Option<f64>,
    /// `(1/n) ln` of the separated sum.
    #[serde(with = "ext_f64::option")]
    pub separated_value: Option<f64>,
    pub spanning_size: usize,
    pub separated_size: usize,
    /// Whether the sample resolves `d_n` at this radius.
    pub resolved: bool,
    /// Not computed: a finer radius already carries the headline.
    #[serde(default)]
    pub skipped: bool,
    pub bound: BoundFlag,
}

impl NetRow {
    fn empty(n: usize, epsilon: f64) -> Self {
        NetRow {
            n,
            epsilon,
            spanning_value: None,
            separated_value: None,
            spanning_size: 0,
            separated_size: 0,
            resolved: false,
            skipped: false,
            bound: BoundFlag::Estimate,
        }
    }
}

/// Spanning and separated estimates of one growth rate along a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetEstimate {
    pub schedule: NetSchedule,
    pub rows: Vec<NetRow>,
    /// Radius the headline was read at.
    pub headline_epsilon: f64,
    /// Headline from the spanning sums; cells are the spanning values at the headline radius.
    pub spanning: EstimateTrace,
    /// Lower companion from the separated sums.
    pub separated: EstimateTrace,
    /// Counts are exact (cylinder words) rather than greedy over a sample.
    pub exact_counts: bool,
}

impl NetEstimate {
    pub fn headline(&self) -> f64 {
        self.spanning.headline
    }

    pub fn lower_companion(&self) -> f64 {
        self.separated.headline
    }

    /// CSV table with columns `n, epsilon, spanning_value, separated_value, bound_flags`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "n",
            "epsilon",
            "spanning_value",
            "separated_value",
            "bound_flags",
        ])?;
        for r in &self.rows {
            let flag = match (r.resolved, r.bound) {
                (false, _) if r.skipped => "skipped",
                (false, _) => "unresolved",
                (true, BoundFlag::Upper) => "upper",
                (true, BoundFlag::Lower) => "lower",
                (true, BoundFlag::Estimate) => "estimate",
            };
            w.write_record([
                r.n.to_string(),
                fmt_value(r.epsilon),
                r.spanning_value.map(fmt_value).unwrap_or_default(),
                r.separated_value.map(fmt_value).unwrap_or_default(),
                flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest number of resolved orbit lengths a radius needs to carry the headline.
const MIN_FIT: usize = 8;

/// Growth rate of `z_n`: the linear coefficient of `z_n ≈ p·n + q·ln n + r` when
/// enough points are available, otherwise a least-squares slope.
fn growth_rate(points: &[(usize, f64)]) -> (f64, &'static str) {
    let last = points.iter().map(|p| p.0).max().unwrap_or(0);
    let pts: Vec<(usize, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 >= 2.max(last / 2))
        .collect();
    if pts.iter().any(|p| p.1 == f64::NEG_INFINITY) {
        return (f64::NEG_INFINITY, "degenerate sums");
    }
    if pts.len() >= 4 {
        if let Some((p, _, _)) = growth_fit(&pts) {
            return (
                p,
                "fit z_n = p n + q ln n + r over the upper half of resolved n",
            );
        }
    }
    if let Some(p) = linear_slope(&pts) {
        return (p, "least-squares slope over the upper half of resolved n");
    }
    match points.last() {
        Some(&(n, z)) => (z / n as f64, "single cell"),
        None => (f64::NAN, "no resolved cell"),
    }
}

/// `P(α, ln a)` on the (restricted) host; `a = None` gives the topological entropy.
pub fn topological_pressure(
    host: &SystemModel,
    a: Option<&Observable>,
    schedule: &NetSchedule,
) -> Result<NetEstimate> {
    schedule.validate()?;
    host.validate()?;
    let log_weight = match a {
        Some(a) => {
            a.check_host(host)?;
            Some(a.clone().ln())
        }
        None => None,
    };
    let (rows, exact) = if host.is_symbolic() {
        (shift_rows(host, log_weight.as_ref(), schedule)?, true)
    } else {
        (metric_rows(host, log_weight.as_ref(), schedule)?, false)
    };
    let quantity = if a.is_some() { "pressure" } else { "entropy" };
    summarize(quantity, schedule, rows, exact)
}

/// `h(α)` on the (restricted) host.
pub fn topological_entropy(host: &SystemModel, schedule: &NetSchedule) -> Result<NetEstimate> {
    topological_pressure(host, None, schedule)
}

fn shift_rows(
    host: &SystemModel,
    log_weight: Option<&Observable>,
    schedule: &NetSchedule,
) -> Result<Vec<NetRow>> {
    let cells: Vec<(usize, f64)> = schedule
        .eps_ladder
        .iter()
        .flat_map(|&e| schedule.n_ladder.iter().map(move |&n| (n, e)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, eps)| {
            let span_len = spanning_word_length(n, eps);
            let sep_len = separated_word_length(n, eps);
            let span = shift_sum(host, log_weight, n, span_len)?;
            let sep = shift_sum(host, log_weight, n, sep_len)?;
            Ok(NetRow {
                spanning_value: Some(span / n as f64),
                separated_value: Some(sep / n as f64),
                spanning_size: word_net_size(host, span_len)?,
                separated_size: word_net_size(host, sep_len)?,
                resolved: true,
                bound: if log_weight.is_none() {
                    BoundFlag::Upper
                } else {
                    BoundFlag::Estimate
                },
                ..NetRow::empty(n, eps)
            })
        })
        .collect()
}

fn shift_sum(
    host: &SystemModel,
    log_weight: Option<&Observable>,
    n: usize,
    len: usize,
) -> Result<f64> {
    if len > 0 {
        return shift_log_sum(host, log_weight, n, len);
    }
    let rep = word_net(host, 0)?.remove(0);
    Ok(match log_weight {
        None => 0.0,
        Some(g) => {
            let mut p = rep;
            let mut total = 0.0;
            for _ in 0..n {
                total += g.eval(&p);
                p = host.apply_unchecked(&p);
            }
            total
        }
    })
}

fn word_net_size(host: &SystemModel, len: usize) -> Result<usize> {
    if len == 0 {
        return Ok(1);
    }
    let v = shift_log_sum(host, None, len, len)?.exp().round();
    Ok(if v > usize::MAX as f64 {
        usize::MAX
    } else {
        v as usize
    })
}

fn metric_rows(
    host: &SystemModel,
    log_weight: Option<&Observable>,
    schedule: &NetSchedule,
) -> Result<Vec<NetRow>> {
    over_radii(schedule, |k, eps| {
        let strands = sample_strands(host, schedule.resolution[k])?;
        let table = OrbitTable::build(host, &strands, schedule.n_max(), log_weight)?;
        let cutoff = schedule
            .n_ladder
            .iter()
            .position(|&n| !table.resolves(n, eps))
            .unwrap_or(schedule.n_ladder.len());
        let mut rows: Vec<NetRow> = schedule.n_ladder[..cutoff]
            .par_iter()
            .map(|&n| {
                let span = table.greedy(n, eps, NetKind::Spanning);
                let sep = table.greedy(n, eps, NetKind::Separated);
                NetRow {
                    spanning_value: Some(table.log_sum(&span, n) / n as f64),
                    separated_value: Some(table.log_sum(&sep, n) / n as f64),
                    spanning_size: span.len(),
                    separated_size: sep.len(),
                    resolved: true,
                    ..NetRow::empty(n, eps)
                }
            })
            .collect();
        rows.extend(
            schedule.n_ladder[cutoff..]
                .iter()
                .map(|&n| NetRow::empty(n, eps)),
        );
        Ok(rows)
    })
}

/// Runs `cells` from the finest radius outwards and stops at the first radius with
/// enough resolved orbit lengths to carry the headline; coarser radii are marked skipped.
fn over_radii(
    schedule: &NetSchedule,
    mut cells: impl FnMut(usize, f64) -> Result<Vec<NetRow>>,
) -> Result<Vec<NetRow>> {
    let need = MIN_FIT.min(schedule.n_ladder.len());
    let mut rows = Vec::new();
    let mut done = false;
    for (k, &eps) in schedule.eps_ladder.iter().enumerate().rev() {
        if done {
            rows.extend(schedule.n_ladder.iter().map(|&n| NetRow {
                skipped: true,
                ..NetRow::empty(n, eps)
            }));
            continue;
        }
        let batch = cells(k, eps)?;
        done = batch.iter().filter(|r| r.resolved).count() >= need;
        rows.extend(batch);
    }
    rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon).then(a.n.cmp(&b.n)));
    Ok(rows)
}

/// Radius carrying the headline: the finest one with at least [`MIN_FIT`] resolved
/// orbit lengths, else the one with the most.
fn headline_radius(schedule: &NetSchedule, rows: &[NetRow]) -> f64 {
    let resolved = |e: f64| rows.iter().filter(|r| r.epsilon == e && r.resolved).count();
    schedule
        .eps_ladder
        .iter()
        .rev()
        .copied()
        .find(|&e| resolved(e) >= MIN_FIT.min(schedule.n_ladder.len()))
        .unwrap_or_else(|| {
            schedule
                .eps_ladder
                .iter()
                .copied()
                .rev()
                .max_by_key(|&e| resolved(e))
                .unwrap_or(schedule.eps_ladder[0])
        })
}

fn summarize(
    quantity: &str,
    schedule: &NetSchedule,
    rows: Vec<NetRow>,
    exact: bool,
) -> Result<NetEstimate> {
    let eps = headline_radius(schedule, &rows);
    let at: Vec<&NetRow> = rows
        .iter()
        .filter(|r| r.epsilon == eps && r.resolved)
        .collect();
    let trace = |which: fn(&NetRow) -> Option<f64>, label: &str| {
        let cells: Vec<TraceCell> = at
            .iter()
            .filter_map(|r| {
                which(r).map(|v| TraceCell {
                    n: r.n,
                    epsilon: Some(eps),
                    value: v,
                    bound: r.bound,
                })
            })
            .collect();
        let sums: Vec<(usize, f64)> = cells.iter().map(|c| (c.n, c.value * c.n as f64)).collect();
        let (rate, how) = growth_rate(&sums);
        EstimateTrace {
            quantity: quantity.into(),
            method: format!(
                "{label} {}",
                if exact {
                    "cylinder-word sums"
                } else {
                    "greedy nets over the sample"
                }
            ),
            cells,
            headline: rate,
            headline_bound: BoundFlag::Estimate,
            secondary: None,
            extrapolation: how.into(),
            metadata: Default::default(),
        }
        .with_meta("epsilon", eps)
        .with_meta("schedule", schedule)
        .with_meta(
            "certified",
            if exact {
                "exact cylinder counts"
            } else {
                "over the sample only"
            },
        )
    };
    let spanning = trace(|r| r.spanning_value, "spanning");
    let mut separated = trace(|r| r.separated_value, "separated");
    separated.headline_bound = BoundFlag::Estimate;
    let mut spanning = spanning;
    spanning.secondary = Some(separated.headline);
    Ok(NetEstimate {
        schedule: schedule.clone(),
        rows,
        headline_epsilon: eps,
        spanning,
        separated,
        exact_counts: exact,
    })
}

/// `γ(α)`: growth of the smallest forward image `|αⁿ(E)|` over the generated spanning sets.
///
/// Per cell the minimum is taken over the greedy net and, where the pull-back
/// property is certified at that radius, the pulled-back net. Reported as an
/// upper estimate.
pub fn forward_entropy(host: &SystemModel, schedule: &NetSchedule) -> Result<NetEstimate> {
    schedule.validate()?;
    host.validate()?;
    let rows = over_radii(schedule, |k, eps| {
        let star = check_property_star(host, eps, 3)?;
        let pulled = |n: usize| -> Result<Option<usize>> {
            if !star.certified {
                return Ok(None);
            }
            Ok(Some(star::images_of_pullback(host, &star.net, n)?))
        };
        let mut rows = Vec::new();
        if host.is_symbolic() {
            for &n in &schedule.n_ladder {
                let len = spanning_word_length(n, eps);
                let greedy = if word_net_size(host, len)? <= 1 << 16 {
                    let net = word_net(host, len)?;
                    Some(distinct_shifted(host, &net, n))
                } else {
                    None
                };
                rows.push(gamma_row(n, eps, greedy, pulled(n)?, true));
            }
            return Ok(rows);
        }
        let strands = sample_strands(host, schedule.resolution[k])?;
        let table = OrbitTable::build(host, &strands, schedule.n_max(), None)?;
        for &n in &schedule.n_ladder {
            if !table.resolves(n, eps) {
                rows.push(gamma_row(n, eps, None, None, false));
                continue;
            }
            let net = table.greedy(n, eps, NetKind::Spanning);
            rows.push(gamma_row(
                n,
                eps,
                Some(table.distinct_images(host, &net, n)),
                pulled(n)?,
                true,
            ));
        }
        Ok(rows)
    })?;
    let exact = host.is_symbolic();
    let mut est = summarize("forward_entropy", schedule, rows, exact)?;
    est.spanning.headline = est.spanning.headline.max(0.0);
    est.spanning
        .extrapolation
        .push_str("; clamped at 0; upper estimate only");
    Ok(est)
}

fn gamma_row(
    n: usize,
    eps: f64,
    greedy: Option<usize>,
    pulled: Option<usize>,
    resolved: bool,
) -> NetRow {
    let best = match (greedy, pulled) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let value = best.map(|c| (c.max(1) as f64).ln() / n as f64);
    NetRow {
        spanning_value: value,
        separated_value: value,
        spanning_size: greedy.unwrap_or(0),
        separated_size: pulled.unwrap_or(0),
        resolved: resolved && value.is_some(),
        ..NetRow::empty(n, eps)
    }
}

fn distinct_shifted(host: &SystemModel, net: &[Point], n: usize) -> usize {
    let mut images: Vec<Point> = net
        .iter()
        .map(|p| {
            let mut q = p.clone();
            for _ in 0..n {
                q = host.apply_unchecked(&q);
            }
            q
        })
        .collect();
    images.sort_by(|a, b| a.total_cmp(b));
    images.dedup();
    images.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_rejects_non_monotone_ladders() {
        assert!(matches!(
            NetSchedule::new(vec![0.1, 0.2], vec![1, 2], vec![0.01, 0.01]),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            NetSchedule::new(vec![0.2, 0.1], vec![2, 2], vec![0.01, 0.01]),
            Err(Error::Schedule(_))
        ));
        assert!(NetSchedule::new(vec![0.2, 0.1], vec![1, 2], vec![0.01, 0.01]).is_ok());
    }

    #[test]
    fn golden_mean_entropy() {
        let g = SystemModel::golden_mean();
        let est = topological_entropy(&g, &NetSchedule::for_host(&g)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(
            (est.headline() - phi.ln()).abs() < 0.02,
            "{}",
            est.headline()
        );
        assert!(est
            .rows
            .iter()
            .all(|r| r.spanning_value.unwrap() >= phi.ln() - 1e-12));
    }

    #[test]
    fn entropy_equals_pressure_of_one() {
        let g = SystemModel::golden_mean();
        let s = NetSchedule::for_host(&g);
        let h = topological_entropy(&g, &s).unwrap();
        let p = topological_pressure(&g, Some(&Observable::constant(1.0)), &s).unwrap();
        assert!((h.headline() - p.headline()).abs() < 1e-12);
    }

    #[test]
    fn doubling_entropy() {
        let d = SystemModel::doubling();
        let est = topological_entropy(&d, &NetSchedule::for_host(&d)).unwrap();
        assert!(
            (est.headline() - 2f64.ln()).abs() < 0.05,
            "{} at {}",
            est.headline(),
            est.headline_epsilon
        );
        assert!((est.lower_companion() - 2f64.ln()).abs() < 0.05);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let g = SystemModel::full_shift(2);
        let s = NetSchedule::new(vec![0.25, 0.125], vec![1, 2, 3], vec![1e-3, 1e-3]).unwrap();
        let est = topological_entropy(&g, &s).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("n,epsilon,spanning_value,separated_value,bound_flags"));
    }
}
