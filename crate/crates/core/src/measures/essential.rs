//! Essential points, essential sets and non-wandering chains.

use crate::error::{Error, Result};
use crate::systems::{dedup_points, BoxSet, Point, Subset, SystemKind, SystemModel, Word};
use serde::Serialize;

/// Resolution of an essentiality probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialParams {
    /// Open-ball radius of the neighborhood `V(x)`.
    pub radius: f64,
    /// Orbit length followed for every probe.
    pub horizon: usize,
}

/// Outcome of [`is_essential`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EssentialVerdict {
    /// Some probe keeps returning to the ball: `witness` and its tail frequency.
    Positive { witness: Point, frequency: f64 },
    /// No probe did; this is not a proof that `x` is inessential.
    NegativeAtResolution { best_frequency: f64 },
}

impl EssentialVerdict {
    pub fn is_positive(&self) -> bool {
        matches!(self, EssentialVerdict::Positive { .. })
    }
}

/// Orbit tails `(αᵗy)_{t₀ ≤ t < H}` of a probe family, deduplicated by their starting point.
struct ProbeTails {
    horizon: usize,
    tails: Vec<(Point, Vec<Point>)>,
}

impl ProbeTails {
    fn new(host: &SystemModel, probes: &[Point], horizon: usize) -> Result<Self> {
        let t0 = horizon / 2;
        let mut starts: Vec<(Point, Point)> = Vec::with_capacity(probes.len());
        for y in probes {
            let mut p = y.clone();
            host.apply(&p)?;
            for _ in 0..t0 {
                p = host.apply_unchecked(&p);
            }
            starts.push((p, y.clone()));
        }
        starts.sort_by(|a, b| a.0.total_cmp(&b.0));
        starts.dedup_by(|a, b| a.0.approx_eq(&b.0));
        let tails = starts
            .into_iter()
            .map(|(start, y)| {
                let tail = host.orbit(&start, horizon - t0)?;
                Ok((y, tail))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProbeTails { horizon, tails })
    }

    /// Tail-window reading of `limsup δ_{y,n}(V(x)) > 0`.
    ///
    /// With `t₀ = H/2`, the running frequency over `[t₀, k)` must exceed
    /// `1/(2H)` for at least half of the `k ∈ (t₀, H]`.
    fn verdict(&self, host: &SystemModel, x: &Point, radius: f64) -> EssentialVerdict {
        let threshold = 1.0 / (2.0 * self.horizon as f64);
        let mut best = 0.0f64;
        for (y, tail) in &self.tails {
            let len = tail.len();
            let mut hits = 0usize;
            let mut above = 0usize;
            for (i, p) in tail.iter().enumerate() {
                if host.distance_unchecked(p, x) < radius {
                    hits += 1;
                }
                if hits as f64 / (i + 1) as f64 > threshold {
                    above += 1;
                }
            }
            let frequency = hits as f64 / len.max(1) as f64;
            if len > 0 && 2 * above >= len {
                return EssentialVerdict::Positive {
                    witness: y.clone(),
                    frequency,
                };
            }
            best = best.max(frequency);
        }
        EssentialVerdict::NegativeAtResolution {
            best_frequency: best,
        }
    }
}

/// Decides at resolution whether some probe's empirical measures charge the ball around `x`.
pub fn is_essential(
    host: &SystemModel,
    x: &Point,
    params: &EssentialParams,
    probes: &[Point],
) -> Result<EssentialVerdict> {
    if params.radius <= 0.0 || params.horizon < 2 {
        return Err(Error::Precondition(
            "essentiality needs radius > 0 and horizon ≥ 2".into(),
        ));
    }
    host.apply(x)?;
    let tails = ProbeTails::new(host, probes, params.horizon)?;
    Ok(tails.verdict(host, x, params.radius))
}

/// Resolution of [`essential_set`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialSetParams {
    /// Grid spacing on metric models; also the probe radius.
    pub spacing: f64,
    pub horizon: usize,
    /// Word depth on symbolic models.
    pub depth: usize,
}

impl Default for EssentialSetParams {
    fn default() -> Self {
        EssentialSetParams {
            spacing: 1.0 / 1024.0,
            horizon: 64,
            depth: 6,
        }
    }
}

/// The essential set: exact on finite maps and shifts of finite type,
/// witnessed grid candidates together with the known answer elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssentialSet {
    pub exact: bool,
    /// Essential points found (cycle nodes, cylinder representatives or grid candidates).
    pub points: Vec<Point>,
    /// Closed-set description of the whole essential set when it is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<Subset>,
    pub method: String,
}

pub fn essential_set(host: &SystemModel, params: &EssentialSetParams) -> Result<EssentialSet> {
    match &host.kind {
        SystemKind::FiniteMap { image } => {
            let nodes = periodic_nodes(image, &(0..image.len()).collect::<Vec<_>>());
            Ok(EssentialSet {
                exact: true,
                points: nodes.iter().map(|&v| Point::Node(v)).collect(),
                declared: Some(Subset::Nodes { nodes }),
                method: "cycle union".into(),
            })
        }
        SystemKind::Subshift { alphabet, .. } => {
            let rec = host.recurrent_transitions().unwrap();
            let core = SystemModel {
                kind: SystemKind::Subshift {
                    alphabet: *alphabet,
                    transitions: rec.clone(),
                },
                restriction: None,
            };
            let points = symbolic_representatives(&core, params.depth)?;
            Ok(EssentialSet {
                exact: true,
                points,
                declared: Some(Subset::Sft { transitions: rec }),
                method: "union of irreducible components".into(),
            })
        }
        SystemKind::CantorFixture => {
            let reps = cantor_representatives(params.depth);
            let probe = EssentialParams {
                radius: 0.5f64.powi(params.depth as i32),
                horizon: params.horizon,
            };
            let points = witnessed(host, &reps, &reps, &probe)?;
            Ok(EssentialSet {
                exact: false,
                points,
                declared: Some(Subset::Points {
                    points: vec![Point::Word(Word::constant(0))],
                }),
                method: format!("cylinder representatives at depth {}", params.depth),
            })
        }
        SystemKind::PiecewiseCover(c) => {
            let grid = interval_grid(c.lo(), c.hi(), params.spacing, c.circle);
            let probe = EssentialParams {
                radius: params.spacing,
                horizon: params.horizon,
            };
            let points = witnessed(host, &grid, &grid, &probe)?;
            let declared = host
                .linear_circle_degree()
                .is_some()
                .then(|| Subset::intervals(&[(0.0, 1.0)]));
            Ok(EssentialSet {
                exact: false,
                points,
                declared,
                method: grid_method(params),
            })
        }
        SystemKind::CircleRotation { .. } => {
            let grid = interval_grid(0.0, 1.0, params.spacing, true);
            let probe = EssentialParams {
                radius: params.spacing,
                horizon: params.horizon,
            };
            let points = witnessed(host, &grid, &grid, &probe)?;
            Ok(EssentialSet {
                exact: false,
                points,
                declared: Some(Subset::intervals(&[(0.0, 1.0)])),
                method: grid_method(params),
            })
        }
        SystemKind::SquareFixture => {
            let axis = interval_grid(0.0, 1.0, params.spacing, false);
            let grid: Vec<Point> = axis
                .iter()
                .flat_map(|a| {
                    axis.iter()
                        .map(move |b| Point::Pair([a.coords()[0], b.coords()[0]]))
                })
                .collect();
            let probe = EssentialParams {
                radius: params.spacing,
                horizon: params.horizon,
            };
            let points = witnessed(host, &grid, &grid, &probe)?;
            Ok(EssentialSet {
                exact: false,
                points,
                declared: Some(Subset::Boxes {
                    boxes: vec![
                        BoxSet::rect([0.0, 0.0], [1.0, 0.0]),
                        BoxSet::rect([0.0, 1.0], [1.0, 1.0]),
                    ],
                }),
                method: grid_method(params),
            })
        }
        SystemKind::LadderFixture { .. } => Err(Error::Precondition(
            "no essential-set search is implemented for the ladder fixture".into(),
        )),
    }
}

fn grid_method(params: &EssentialSetParams) -> String {
    format!(
        "grid spacing {} with horizon {}",
        params.spacing, params.horizon
    )
}

fn witnessed(
    host: &SystemModel,
    candidates: &[Point],
    probes: &[Point],
    params: &EssentialParams,
) -> Result<Vec<Point>> {
    let tails = ProbeTails::new(host, probes, params.horizon)?;
    let mut out: Vec<Point> = candidates
        .iter()
        .filter(|x| tails.verdict(host, x, params.radius).is_positive())
        .cloned()
        .collect();
    dedup_points(&mut out);
    Ok(out)
}

/// Equispaced grid on `[lo, hi]` (the right end dropped on the circle).
pub fn interval_grid(lo: f64, hi: f64, spacing: f64, circle: bool) -> Vec<Point> {
    let cells = ((hi - lo) / spacing).round().max(1.0) as usize;
    let last = if circle { cells - 1 } else { cells };
    (0..=last)
        .map(|i| Point::Real(lo + (hi - lo) * i as f64 / cells as f64))
        .collect()
}

/// One canonical continuation of every admissible word of length `depth`.
pub fn symbolic_representatives(host: &SystemModel, depth: usize) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for w in host.words(depth.max(1))? {
        let x = match host.kind {
            SystemKind::CantorFixture => Word::new(w, vec![0]),
            _ => host.extend_word(&w),
        };
        if host.contains(&Point::Word(x.clone())) {
            out.push(Point::Word(x));
        }
    }
    Ok(out)
}

fn cantor_representatives(depth: usize) -> Vec<Point> {
    symbolic_representatives(&SystemModel::cantor_fixture(), depth).unwrap_or_default()
}

fn periodic_nodes(image: &[usize], within: &[usize]) -> Vec<usize> {
    let inside = |v: usize| within.binary_search(&v).is_ok();
    let mut out: Vec<usize> = within
        .iter()
        .copied()
        .filter(|&v| {
            let mut u = v;
            for _ in 0..within.len() {
                u = image[u];
                if !inside(u) {
                    return false;
                }
                if u == v {
                    return true;
                }
            }
            false
        })
        .collect();
    out.sort_unstable();
    out
}

/// The chain `Ω₁ ⊇ Ω₂ ⊇ …` of iterated non-wandering sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonwanderingReport {
    pub levels: Vec<Vec<usize>>,
    /// First level equal to its successor, if reached.
    pub stabilized_at: Option<usize>,
}

/// Non-wandering chain of a finite map, where `Ω(α|K)` is the set of periodic points of `α|K`.
pub fn nonwandering_chain(host: &SystemModel, max_levels: usize) -> Result<NonwanderingReport> {
    let SystemKind::FiniteMap { image } = &host.kind else {
        return Err(Error::Precondition(
            "the exact non-wandering chain needs a finite map".into(),
        ));
    };
    let mut current: Vec<usize> = (0..image.len()).collect();
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut stabilized_at = None;
    for level in 1..=max_levels.max(1) {
        let next = periodic_nodes(image, &current);
        if levels.last() == Some(&next) {
            stabilized_at = Some(level - 1);
            break;
        }
        levels.push(next.clone());
        current = next;
    }
    Ok(NonwanderingReport {
        levels,
        stabilized_at,
    })
}

/// Return of a Cantor-fixture cylinder to itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CantorReturn {
    pub word: Vec<u8>,
    /// Smallest `t` with `[w] ∩ σ⁻ᵗ[w] ≠ ∅`, certified by the admissible word `w 0^(t−|w|) w`.
    pub return_time: Option<usize>,
}

/// Return times of every admissible cylinder of depth `1..=depth` of the Cantor fixture.
///
/// A cylinder that returns to itself contains a non-wandering point's neighborhood
/// witness; all of them returning at every depth makes every point non-wandering.
pub fn cantor_nonwandering(depth: usize, max_gap: usize) -> Vec<CantorReturn> {
    let host = SystemModel::cantor_fixture();
    let mut out = Vec::new();
    for m in 1..=depth {
        for w in host.words(m).unwrap_or_default() {
            let return_time = (0..=max_gap).find_map(|gap| {
                let mut u = w.clone();
                u.extend(std::iter::repeat(0).take(gap));
                u.extend_from_slice(&w);
                crate::systems::cantor_prefix_admissible(&u).then_some(w.len() + gap)
            });
            out.push(CantorReturn {
                word: w,
                return_time,
            });
        }
    }
    out
}

/// Visit counts of a Cantor cylinder along trajectories of length `2^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CantorFrequency {
    pub n: u32,
    pub m: usize,
    pub word: Vec<u8>,
    pub max_visits: usize,
    /// `m(n+1)/2^n`.
    pub bound: f64,
}

impl CantorFrequency {
    pub fn frequency(&self) -> f64 {
        self.max_visits as f64 / (1u64 << self.n) as f64
    }

    pub fn holds(&self) -> bool {
        self.frequency() <= self.bound + 1e-15
    }
}

/// Largest visit count of each depth-`m` cylinder containing a `1`, over
/// the trajectories that greedily pack that cylinder or ones.
pub fn cantor_frequency_bound(n: u32, m: usize) -> Vec<CantorFrequency> {
    let host = SystemModel::cantor_fixture();
    let len = 1usize << n;
    let bound = m as f64 * (n as f64 + 1.0) / len as f64;
    let mut out = Vec::new();
    for w in host.words(m).unwrap_or_default() {
        if !w.contains(&1) {
            continue;
        }
        let packed = greedy_sequence(len + m, |seq| {
            let ok = seq.try_push_all(&w);
            if !ok {
                seq.push_zero();
            }
        });
        let dense = greedy_sequence(len + m, |seq| {
            if !seq.try_push_all(&[1]) {
                seq.push_zero();
            }
        });
        let prefixed = greedy_sequence(len + m, |seq| {
            if seq.len() == 0 {
                if !seq.try_push_all(&w) {
                    seq.push_zero();
                }
            } else if !seq.try_push_all(&[1]) {
                seq.push_zero();
            }
        });
        let max_visits = [packed, dense, prefixed]
            .iter()
            .map(|s| count_visits(s, &w, len))
            .max()
            .unwrap_or(0);
        out.push(CantorFrequency {
            n,
            m,
            word: w,
            max_visits,
            bound,
        });
    }
    out
}

fn count_visits(seq: &[u8], w: &[u8], len: usize) -> usize {
    (0..len)
        .filter(|&i| i + w.len() <= seq.len() && seq[i..i + w.len()] == *w)
        .count()
}

/// Incrementally checked Cantor-admissible sequence.
struct Builder {
    symbols: Vec<u8>,
    ones: Vec<usize>,
}

impl Builder {
    fn len(&self) -> usize {
        self.symbols.len()
    }

    fn push_zero(&mut self) {
        self.symbols.push(0);
        self.ones.push(*self.ones.last().unwrap());
    }

    /// Appends `w` if the result stays admissible.
    fn try_push_all(&mut self, w: &[u8]) -> bool {
        let keep = self.symbols.len();
        for &s in w {
            self.symbols.push(s);
            self.ones.push(self.ones.last().unwrap() + s as usize);
            if !self.last_window_ok() {
                self.symbols.truncate(keep);
                self.ones.truncate(keep + 1);
                return false;
            }
        }
        true
    }

    fn last_window_ok(&self) -> bool {
        let end = self.symbols.len();
        let mut j = 1u32;
        loop {
            let start = end.saturating_sub(1usize << j);
            if self.ones[end] - self.ones[start] > j as usize {
                return false;
            }
            if start == 0 {
                return true;
            }
            j += 1;
        }
    }
}

fn greedy_sequence(len: usize, mut step: impl FnMut(&mut Builder)) -> Vec<u8> {
    let mut b = Builder {
        symbols: Vec::with_capacity(len + 8),
        ones: vec![0],
    };
    while b.len() < len {
        step(&mut b);
    }
    b.symbols
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_top_fixed_point_is_essential() {
        let host = SystemModel::flat_top();
        let probes = interval_grid(0.0, 1.0, 1.0 / 64.0, false);
        let p = EssentialParams {
            radius: 0.05,
            horizon: 64,
        };
        let v = is_essential(&host, &Point::Real(1.0), &p, &probes).unwrap();
        assert!(matches!(v, EssentialVerdict::Positive { frequency, .. } if frequency == 1.0));
        let v = is_essential(&host, &Point::Real(0.25), &p, &probes).unwrap();
        assert!(!v.is_positive());
    }

    #[test]
    fn finite_map_chain_stabilizes_immediately() {
        let host = SystemModel::finite_map(vec![1, 0, 0]).unwrap();
        let r = nonwandering_chain(&host, 5).unwrap();
        assert_eq!(r.levels, vec![vec![0, 1]]);
        assert_eq!(r.stabilized_at, Some(1));
        let e = essential_set(&host, &EssentialSetParams::default()).unwrap();
        assert_eq!(e.points, vec![Point::Node(0), Point::Node(1)]);
    }

    #[test]
    fn cantor_cylinders_return() {
        assert!(cantor_nonwandering(4, 64)
            .iter()
            .all(|r| r.return_time.is_some()));
    }

    #[test]
    fn cantor_counting_bound_small() {
        for f in cantor_frequency_bound(6, 2) {
            assert!(f.holds(), "{f:?}");
        }
    }

    #[test]
    fn builder_agrees_with_prefix_check() {
        let s = greedy_sequence(200, |b| {
            if !b.try_push_all(&[1]) {
                b.push_zero();
            }
        });
        assert!(crate::systems::cantor_prefix_admissible(&s));
        let mut t = s.clone();
        let i = t.iter().position(|&c| c == 0).unwrap();
        t[i] = 1;
        assert!(!crate::systems::cantor_prefix_admissible(&t));
    }
}

#[cfg(test)]
mod set_tests {
    use super::*;

    #[test]
    fn flat_top_essential_set_is_both_fixed_points() {
        let e = essential_set(&SystemModel::flat_top(), &EssentialSetParams::default()).unwrap();
        assert_eq!(e.points, vec![Point::Real(0.0), Point::Real(1.0)]);
    }

    #[test]
    fn cantor_essential_set_is_the_zero_sequence() {
        let params = EssentialSetParams {
            depth: 5,
            ..Default::default()
        };
        let e = essential_set(&SystemModel::cantor_fixture(), &params).unwrap();
        assert_eq!(e.points, vec![Point::Word(Word::constant(0))]);
    }
}
