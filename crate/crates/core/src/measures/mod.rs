//! Invariant and empirical measures, entropies, essential and non-wandering
//! sets, and the exact maximum of ergodic averages.

mod essential;
mod karp;

pub use essential::{
    cantor_frequency_bound, cantor_nonwandering, essential_set, interval_grid, is_essential,
    nonwandering_chain, symbolic_representatives, CantorFrequency, CantorReturn, EssentialParams,
    EssentialSet, EssentialSetParams, EssentialVerdict, NonwanderingReport,
};
pub use karp::{max_cycle_mean, max_ergodic_average, ErgodicMaximum};

use crate::error::{Error, Result};
use crate::graph;
use crate::observable::Observable;
use crate::systems::{Point, SystemKind, SystemModel, TOL};
use serde::{Deserialize, Serialize};

/// Default cap on the cylinder depth used when integrating against Markov measures.
pub const DEFAULT_MAX_DEPTH: usize = 16;

/// The concrete measure families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum MeasureKind {
    Markov {
        stationary: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    PeriodicOrbit {
        points: Vec<Point>,
    },
    Dirac {
        point: Point,
    },
    /// Lebesgue measure on the circle (invariant for rotations and `x ↦ kx mod 1`).
    Lebesgue,
}

/// An α-invariant Borel probability measure from one of the supported families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasure {
    pub host: SystemModel,
    pub kind: MeasureKind,
}

/// The empirical measure `δ_{y,n} = (1/n) Σ_{i<n} δ_{αⁱy}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub host: SystemModel,
    pub base: Point,
    pub horizon: usize,
    atoms: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new(host: &SystemModel, base: Point, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Precondition(
                "empirical measure needs horizon ≥ 1".into(),
            ));
        }
        let atoms = host.orbit(&base, horizon)?;
        Ok(EmpiricalMeasure {
            host: host.clone(),
            base,
            horizon,
            atoms,
        })
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn integrate(&self, f: &Observable) -> f64 {
        self.atoms.iter().map(|p| f.eval(p)).sum::<f64>() / self.horizon as f64
    }

    /// Mass of the set described by `inside`.
    pub fn mass(&self, inside: impl Fn(&Point) -> bool) -> f64 {
        self.atoms.iter().filter(|p| inside(p)).count() as f64 / self.horizon as f64
    }
}

/// Builds the Markov measure of a stochastic matrix on a shift of finite type.
///
/// The stationary vector is the dominant left fixed vector, found by power
/// iteration on the lazy chain `(I + P)/2` down to an `ℓ¹` residual of `1e-14`.
pub fn markov_measure(host: &SystemModel, transition: Vec<Vec<f64>>) -> Result<InvariantMeasure> {
    let t = host.transitions().ok_or_else(|| {
        Error::Precondition("Markov measures live on shifts of finite type".into())
    })?;
    let k = t.len();
    if transition.len() != k || transition.iter().any(|r| r.len() != k) {
        return Err(Error::NotStochastic(format!("expected a {k}×{k} matrix")));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0 + TOL).contains(&p)) {
            return Err(Error::NotStochastic(format!(
                "row {i} has an entry outside [0,1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 && t[i][j] == 0 {
                return Err(Error::NotStochastic(format!(
                    "transition {i}→{j} is not admissible"
                )));
            }
        }
    }
    let adj: Vec<Vec<usize>> = transition
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let closed = graph::closed_classes(&adj);
    if closed.len() > 1 {
        return Err(Error::Reducible { classes: closed });
    }
    let stationary = stationary_vector(&transition)?;
    Ok(InvariantMeasure {
        host: host.clone(),
        kind: MeasureKind::Markov {
            stationary,
            transition,
        },
    })
}

/// Bernoulli measure with symbol probabilities `probs` on a full shift.
pub fn bernoulli(host: &SystemModel, probs: &[f64]) -> Result<InvariantMeasure> {
    markov_measure(host, vec![probs.to_vec(); probs.len()])
}

fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..2_000_000 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                next[j] += pi[i] * p[i][j];
            }
        }
        let lazy: Vec<f64> = (0..k).map(|j| 0.5 * (pi[j] + next[j])).collect();
        let s: f64 = lazy.iter().sum();
        let lazy: Vec<f64> = lazy.iter().map(|v| v / s).collect();
        let residual: f64 = (0..k).map(|j| (lazy[j] - pi[j]).abs()).sum();
        pi = lazy;
        if residual < 1e-14 {
            let mut check = vec![0.0; k];
            for i in 0..k {
                for j in 0..k {
                    check[j] += pi[i] * p[i][j];
                }
            }
            if (0..k).map(|j| (check[j] - pi[j]).abs()).sum::<f64>() < 1e-12 {
                return Ok(pi);
            }
        }
    }
    Err(Error::NotStochastic(
        "power iteration for the stationary vector did not converge".into(),
    ))
}

/// The invariant measure equidistributed on the periodic orbit through `point`.
pub fn periodic_orbit(host: &SystemModel, point: Point) -> Result<InvariantMeasure> {
    let mut points = vec![point.clone()];
    let mut p = host.apply(&point)?;
    while !p.approx_eq(&point) {
        if points.len() > 1_000_000 {
            return Err(Error::Precondition(format!(
                "{point} is not periodic within 10⁶ steps"
            )));
        }
        points.push(p.clone());
        p = host.apply_unchecked(&p);
    }
    if points.len() == 1 {
        return Ok(InvariantMeasure {
            host: host.clone(),
            kind: MeasureKind::Dirac { point },
        });
    }
    Ok(InvariantMeasure {
        host: host.clone(),
        kind: MeasureKind::PeriodicOrbit { points },
    })
}

/// Dirac measure at a fixed point.
pub fn dirac(host: &SystemModel, point: Point) -> Result<InvariantMeasure> {
    if !host.apply(&point)?.approx_eq(&point) {
        return Err(Error::Precondition(format!("{point} is not a fixed point")));
    }
    Ok(InvariantMeasure {
        host: host.clone(),
        kind: MeasureKind::Dirac { point },
    })
}

/// Lebesgue measure on a circle host where it is invariant.
pub fn lebesgue(host: &SystemModel) -> Result<InvariantMeasure> {
    if lebesgue_degree(host).is_none() {
        return Err(Error::Precondition(
            "Lebesgue measure is invariant only for rotations and x ↦ kx mod 1".into(),
        ));
    }
    Ok(InvariantMeasure {
        host: host.clone(),
        kind: MeasureKind::Lebesgue,
    })
}

fn lebesgue_degree(host: &SystemModel) -> Option<u32> {
    match &host.kind {
        SystemKind::CircleRotation { .. } => Some(1),
        _ => host.linear_circle_degree(),
    }
}

impl InvariantMeasure {
    /// Mass of the cylinder `[word]`.
    pub fn cylinder_mass(&self, word: &[u8]) -> Result<f64> {
        match &self.kind {
            MeasureKind::Markov {
                stationary,
                transition,
            } => {
                let Some(&first) = word.first() else {
                    return Ok(1.0);
                };
                let mut m = stationary[first as usize];
                for p in word.windows(2) {
                    m *= transition[p[0] as usize][p[1] as usize];
                }
                Ok(m)
            }
            MeasureKind::PeriodicOrbit { points } => {
                let hits = points.iter().filter(|p| word_matches(p, word)).count();
                Ok(hits as f64 / points.len() as f64)
            }
            MeasureKind::Dirac { point } => Ok(if word_matches(point, word) { 1.0 } else { 0.0 }),
            MeasureKind::Lebesgue => Err(Error::Precondition(
                "cylinder masses need a symbolic measure".into(),
            )),
        }
    }

    /// Atoms of an atomic measure with their weights.
    pub fn atoms(&self) -> Option<Vec<(Point, f64)>> {
        match &self.kind {
            MeasureKind::PeriodicOrbit { points } => {
                let w = 1.0 / points.len() as f64;
                Some(points.iter().map(|p| (p.clone(), w)).collect())
            }
            MeasureKind::Dirac { point } => Some(vec![(point.clone(), 1.0)]),
            _ => None,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            MeasureKind::Markov { .. } => "markov",
            MeasureKind::PeriodicOrbit { .. } => "periodic_orbit",
            MeasureKind::Dirac { .. } => "dirac",
            MeasureKind::Lebesgue => "lebesgue",
        }
    }

    /// Whether `μ(Y) = 1` for the host's restriction, checked on the support.
    pub fn supported_in(&self, y: &crate::systems::Subset) -> Result<bool> {
        match &self.kind {
            MeasureKind::Markov { transition, .. } => match y {
                crate::systems::Subset::Sft { transitions } => {
                    Ok(transition.iter().enumerate().all(|(i, r)| {
                        r.iter()
                            .enumerate()
                            .all(|(j, &p)| p == 0.0 || transitions[i][j] == 1)
                    }))
                }
                _ => Err(Error::Precondition(
                    "support test of a Markov measure needs an SFT subset".into(),
                )),
            },
            _ => match self.atoms() {
                Some(a) => Ok(a.iter().all(|(p, _)| y.contains(p))),
                None => Err(Error::Precondition(
                    "support test not available for this measure".into(),
                )),
            },
        }
    }
}

fn word_matches(p: &Point, word: &[u8]) -> bool {
    match p {
        Point::Word(w) => word.iter().enumerate().all(|(i, &s)| w.symbol(i) == s),
        _ => false,
    }
}

/// Kolmogorov–Sinai entropy in closed form.
pub fn ks_entropy(mu: &InvariantMeasure) -> Result<f64> {
    match &mu.kind {
        MeasureKind::Markov {
            stationary,
            transition,
        } => {
            let mut h = 0.0;
            for (i, row) in transition.iter().enumerate() {
                for &p in row {
                    if p > 0.0 {
                        h -= stationary[i] * p * p.ln();
                    }
                }
            }
            Ok(h)
        }
        MeasureKind::PeriodicOrbit { .. } | MeasureKind::Dirac { .. } => Ok(0.0),
        MeasureKind::Lebesgue => {
            let k = lebesgue_degree(&mu.host)
                .ok_or_else(|| Error::Precondition("Lebesgue on a non-linear host".into()))?;
            Ok((k as f64).ln())
        }
    }
}

/// `μ[f]`, exact for cylinder functions against Markov measures and for atomic measures.
pub fn integrate(mu: &InvariantMeasure, f: &Observable) -> Result<f64> {
    integrate_with_depth(mu, f, DEFAULT_MAX_DEPTH)
}

/// [`integrate`] with an explicit cylinder truncation.
pub fn integrate_with_depth(
    mu: &InvariantMeasure,
    f: &Observable,
    max_depth: usize,
) -> Result<f64> {
    match &mu.kind {
        MeasureKind::Markov { .. } => {
            if !f.is_locally_constant() {
                return Err(Error::Observable(
                    "Markov integration needs a cylinder function".into(),
                ));
            }
            let depth = f.depth().max(1);
            if depth > max_depth {
                return Err(Error::DepthExceeded {
                    required: depth,
                    limit: max_depth,
                });
            }
            let mut total = 0.0;
            for w in mu.host.words(depth)? {
                let m = mu.cylinder_mass(&w)?;
                if m > 0.0 {
                    total += m * f.eval_symbols(&w);
                }
            }
            Ok(total)
        }
        MeasureKind::PeriodicOrbit { .. } | MeasureKind::Dirac { .. } => {
            let atoms = mu.atoms().unwrap();
            Ok(atoms.iter().map(|(p, w)| w * f.eval(p)).sum())
        }
        MeasureKind::Lebesgue => Ok(circle_quadrature(|x| f.eval(&Point::Real(x)), 1 << 16)),
    }
}

/// Midpoint rule on `[0,1)` with `cells` cells.
pub fn circle_quadrature(f: impl Fn(f64) -> f64, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    (0..cells).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Report entry for a measure.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureSummary {
    pub variant: &'static str,
    pub parameters: serde_json::Value,
    pub entropy: f64,
    pub support: String,
}

pub fn summarize(mu: &InvariantMeasure) -> MeasureSummary {
    let support = match &mu.kind {
        MeasureKind::Markov { transition, .. } => {
            let edges = transition
                .iter()
                .map(|r| r.iter().filter(|&&p| p > 0.0).count())
                .sum::<usize>();
            format!("Markov chain with {edges} positive transitions")
        }
        MeasureKind::PeriodicOrbit { points } => {
            format!("periodic orbit of length {}", points.len())
        }
        MeasureKind::Dirac { point } => format!("fixed point {point}"),
        MeasureKind::Lebesgue => "whole circle".into(),
    };
    MeasureSummary {
        variant: mu.variant_name(),
        parameters: serde_json::to_value(&mu.kind).unwrap_or_default(),
        entropy: ks_entropy(mu).unwrap_or(f64::NAN),
        support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Word;

    #[test]
    fn bernoulli_half_cylinder_masses() {
        let mu = bernoulli(&SystemModel::full_shift(2), &[0.5, 0.5]).unwrap();
        assert_eq!(mu.cylinder_mass(&[0, 1]).unwrap(), 0.25);
        assert!((ks_entropy(&mu).unwrap() - 2f64.ln()).abs() < 1e-15);
        let f = Observable::indicator(2, &[0]);
        assert!((integrate(&mu, &f).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_fifth_entropy() {
        let mu = bernoulli(&SystemModel::full_shift(2), &[0.2, 0.8]).unwrap();
        let closed = -0.2f64 * 0.2f64.ln() - 0.8 * 0.8f64.ln();
        assert!((ks_entropy(&mu).unwrap() - closed).abs() < 1e-15);
        assert!((closed - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn identity_chain_is_rejected_with_classes() {
        let err = markov_measure(
            &SystemModel::full_shift(2),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Reducible { classes } if classes == vec![vec![0], vec![1]]));
    }

    #[test]
    fn periodic_chain_still_has_a_stationary_vector() {
        let mu = markov_measure(
            &SystemModel::full_shift(2),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let MeasureKind::Markov { stationary, .. } = &mu.kind else {
            unreachable!()
        };
        assert!((stationary[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn inadmissible_transition_rejected() {
        let err = markov_measure(
            &SystemModel::golden_mean(),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotStochastic(_)));
    }

    #[test]
    fn depth_cap_is_enforced() {
        let mu = bernoulli(&SystemModel::full_shift(2), &[0.5, 0.5]).unwrap();
        let f = Observable::indicator(2, &[0, 1, 1]);
        assert!(matches!(
            integrate_with_depth(&mu, &f, 2),
            Err(Error::DepthExceeded {
                required: 3,
                limit: 2
            })
        ));
    }

    #[test]
    fn two_cycle_average() {
        let host = SystemModel::full_shift(2);
        let mu = periodic_orbit(&host, Point::Word(Word::periodic(vec![0, 1]))).unwrap();
        let f = Observable::first_symbol(vec![3.0, 5.0]);
        assert_eq!(integrate(&mu, &f).unwrap(), 4.0);
    }

    #[test]
    fn empirical_measure_of_fixed_point() {
        let host = SystemModel::full_shift(2);
        let y = Point::Word(Word::constant(1));
        let e = EmpiricalMeasure::new(&host, y, 7).unwrap();
        assert_eq!(e.integrate(&Observable::first_symbol(vec![2.0, 9.0])), 9.0);
    }
}
