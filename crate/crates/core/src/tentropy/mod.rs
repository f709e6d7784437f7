//! t-entropy by the partition and Radon–Nikodym formulas, closed forms, and the
//! variational, duality and identity checks built on them.

mod duality;
mod identities;

pub use duality::{
    lambda_of, legendre_dual, optimize_markov, verify_variational_principle, DualEvaluation,
    DualParams, DualReport, MarkovOptimum, VpReport, VpRow,
};
pub use identities::{
    cross_check_identities, IdentityBundle, IdentityReport, IdentityRow, IdentityStatus,
};

use crate::error::{Error, Result};
use crate::measures::{integrate, ks_entropy, InvariantMeasure, MeasureKind};
use crate::observable::{ln0, word_index, Observable};
use crate::systems::{Point, SystemKind, SystemModel};
use crate::trace::{ext_f64, fmt_value, BoundFlag};
use crate::transfer::spectral::{effective_transitions, live_symbols};
use crate::transfer::TransferOperator;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Structural hypotheses a fixture has been certified for.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub local_homeo_on_x_alpha: bool,
    pub open_on_x_alpha: bool,
    pub non_contracting: bool,
    /// Inverse rami-rate `ω(α) = 0`.
    pub omega_zero: bool,
    /// The cocycle is continuous on `X_α`.
    pub cocycle_continuous: bool,
    /// The entropy map `μ ↦ h_α(μ)` is upper semicontinuous.
    pub entropy_usc: bool,
    #[serde(rename = "X_alpha_compatible")]
    pub x_alpha_compatible: bool,
    pub property_star_star: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TMethod {
    Partition,
    Radon,
    ClosedForm,
}

/// One `(n, depth)` cell. `depth` is the cylinder depth, the hat-grid level
/// (`2^depth` cells per axis), or the Lebesgue-decomposition depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TCell {
    pub n: usize,
    pub depth: usize,
    #[serde(with = "ext_f64")]
    pub value: f64,
    #[serde(with = "ext_f64")]
    pub inf_so_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TEntropyEstimate {
    pub method: TMethod,
    pub cells: Vec<TCell>,
    #[serde(with = "ext_f64")]
    pub headline: f64,
    pub bound: BoundFlag,
    pub detail: String,
}

impl TEntropyEstimate {
    fn from_cells(method: TMethod, raw: Vec<(usize, usize, f64)>, detail: String) -> Self {
        let mut inf = f64::INFINITY;
        let cells: Vec<TCell> = raw
            .into_iter()
            .map(|(n, depth, value)| {
                inf = inf.min(value);
                TCell {
                    n,
                    depth,
                    value,
                    inf_so_far: inf,
                }
            })
            .collect();
        let headline = if cells.is_empty() { f64::NAN } else { inf };
        TEntropyEstimate {
            method,
            cells,
            headline,
            bound: BoundFlag::Upper,
            detail,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "depth", "value", "inf_so_far", "bound_flags"])?;
        for c in &self.cells {
            w.write_record([
                c.n.to_string(),
                c.depth.to_string(),
                fmt_value(c.value),
                fmt_value(c.inf_so_far),
                "upper".to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest number of words or atoms a single cell may enumerate.
const BUDGET: usize = 1 << 22;

/// `(1/n) Σ_g μ[g] ln(μ[Aⁿg]/μ[g])` with `μ[g] = 0` summands dropped.
fn partition_value(n: usize, pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut total = 0.0;
    for (m, push) in pairs {
        if m <= 0.0 {
            continue;
        }
        if push <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += m * (push / m).ln();
    }
    total / n as f64
}

/// Cylinder masses `(μ[w], μ[Aⁿ 1_[w]])` for all words of length `depth`, indexed by [`word_index`].
///
/// `Aⁿ 1_[w](x)` only reads the first `L − n` symbols of `x`, `L = max(depth, n + d)`,
/// so the mass is a finite sum over admissible `L`-words `v`:
/// `Π_{i<n} W(σⁱv) · 1_[w](v) · μ[v_n … v_{L−1}]`.
fn cylinder_push(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    n: usize,
    depth: usize,
) -> Result<Vec<(f64, f64)>> {
    let trans = effective_transitions(&t.host)?;
    let live = live_symbols(&trans);
    let alphabet = trans.len();
    let w = t.branch_weight();
    if !w.is_locally_constant() {
        return Err(Error::Observable(
            "shift operators need a locally constant cocycle".into(),
        ));
    }
    let dw = w.depth().max(1);
    let len = depth.max(n + dw);
    if (alphabet as f64).powi(len as i32) > BUDGET as f64 {
        return Err(Error::DepthExceeded {
            required: len,
            limit: (BUDGET as f64).log(alphabet as f64) as usize,
        });
    }
    let slots = alphabet.pow(depth as u32);
    let mut out = vec![(0.0, 0.0); slots];
    for (idx, slot) in out.iter_mut().enumerate() {
        let word = crate::observable::index_word(idx, alphabet, depth);
        slot.0 = mu.cylinder_mass(&word)?;
    }
    let mut v = Vec::with_capacity(len);
    fn rec(
        v: &mut Vec<u8>,
        len: usize,
        n: usize,
        depth: usize,
        ctx: (&[Vec<u8>], &[bool], &Observable, &InvariantMeasure),
        out: &mut [(f64, f64)],
    ) -> Result<()> {
        let (trans, live, w, mu) = ctx;
        if v.len() == len {
            let tail = mu.cylinder_mass(&v[n..])?;
            if tail == 0.0 {
                return Ok(());
            }
            let mut prod = 1.0;
            for i in 0..n {
                prod *= w.eval_symbols(&v[i..]);
                if prod == 0.0 {
                    return Ok(());
                }
            }
            out[word_index(&v[..depth], trans.len())].1 += prod * tail;
            return Ok(());
        }
        for s in 0..trans.len() {
            if !live[s] || v.last().is_some_and(|&l| trans[l as usize][s] == 0) {
                continue;
            }
            v.push(s as u8);
            rec(v, len, n, depth, ctx, out)?;
            v.pop();
        }
        Ok(())
    }
    rec(&mut v, len, n, depth, (&trans, &live, &w, mu), &mut out)?;
    Ok(out)
}

/// `A*ⁿδ_x` as a list of atoms: the `n`-fold functional `φ` iterated from `x`.
fn atoms_n(t: &TransferOperator, x: &Point, n: usize) -> Result<Vec<(Point, f64)>> {
    let mut frontier = vec![(x.clone(), 1.0f64)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (y, m) in &frontier {
            for (z, m2) in t.functional(y)?.atoms {
                if m2 != 0.0 {
                    next.push((z, m * m2));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(Point, f64)> = Vec::with_capacity(next.len());
        for (p, m) in next {
            match merged.last_mut() {
                Some(last) if last.0.approx_eq(&p) => last.1 += m,
                _ => merged.push((p, m)),
            }
        }
        if merged.len() > BUDGET {
            return Err(Error::Precondition(format!(
                "more than {BUDGET} atoms in the {n}-fold push-forward"
            )));
        }
        frontier = merged;
    }
    Ok(frontier)
}

/// Continuous partition of unity used on a metric host.
#[derive(Clone, Debug)]
enum Partition {
    Cylinders {
        depth: usize,
        alphabet: usize,
    },
    Nodes {
        count: usize,
    },
    /// Tensor-product hat functions with `cells` cells per axis.
    Hats {
        cells: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        circle: bool,
    },
}

impl Partition {
    fn for_host(host: &SystemModel, level: usize) -> Result<Partition> {
        let cells = 1usize << level;
        Ok(match &host.kind {
            SystemKind::Subshift { .. } | SystemKind::CantorFixture => Partition::Cylinders {
                depth: level,
                alphabet: host.alphabet().unwrap_or(2),
            },
            SystemKind::FiniteMap { image } => Partition::Nodes { count: image.len() },
            SystemKind::PiecewiseCover(c) => Partition::Hats {
                cells,
                lo: vec![c.lo()],
                hi: vec![c.hi()],
                circle: c.circle,
            },
            SystemKind::CircleRotation { .. } => Partition::Hats {
                cells,
                lo: vec![0.0],
                hi: vec![1.0],
                circle: true,
            },
            SystemKind::SquareFixture | SystemKind::LadderFixture { .. } => Partition::Hats {
                cells,
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
                circle: false,
            },
        })
    }

    fn size(&self) -> usize {
        match self {
            Partition::Cylinders { depth, alphabet } => alphabet.pow(*depth as u32),
            Partition::Nodes { count } => *count,
            Partition::Hats {
                cells, lo, circle, ..
            } => {
                let per_axis = if *circle { *cells } else { cells + 1 };
                per_axis.pow(lo.len() as u32)
            }
        }
    }

    /// Nonzero `(element, g(x))` pairs; the values sum to 1.
    fn weights(&self, x: &Point) -> Vec<(usize, f64)> {
        match self {
            Partition::Cylinders { depth, alphabet } => match x {
                Point::Word(w) => vec![(word_index(&w.head(*depth), *alphabet), 1.0)],
                _ => Vec::new(),
            },
            Partition::Nodes { .. } => x.node().map(|v| vec![(v, 1.0)]).unwrap_or_default(),
            Partition::Hats {
                cells,
                lo,
                hi,
                circle,
            } => {
                let per_axis = if *circle { *cells } else { cells + 1 };
                let coords = x.coords();
                let mut out = vec![(0usize, 1.0f64)];
                for (axis, &c) in coords.iter().enumerate() {
                    let pos = (c - lo[axis]) / (hi[axis] - lo[axis]) * *cells as f64;
                    let pos = if *circle {
                        pos.rem_euclid(*cells as f64)
                    } else {
                        pos.clamp(0.0, *cells as f64)
                    };
                    let i = (pos.floor() as usize).min(cells - 1);
                    let f = pos - i as f64;
                    let j = if *circle { (i + 1) % cells } else { i + 1 };
                    let mut next = Vec::with_capacity(out.len() * 2);
                    for &(k, w) in &out {
                        next.push((k * per_axis + i, w * (1.0 - f)));
                        next.push((k * per_axis + j, w * f));
                    }
                    out = next;
                }
                out.retain(|p| p.1 > 0.0);
                out
            }
        }
    }
}

fn check_support(t: &TransferOperator, mu: &InvariantMeasure) -> Result<()> {
    if let Some(y) = &t.host.restriction {
        if !mu.supported_in(y)? {
            return Err(Error::Precondition(
                "the measure is not supported in the operator's restriction".into(),
            ));
        }
    }
    Ok(())
}

/// Quadrature nodes for Lebesgue measure on the circle.
const LEBESGUE_NODES: usize = 4096;

/// τ(μ) as `inf` over `n ≤ n_max` and partitions of depth `≤ depth_max`.
///
/// Markov measures on shifts use exact cylinder masses; atomic measures use
/// exact push-forwards; Lebesgue measure uses midpoint quadrature.
pub fn t_entropy_partition(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    depth_max: usize,
    n_max: usize,
) -> Result<TEntropyEstimate> {
    if n_max == 0 || depth_max == 0 {
        return Err(Error::Precondition(
            "n_max and depth_max must be at least 1".into(),
        ));
    }
    check_support(t, mu)?;
    let mut raw = Vec::new();
    match &mu.kind {
        MeasureKind::Markov { .. } => {
            for n in 1..=n_max {
                for depth in 1..=depth_max {
                    let pairs = cylinder_push(t, mu, n, depth)?;
                    raw.push((n, depth, partition_value(n, pairs)));
                }
            }
            return Ok(TEntropyEstimate::from_cells(
                TMethod::Partition,
                raw,
                "cylinder indicators, exact masses".into(),
            ));
        }
        MeasureKind::PeriodicOrbit { .. } | MeasureKind::Dirac { .. } => {
            let atoms = mu.atoms().unwrap_or_default();
            let levels = if matches!(t.host.kind, SystemKind::FiniteMap { .. }) {
                1
            } else {
                depth_max
            };
            for n in 1..=n_max {
                let pushed: Vec<(f64, Vec<(Point, f64)>)> = atoms
                    .iter()
                    .map(|(x, w)| Ok((*w, atoms_n(t, x, n)?)))
                    .collect::<Result<_>>()?;
                for level in 1..=levels {
                    let part = Partition::for_host(&t.host, level)?;
                    let mut masses = vec![(0.0, 0.0); part.size()];
                    for (x, w) in &atoms {
                        for (k, g) in part.weights(x) {
                            masses[k].0 += w * g;
                        }
                    }
                    for (w, list) in &pushed {
                        for (y, m) in list {
                            for (k, g) in part.weights(y) {
                                masses[k].1 += w * m * g;
                            }
                        }
                    }
                    raw.push((n, level, partition_value(n, masses)));
                }
            }
            return Ok(TEntropyEstimate::from_cells(
                TMethod::Partition,
                raw,
                "exact push-forward of the atoms".into(),
            ));
        }
        MeasureKind::Lebesgue => {}
    }
    let h = 1.0 / LEBESGUE_NODES as f64;
    let nodes: Vec<Point> = (0..LEBESGUE_NODES)
        .map(|i| Point::Real((i as f64 + 0.5) * h))
        .collect();
    for n in 1..=n_max {
        let pushed: Vec<Vec<(Point, f64)>> = nodes
            .iter()
            .map(|x| atoms_n(t, x, n))
            .collect::<Result<_>>()?;
        for level in 1..=depth_max {
            let part = Partition::for_host(&t.host, level)?;
            let mut masses = vec![(0.0, 0.0); part.size()];
            for (x, list) in nodes.iter().zip(&pushed) {
                for (k, g) in part.weights(x) {
                    masses[k].0 += h * g;
                }
                for (y, m) in list {
                    for (k, g) in part.weights(y) {
                        masses[k].1 += h * m * g;
                    }
                }
            }
            raw.push((n, level, partition_value(n, masses)));
        }
    }
    Ok(TEntropyEstimate::from_cells(
        TMethod::Partition,
        raw,
        format!("hat functions, midpoint quadrature with {LEBESGUE_NODES} nodes"),
    ))
}

/// Parameters of [`t_entropy_radon`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonParams {
    pub n_max: usize,
    /// Extra cylinder depth allowed beyond `n + cocycle depth` while waiting for the density to settle.
    pub extra_depth: usize,
    /// Relative tolerance for "density constant under refinement".
    pub tolerance: f64,
}

impl RadonParams {
    pub fn new(n_max: usize) -> Self {
        RadonParams {
            n_max,
            extra_depth: 6,
            tolerance: 1e-9,
        }
    }
}

/// τ(μ) as `inf_n (1/n) ∫ ln d(A*ⁿμ)_a/dμ dμ`.
///
/// Markov measures: the density of `A*ⁿμ` is read off cylinder masses at increasing
/// depth until it is constant under one refinement on all but `tolerance` of the
/// μ-mass. Atomic measures: `A*ⁿμ` is atomic and its absolutely continuous part
/// sits on the atoms of μ. Lebesgue measure on `x ↦ kx mod 1` and rotations: the
/// density is `kⁿ Π ρ∘αⁱ`.
pub fn t_entropy_radon(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    params: &RadonParams,
) -> Result<TEntropyEstimate> {
    if params.n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    check_support(t, mu)?;
    let mut raw = Vec::new();
    match &mu.kind {
        MeasureKind::Markov { .. } => {
            let dw = t.branch_weight().depth().max(1);
            for n in 1..=params.n_max {
                let limit = n + dw + params.extra_depth;
                let (depth, value) = markov_density(t, mu, n, limit, params.tolerance)?;
                raw.push((n, depth, value));
            }
            Ok(TEntropyEstimate::from_cells(
                TMethod::Radon,
                raw,
                "cylinder Lebesgue decomposition".into(),
            ))
        }
        MeasureKind::PeriodicOrbit { .. } | MeasureKind::Dirac { .. } => {
            let atoms = mu.atoms().unwrap_or_default();
            for n in 1..=params.n_max {
                let mut total = 0.0;
                let mut pushed = vec![0.0; atoms.len()];
                for (x, w) in &atoms {
                    for (y, m) in atoms_n(t, x, n)? {
                        if let Some(k) = atoms.iter().position(|(p, _)| p.approx_eq(&y)) {
                            pushed[k] += w * m;
                        }
                    }
                }
                for ((_, w), nu) in atoms.iter().zip(&pushed) {
                    total += w * ln0(nu / w);
                }
                raw.push((n, 0, total / n as f64));
            }
            Ok(TEntropyEstimate::from_cells(
                TMethod::Radon,
                raw,
                "atomic push-forward restricted to the atoms".into(),
            ))
        }
        MeasureKind::Lebesgue => {
            let degree = match &t.host.kind {
                SystemKind::CircleRotation { .. } => 1,
                _ => t.host.linear_circle_degree().ok_or_else(|| {
                    Error::Precondition(
                        "Lebesgue densities are implemented for rotations and x ↦ kx mod 1".into(),
                    )
                })?,
            };
            let w = t.branch_weight();
            let log_w =
                crate::measures::circle_quadrature(|x| ln0(w.eval(&Point::Real(x))), 1 << 16);
            let value = (degree as f64).ln() + log_w;
            for n in 1..=params.n_max {
                raw.push((n, 0, value));
            }
            Ok(TEntropyEstimate::from_cells(
                TMethod::Radon,
                raw,
                format!("density {degree}^n Π ρ∘α^i, quadrature"),
            ))
        }
    }
}

/// `(depth, (1/n) ∫ ln density dμ)` at the first depth where the cylinder density settles.
fn markov_density(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    n: usize,
    limit: usize,
    tol: f64,
) -> Result<(usize, f64)> {
    let alphabet = effective_transitions(&t.host)?.len();
    let mut coarse = cylinder_push(t, mu, n, 1)?;
    for depth in 1..=limit {
        let fine = cylinder_push(t, mu, n, depth + 1)?;
        let mut agreeing = 0.0;
        for (idx, &(m, nu)) in coarse.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let parent = nu / m;
            let settled = (0..alphabet).all(|s| {
                let (mc, nc) = fine[idx * alphabet + s];
                mc <= 0.0 || (nc / mc - parent).abs() <= tol * parent.abs().max(1.0)
            });
            if settled {
                agreeing += m;
            }
        }
        if agreeing >= 1.0 - tol {
            return Ok((depth, partition_value(n, coarse)));
        }
        coarse = fine;
    }
    Err(Error::NotStabilized { depth: limit })
}

/// Which closed form applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormClass {
    /// `ω = 0` and a continuous cocycle: `τ = ∫ ln ρ dμ`.
    ZeroRamiRate,
    /// Open, non-contracting, upper semicontinuous entropy: `τ = ∫ ln ρ dμ + h_α(μ)`.
    OpenNonContracting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub class: ClosedFormClass,
    #[serde(with = "ext_f64")]
    pub log_cocycle_integral: f64,
    pub entropy: f64,
}

/// τ(μ) in closed form when the fixture is certified for one of the two classes.
pub fn t_entropy_closed_form(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    hyp: &Hypotheses,
) -> Result<ClosedForm> {
    let class = closed_form_class(hyp)?;
    let log_rho = integrate(mu, &t.branch_weight().ln())?;
    let entropy = match class {
        ClosedFormClass::ZeroRamiRate => 0.0,
        ClosedFormClass::OpenNonContracting => ks_entropy(mu)?,
    };
    let value = if log_rho == f64::NEG_INFINITY {
        log_rho
    } else {
        log_rho + entropy
    };
    Ok(ClosedForm {
        value,
        class,
        log_cocycle_integral: log_rho,
        entropy,
    })
}

fn closed_form_class(hyp: &Hypotheses) -> Result<ClosedFormClass> {
    if hyp.omega_zero && hyp.cocycle_continuous {
        return Ok(ClosedFormClass::ZeroRamiRate);
    }
    if hyp.open_on_x_alpha && hyp.non_contracting && hyp.entropy_usc {
        return Ok(ClosedFormClass::OpenNonContracting);
    }
    let first = if !hyp.omega_zero {
        "omega_zero"
    } else {
        "cocycle_continuous"
    };
    let second = [
        (hyp.open_on_x_alpha, "open_on_x_alpha"),
        (hyp.non_contracting, "non_contracting"),
        (hyp.entropy_usc, "entropy_usc"),
    ]
    .into_iter()
    .find(|p| !p.0)
    .map(|p| p.1)
    .unwrap_or("");
    Err(Error::Hypothesis(format!(
        "neither closed form applies: {first} and {second} are not certified"
    )))
}

/// Best available τ(μ): the closed form when certified, otherwise the Radon formula,
/// otherwise the partition formula. Returns the value and the method used.
pub fn best_t_entropy(
    t: &TransferOperator,
    mu: &InvariantMeasure,
    hyp: &Hypotheses,
    n_max: usize,
) -> Result<(f64, TMethod)> {
    if let Ok(c) = t_entropy_closed_form(t, mu, hyp) {
        return Ok((c.value, TMethod::ClosedForm));
    }
    match t_entropy_radon(t, mu, &RadonParams::new(n_max)) {
        Ok(r) => Ok((r.headline, TMethod::Radon)),
        Err(Error::Precondition(_)) => {
            let p = t_entropy_partition(t, mu, 6, n_max)?;
            Ok((p.headline, TMethod::Partition))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{bernoulli, dirac, lebesgue, markov_measure, periodic_orbit};
    use crate::systems::Word;
    use crate::transfer::{composition, perron_frobenius};

    fn binary_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn bernoulli_half_partition_cells_are_ln2() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = bernoulli(&s, &[0.5, 0.5]).unwrap();
        let est = t_entropy_partition(&t, &mu, 4, 4).unwrap();
        for c in &est.cells {
            assert!((c.value - 2f64.ln()).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn radon_recovers_bernoulli_entropy() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        for p in [0.2, 0.5, 0.7] {
            let mu = bernoulli(&s, &[p, 1.0 - p]).unwrap();
            let est = t_entropy_radon(&t, &mu, &RadonParams::new(4)).unwrap();
            assert!(
                (est.headline - binary_entropy(p)).abs() < 1e-9,
                "{p}: {}",
                est.headline
            );
        }
    }

    #[test]
    fn weighted_bernoulli_closed_form_and_radon_agree() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::first_symbol(vec![2.0, 3.0])).unwrap();
        let mu = bernoulli(&s, &[0.5, 0.5]).unwrap();
        let hyp = Hypotheses {
            open_on_x_alpha: true,
            non_contracting: true,
            entropy_usc: true,
            ..Default::default()
        };
        let closed = t_entropy_closed_form(&t, &mu, &hyp).unwrap();
        let expected = (2f64.ln() + 3f64.ln()) / 2.0 + 2f64.ln();
        assert!((closed.value - expected).abs() < 1e-12);
        let radon = t_entropy_radon(&t, &mu, &RadonParams::new(5)).unwrap();
        assert!((radon.headline - expected).abs() < 1e-3);
    }

    #[test]
    fn markov_radon_matches_closed_form() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::cylinder(2, 2, vec![1.0, 0.5, 2.0, 1.5])).unwrap();
        let mu = markov_measure(&s, vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let hyp = Hypotheses {
            open_on_x_alpha: true,
            non_contracting: true,
            entropy_usc: true,
            ..Default::default()
        };
        let closed = t_entropy_closed_form(&t, &mu, &hyp).unwrap().value;
        let radon = t_entropy_radon(&t, &mu, &RadonParams::new(5)).unwrap();
        assert!(
            (radon.headline - closed).abs() < 1e-3,
            "{} vs {closed}",
            radon.headline
        );
        let part = t_entropy_partition(&t, &mu, 6, 5).unwrap();
        assert!(part.headline >= closed - 1e-3);
    }

    #[test]
    fn two_cycle_finite_map() {
        let s = SystemModel::finite_map(vec![1, 0]).unwrap();
        let t = perron_frobenius(
            &s,
            Observable::Nodes {
                values: vec![2.0, 0.5],
            },
        )
        .unwrap();
        let mu = periodic_orbit(&s, Point::Node(0)).unwrap();
        let r = t_entropy_radon(&t, &mu, &RadonParams::new(4)).unwrap();
        let expected = (2f64.ln() + 0.5f64.ln()) / 2.0;
        assert!((r.headline - expected).abs() < 1e-12, "{}", r.headline);
    }

    #[test]
    fn vanishing_weight_gives_minus_infinity() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::first_symbol(vec![1.0, 0.0])).unwrap();
        let mu = dirac(&s, Point::Word(Word::constant(1))).unwrap();
        let r = t_entropy_radon(&t, &mu, &RadonParams::new(3)).unwrap();
        assert_eq!(r.headline, f64::NEG_INFINITY);
    }

    #[test]
    fn fixed_point_dirac_has_zero_t_entropy() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = dirac(&s, Point::Word(Word::constant(0))).unwrap();
        assert_eq!(
            t_entropy_radon(&t, &mu, &RadonParams::new(4))
                .unwrap()
                .headline,
            0.0
        );
        assert!(t_entropy_partition(&t, &mu, 4, 4).unwrap().headline.abs() < 1e-12);
    }

    #[test]
    fn composition_operator_cells_are_nonpositive() {
        let s = SystemModel::rotation(0.3);
        let t = composition(&s).unwrap();
        let mu = lebesgue(&s).unwrap();
        let est = t_entropy_partition(&t, &mu, 3, 2).unwrap();
        assert!(
            est.cells.iter().all(|c| c.value <= 1e-12),
            "{:?}",
            est.cells
        );
    }

    #[test]
    fn doubling_lebesgue_radon_is_ln2_plus_log_weight() {
        let s = SystemModel::doubling();
        let t = perron_frobenius(&s, Observable::affine(0.5, vec![0.5])).unwrap();
        let mu = lebesgue(&s).unwrap();
        let r = t_entropy_radon(&t, &mu, &RadonParams::new(2)).unwrap();
        // ∫₀¹ ln((1 + x)/2) dx = ln 2 − 1
        let exact = 2f64.ln() + (2f64.ln() - 1.0);
        assert!(
            (r.headline - exact).abs() < 1e-6,
            "{} vs {exact}",
            r.headline
        );
    }

    #[test]
    fn closed_form_refuses_without_hypotheses() {
        let s = SystemModel::full_shift(2);
        let t = perron_frobenius(&s, Observable::constant(1.0)).unwrap();
        let mu = bernoulli(&s, &[0.5, 0.5]).unwrap();
        let err = t_entropy_closed_form(&t, &mu, &Hypotheses::default()).unwrap_err();
        assert!(err.to_string().contains("omega_zero"));
    }

    #[test]
    fn restricted_golden_measures_agree_with_full_shift() {
        let full = SystemModel::full_shift(2);
        let golden = full.restricted(crate::systems::Subset::Sft {
            transitions: vec![vec![1, 1], vec![1, 0]],
        });
        let mu = markov_measure(&full, vec![vec![0.6, 0.4], vec![1.0, 0.0]]).unwrap();
        let tx = perron_frobenius(&full, Observable::constant(1.0)).unwrap();
        let ty = perron_frobenius(&golden, Observable::constant(1.0)).unwrap();
        let a = t_entropy_radon(&tx, &mu, &RadonParams::new(4))
            .unwrap()
            .headline;
        let b = t_entropy_radon(&ty, &mu, &RadonParams::new(4))
            .unwrap()
            .headline;
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}
