//! Transfer operators given by branch cocycles, their spectral potential,
//! traces on subsets, compatibility and point classification.

mod classify;
mod compat;
pub(crate) mod spectral;

pub use classify::{classify_point, cocycle_continuous_at, PointClass};
pub use compat::{
    check_compatibility, forward_invariance, trace_operator, Compatibility, CompatibilityParams,
};
pub use spectral::{
    log_norms, sample_grid, sft_spectral_oracle, spectral_potential, weighted_matrix,
    EvaluationMethod, SpectralParams,
};

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::systems::{Continuum, Point, SystemModel, Word};
use serde::{Deserialize, Serialize};

/// What to do with preimage continua (constant branches).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuumPolicy {
    /// Allowed only where the cocycle vanishes on the whole continuum.
    RequireVanishing,
    /// The operator charges only discrete branch points (composition-type operators).
    Ignore,
}

/// `(Af)(x) = Σ_{y ∈ α⁻¹x ∩ Y} ρ(y)·g(y)·f(y)` on the host (restricted to `Y` when the host carries a restriction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferOperator {
    pub host: SystemModel,
    pub cocycle: Observable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Observable>,
    pub continua: ContinuumPolicy,
}

/// The functional `φ_x`: atoms `(preimage, mass)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalAtPoint {
    pub base: Point,
    pub atoms: Vec<(Point, f64)>,
    /// Continua on which the cocycle vanishes (or which the operator ignores).
    pub null_continua: Vec<(f64, f64)>,
}

impl FunctionalAtPoint {
    pub fn apply(&self, f: &Observable) -> f64 {
        self.atoms
            .iter()
            .map(|(y, m)| if *m == 0.0 { 0.0 } else { m * f.eval(y) })
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.1 == 0.0)
    }
}

/// The Perron–Frobenius operator `(Af)(x) = Σ_{αy=x} a(y) f(y)`.
pub fn perron_frobenius(host: &SystemModel, a: Observable) -> Result<TransferOperator> {
    host.validate()?;
    a.check_host(host)?;
    Ok(TransferOperator {
        host: host.clone(),
        cocycle: a,
        weight: None,
        continua: ContinuumPolicy::RequireVanishing,
    })
}

/// The operator with unit mass on every discrete preimage, ignoring preimage continua.
///
/// On the square fixture this is `(Af)(x) = f(β(x))`.
pub fn composition(host: &SystemModel) -> Result<TransferOperator> {
    host.validate()?;
    Ok(TransferOperator {
        host: host.clone(),
        cocycle: Observable::constant(1.0),
        weight: None,
        continua: ContinuumPolicy::Ignore,
    })
}

/// `A_g f = A(g·f)`; rejects negative samples of `g`.
pub fn with_weight(t: &TransferOperator, g: Observable) -> Result<TransferOperator> {
    g.check_host(&t.host)?;
    check_nonnegative(&t.host, &g)?;
    let weight = match &t.weight {
        None => g,
        Some(w) => w.clone().times(g),
    };
    Ok(TransferOperator {
        weight: Some(weight),
        ..t.clone()
    })
}

/// `A_ψ f = A(e^ψ f)`.
pub fn with_potential(t: &TransferOperator, psi: &Observable) -> Result<TransferOperator> {
    with_weight(t, psi.clone().exp())
}

fn check_nonnegative(host: &SystemModel, g: &Observable) -> Result<()> {
    for p in spectral::check_points(host) {
        let v = g.eval(&p);
        if v < 0.0 {
            return Err(Error::NegativeWeight {
                value: v,
                at: p.to_string(),
            });
        }
    }
    Ok(())
}

impl TransferOperator {
    /// `ρ(y)·g(y)`.
    pub fn mass(&self, y: &Point) -> f64 {
        let r = self.cocycle.eval(y);
        match &self.weight {
            None => r,
            Some(_) if r == 0.0 => 0.0,
            Some(g) => r * g.eval(y),
        }
    }

    /// The combined branch weight as one observable.
    pub fn branch_weight(&self) -> Observable {
        match &self.weight {
            None => self.cocycle.clone(),
            Some(g) => self.cocycle.clone().times(g.clone()),
        }
    }

    /// `φ_x` (or `φ_{Y,x}` when the host carries a restriction `Y`).
    ///
    /// Preimage continua never carry mass, so only discrete preimages in `Y` become atoms.
    pub fn functional(&self, x: &Point) -> Result<FunctionalAtPoint> {
        let mut set = self.host.preimage_set(x)?;
        set.points.retain(|p| self.host.in_restriction(p));
        let mut null_continua = Vec::new();
        for c in &set.continua {
            match self.continua {
                ContinuumPolicy::Ignore => {}
                ContinuumPolicy::RequireVanishing => {
                    if !self.vanishes_on(c) {
                        return Err(Error::NonDiscrete {
                            lo: c.lo,
                            hi: c.hi,
                            coord: c.coord,
                        });
                    }
                }
            }
            null_continua.push((c.lo, c.hi));
        }
        let atoms = set.points.into_iter().map(|y| {
            let m = self.mass(&y);
            (y, m)
        });
        Ok(FunctionalAtPoint {
            base: x.clone(),
            atoms: atoms.collect(),
            null_continua,
        })
    }

    fn vanishes_on(&self, c: &Continuum) -> bool {
        let mut coords = c.anchor.coords();
        (0..=16).all(|k| {
            coords[c.coord] = c.lo + (c.hi - c.lo) * k as f64 / 16.0;
            let p = match coords.len() {
                1 => Point::Real(coords[0]),
                _ => Point::Pair([coords[0], coords[1]]),
            };
            self.mass(&p) == 0.0
        })
    }

    /// `(Af)(x)`.
    pub fn apply(&self, f: &Observable, x: &Point) -> Result<f64> {
        Ok(self.functional(x)?.apply(f))
    }

    /// `(Aⁿ1)(x)` by the exact preimage-tree sum.
    pub fn power_one(&self, x: &Point, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        let phi = self.functional(x)?;
        let mut total = 0.0;
        for (y, m) in phi.atoms {
            if m != 0.0 {
                total += m * self.power_one(&y, n - 1)?;
            }
        }
        Ok(total)
    }

    /// `(A((f∘α)·h))(x)`, the left side of the homological identity.
    pub fn apply_twisted(&self, f: &Observable, h: &Observable, x: &Point) -> Result<f64> {
        let phi = self.functional(x)?;
        Ok(phi
            .atoms
            .iter()
            .map(|(y, m)| {
                if *m == 0.0 {
                    0.0
                } else {
                    m * f.eval(&self.host.apply_unchecked(y)) * h.eval(y)
                }
            })
            .sum())
    }
}

/// `φ_x` for the operator at `x`.
pub fn functional_family(t: &TransferOperator, x: &Point) -> Result<FunctionalAtPoint> {
    t.functional(x)
}

/// Branch weights `ρ` of an operator on a subset, with sampled mass statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleReport {
    pub rho: Observable,
    pub samples: usize,
    pub min_mass: f64,
    pub max_mass: f64,
    /// Largest change of the atom mass between consecutive sample points.
    pub max_adjacent_jump: f64,
}

/// The cocycle `ρ` read off the atoms of `φ_x` for sample points `x` of `on`.
pub fn cocycle(t: &TransferOperator, on: &[Point]) -> Result<CocycleReport> {
    let mut masses = Vec::new();
    let mut totals = Vec::new();
    for x in on {
        let phi = t.functional(x)?;
        totals.push(phi.total_mass());
        masses.extend(phi.atoms.iter().map(|a| a.1));
    }
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mass = masses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_adjacent_jump = totals
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(0.0, f64::max);
    Ok(CocycleReport {
        rho: t.branch_weight(),
        samples: masses.len(),
        min_mass,
        max_mass,
        max_adjacent_jump,
    })
}

/// Helper for symbolic points.
pub fn word_point(prefix: &[u8], cycle: &[u8]) -> Point {
    Point::Word(Word::new(prefix.to_vec(), cycle.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_counts_preimages() {
        let t = perron_frobenius(&SystemModel::full_shift(2), Observable::constant(1.0)).unwrap();
        let x = word_point(&[1, 0], &[1]);
        assert_eq!(t.apply(&Observable::constant(1.0), &x).unwrap(), 2.0);
        assert_eq!(t.power_one(&x, 5).unwrap(), 32.0);
    }

    #[test]
    fn rotation_is_a_weighted_shift() {
        let host = SystemModel::rotation(0.25);
        let a = Observable::affine(1.0, vec![2.0]);
        let t = perron_frobenius(&host, a).unwrap();
        let phi = t.functional(&Point::Real(0.5)).unwrap();
        assert_eq!(phi.atoms.len(), 1);
        assert!(phi.atoms[0].0.approx_eq(&Point::Real(0.25)));
        assert!((phi.atoms[0].1 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn square_composition_single_atom_at_beta() {
        let t = composition(&SystemModel::square_fixture()).unwrap();
        let phi = t.functional(&Point::Pair([0.4, 1.0])).unwrap();
        assert_eq!(phi.atoms.len(), 1);
        let b = SystemModel::square_beta([0.4, 1.0]);
        assert!(phi.atoms[0].0.approx_eq(&Point::Pair(b)));
        assert_eq!(phi.atoms[0].1, 1.0);
        assert_eq!(phi.null_continua.len(), 1);
    }

    #[test]
    fn flat_top_needs_vanishing_cocycle() {
        let host = SystemModel::flat_top();
        let t = perron_frobenius(&host, Observable::constant(1.0)).unwrap();
        assert!(matches!(
            t.functional(&Point::Real(1.0)),
            Err(Error::NonDiscrete { .. })
        ));
        let bump = Observable::sampled(0.0, 1.0, 2, |x| if x < 0.5 { 1.0 } else { 0.0 });
        let t = perron_frobenius(&host, bump).unwrap();
        let phi = t.functional(&Point::Real(1.0)).unwrap();
        assert!(phi.atoms.iter().all(|a| a.1 == 0.0));
    }

    #[test]
    fn negative_weight_rejected() {
        let t = perron_frobenius(&SystemModel::doubling(), Observable::constant(1.0)).unwrap();
        let g = Observable::affine(-0.5, vec![1.0]);
        assert!(matches!(
            with_weight(&t, g),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn homological_identity_on_doubling() {
        let t =
            perron_frobenius(&SystemModel::doubling(), Observable::affine(0.5, vec![0.5])).unwrap();
        let f = Observable::cosine(0.0, 1.0, 1.0, 0.1);
        let h = Observable::affine(0.3, vec![2.0]);
        for k in 0..20 {
            let x = Point::Real(k as f64 / 20.0 + 0.013);
            let lhs = t.apply_twisted(&f, &h, &x).unwrap();
            let rhs = f.eval(&x) * t.apply(&h, &x).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
