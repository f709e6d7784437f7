//! Named fixtures with their certified hypotheses, default operators and measure families.

use crate::error::{Error, Result};
use crate::measures::{
    bernoulli, dirac, lebesgue, markov_measure, periodic_orbit, InvariantMeasure,
};
use crate::observable::Observable;
use crate::systems::{BoxSet, Point, Subset, SystemModel, Word};
use crate::tentropy::Hypotheses;
use crate::transfer::{composition, perron_frobenius, TransferOperator};
use serde::Serialize;

/// Catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub hypotheses: Hypotheses,
    /// Component fixtures of a disjoint union; empty for a single system.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<&'static str>,
}

/// A loaded fixture.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub info: FixtureInfo,
    /// Host restricted to `X_α` where that set is known and proper.
    pub host: SystemModel,
    pub operator: TransferOperator,
    pub measures: Vec<InvariantMeasure>,
    pub potentials: Vec<(String, Observable)>,
    /// Subset the compatibility task checks.
    pub compat_subset: Option<Subset>,
}

const NAMES: [&str; 13] = [
    "full2",
    "golden",
    "doubling",
    "doubling-weighted",
    "flat-top",
    "cantor",
    "squaring",
    "square",
    "ladder",
    "rotation",
    "halving",
    "finite-cycle",
    "product",
];

/// Angle of the rotation fixture.
pub const ROTATION_ANGLE: f64 = 0.618_033_988_749_894_9;

fn expanding_shift() -> Hypotheses {
    Hypotheses {
        local_homeo_on_x_alpha: true,
        open_on_x_alpha: true,
        non_contracting: true,
        omega_zero: false,
        cocycle_continuous: true,
        entropy_usc: true,
        x_alpha_compatible: true,
        property_star_star: true,
    }
}

fn info(name: &str) -> Result<FixtureInfo> {
    let (name, description, hypotheses, factors): (&'static str, &'static str, Hypotheses, Vec<&'static str>) = match name {
        "full2" => ("full2", "full shift on two symbols, unit cocycle", expanding_shift(), vec![]),
        "golden" => ("golden", "golden-mean shift (no two consecutive 1s), unit cocycle", expanding_shift(), vec![]),
        "doubling" => ("doubling", "x -> 2x mod 1 on the circle, unit cocycle", expanding_shift(), vec![]),
        "doubling-weighted" => (
            "doubling-weighted",
            "x -> 2x mod 1 with cocycle 0.5 + x/2, which jumps at the base point of the circle",
            Hypotheses { cocycle_continuous: false, ..expanding_shift() },
            vec![],
        ),
        "flat-top" => (
            "flat-top",
            "2x on [0,1/2], constant 1 on [1/2,1]; X_alpha = {0, 1}",
            Hypotheses { omega_zero: true, cocycle_continuous: true, ..Default::default() },
            vec![],
        ),
        "cantor" => (
            "cantor",
            "one-third Cantor set as a shift with sparse twos; every point non-wandering, x* = 000... the only essential point",
            Hypotheses { omega_zero: true, cocycle_continuous: true, ..Default::default() },
            vec![],
        ),
        "squaring" => (
            "squaring",
            "x -> x^2 on [0,1] with cocycle (x - 0.8)^2 + 0.5, checked on Y = [0, 0.8]",
            Hypotheses { cocycle_continuous: true, omega_zero: true, ..Default::default() },
            vec![],
        ),
        "square" => (
            "square",
            "two-piece map of the unit square (composition operator); spectral potential and pressure differ",
            Hypotheses::default(),
            vec![],
        ),
        "ladder" => (
            "ladder",
            "[0,1] x ({0} u {2^-j}) shifting rungs up; a local homeomorphism whose operator is not compatible with X_alpha",
            Hypotheses { local_homeo_on_x_alpha: true, cocycle_continuous: true, ..Default::default() },
            vec![],
        ),
        "rotation" => (
            "rotation",
            "irrational rotation of the circle, unit cocycle",
            Hypotheses { omega_zero: true, ..expanding_shift() },
            vec![],
        ),
        "halving" => (
            "halving",
            "x -> x/2 on [0,1], a contraction",
            Hypotheses { omega_zero: true, cocycle_continuous: true, local_homeo_on_x_alpha: true, ..Default::default() },
            vec![],
        ),
        "finite-cycle" => (
            "finite-cycle",
            "two-cycle on two nodes with weights (2, 1/2)",
            Hypotheses { omega_zero: true, ..expanding_shift() },
            vec![],
        ),
        "product" => (
            "product",
            "disjoint union of the doubling map and the rotation; gamma, h and omega reported per factor",
            Hypotheses::default(),
            vec!["doubling", "rotation"],
        ),
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    Ok(FixtureInfo {
        name,
        description,
        hypotheses,
        factors,
    })
}

/// Catalog entries whose name contains `filter` (all of them for an empty filter).
pub fn list_fixtures(filter: &str) -> Vec<FixtureInfo> {
    NAMES
        .iter()
        .filter(|n| n.contains(filter))
        .map(|n| info(n).expect("catalog name"))
        .collect()
}

fn word(prefix: &[u8], cycle: &[u8]) -> Point {
    Point::Word(Word::new(prefix.to_vec(), cycle.to_vec()))
}

fn square_edges() -> Subset {
    Subset::Boxes {
        boxes: vec![
            BoxSet::rect([0.0, 0.0], [1.0, 0.0]),
            BoxSet::rect([0.0, 1.0], [1.0, 1.0]),
        ],
    }
}

/// Loads a fixture; composite fixtures are loaded through their factors.
pub fn load_fixture(name: &str) -> Result<Fixture> {
    let info = info(name)?;
    let one = Observable::constant(1.0);
    let zero = ("zero".to_string(), Observable::zero());
    let (host, operator, measures, potentials, compat_subset) = match info.name {
        "full2" => {
            let s = SystemModel::full_shift(2);
            let t = perron_frobenius(&s, one)?;
            let ms = vec![
                bernoulli(&s, &[0.5, 0.5])?,
                bernoulli(&s, &[0.3, 0.7])?,
                markov_measure(&s, vec![vec![0.9, 0.1], vec![0.4, 0.6]])?,
                dirac(&s, word(&[], &[0]))?,
                periodic_orbit(&s, word(&[], &[0, 1]))?,
                markov_measure(&s, vec![vec![0.5, 0.5], vec![1.0, 0.0]])?,
            ];
            let ps = vec![
                zero,
                (
                    "first symbol".into(),
                    Observable::first_symbol(vec![0.4, -0.2]),
                ),
            ];
            let golden = Subset::Sft {
                transitions: vec![vec![1, 1], vec![1, 0]],
            };
            (s, t, ms, ps, Some(golden))
        }
        "golden" => {
            let s = SystemModel::golden_mean();
            let t = perron_frobenius(&s, one)?;
            let ms = vec![
                markov_measure(&s, vec![vec![0.5, 0.5], vec![1.0, 0.0]])?,
                markov_measure(&s, vec![vec![0.7, 0.3], vec![1.0, 0.0]])?,
                dirac(&s, word(&[], &[0]))?,
                periodic_orbit(&s, word(&[], &[0, 1]))?,
            ];
            let ps = vec![
                zero,
                (
                    "first symbol".into(),
                    Observable::first_symbol(vec![0.3, -0.5]),
                ),
            ];
            (s, t, ms, ps, None)
        }
        "doubling" | "doubling-weighted" => {
            let s = SystemModel::doubling();
            let rho = if info.name == "doubling" {
                one
            } else {
                Observable::affine(0.5, vec![0.5])
            };
            let t = perron_frobenius(&s, rho)?;
            let ms = vec![
                lebesgue(&s)?,
                dirac(&s, Point::Real(0.0))?,
                periodic_orbit(&s, Point::Real(1.0 / 3.0))?,
            ];
            let ps = vec![
                zero,
                ("cosine".into(), Observable::cosine(0.0, 0.5, 1.0, 0.0)),
            ];
            (s, t, ms, ps, None)
        }
        "flat-top" => {
            let s = SystemModel::flat_top();
            let t = perron_frobenius(&s, one)?;
            let ms = vec![dirac(&s, Point::Real(0.0))?, dirac(&s, Point::Real(1.0))?];
            let y = Subset::Points {
                points: vec![Point::Real(0.0), Point::Real(1.0)],
            };
            (s.restricted(y), t, ms, vec![zero], None)
        }
        "cantor" => {
            let s = SystemModel::cantor_fixture();
            let t = perron_frobenius(&s, one)?;
            let ms = vec![dirac(&s, word(&[], &[0]))?];
            (s, t, ms, vec![zero], None)
        }
        "squaring" => {
            let s = SystemModel::squaring();
            let lin = Observable::affine(-0.8, vec![1.0]);
            let t = perron_frobenius(&s, lin.clone().times(lin).plus(Observable::constant(0.5)))?;
            let ms = vec![dirac(&s, Point::Real(0.0))?, dirac(&s, Point::Real(1.0))?];
            (s, t, ms, vec![zero], Some(Subset::intervals(&[(0.0, 0.8)])))
        }
        "square" => {
            let s = SystemModel::square_fixture();
            let t = composition(&s)?;
            let ms = vec![
                dirac(&s, Point::Pair([1.0, 0.0]))?,
                dirac(&s, Point::Pair([0.0, 1.0]))?,
                dirac(&s, Point::Pair([0.5, 0.0]))?,
                dirac(&s, Point::Pair([1.0, 1.0]))?,
            ];
            let ps = vec![("x1 + x2".into(), Observable::affine(0.0, vec![1.0, 1.0]))];
            let compat = Subset::Boxes {
                boxes: vec![BoxSet::rect([0.0, 0.0], [1.0, 1.0])],
            };
            (s.restricted(square_edges()), t, ms, ps, Some(compat))
        }
        "ladder" => {
            let s = SystemModel::ladder_fixture(12);
            let t = composition(&s)?;
            let ms = vec![dirac(&s, Point::Pair([0.5, 0.0]))?];
            (s, t, ms, vec![zero], None)
        }
        "rotation" => {
            let s = SystemModel::rotation(ROTATION_ANGLE);
            let t = perron_frobenius(&s, one)?;
            let ms = vec![lebesgue(&s)?];
            let ps = vec![
                zero,
                ("cosine".into(), Observable::cosine(0.0, 0.5, 1.0, 0.0)),
            ];
            (s, t, ms, ps, None)
        }
        "halving" => {
            let s = SystemModel::halving();
            let t = perron_frobenius(&s, one)?;
            let ms = vec![dirac(&s, Point::Real(0.0))?];
            (s, t, ms, vec![zero], None)
        }
        "finite-cycle" => {
            let s = SystemModel::finite_map(vec![1, 0])?;
            let t = perron_frobenius(
                &s,
                Observable::Nodes {
                    values: vec![2.0, 0.5],
                },
            )?;
            let ms = vec![periodic_orbit(&s, Point::Node(0))?];
            (s, t, ms, vec![zero], None)
        }
        _ => {
            return Err(Error::Precondition(format!(
                "'{}' is a disjoint union; load its factors {:?}",
                info.name, info.factors
            )))
        }
    };
    let operator = TransferOperator {
        host: host.clone(),
        ..operator
    };
    Ok(Fixture {
        info,
        host,
        operator,
        measures,
        potentials,
        compat_subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::check_property_star;

    #[test]
    fn catalog_lists_everything_for_empty_filter() {
        assert_eq!(list_fixtures("").len(), NAMES.len());
        assert_eq!(list_fixtures("doubling").len(), 2);
    }

    #[test]
    fn square_is_neither_local_homeo_nor_compatible() {
        let sq = list_fixtures("square").pop().unwrap();
        assert!(!sq.hypotheses.local_homeo_on_x_alpha);
        assert!(!sq.hypotheses.x_alpha_compatible);
    }

    #[test]
    fn every_simple_fixture_loads() {
        for name in NAMES {
            let f = load_fixture(name);
            if name == "product" {
                assert!(f.is_err());
                for factor in list_fixtures(name)[0].factors.clone() {
                    load_fixture(factor).unwrap();
                }
            } else {
                let f = f.unwrap();
                for mu in &f.measures {
                    if let Some(y) = &f.host.restriction {
                        assert!(mu.supported_in(y).unwrap_or(true), "{name}");
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_fixture_is_an_error() {
        assert!(matches!(
            load_fixture("nope"),
            Err(Error::UnknownFixture(_))
        ));
    }

    #[test]
    fn property_star_flag_matches_a_run() {
        for name in ["doubling", "golden", "full2"] {
            let f = load_fixture(name).unwrap();
            assert!(f.info.hypotheses.property_star_star);
            assert!(
                check_property_star(&f.host, 0.125, 4).unwrap().certified,
                "{name}"
            );
        }
        let f = load_fixture("halving").unwrap();
        assert!(!f.info.hypotheses.property_star_star);
        assert!(!check_property_star(&f.host, 0.125, 4).unwrap().certified);
    }
}
