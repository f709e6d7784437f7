//! Closed subsets used as restrictions `Y`.

use super::{dedup_points, Continuum, Point, Word, TOL};
use serde::{Deserialize, Serialize};

/// An axis-parallel box; degenerate boxes describe segments and points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        BoxSet {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        BoxSet {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.lo.len()
            && coords
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| *x >= lo - TOL && *x <= hi + TOL)
    }
}

/// A closed subset of a state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subset {
    Nodes {
        nodes: Vec<usize>,
    },
    /// Sub-shift of finite type given by a smaller transition matrix.
    Sft {
        transitions: Vec<Vec<u8>>,
    },
    Boxes {
        boxes: Vec<BoxSet>,
    },
    Points {
        points: Vec<Point>,
    },
}

impl Subset {
    pub fn intervals(list: &[(f64, f64)]) -> Self {
        Subset::Boxes {
            boxes: list.iter().map(|&(a, b)| BoxSet::interval(a, b)).collect(),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match (self, x) {
            (Subset::Nodes { nodes }, Point::Node(v)) => nodes.contains(v),
            (Subset::Sft { transitions }, Point::Word(w)) => sft_admissible(transitions, w),
            (Subset::Boxes { boxes }, p) => {
                let c = p.coords();
                !c.is_empty() && boxes.iter().any(|b| b.contains(&c))
            }
            (Subset::Points { points }, p) => points.iter().any(|q| q.approx_eq(p)),
            _ => false,
        }
    }

    /// Splits `c ∩ Y` into isolated points and remaining continua.
    pub fn intersect_continuum(&self, c: &Continuum) -> (Vec<Point>, Vec<Continuum>) {
        let mut points = Vec::new();
        let mut rest = Vec::new();
        match self {
            Subset::Boxes { boxes } => {
                let anchor = c.anchor.coords();
                for b in boxes {
                    if b.lo.len() != anchor.len() {
                        continue;
                    }
                    let others_ok = (0..anchor.len())
                        .filter(|&k| k != c.coord)
                        .all(|k| anchor[k] >= b.lo[k] - TOL && anchor[k] <= b.hi[k] + TOL);
                    if !others_ok {
                        continue;
                    }
                    let lo = c.lo.max(b.lo[c.coord]);
                    let hi = c.hi.min(b.hi[c.coord]);
                    if hi < lo - TOL {
                        continue;
                    }
                    let mut at = anchor.clone();
                    if hi - lo <= TOL {
                        at[c.coord] = lo;
                        points.push(point_from(&at));
                    } else {
                        at[c.coord] = lo;
                        rest.push(Continuum {
                            anchor: point_from(&at),
                            coord: c.coord,
                            lo,
                            hi,
                        });
                    }
                }
            }
            Subset::Points { points: list } => {
                for p in list {
                    let q = p.coords();
                    let anchor = c.anchor.coords();
                    if q.len() == anchor.len()
                        && (0..q.len()).all(|k| {
                            if k == c.coord {
                                q[k] >= c.lo - TOL && q[k] <= c.hi + TOL
                            } else {
                                (q[k] - anchor[k]).abs() <= TOL
                            }
                        })
                    {
                        points.push(p.clone());
                    }
                }
            }
            _ => {}
        }
        dedup_points(&mut points);
        (points, rest)
    }
}

fn point_from(c: &[f64]) -> Point {
    if c.len() == 1 {
        Point::Real(c[0])
    } else {
        Point::Pair([c[0], c[1]])
    }
}

/// Whether the word only uses transitions allowed by `t`.
pub fn sft_admissible(t: &[Vec<u8>], w: &Word) -> bool {
    let a = t.len();
    let span = w.preperiod() + w.period() + 1;
    (0..span).all(|i| {
        let (s, u) = (w.symbol(i) as usize, w.symbol(i + 1) as usize);
        s < a && u < a && t[s][u] == 1
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_continuum_meets_horizontal_lines_in_points() {
        let y = Subset::Boxes {
            boxes: vec![
                BoxSet::rect([0.0, 1.0], [1.0, 1.0]),
                BoxSet::rect([0.0, 0.0], [1.0, 0.0]),
            ],
        };
        let c = Continuum {
            anchor: Point::Pair([0.5, 0.75]),
            coord: 1,
            lo: 0.75,
            hi: 1.0,
        };
        let (p, rest) = y.intersect_continuum(&c);
        assert_eq!(p, vec![Point::Pair([0.5, 1.0])]);
        assert!(rest.is_empty());
    }
}
