//! Real functions on the supported state spaces.

use crate::error::{Error, Result};
use crate::systems::{Point, SystemKind, SystemModel};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// A real observable.
///
/// Symbolic hosts use cylinder tables (locally constant functions), finite
/// maps use node tables, metric hosts use closed forms or grid samples with
/// piecewise-linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Constant {
        value: f64,
    },
    /// Depends on the first `depth` symbols; `values` is indexed by the word
    /// read as a base-`alphabet` number, first symbol most significant.
    Cylinder {
        depth: usize,
        alphabet: usize,
        values: Vec<f64>,
    },
    Nodes {
        values: Vec<f64>,
    },
    /// `offset + Σ coeffs[i]·x_i`.
    Affine {
        offset: f64,
        coeffs: Vec<f64>,
    },
    /// `offset + amplitude·cos(2π(frequency·x_coord + phase))`.
    Cosine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
        coord: usize,
    },
    /// Piecewise-linear interpolation of equispaced samples of coordinate 0 on `[lo, hi]`.
    Grid {
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<Observable>,
    },
    Product {
        factors: Vec<Observable>,
    },
    Log {
        inner: Box<Observable>,
    },
    Exp {
        inner: Box<Observable>,
    },
    Scale {
        factor: f64,
        inner: Box<Observable>,
    },
}

impl Observable {
    pub fn constant(value: f64) -> Self {
        Observable::Constant { value }
    }

    pub fn zero() -> Self {
        Observable::constant(0.0)
    }

    /// Function of the first symbol.
    pub fn first_symbol(values: Vec<f64>) -> Self {
        Observable::Cylinder {
            depth: 1,
            alphabet: values.len(),
            values,
        }
    }

    pub fn cylinder(depth: usize, alphabet: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            alphabet.pow(depth as u32),
            "cylinder table size"
        );
        Observable::Cylinder {
            depth,
            alphabet,
            values,
        }
    }

    /// Indicator of the cylinder `[word]`.
    pub fn indicator(alphabet: usize, word: &[u8]) -> Self {
        let depth = word.len();
        let mut values = vec![0.0; alphabet.pow(depth as u32)];
        values[word_index(word, alphabet)] = 1.0;
        Observable::Cylinder {
            depth,
            alphabet,
            values,
        }
    }

    pub fn affine(offset: f64, coeffs: Vec<f64>) -> Self {
        Observable::Affine { offset, coeffs }
    }

    pub fn cosine(offset: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Observable::Cosine {
            offset,
            amplitude,
            frequency,
            phase,
            coord: 0,
        }
    }

    /// Samples `f` at `n + 1` equispaced points of `[lo, hi]`.
    pub fn sampled(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = n.max(1);
        let values = (0..=n)
            .map(|i| f(lo + (hi - lo) * i as f64 / n as f64))
            .collect();
        Observable::Grid { lo, hi, values }
    }

    pub fn ln(self) -> Self {
        Observable::Log {
            inner: Box::new(self),
        }
    }

    pub fn exp(self) -> Self {
        Observable::Exp {
            inner: Box::new(self),
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        Observable::Scale {
            factor,
            inner: Box::new(self),
        }
    }

    pub fn plus(self, other: Observable) -> Self {
        match self {
            Observable::Sum { mut terms } => {
                terms.push(other);
                Observable::Sum { terms }
            }
            s => Observable::Sum {
                terms: vec![s, other],
            },
        }
    }

    pub fn times(self, other: Observable) -> Self {
        Observable::Product {
            factors: vec![self, other],
        }
    }

    /// Number of leading symbols the observable depends on (0 if none).
    pub fn depth(&self) -> usize {
        match self {
            Observable::Cylinder { depth, .. } => *depth,
            Observable::Sum { terms } => terms.iter().map(Observable::depth).max().unwrap_or(0),
            Observable::Product { factors } => {
                factors.iter().map(Observable::depth).max().unwrap_or(0)
            }
            Observable::Log { inner }
            | Observable::Exp { inner }
            | Observable::Scale { inner, .. } => inner.depth(),
            _ => 0,
        }
    }

    /// Whether the observable is locally constant (cylinder, node table or constant).
    pub fn is_locally_constant(&self) -> bool {
        match self {
            Observable::Constant { .. }
            | Observable::Cylinder { .. }
            | Observable::Nodes { .. } => true,
            Observable::Sum { terms } => terms.iter().all(Observable::is_locally_constant),
            Observable::Product { factors } => factors.iter().all(Observable::is_locally_constant),
            Observable::Log { inner }
            | Observable::Exp { inner }
            | Observable::Scale { inner, .. } => inner.is_locally_constant(),
            _ => false,
        }
    }

    /// Checks that the observable can be evaluated on the host's points.
    pub fn check_host(&self, host: &SystemModel) -> Result<()> {
        let symbolic = host.is_symbolic();
        let finite = matches!(host.kind, SystemKind::FiniteMap { .. });
        let dims = match host.kind {
            SystemKind::SquareFixture | SystemKind::LadderFixture { .. } => 2,
            SystemKind::PiecewiseCover(_) | SystemKind::CircleRotation { .. } => 1,
            _ => 0,
        };
        let bad = |m: String| Err(Error::Observable(m));
        match self {
            Observable::Constant { .. } => Ok(()),
            Observable::Cylinder {
                alphabet,
                values,
                depth,
            } => {
                if !symbolic {
                    return bad("cylinder observable on a non-symbolic host".into());
                }
                if Some(*alphabet) != host.alphabet() {
                    return bad(format!(
                        "cylinder alphabet {alphabet} does not match the host"
                    ));
                }
                if values.len() != alphabet.pow(*depth as u32) {
                    return bad("cylinder table has the wrong size".into());
                }
                Ok(())
            }
            Observable::Nodes { values } => match &host.kind {
                SystemKind::FiniteMap { image } if image.len() == values.len() => Ok(()),
                _ if finite => bad("node table size differs from the node count".into()),
                _ => bad("node observable on a non-finite host".into()),
            },
            Observable::Affine { coeffs, .. } => {
                if dims == 0 || coeffs.len() > dims {
                    bad("affine observable needs matching coordinates".into())
                } else {
                    Ok(())
                }
            }
            Observable::Cosine { coord, .. } => {
                if *coord >= dims {
                    bad("cosine observable coordinate out of range".into())
                } else {
                    Ok(())
                }
            }
            Observable::Grid { values, .. } => {
                if dims == 0 || values.len() < 2 {
                    bad("grid observable needs a metric host and two samples".into())
                } else {
                    Ok(())
                }
            }
            Observable::Sum { terms } => terms.iter().try_for_each(|t| t.check_host(host)),
            Observable::Product { factors } => factors.iter().try_for_each(|t| t.check_host(host)),
            Observable::Log { inner }
            | Observable::Exp { inner }
            | Observable::Scale { inner, .. } => inner.check_host(host),
        }
    }

    /// Value at a point. Returns NaN for point kinds the observable does not cover.
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Cylinder {
                depth,
                alphabet,
                values,
            } => match p {
                Point::Word(w) => {
                    let mut idx = 0usize;
                    for i in 0..*depth {
                        idx = idx * alphabet + w.symbol(i) as usize;
                    }
                    values.get(idx).copied().unwrap_or(f64::NAN)
                }
                _ => f64::NAN,
            },
            Observable::Nodes { values } => match p {
                Point::Node(v) => values.get(*v).copied().unwrap_or(f64::NAN),
                _ => f64::NAN,
            },
            _ => match p {
                Point::Real(x) => self.eval_coords(&[*x]),
                Point::Pair(c) => self.eval_coords(c),
                _ => self.eval_composite(|o| o.eval(p)),
            },
        }
    }

    fn eval_composite(&self, f: impl Fn(&Observable) -> f64) -> f64 {
        match self {
            Observable::Sum { terms } => terms.iter().map(&f).sum(),
            Observable::Product { factors } => factors.iter().map(&f).product(),
            Observable::Log { inner } => ln0(f(inner)),
            Observable::Exp { inner } => f(inner).exp(),
            Observable::Scale { factor, inner } => scale(*factor, f(inner)),
            _ => f64::NAN,
        }
    }

    /// Value at a metric point given by coordinates.
    pub fn eval_coords(&self, c: &[f64]) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Affine { offset, coeffs } => {
                offset + coeffs.iter().zip(c).map(|(a, x)| a * x).sum::<f64>()
            }
            Observable::Cosine {
                offset,
                amplitude,
                frequency,
                phase,
                coord,
            } => offset + amplitude * (TAU * (frequency * c[*coord] + phase)).cos(),
            Observable::Grid { lo, hi, values } => interpolate(*lo, *hi, values, c[0]),
            Observable::Cylinder { .. } | Observable::Nodes { .. } => f64::NAN,
            _ => self.eval_composite(|o| o.eval_coords(c)),
        }
    }

    /// Value on a symbol string (at least `depth()` symbols long).
    pub fn eval_symbols(&self, s: &[u8]) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Cylinder {
                depth,
                alphabet,
                values,
            } => {
                if s.len() < *depth {
                    return f64::NAN;
                }
                values[word_index(&s[..*depth], *alphabet)]
            }
            Observable::Sum { terms } => terms.iter().map(|t| t.eval_symbols(s)).sum(),
            Observable::Product { factors } => factors.iter().map(|t| t.eval_symbols(s)).product(),
            Observable::Log { inner } => ln0(inner.eval_symbols(s)),
            Observable::Exp { inner } => inner.eval_symbols(s).exp(),
            Observable::Scale { factor, inner } => scale(*factor, inner.eval_symbols(s)),
            _ => f64::NAN,
        }
    }

    /// Value at a node of a finite map.
    pub fn eval_node(&self, v: usize) -> f64 {
        self.eval(&Point::Node(v))
    }

    /// Re-expresses a locally constant observable as a full cylinder table of the given depth.
    pub fn to_cylinder_table(&self, alphabet: usize, depth: usize) -> Result<Vec<f64>> {
        let depth = depth.max(self.depth());
        let mut out = Vec::with_capacity(alphabet.pow(depth as u32));
        let mut word = vec![0u8; depth];
        for idx in 0..alphabet.pow(depth as u32) {
            let mut r = idx;
            for k in (0..depth).rev() {
                word[k] = (r % alphabet) as u8;
                r /= alphabet;
            }
            let v = self.eval_symbols(&word);
            if v.is_nan() {
                return Err(Error::Observable(
                    "observable is not a cylinder function".into(),
                ));
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// `ln` with `ln 0 = −∞`.
pub fn ln0(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Multiplication with `0·(±∞) = 0`.
fn scale(factor: f64, v: f64) -> f64 {
    if factor == 0.0 {
        0.0
    } else {
        factor * v
    }
}

/// Index of a word read as a base-`alphabet` number, first symbol most significant.
pub fn word_index(word: &[u8], alphabet: usize) -> usize {
    word.iter()
        .fold(0usize, |acc, &s| acc * alphabet + s as usize)
}

/// Inverse of [`word_index`] for words of length `depth`.
pub fn index_word(mut idx: usize, alphabet: usize, depth: usize) -> Vec<u8> {
    let mut w = vec![0u8; depth];
    for k in (0..depth).rev() {
        w[k] = (idx % alphabet) as u8;
        idx /= alphabet;
    }
    w
}

fn interpolate(lo: f64, hi: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let t = ((x - lo) / (hi - lo) * n as f64).clamp(0.0, n as f64);
    let i = (t.floor() as usize).min(n.saturating_sub(1));
    let frac = t - i as f64;
    if frac == 0.0 {
        values[i]
    } else {
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Word;

    #[test]
    fn cylinder_lookup_uses_leading_symbols() {
        let f = Observable::cylinder(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        let p = Point::Word(Word::new(vec![1, 0], vec![1]));
        assert_eq!(f.eval(&p), 2.0);
        assert_eq!(f.eval_symbols(&[0, 1, 1]), 1.0);
    }

    #[test]
    fn log_of_zero_is_negative_infinity() {
        let g = Observable::first_symbol(vec![1.0, 0.0]).ln();
        assert_eq!(g.eval_symbols(&[1]), f64::NEG_INFINITY);
        assert_eq!(g.clone().scale(0.0).eval_symbols(&[1]), 0.0);
    }

    #[test]
    fn grid_interpolates_linearly() {
        let g = Observable::sampled(0.0, 1.0, 4, |x| x * x);
        assert!((g.eval(&Point::Real(0.5)) - 0.25).abs() < 1e-15);
        assert!((g.eval(&Point::Real(0.125)) - 0.03125).abs() < 1e-15);
    }
}
