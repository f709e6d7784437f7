//! Finite-`n` estimate sequences with bound flags and extrapolation.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Direction in which a single cell bounds the limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// Certified upper bound on the limit.
    Upper,
    /// Certified lower bound on the limit.
    Lower,
    /// Plain estimate without a certified direction.
    Estimate,
}

/// One `(n, ε)` cell of a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceCell {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub bound: BoundFlag,
}

/// A sequence of finite-`n` estimates of one quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateTrace {
    pub quantity: String,
    pub method: String,
    pub cells: Vec<TraceCell>,
    #[serde(with = "ext_f64")]
    pub headline: f64,
    pub headline_bound: BoundFlag,
    #[serde(with = "ext_f64::option", default)]
    pub secondary: Option<f64>,
    pub extrapolation: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl EstimateTrace {
    /// Trace of `s_n = L_n / n` for a subadditive sequence `L_n`.
    ///
    /// Every `s_n` bounds the limit from above, so the headline is the minimum;
    /// the secondary value is an Aitken extrapolation along `n_max/4, n_max/2, n_max`.
    pub fn subadditive(quantity: &str, method: &str, log_norms: &[(usize, f64)]) -> Self {
        let cells: Vec<TraceCell> = log_norms
            .iter()
            .map(|&(n, l)| TraceCell {
                n,
                epsilon: None,
                value: l / n as f64,
                bound: BoundFlag::Upper,
            })
            .collect();
        let headline = cells.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
        let headline = if cells.is_empty() { f64::NAN } else { headline };
        let secondary = aitken_on_doublings(&cells);
        EstimateTrace {
            quantity: quantity.into(),
            method: method.into(),
            cells,
            headline,
            headline_bound: BoundFlag::Upper,
            secondary,
            extrapolation:
                "min over n (subadditivity); secondary: Aitken on n_max/4, n_max/2, n_max".into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.metadata.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    /// Value of the cell at `n` (first match).
    pub fn at(&self, n: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.n == n).map(|c| c.value)
    }

    pub fn last(&self) -> Option<f64> {
        self.cells.last().map(|c| c.value)
    }

    /// CSV table with columns `n, epsilon, value, bound_flags`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "epsilon", "value", "bound_flags"])?;
        for c in &self.cells {
            let flag = match c.bound {
                BoundFlag::Upper => "upper",
                BoundFlag::Lower => "lower",
                BoundFlag::Estimate => "estimate",
            };
            w.write_record([
                c.n.to_string(),
                c.epsilon.map(fmt_value).unwrap_or_default(),
                fmt_value(c.value),
                flag.into(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn aitken_on_doublings(cells: &[TraceCell]) -> Option<f64> {
    let n_max = cells.iter().map(|c| c.n).max()?;
    if n_max < 4 || n_max % 4 != 0 {
        return None;
    }
    let get = |n: usize| cells.iter().find(|c| c.n == n).map(|c| c.value);
    let (a, b, c) = (get(n_max / 4)?, get(n_max / 2)?, get(n_max)?);
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return None;
    }
    let denom = (c - b) - (b - a);
    if denom.abs() < 1e-15 {
        return Some(c);
    }
    Some(c - (c - b) * (c - b) / denom)
}

/// Least-squares fit `z_n ≈ p·n + q·ln n + r`; returns `(p, q, r)`.
///
/// Partition sums over nets typically grow like `C·n^q·e^{pn}`; fitting the
/// logarithmic term removes the polynomial prefactor from the growth rate.
pub fn growth_fit(points: &[(usize, f64)]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1.is_finite())
        .map(|&(n, z)| (n as f64, z))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let basis = |n: f64| [n, n.ln(), 1.0];
    let mut ata = [[0.0f64; 3]; 3];
    let mut atz = [0.0f64; 3];
    for &(n, z) in &pts {
        let b = basis(n);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
            atz[i] += b[i] * z;
        }
    }
    let x = solve3(ata, atz)?;
    Some((x[0], x[1], x[2]))
}

/// Slope of the least-squares line through `(n, z_n)`.
pub fn linear_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1.is_finite())
        .map(|&(n, z)| (n as f64, z))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let mz = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxz: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - mz)).sum();
    (sxx > 0.0).then(|| sxz / sxx)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..3 {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some([b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]])
}

/// Serde helpers writing non-finite floats as the strings `"-inf"`, `"inf"` and `"nan"`.
pub mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => super::serialize(x, s),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Formats a possibly infinite value for CSV output.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
