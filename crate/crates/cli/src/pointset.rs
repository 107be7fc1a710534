//! Text format for centroid point sets.
//!
//! ```text
//! pedcc-points v1, k=<k>, n=<n>, provenance=<tag>, seed=<seed>
//! <v>,<v>,...,<v>        (k lines of n values)
//! ```
//!
//! Values are written in scientific notation with 17 significant digits, the
//! minimum that round-trips every 64-bit float bit-exactly; serializing,
//! parsing and serializing again is byte-identical.

use pedcc::linalg::RandomSeed;
use pedcc::{PedccSet, Provenance, RealMatrix};

pub const FORMAT_HEADER: &str = "pedcc-points v1";

#[derive(Debug, thiserror::Error)]
pub enum PointSetError {
    #[error("malformed point-set file: {0}")]
    Malformed(String),
    #[error("point-set file holds an invalid set: {0}")]
    Invalid(#[from] pedcc::Error),
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Seed recorded in the header; zero for the seedless closed forms.
fn header_seed(provenance: &Provenance) -> u64 {
    provenance.seed().map_or(0, RandomSeed::value)
}

pub fn serialize_point_set(set: &PedccSet) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{FORMAT_HEADER}, k={}, n={}, provenance={}, seed={}\n",
        set.k(),
        set.n(),
        set.provenance().tag(),
        header_seed(set.provenance())
    ));
    for i in 0..set.k() {
        let line: Vec<String> = set.row(i).iter().copied().map(format_value).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn parse_provenance(tag: &str, seed: u64) -> Result<Provenance, PointSetError> {
    match tag {
        "analytic-recursive" => Ok(Provenance::AnalyticRecursive),
        "simplex-lange" => Ok(Provenance::SimplexLange),
        "iterative-charge" => Ok(Provenance::IterativeCharge {
            seed: RandomSeed(seed),
        }),
        _ => {
            let inner = tag
                .strip_prefix("rotated(")
                .and_then(|rest| rest.strip_suffix(')'))
                .ok_or_else(|| {
                    PointSetError::Malformed(format!("unknown provenance tag {tag:?}"))
                })?;
            let parent = match inner {
                "analytic-recursive" => Provenance::AnalyticRecursive,
                "simplex-lange" => Provenance::SimplexLange,
                _ => {
                    return Err(PointSetError::Malformed(format!(
                        "unsupported rotation parent {inner:?}"
                    )))
                }
            };
            Ok(Provenance::Rotated {
                parent: Box::new(parent),
                seed: RandomSeed(seed),
            })
        }
    }
}

pub fn parse_point_set(text: &str) -> Result<PedccSet, PointSetError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PointSetError::Malformed("empty file".to_string()))?;
    let fields = header
        .strip_prefix(FORMAT_HEADER)
        .and_then(|rest| rest.strip_prefix(", "))
        .ok_or_else(|| {
            PointSetError::Malformed(format!("header must start with {FORMAT_HEADER:?}"))
        })?;

    let mut k = None;
    let mut n = None;
    let mut provenance_tag = None;
    let mut seed = None;
    for field in fields.split(", ") {
        let (key, value) = field.split_once('=').ok_or_else(|| {
            PointSetError::Malformed(format!("header field {field:?} is not key=value"))
        })?;
        match key {
            "k" => {
                k = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| PointSetError::Malformed(format!("bad k value {value:?}")))?,
                )
            }
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| PointSetError::Malformed(format!("bad n value {value:?}")))?,
                )
            }
            "provenance" => provenance_tag = Some(value.to_string()),
            "seed" => {
                seed =
                    Some(value.parse::<u64>().map_err(|_| {
                        PointSetError::Malformed(format!("bad seed value {value:?}"))
                    })?)
            }
            _ => {
                return Err(PointSetError::Malformed(format!(
                    "unknown header field {key:?}"
                )))
            }
        }
    }
    let k = k.ok_or_else(|| PointSetError::Malformed("header is missing k".to_string()))?;
    let n = n.ok_or_else(|| PointSetError::Malformed("header is missing n".to_string()))?;
    let tag = provenance_tag
        .ok_or_else(|| PointSetError::Malformed("header is missing provenance".to_string()))?;
    let seed =
        seed.ok_or_else(|| PointSetError::Malformed("header is missing seed".to_string()))?;
    let provenance = parse_provenance(&tag, seed)?;

    let mut data = Vec::with_capacity(k * n);
    for row in 0..k {
        let line = lines.next().ok_or_else(|| {
            PointSetError::Malformed(format!("expected {k} point rows, found {row}"))
        })?;
        let mut count = 0;
        for token in line.split(',') {
            let value: f64 = token
                .trim()
                .parse()
                .map_err(|_| PointSetError::Malformed(format!("row {row}: bad value {token:?}")))?;
            data.push(value);
            count += 1;
        }
        if count != n {
            return Err(PointSetError::Malformed(format!(
                "row {row} has {count} values, expected {n}"
            )));
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(PointSetError::Malformed(format!(
            "unexpected trailing content: {extra:?}"
        )));
    }

    let points = RealMatrix::from_vec(k, n, data).map_err(PointSetError::Invalid)?;
    Ok(PedccSet::from_points(points, provenance)?)
}
