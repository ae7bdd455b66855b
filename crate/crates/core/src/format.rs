//! JSON exchange records for matrices, certificates, cosets and tuples.

use serde::{Deserialize, Serialize};

use crate::coset::{DoubleCoset, ReductionCertificate};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::matrix::ResidueMatrix;
use crate::residue::Modulus;
use crate::train::{TrainCoset, TupleElement};

/// `{p, k, n, rows}` with canonical entries in `[0, p^k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub p: u64,
    pub k: u32,
    pub n: usize,
    pub rows: Vec<Vec<u64>>,
}

impl MatrixRecord {
    pub fn from_element(g: &GroupElement) -> Self {
        let m = g.modulus();
        MatrixRecord {
            p: m.p(),
            k: m.k(),
            n: g.window(),
            rows: g.core().to_rows(),
        }
    }

    pub fn modulus(&self) -> Result<Modulus> {
        Modulus::new(self.p, self.k)
    }

    pub fn to_matrix(&self) -> Result<ResidueMatrix> {
        if self.rows.len() != self.n || self.rows.iter().any(|r| r.len() != self.n) {
            return Err(Error::Format(format!("expected a {0}x{0} matrix", self.n)));
        }
        ResidueMatrix::from_rows(&self.rows, self.modulus()?)
    }

    pub fn to_element(&self) -> Result<GroupElement> {
        GroupElement::new(self.to_matrix()?)
    }
}

/// `{p, k, m, g, q, r, out}`, re-checkable with multiplication and membership alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub p: u64,
    pub k: u32,
    pub m: usize,
    pub g: MatrixRecord,
    pub q: MatrixRecord,
    pub r: MatrixRecord,
    pub out: MatrixRecord,
}

impl CertificateRecord {
    pub fn from_certificate(c: &ReductionCertificate) -> Self {
        let modulus = c.g.modulus();
        CertificateRecord {
            p: modulus.p(),
            k: modulus.k(),
            m: c.m,
            g: MatrixRecord::from_element(&c.g),
            q: MatrixRecord::from_element(&c.q),
            r: MatrixRecord::from_element(&c.r),
            out: MatrixRecord::from_element(&c.out),
        }
    }

    pub fn to_certificate(&self) -> Result<ReductionCertificate> {
        let modulus = Modulus::new(self.p, self.k)?;
        let load = |x: &MatrixRecord| -> Result<GroupElement> {
            let g = x.to_element()?;
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus, g.modulus()));
            }
            Ok(g)
        };
        Ok(ReductionCertificate {
            m: self.m,
            g: load(&self.g)?,
            q: load(&self.q)?,
            r: load(&self.r)?,
            out: load(&self.out)?,
        })
    }
}

/// `{m, representative}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetRecord {
    pub m: usize,
    pub representative: MatrixRecord,
}

impl CosetRecord {
    pub fn from_coset(c: &DoubleCoset) -> Self {
        CosetRecord {
            m: c.m(),
            representative: MatrixRecord::from_element(c.representative()),
        }
    }

    pub fn to_coset(&self) -> Result<DoubleCoset> {
        Ok(DoubleCoset::new(self.m, self.representative.to_element()?))
    }
}

/// `{alpha, gamma, parts}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub alpha: usize,
    pub gamma: usize,
    pub parts: Vec<MatrixRecord>,
}

impl TrainRecord {
    pub fn from_train(t: &TrainCoset) -> Self {
        TrainRecord {
            alpha: t.alpha,
            gamma: t.gamma,
            parts: t.rep.parts().iter().map(MatrixRecord::from_element).collect(),
        }
    }

    pub fn to_train(&self) -> Result<TrainCoset> {
        let parts = self
            .parts
            .iter()
            .map(MatrixRecord::to_element)
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainCoset::new(self.alpha, self.gamma, TupleElement::new(parts)?))
    }
}

/// Inline matrix syntax `"1,0;0,1"`: rows split by `;`, entries by `,`.
/// Entries may be negative and are reduced; the empty string is the identity.
pub fn parse_rows(spec: &str, modulus: Modulus) -> Result<GroupElement> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(GroupElement::identity(modulus));
    }
    let mut rows = Vec::new();
    for (i, row) in spec.split(';').enumerate() {
        let mut out = Vec::new();
        for (j, entry) in row.split(',').enumerate() {
            let x: i64 = entry.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "row {}, entry {}: {:?} is not an integer",
                    i + 1,
                    j + 1,
                    entry.trim()
                ))
            })?;
            out.push(x);
        }
        rows.push(out);
    }
    let n = rows.len();
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::Format(format!(
            "row {} has {} entries, expected {n}",
            i + 1,
            rows[i].len()
        )));
    }
    GroupElement::from_i64_rows(&rows, modulus)
}

/// Inline train syntax `alpha/gamma/rows|rows|...`.
pub fn parse_train(spec: &str, modulus: Modulus) -> Result<TrainCoset> {
    let fields: Vec<&str> = spec.splitn(3, '/').collect();
    let [alpha, gamma, parts] = fields[..] else {
        return Err(Error::Format("expected alpha/gamma/rows|rows|...".into()));
    };
    let depth = |s: &str, what: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("{what} {s:?} is not a nonnegative integer")))
    };
    let parts = parts
        .split('|')
        .map(|p| parse_rows(p, modulus))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainCoset::new(
        depth(alpha, "alpha")?,
        depth(gamma, "gamma")?,
        TupleElement::new(parts)?,
    ))
}
