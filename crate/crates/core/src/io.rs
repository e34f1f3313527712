//! File formats: serialized families and node sets.
//!
//! Both formats are JSON with every scalar encoded through its canonical
//! literal, so the rational path round-trips bit-exactly and the float path
//! round-trips through the shortest-representation printer. Field order is
//! fixed by the struct declarations; serialization is byte-stable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::block_linalg::{BlockMatrix, CholeskyResult, Mat};
use crate::darboux::{NodeEntry, NodeSet};
use crate::error::{Error, Result};
use crate::graded_basis::GradedBasis;
use crate::mvopr::MVOPRFamily;
use crate::poly::Direction;
use crate::scalar::Scalar;

pub const FAMILY_FORMAT: &str = "mvopr-family/1";
pub const NODES_FORMAT: &str = "mvopr-nodes/1";

/// Within-block ordering convention tag.
pub const ORDERING_TAG: &str = "graded-desc-lex";

/// Serialized orthogonal family: basis layout tag, `H` blocks, the strictly
/// lower blocks of `S` (diagonals are identities by construction), and a
/// human-readable polynomial listing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub format: String,
    pub dimension: usize,
    pub max_degree: usize,
    pub ordering: String,
    pub scalar: String,
    pub h_blocks: Vec<Vec<Vec<String>>>,
    pub s_lower: Vec<SBlockFile>,
    pub polynomials: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SBlockFile {
    pub row_degree: usize,
    pub col_degree: usize,
    pub entries: Vec<Vec<String>>,
}

fn mat_to_strings<S: Scalar>(m: &Mat<S>) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.at(i, j).format_literal()).collect())
        .collect()
}

fn mat_from_strings<S: Scalar>(rows: &[Vec<String>]) -> Result<Mat<S>> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("ragged matrix in file".into()));
    }
    let mut out = Mat::zeros(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, lit) in row.iter().enumerate() {
            *out.at_mut(i, j) = S::parse_literal(lit)?;
        }
    }
    Ok(out)
}

pub fn family_to_file<S: Scalar>(fam: &MVOPRFamily<S>, scalar: &str) -> FamilyFile {
    let basis = fam.basis();
    let top = basis.max_degree();
    let h_blocks = (0..=top)
        .map(|k| mat_to_strings(fam.chol().h_block(k)))
        .collect();
    let mut s_lower = Vec::new();
    for k in 1..=top {
        for l in 0..k {
            let block = fam.chol().s().block(k, l);
            if !block.is_zero_matrix() {
                s_lower.push(SBlockFile {
                    row_degree: k,
                    col_degree: l,
                    entries: mat_to_strings(&block),
                });
            }
        }
    }
    let polynomials = (0..=top)
        .map(|k| {
            fam.polynomial_block(k)
                .iter()
                .map(|p| p.to_string())
                .collect()
        })
        .collect();
    FamilyFile {
        format: FAMILY_FORMAT.into(),
        dimension: basis.dimension(),
        max_degree: top,
        ordering: ORDERING_TAG.into(),
        scalar: scalar.into(),
        h_blocks,
        s_lower,
        polynomials,
    }
}

/// Reconstructs the basis and factorization data from a family file. The
/// measure is not stored; the result supports the formula pipeline but not a
/// fresh oracle factorization.
pub fn family_from_file<S: Scalar>(
    file: &FamilyFile,
    tol: f64,
) -> Result<(Arc<GradedBasis>, CholeskyResult<S>)> {
    if file.format != FAMILY_FORMAT {
        return Err(Error::Parse(format!(
            "unknown family format {:?}",
            file.format
        )));
    }
    if file.ordering != ORDERING_TAG {
        return Err(Error::Parse(format!(
            "unknown ordering tag {:?}",
            file.ordering
        )));
    }
    let basis = Arc::new(GradedBasis::new(file.dimension, file.max_degree)?);
    let mut s = BlockMatrix::identity(basis.clone());
    for block in &file.s_lower {
        if block.row_degree > file.max_degree || block.col_degree >= block.row_degree {
            return Err(Error::Parse("S block indices out of range".into()));
        }
        s.set_block(
            block.row_degree,
            block.col_degree,
            &mat_from_strings(&block.entries)?,
        );
    }
    let mut h = Vec::with_capacity(file.h_blocks.len());
    for rows in &file.h_blocks {
        h.push(mat_from_strings(rows)?);
    }
    let chol = CholeskyResult::from_parts(s, h, tol)?;
    Ok((basis, chol))
}

/// Serialized node set. Directions are dense coefficient vectors over the
/// block `[order]`; plain-evaluation entries omit them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeFile {
    pub format: String,
    pub dimension: usize,
    pub nodes: Vec<NodeFileEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeFileEntry {
    pub point: Vec<String>,
    pub factor: usize,
    #[serde(default)]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<String>>,
}

pub fn nodes_to_file<F: Scalar>(nodes: &NodeSet<F>, dimension: usize) -> NodeFile {
    let entries = nodes
        .entries()
        .iter()
        .map(|e| NodeFileEntry {
            point: e.point.iter().map(Scalar::format_literal).collect(),
            factor: e.factor,
            order: e.order,
            direction: (e.order > 0).then(|| {
                e.direction
                    .coeffs()
                    .iter()
                    .map(Scalar::format_literal)
                    .collect()
            }),
        })
        .collect();
    NodeFile {
        format: NODES_FORMAT.into(),
        dimension,
        nodes: entries,
    }
}

pub fn nodes_from_file<F: Scalar>(file: &NodeFile) -> Result<NodeSet<F>> {
    if file.format != NODES_FORMAT {
        return Err(Error::Parse(format!(
            "unknown nodes format {:?}",
            file.format
        )));
    }
    let mut entries = Vec::with_capacity(file.nodes.len());
    for e in &file.nodes {
        if e.point.len() != file.dimension {
            return Err(Error::DimensionMismatch {
                expected: file.dimension,
                got: e.point.len(),
            });
        }
        let point = e
            .point
            .iter()
            .map(|lit| F::parse_literal(lit))
            .collect::<Result<Vec<F>>>()?;
        let direction = match (&e.direction, e.order) {
            (None, 0) => Direction::evaluation(file.dimension),
            (None, _) => {
                return Err(Error::Parse(format!(
                    "node with order {} needs a direction vector",
                    e.order
                )))
            }
            (Some(coeffs), order) => {
                let parsed = coeffs
                    .iter()
                    .map(|lit| F::parse_literal(lit))
                    .collect::<Result<Vec<F>>>()?;
                Direction::new(file.dimension, order, parsed)?
            }
        };
        entries.push(NodeEntry {
            point,
            factor: e.factor,
            order: e.order,
            direction,
        });
    }
    Ok(NodeSet::new(entries))
}

/// Deterministic JSON text with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
