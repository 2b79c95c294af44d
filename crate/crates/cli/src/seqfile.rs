//! JSON carrier for subspace sequences.

use eipack::subspaces::{AnySequence, SubspaceSequence};
use eipack::{Error, Field, Scalar, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A real entry is a bare number; a complex entry is `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub schema_version: u32,
    pub field: Field,
    pub d: usize,
    pub r: usize,
    pub n: usize,
    /// `n` matrices, each given as `d` rows of `r` entries.
    pub isometries: Vec<Vec<Vec<Entry>>>,
}

impl SequenceFile {
    pub fn from_sequence<T: Scalar>(s: &SubspaceSequence<T>) -> Self {
        let isometries = s
            .isometries()
            .iter()
            .map(|m| {
                m.row_iter()
                    .map(|row| {
                        row.iter()
                            .map(|z| match T::FIELD {
                                Field::Real => Entry::Real(z.real()),
                                Field::Complex => Entry::Complex([z.real(), z.imaginary()]),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SequenceFile {
            schema_version: SCHEMA_VERSION,
            field: T::FIELD,
            d: s.d(),
            r: s.r(),
            n: s.n(),
            isometries,
        }
    }

    pub fn from_any(s: &AnySequence) -> Self {
        match s {
            AnySequence::Real(s) => Self::from_sequence(s),
            AnySequence::Complex(s) => Self::from_sequence(s),
        }
    }

    fn matrices<T: Scalar>(&self) -> Result<Vec<DMatrix<T>>, Error> {
        self.isometries
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                let mut m = DMatrix::<T>::zeros(self.d, self.r);
                for (i, row) in rows.iter().enumerate() {
                    for (k, entry) in row.iter().enumerate() {
                        m[(i, k)] = match (T::FIELD, entry) {
                            (Field::Real, Entry::Real(x)) => T::from_real(*x),
                            (Field::Complex, Entry::Real(x)) => T::from_real(*x),
                            (Field::Complex, Entry::Complex([re, im])) => T::from_parts(*re, *im),
                            (Field::Real, Entry::Complex(_)) => {
                                return Err(Error::FieldMismatch(format!(
                                    "complex entry ({i},{k}) of isometry {j} in a real file"
                                )))
                            }
                        };
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// Checks the declared shape, then ingests with the isometry check at `tol`.
    pub fn to_sequence(&self, tol: &Tolerances) -> Result<AnySequence, Error> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.isometries.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "declared n = {} but {} isometries given",
                self.n,
                self.isometries.len()
            )));
        }
        for (j, rows) in self.isometries.iter().enumerate() {
            if rows.len() != self.d || rows.iter().any(|row| row.len() != self.r) {
                return Err(Error::InvalidInput(format!(
                    "isometry {j} is not {}x{}",
                    self.d, self.r
                )));
            }
        }
        Ok(match self.field {
            Field::Real => AnySequence::Real(SubspaceSequence::new(self.matrices::<f64>()?, tol)?),
            Field::Complex => AnySequence::Complex(SubspaceSequence::new(self.matrices::<Complex64>()?, tol)?),
        })
    }
}
