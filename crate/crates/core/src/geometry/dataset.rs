use serde::{Deserialize, Serialize};

use super::{validate_points, Point2};
use crate::{Error, Real, Result};

/// Row-major `rows x cols` design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DesignMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "design matrix has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix contains non-finite values"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("design rows have unequal length"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Prepends a column of ones to the given covariate columns.
    pub fn with_intercept(covariates: &[Vec<T>]) -> Result<Self> {
        let rows: Vec<Vec<T>> = covariates
            .iter()
            .map(|r| std::iter::once(T::one()).chain(r.iter().copied()).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn intercept_only(rows: usize) -> Self {
        Self {
            rows,
            cols: 1,
            data: vec![T::one(); rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// `X beta` for every row.
    pub fn mul_vec(&self, beta: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| crate::linalg::dot(self.row(i), beta))
            .collect()
    }
}

/// Coordinates, design matrix and response of a point-referenced data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDataset<T> {
    coords: Vec<Point2<T>>,
    design: DesignMatrix<T>,
    response: Vec<T>,
}

impl<T: Real> SpatialDataset<T> {
    pub fn new(coords: Vec<Point2<T>>, design: DesignMatrix<T>, response: Vec<T>) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::invalid("data set must contain at least one location"));
        }
        if design.rows() != n || response.len() != n {
            return Err(Error::invalid(format!(
                "length mismatch: {n} coordinates, {} design rows, {} responses",
                design.rows(),
                response.len()
            )));
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response contains non-finite values"));
        }
        validate_points(&coords)?;
        Ok(Self {
            coords,
            design,
            response,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.design.cols()
    }

    pub fn coords(&self) -> &[Point2<T>] {
        &self.coords
    }

    pub fn design(&self) -> &DesignMatrix<T> {
        &self.design
    }

    pub fn response(&self) -> &[T] {
        &self.response
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            coords: idx.iter().map(|&i| self.coords[i]).collect(),
            design: self.design.select_rows(idx),
            response: idx.iter().map(|&i| self.response[i]).collect(),
        }
    }
}
