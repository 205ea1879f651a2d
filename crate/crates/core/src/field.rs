use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Coefficients of a function against the L2-orthonormal Neumann eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpectralField {
    coeffs: DVector<f64>,
}

impl SpectralField {
    pub fn new(coeffs: DVector<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n))
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(c))
    }

    /// Unit coefficient vector along mode `j`.
    pub fn basis_vector(n: usize, j: usize) -> Self {
        let mut c = DVector::zeros(n);
        c[j] = 1.0;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> DVector<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Copy with every coefficient outside `indices` zeroed.
    pub fn restricted_to(&self, indices: &[usize]) -> Self {
        let mut c = DVector::zeros(self.len());
        for &j in indices {
            c[j] = self.coeffs[j];
        }
        Self::new(c)
    }

    /// Zero-padded or truncated copy with `n` modes.
    pub fn resized(&self, n: usize) -> Self {
        Self::new(DVector::from_fn(n, |j, _| {
            if j < self.len() {
                self.coeffs[j]
            } else {
                0.0
            }
        }))
    }

    /// Lexicographic comparison of coefficient vectors.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        self.len().cmp(&other.len())
    }
}

impl From<Vec<f64>> for SpectralField {
    fn from(v: Vec<f64>) -> Self {
        Self::new(DVector::from_vec(v))
    }
}

impl From<SpectralField> for Vec<f64> {
    fn from(f: SpectralField) -> Self {
        f.coeffs.as_slice().to_vec()
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        SpectralField::new(&self.coeffs + &rhs.coeffs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        SpectralField::new(&self.coeffs - &rhs.coeffs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        SpectralField::new(&self.coeffs * rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        SpectralField::new(-&self.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_as_plain_array() {
        let u = SpectralField::from_slice(&[1.0, -2.5]);
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, "[1.0,-2.5]");
        let back: SpectralField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn restriction_and_resize() {
        let u = SpectralField::from_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(
            u.restricted_to(&[0, 2]),
            SpectralField::from_slice(&[1.0, 0.0, 3.0])
        );
        assert_eq!(u.resized(5).len(), 5);
        assert_eq!(u.resized(2), SpectralField::from_slice(&[1.0, 2.0]));
    }
}
