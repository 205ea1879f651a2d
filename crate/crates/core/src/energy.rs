//! Galerkin energy `J(u) = 1/2 int |grad u|^2 - int F(u)` on the eigenbasis.
//!
//! The quadratic part is exact in coefficients; `int F(u)`, the projections
//! of `f(u)` and the weights `int f'(u) phi_j phi_l` share the quadrature grid
//! of the spectrum, so value, gradient and Hessian are exact derivatives of
//! one another.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::field::SpectralField;
use crate::nonlinearity::NonlinearitySpec;
use crate::spectrum::Spectrum;

#[derive(Debug, Clone)]
pub struct EnergyFunctional<'a> {
    spectrum: &'a Spectrum,
    nonlinearity: NonlinearitySpec,
}

/// Symmetric eigen-decomposition of the Hessian in the H1 metric.
///
/// `eigenvalues` ascend; column `i` of `eigenvectors` holds the coefficients of
/// an H1-normalized eigenfunction.
#[derive(Debug, Clone)]
pub struct HessianSpectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl HessianSpectrum {
    /// Decomposes a coefficient-space second-derivative matrix `A` against the
    /// H1 Gram diagonal `weights = 1 + lambda`.
    pub fn from_second_derivative(a: &DMatrix<f64>, weights: &DVector<f64>) -> Self {
        let n = a.nrows();
        let inv_sqrt = weights.map(|w| 1.0 / w.sqrt());
        let sym = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (a[(i, j)] + a[(j, i)]) * inv_sqrt[i] * inv_sqrt[j]
        });
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let eigenvectors =
            DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])] * inv_sqrt[r]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Eigenvalues below `-tol`.
    pub fn morse_index(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e < -tol).count()
    }

    /// Smallest `|eigenvalue|`.
    pub fn min_abs(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, e| m.min(e.abs()))
    }

    pub fn eigenfunction(&self, i: usize) -> SpectralField {
        SpectralField::new(self.eigenvectors.column(i).into_owned())
    }
}

impl<'a> EnergyFunctional<'a> {
    pub fn new(spectrum: &'a Spectrum, nonlinearity: NonlinearitySpec) -> Self {
        Self {
            spectrum,
            nonlinearity,
        }
    }

    pub fn spectrum(&self) -> &'a Spectrum {
        self.spectrum
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }

    /// Same spectrum, different nonlinearity.
    pub fn with_nonlinearity(&self, nonlinearity: NonlinearitySpec) -> Self {
        Self::new(self.spectrum, nonlinearity)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    pub fn value(&self, u: &SpectralField) -> f64 {
        let grid = self.spectrum.evaluate(u);
        let f = &self.nonlinearity;
        let potential = self.spectrum.integrate(&grid.map(|t| f.primitive(t)));
        0.5 * self.spectrum.dirichlet_energy(u) - potential
    }

    /// `dJ/dc_j = lambda_j c_j - int f(u) phi_j`.
    pub fn coefficient_gradient(&self, u: &SpectralField) -> DVector<f64> {
        let grid = self.spectrum.evaluate(u);
        let f = &self.nonlinearity;
        let proj = self.spectrum.project_weighted(&grid.map(|t| f.value(t)));
        let mut g = -proj;
        for (j, p) in self.spectrum.pairs().iter().enumerate() {
            g[j] += p.eigenvalue * u.coeffs()[j];
        }
        g
    }

    /// H1 gradient: `grad_j = u_j - p_j / (1 + lambda_j)` with `p_j` the
    /// projection of `f(u) + u`.
    pub fn gradient(&self, u: &SpectralField) -> SpectralField {
        let g = self.coefficient_gradient(u);
        SpectralField::new(g.component_div(&self.spectrum.h1_weights()))
    }

    /// `||grad J(u)||_{H1}`.
    pub fn residual(&self, u: &SpectralField) -> f64 {
        residual_from_coefficient_gradient(
            &self.coefficient_gradient(u),
            &self.spectrum.h1_weights(),
        )
    }

    /// `A_jl = lambda_j delta_jl - int f'(u) phi_j phi_l`, the coefficient-space
    /// second derivative.
    pub fn second_derivative(&self, u: &SpectralField) -> DMatrix<f64> {
        let grid = self.spectrum.evaluate(u);
        let f = &self.nonlinearity;
        let weights = &self.spectrum.grid().weights;
        let basis = self.spectrum.basis();
        let scaled = DVector::from_iterator(
            grid.len(),
            grid.iter()
                .zip(weights.iter())
                .map(|(&t, w)| f.derivative(t) * w),
        );
        let mut weighted = basis.clone();
        for (mut row, s) in weighted.row_iter_mut().zip(scaled.iter()) {
            row *= *s;
        }
        let mut a = -basis.tr_mul(&weighted);
        for (j, p) in self.spectrum.pairs().iter().enumerate() {
            a[(j, j)] += p.eigenvalue;
        }
        a
    }

    /// H1 representation `H_jl = delta_jl - q_jl / (1 + lambda_j)`,
    /// `q_jl = int (f'(u) + 1) phi_j phi_l`.
    pub fn hessian(&self, u: &SpectralField) -> DMatrix<f64> {
        let mut a = self.second_derivative(u);
        for (j, p) in self.spectrum.pairs().iter().enumerate() {
            let w = 1.0 + p.eigenvalue;
            a.row_mut(j).scale_mut(1.0 / w);
        }
        a
    }

    /// H1-representation times `v`.
    pub fn hessian_vector(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        SpectralField::new(self.hessian(u) * v.coeffs())
    }

    pub fn hessian_spectrum(&self, u: &SpectralField) -> HessianSpectrum {
        HessianSpectrum::from_second_derivative(
            &self.second_derivative(u),
            &self.spectrum.h1_weights(),
        )
    }
}

pub(crate) fn residual_from_coefficient_gradient(g: &DVector<f64>, weights: &DVector<f64>) -> f64 {
    g.iter()
        .zip(weights.iter())
        .map(|(g, w)| g * g / w)
        .sum::<f64>()
        .sqrt()
}
