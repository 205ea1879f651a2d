//! Neumann eigenbasis on intervals and rectangles.
//!
//! Every eigenfunction is a (tensor product of) cosine(s), so the zero normal
//! derivative holds by construction and eigenpairs are known in closed form.
//! Index `j = 0` is the constant mode with eigenvalue zero; counting with
//! multiplicity starts there.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::SpectralField;

/// Distance below which a slope is treated as hitting an eigenvalue.
pub const RESONANCE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("domain lengths must be positive and finite, got {0:?}")]
    BadLength(Vec<f64>),
    #[error("{kind:?} domain expects {expected} length(s), got {got}")]
    AxisCount {
        kind: DomainKind,
        expected: usize,
        got: usize,
    },
    #[error("at least 2 modes are required, got {0}")]
    TooFewModes(usize),
    #[error("axis {axis}: {points} quadrature points is below 4 x {modes} modes")]
    Undersampled {
        axis: usize,
        points: usize,
        modes: usize,
    },
    #[error("slope {slope} is resonant with eigenvalue {eigenvalue} (index {index})")]
    ResonantSlope {
        slope: f64,
        index: usize,
        eigenvalue: f64,
    },
    #[error("slope must be positive, got {0}")]
    NonPositiveSlope(f64),
    #[error("grid size mismatch: expected {expected} values, got {got}")]
    GridMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

impl DomainKind {
    pub fn axes(self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::Rectangle => 2,
        }
    }
}

/// `[0, L]` or `[0, Lx] x [0, Ly]`, plus the number of quadrature nodes per axis.
///
/// `quad_points` empty means "pick a default" once the mode count is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
    #[serde(default)]
    pub quad_points: Vec<usize>,
}

impl Domain {
    pub fn interval(length: f64) -> Self {
        Self {
            kind: DomainKind::Interval,
            lengths: vec![length],
            quad_points: Vec::new(),
        }
    }

    pub fn rectangle(lx: f64, ly: f64) -> Self {
        Self {
            kind: DomainKind::Rectangle,
            lengths: vec![lx, ly],
            quad_points: Vec::new(),
        }
    }

    pub fn with_quad_points(mut self, points: Vec<usize>) -> Self {
        self.quad_points = points;
        self
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let axes = self.kind.axes();
        if self.lengths.len() != axes {
            return Err(SpectrumError::AxisCount {
                kind: self.kind,
                expected: axes,
                got: self.lengths.len(),
            });
        }
        if self.lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SpectrumError::BadLength(self.lengths.clone()));
        }
        if !self.quad_points.is_empty() && self.quad_points.len() != axes {
            return Err(SpectrumError::AxisCount {
                kind: self.kind,
                expected: axes,
                got: self.quad_points.len(),
            });
        }
        Ok(())
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub index: usize,
    pub eigenvalue: f64,
    /// Cosine wave numbers per axis.
    pub mode: Vec<usize>,
    pub norm_constant: f64,
}

/// Index sets of the splitting `H = X (+) Y` at a reference slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub slope: f64,
    /// `dim X`, the number of eigenvalues strictly below `slope`.
    pub k: usize,
    pub x_indices: Vec<usize>,
    pub y_indices: Vec<usize>,
}

impl Splitting {
    /// Largest eigenvalue in X, if X is nonempty.
    pub fn lambda_max_x(&self, spectrum: &Spectrum) -> Option<f64> {
        self.x_indices.last().map(|&j| spectrum.eigenvalue(j))
    }

    /// Smallest eigenvalue in Y, if Y is nonempty.
    pub fn lambda_min_y(&self, spectrum: &Spectrum) -> Option<f64> {
        self.y_indices.first().map(|&j| spectrum.eigenvalue(j))
    }

    pub fn project_x(&self, u: &SpectralField) -> SpectralField {
        u.restricted_to(&self.x_indices)
    }

    pub fn project_y(&self, u: &SpectralField) -> SpectralField {
        u.restricted_to(&self.y_indices)
    }
}

/// Tensor-product trapezoidal grid with the eigenfunctions tabulated on it.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub points_per_axis: Vec<usize>,
    /// Node coordinates, one row per node (x or (x, y)).
    pub nodes: Vec<[f64; 2]>,
    pub weights: DVector<f64>,
}

/// The `N` lowest Neumann eigenpairs of a domain together with the quadrature
/// tables used to move between coefficients and grid values.
#[derive(Debug, Clone)]
pub struct Spectrum {
    domain: Domain,
    pairs: Vec<EigenPair>,
    grid: QuadratureGrid,
    /// `basis[(q, j)] = phi_j(x_q)`.
    basis: DMatrix<f64>,
    /// Per-axis partial derivatives of the eigenfunctions at the nodes.
    basis_grad: Vec<DMatrix<f64>>,
}

/// Smallest mode count per axis able to represent the selected modes.
fn modes_per_axis(pairs: &[EigenPair], axes: usize) -> Vec<usize> {
    (0..axes)
        .map(|a| pairs.iter().map(|p| p.mode[a]).max().unwrap_or(0) + 1)
        .collect()
}

fn axis_eigenvalue(m: usize, length: f64) -> f64 {
    let w = m as f64 * PI / length;
    w * w
}

fn axis_norm(m: usize, length: f64) -> f64 {
    if m == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt()
    }
}

/// Builds the `n` smallest Neumann eigenpairs, sorted ascending.
///
/// Equal eigenvalues are ordered with the last axis most significant, so on
/// the square `(1,0)` precedes `(0,1)`.
pub fn build_spectrum(domain: &Domain, n: usize) -> Result<Spectrum, SpectrumError> {
    domain.validate()?;
    if n < 2 {
        return Err(SpectrumError::TooFewModes(n));
    }
    let axes = domain.kind.axes();
    let mut candidates: Vec<(f64, Vec<usize>)> = match domain.kind {
        DomainKind::Interval => (0..n)
            .map(|m| (axis_eigenvalue(m, domain.lengths[0]), vec![m]))
            .collect(),
        DomainKind::Rectangle => {
            let mut c = Vec::with_capacity(n * n);
            for my in 0..n {
                for mx in 0..n {
                    let lam = axis_eigenvalue(mx, domain.lengths[0])
                        + axis_eigenvalue(my, domain.lengths[1]);
                    c.push((lam, vec![mx, my]));
                }
            }
            c
        }
    };
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            let ra: Vec<usize> = a.1.iter().rev().copied().collect();
            let rb: Vec<usize> = b.1.iter().rev().copied().collect();
            ra.cmp(&rb)
        })
    });
    candidates.truncate(n);

    let pairs: Vec<EigenPair> = candidates
        .into_iter()
        .enumerate()
        .map(|(index, (eigenvalue, mode))| {
            let norm_constant = mode
                .iter()
                .zip(&domain.lengths)
                .map(|(&m, &l)| axis_norm(m, l))
                .product();
            EigenPair {
                index,
                eigenvalue,
                mode,
                norm_constant,
            }
        })
        .collect();

    let per_axis = modes_per_axis(&pairs, axes);
    let points: Vec<usize> = if domain.quad_points.is_empty() {
        per_axis.iter().map(|&m| default_quad_points(m)).collect()
    } else {
        domain.quad_points.clone()
    };
    for (axis, (&p, &m)) in points.iter().zip(&per_axis).enumerate() {
        if p < 4 * m || p < 2 {
            return Err(SpectrumError::Undersampled {
                axis,
                points: p,
                modes: m,
            });
        }
    }
    let mut domain = domain.clone();
    domain.quad_points = points.clone();

    let grid = trapezoid_grid(&domain.lengths, &points);
    let q = grid.nodes.len();
    let mut basis = DMatrix::zeros(q, n);
    let mut basis_grad = vec![DMatrix::zeros(q, n); axes];
    for (j, pair) in pairs.iter().enumerate() {
        for (row, node) in grid.nodes.iter().enumerate() {
            let mut value = pair.norm_constant;
            let mut cosines = [1.0; 2];
            let mut sines = [0.0; 2];
            for a in 0..axes {
                let w = pair.mode[a] as f64 * PI / domain.lengths[a];
                cosines[a] = (w * node[a]).cos();
                sines[a] = -w * (w * node[a]).sin();
                value *= cosines[a];
            }
            basis[(row, j)] = value;
            for a in 0..axes {
                let mut d = pair.norm_constant * sines[a];
                for (b, cb) in cosines.iter().enumerate().take(axes) {
                    if b != a {
                        d *= cb;
                    }
                }
                basis_grad[a][(row, j)] = d;
            }
        }
    }

    Ok(Spectrum {
        domain,
        pairs,
        grid,
        basis,
        basis_grad,
    })
}

/// Default node count for an axis carrying `modes` cosines.
pub fn default_quad_points(modes: usize) -> usize {
    16 * modes + 1
}

fn trapezoid_grid(lengths: &[f64], points: &[usize]) -> QuadratureGrid {
    let axis_nodes: Vec<(Vec<f64>, Vec<f64>)> = lengths
        .iter()
        .zip(points)
        .map(|(&l, &p)| {
            let intervals = p - 1;
            let h = l / intervals as f64;
            let x = (0..p).map(|i| i as f64 * h).collect();
            let w = (0..p)
                .map(|i| if i == 0 || i == intervals { 0.5 * h } else { h })
                .collect();
            (x, w)
        })
        .collect();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match axis_nodes.as_slice() {
        [(x, wx)] => {
            for (xi, wi) in x.iter().zip(wx) {
                nodes.push([*xi, 0.0]);
                weights.push(*wi);
            }
        }
        [(x, wx), (y, wy)] => {
            for (yi, wyi) in y.iter().zip(wy) {
                for (xi, wxi) in x.iter().zip(wx) {
                    nodes.push([*xi, *yi]);
                    weights.push(wxi * wyi);
                }
            }
        }
        _ => unreachable!("domains have one or two axes"),
    }
    QuadratureGrid {
        points_per_axis: points.to_vec(),
        nodes,
        weights: DVector::from_vec(weights),
    }
}

impl Spectrum {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.pairs[j].eigenvalue
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `1 + lambda_j`, the diagonal of the H1 Gram matrix.
    pub fn h1_weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.pairs.iter().map(|p| 1.0 + p.eigenvalue))
    }

    /// Splits the index range at `slope`: X collects eigenvalues strictly below it.
    pub fn split(&self, slope: f64) -> Result<Splitting, SpectrumError> {
        if slope.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(SpectrumError::NonPositiveSlope(slope));
        }
        self.check_nonresonant(slope)?;
        let (x_indices, y_indices): (Vec<usize>, Vec<usize>) =
            (0..self.len()).partition(|&j| self.eigenvalue(j) < slope);
        Ok(Splitting {
            slope,
            k: x_indices.len(),
            x_indices,
            y_indices,
        })
    }

    pub fn check_nonresonant(&self, slope: f64) -> Result<(), SpectrumError> {
        match self
            .pairs
            .iter()
            .find(|p| (p.eigenvalue - slope).abs() < RESONANCE_TOL)
        {
            Some(p) => Err(SpectrumError::ResonantSlope {
                slope,
                index: p.index,
                eigenvalue: p.eigenvalue,
            }),
            None => Ok(()),
        }
    }

    /// Number of eigenvalues (with multiplicity) strictly below `slope`.
    pub fn count_below(&self, slope: f64) -> usize {
        self.pairs.iter().filter(|p| p.eigenvalue < slope).count()
    }

    /// Grid values of `u`.
    pub fn evaluate(&self, u: &SpectralField) -> DVector<f64> {
        &self.basis * u.coeffs()
    }

    /// Grid values of each partial derivative of `u`.
    pub fn evaluate_gradient(&self, u: &SpectralField) -> Vec<DVector<f64>> {
        self.basis_grad.iter().map(|b| b * u.coeffs()).collect()
    }

    /// Quadrature L2 projection of grid values onto the eigenbasis.
    pub fn project(&self, values: &DVector<f64>) -> Result<SpectralField, SpectrumError> {
        if values.len() != self.grid.nodes.len() {
            return Err(SpectrumError::GridMismatch {
                expected: self.grid.nodes.len(),
                got: values.len(),
            });
        }
        Ok(SpectralField::new(self.project_weighted(values)))
    }

    pub(crate) fn project_weighted(&self, values: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(&values.component_mul(&self.grid.weights))
    }

    /// Quadrature of grid values over the domain.
    pub fn integrate(&self, values: &DVector<f64>) -> f64 {
        values.dot(&self.grid.weights)
    }

    /// Field equal to the constant `value` everywhere.
    pub fn constant_field(&self, value: f64) -> SpectralField {
        let mut c = DVector::zeros(self.len());
        c[0] = value * self.domain.measure().sqrt();
        SpectralField::new(c)
    }

    /// Mode-0 coefficient converted back to the constant it represents.
    pub fn mean_value(&self, u: &SpectralField) -> f64 {
        u.coeffs()[0] / self.domain.measure().sqrt()
    }

    /// `||u||_{H1}` from the coefficients.
    pub fn h1_norm(&self, u: &SpectralField) -> f64 {
        self.h1_inner(u, u).sqrt()
    }

    pub fn h1_inner(&self, u: &SpectralField, v: &SpectralField) -> f64 {
        self.pairs
            .iter()
            .zip(u.coeffs().iter().zip(v.coeffs().iter()))
            .map(|(p, (a, b))| (1.0 + p.eigenvalue) * a * b)
            .sum()
    }

    pub fn h1_distance(&self, u: &SpectralField, v: &SpectralField) -> f64 {
        self.h1_norm(&(u - v))
    }

    /// `int |grad u|^2`, exact by orthogonality.
    pub fn dirichlet_energy(&self, u: &SpectralField) -> f64 {
        self.pairs
            .iter()
            .zip(u.coeffs().iter())
            .map(|(p, c)| p.eigenvalue * c * c)
            .sum()
    }

    /// Image of `u` under the reflection `x_axis -> L_axis - x_axis`.
    pub fn reflect(&self, u: &SpectralField, axis: usize) -> SpectralField {
        let c = DVector::from_iterator(
            self.len(),
            self.pairs.iter().zip(u.coeffs().iter()).map(|(p, &c)| {
                if p.mode[axis] % 2 == 1 {
                    -c
                } else {
                    c
                }
            }),
        );
        SpectralField::new(c)
    }

    /// All nontrivial compositions of axis reflections applied to `u`.
    pub fn reflections(&self, u: &SpectralField) -> Vec<SpectralField> {
        match self.domain.kind {
            DomainKind::Interval => vec![self.reflect(u, 0)],
            DomainKind::Rectangle => {
                let rx = self.reflect(u, 0);
                let ry = self.reflect(u, 1);
                let rxy = self.reflect(&rx, 1);
                vec![rx, ry, rxy]
            }
        }
    }

    /// Value of `u` at an arbitrary point of the domain.
    pub fn value_at(&self, u: &SpectralField, point: &[f64]) -> f64 {
        self.pairs
            .iter()
            .zip(u.coeffs().iter())
            .map(|(p, c)| {
                let phi: f64 = p
                    .mode
                    .iter()
                    .zip(point)
                    .zip(&self.domain.lengths)
                    .map(|((&m, &x), &l)| (m as f64 * PI * x / l).cos())
                    .product();
                c * p.norm_constant * phi
            })
            .sum()
    }

    /// (min, max) of `u` over the grid nodes.
    pub fn range(&self, u: &SpectralField) -> (f64, f64) {
        let v = self.evaluate(u);
        (v.min(), v.max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_interval() -> Spectrum {
        build_spectrum(&Domain::interval(PI), 8).unwrap()
    }

    #[test]
    fn interval_eigenvalues_are_squares() {
        let s = build_spectrum(&Domain::interval(PI), 4).unwrap();
        let lam = s.eigenvalues();
        for (j, l) in lam.iter().enumerate() {
            assert!((l - (j * j) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_mode_is_one_over_sqrt_pi() {
        let s = unit_interval();
        let col = s.basis().column(0);
        for v in col.iter() {
            assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn square_spectrum_and_mode_order() {
        let s = build_spectrum(&Domain::rectangle(PI, PI), 4).unwrap();
        assert_eq!(
            s.eigenvalues()
                .iter()
                .map(|l| l.round())
                .collect::<Vec<_>>(),
            vec![0.0, 1.0, 1.0, 2.0]
        );
        let modes: Vec<Vec<usize>> = s.pairs().iter().map(|p| p.mode.clone()).collect();
        assert_eq!(modes, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            build_spectrum(&Domain::interval(PI), 1).unwrap_err(),
            SpectrumError::TooFewModes(1)
        );
        assert!(matches!(
            build_spectrum(&Domain::interval(-1.0), 4),
            Err(SpectrumError::BadLength(_))
        ));
        assert!(matches!(
            build_spectrum(&Domain::interval(PI).with_quad_points(vec![10]), 4),
            Err(SpectrumError::Undersampled { .. })
        ));
    }

    #[test]
    fn splitting_counts_eigenvalues_below_slope() {
        let s = unit_interval();
        let sp = s.split(2.5).unwrap();
        assert_eq!(sp.k, 2);
        assert_eq!(sp.x_indices, vec![0, 1]);
        assert_eq!(sp.y_indices, (2..8).collect::<Vec<_>>());
        let sp = s.split(0.5).unwrap();
        assert_eq!((sp.k, sp.x_indices.clone()), (1, vec![0]));
        assert!(matches!(
            s.split(4.0),
            Err(SpectrumError::ResonantSlope { index: 2, .. })
        ));
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let s = unit_interval();
        let v = s.evaluate(&s.constant_field(-1.25));
        assert!(v.iter().all(|x| (x + 1.25).abs() < 1e-14));
    }

    #[test]
    fn project_round_trip_on_two_mode_field() {
        let s = unit_interval();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut c = DVector::zeros(8);
            c[rng.gen_range(0..8)] = rng.gen_range(-1.0..1.0);
            c[rng.gen_range(0..8)] = rng.gen_range(-1.0..1.0);
            let u = SpectralField::new(c.clone());
            let back = s.project(&s.evaluate(&u)).unwrap();
            assert!((back.coeffs() - c).amax() < 1e-12);
        }
    }

    #[test]
    fn project_is_linear() {
        let s = unit_interval();
        let a = s.evaluate(&SpectralField::new(DVector::from_fn(8, |j, _| {
            (j as f64).sin()
        })));
        let b = s.evaluate(&SpectralField::new(DVector::from_fn(8, |j, _| {
            (j as f64).cos()
        })));
        let lhs = s.project(&(&a * 2.0 + &b * -0.5)).unwrap();
        let rhs = s.project(&a).unwrap().coeffs() * 2.0 - s.project(&b).unwrap().coeffs() * 0.5;
        assert!((lhs.coeffs() - rhs).amax() < 1e-13);
    }

    #[test]
    fn project_rejects_wrong_grid() {
        let s = unit_interval();
        assert!(matches!(
            s.project(&DVector::zeros(3)),
            Err(SpectrumError::GridMismatch { .. })
        ));
    }

    #[test]
    fn reflection_is_an_involution_and_maps_cos_to_minus_cos() {
        let s = unit_interval();
        let u = SpectralField::new(DVector::from_fn(8, |j, _| 1.0 + j as f64));
        let r = s.reflect(&u, 0);
        assert_eq!(r.coeffs()[1], -2.0);
        assert_eq!(r.coeffs()[2], 3.0);
        assert_eq!(s.reflect(&r, 0), u);
    }
}
