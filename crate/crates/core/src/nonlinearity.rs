//! Piecewise-cubic, asymptotically affine nonlinearities.
//!
//! A nonlinearity is assembled from Hermite data `(t_i, f(t_i), f'(t_i))`:
//! cubic Hermite pieces between consecutive nodes, a quadratic blend of width
//! `blend_margin` on each side whose derivative moves linearly from the
//! outermost node slope to the asymptotic slope, and affine tails beyond.
//! Every piece is a polynomial, so `F`, `sup f'` and the tails are exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum::{Spectrum, RESONANCE_TOL};

/// Residual `|f(alpha)|` tolerated for a truncation anchor.
const ANCHOR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("nonlinearity needs at least one knot or shape point")]
    Empty,
    #[error("duplicate or unordered nodes at t = {0}")]
    DuplicateKnots(f64),
    #[error("non-finite Hermite data at t = {0}")]
    NonFinite(f64),
    #[error("blend margin {0} cannot carry a C1 blend to the affine tail")]
    NonC1Blend(f64),
    #[error("truncation anchor {anchor} is not a zero of f (f = {value})")]
    AnchorNotZero { anchor: f64, value: f64 },
    #[error("truncation anchor {anchor} has slope {slope} >= 0")]
    AnchorSlopeNonNegative { anchor: f64, slope: f64 },
    #[error("interval truncation needs alpha < beta, got ({0}, {1})")]
    EmptyInterval(f64, f64),
    #[error("homotopy parameter {0} outside [0, 1]")]
    HomotopyParameter(f64),
    #[error("homotopy needs f'(+inf) = f'(-inf), got {minus} and {plus}")]
    AsymmetricSlopes { minus: f64, plus: f64 },
}

fn default_blend_margin() -> f64 {
    1.0
}

/// Serializable description, as it appears in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    /// Simple zeros `[t, f'(t)]`.
    pub knots: Vec<[f64; 2]>,
    /// Extra Hermite data `[t, f(t), f'(t)]`.
    #[serde(default)]
    pub shape_points: Vec<[f64; 3]>,
    pub slope_minus_inf: f64,
    pub slope_plus_inf: f64,
    #[serde(default = "default_blend_margin")]
    pub blend_margin: f64,
}

impl NonlinearityConfig {
    /// Zeros at -2..2 with alternating slopes 2.5 / -3 and asymptotic slope 2.5.
    pub fn ref5() -> Self {
        Self {
            knots: vec![
                [-2.0, 2.5],
                [-1.0, -3.0],
                [0.0, 2.5],
                [1.0, -3.0],
                [2.0, 2.5],
            ],
            shape_points: Vec::new(),
            slope_minus_inf: 2.5,
            slope_plus_inf: 2.5,
            blend_margin: 1.0,
        }
    }

    /// `f(t) = a t`.
    pub fn linear(a: f64) -> Self {
        Self {
            knots: vec![[0.0, a]],
            shape_points: Vec::new(),
            slope_minus_inf: a,
            slope_plus_inf: a,
            blend_margin: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteNode {
    pub t: f64,
    pub value: f64,
    pub slope: f64,
}

/// Modifications of `f` outside a prescribed range, and the homotopy towards
/// the asymptotic linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruncationKind {
    /// Keep `f` on `(-inf, alpha]`, affine with slope `f'(alpha)` above.
    Below { alpha: f64 },
    /// Keep `f` on `[alpha, inf)`, affine with slope `f'(alpha)` below.
    Above { alpha: f64 },
    /// Keep `f` on `[alpha, beta]`, affine with the anchor slopes outside.
    Interval { alpha: f64, beta: f64 },
    /// `lambda f'(inf) t + (1 - lambda) f(t)`.
    Homotopy { lambda: f64 },
}

impl TruncationKind {
    /// Closed range on which the truncation coincides with its source.
    pub fn untouched_range(&self) -> Option<(f64, f64)> {
        match *self {
            TruncationKind::Below { alpha } => Some((f64::NEG_INFINITY, alpha)),
            TruncationKind::Above { alpha } => Some((alpha, f64::INFINITY)),
            TruncationKind::Interval { alpha, beta } => Some((alpha, beta)),
            TruncationKind::Homotopy { lambda: 0.0 } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            TruncationKind::Homotopy { .. } => None,
        }
    }
}

/// Polynomial `sum c_n (t - origin)^n` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    origin: f64,
    c: [f64; 4],
    /// Primitive constant: `F(t) = offset + int_origin^t p`.
    offset: f64,
}

impl Piece {
    fn value(&self, t: f64) -> f64 {
        let s = t - self.origin;
        ((self.c[3] * s + self.c[2]) * s + self.c[1]) * s + self.c[0]
    }

    fn derivative(&self, t: f64) -> f64 {
        let s = t - self.origin;
        (3.0 * self.c[3] * s + 2.0 * self.c[2]) * s + self.c[1]
    }

    fn antiderivative(&self, t: f64) -> f64 {
        let s = t - self.origin;
        (((self.c[3] / 4.0 * s + self.c[2] / 3.0) * s + self.c[1] / 2.0) * s + self.c[0]) * s
    }

    /// (min, max) of the derivative over the piece.
    fn derivative_bounds(&self) -> (f64, f64) {
        if self.c[2] == 0.0 && self.c[3] == 0.0 {
            return (self.c[1], self.c[1]);
        }
        // Only tails are unbounded, and tails are affine.
        let mut cand = vec![self.derivative(self.lo), self.derivative(self.hi)];
        if self.c[3] != 0.0 {
            let vertex = self.origin - self.c[2] / (3.0 * self.c[3]);
            if vertex > self.lo && vertex < self.hi {
                cand.push(self.derivative(vertex));
            }
        }
        cand.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            })
    }
}

/// A validated C1 nonlinearity with exact primitive and derivative bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    nodes: Vec<HermiteNode>,
    slope_minus_inf: f64,
    slope_plus_inf: f64,
    blend_margin: f64,
    pieces: Vec<Piece>,
    gamma: f64,
    slope_floor: f64,
    truncation: Option<TruncationKind>,
    agrees_on: Option<(f64, f64)>,
}

fn hermite_piece(a: &HermiteNode, b: &HermiteNode) -> Piece {
    let h = b.t - a.t;
    let secant = (b.value - a.value) / h;
    Piece {
        lo: a.t,
        hi: b.t,
        origin: a.t,
        c: [
            a.value,
            a.slope,
            (3.0 * secant - 2.0 * a.slope - b.slope) / h,
            (a.slope + b.slope - 2.0 * secant) / (h * h),
        ],
        offset: 0.0,
    }
}

fn affine_piece(lo: f64, hi: f64, origin: f64, value: f64, slope: f64) -> Piece {
    Piece {
        lo,
        hi,
        origin,
        c: [value, slope, 0.0, 0.0],
        offset: 0.0,
    }
}

impl NonlinearitySpec {
    pub fn build(cfg: &NonlinearityConfig) -> Result<Self, NonlinearityError> {
        let mut nodes: Vec<HermiteNode> = cfg
            .knots
            .iter()
            .map(|k| HermiteNode {
                t: k[0],
                value: 0.0,
                slope: k[1],
            })
            .chain(cfg.shape_points.iter().map(|p| HermiteNode {
                t: p[0],
                value: p[1],
                slope: p[2],
            }))
            .collect();
        if nodes.is_empty() {
            return Err(NonlinearityError::Empty);
        }
        for n in &nodes {
            if !(n.t.is_finite() && n.value.is_finite() && n.slope.is_finite()) {
                return Err(NonlinearityError::NonFinite(n.t));
            }
        }
        if !(cfg.slope_minus_inf.is_finite() && cfg.slope_plus_inf.is_finite()) {
            return Err(NonlinearityError::NonFinite(f64::INFINITY));
        }
        nodes.sort_by(|a, b| a.t.total_cmp(&b.t));
        if let Some(w) = nodes.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(NonlinearityError::DuplicateKnots(w[1].t));
        }
        let margin = cfg.blend_margin;
        if !(margin.is_finite() && margin > 0.0) {
            return Err(NonlinearityError::NonC1Blend(margin));
        }

        let first = nodes[0];
        let last = *nodes.last().unwrap();
        let (sm, sp) = (cfg.slope_minus_inf, cfg.slope_plus_inf);
        let left_end = first.t - margin;
        let left_value = first.value - margin * (first.slope + sm) / 2.0;
        let right_end = last.t + margin;
        let right_value = last.value + margin * (last.slope + sp) / 2.0;

        let mut pieces = Vec::with_capacity(nodes.len() + 3);
        pieces.push(affine_piece(
            f64::NEG_INFINITY,
            left_end,
            left_end,
            left_value,
            sm,
        ));
        pieces.push(Piece {
            lo: left_end,
            hi: first.t,
            origin: left_end,
            c: [left_value, sm, (first.slope - sm) / (2.0 * margin), 0.0],
            offset: 0.0,
        });
        for w in nodes.windows(2) {
            pieces.push(hermite_piece(&w[0], &w[1]));
        }
        pieces.push(Piece {
            lo: last.t,
            hi: right_end,
            origin: last.t,
            c: [
                last.value,
                last.slope,
                (sp - last.slope) / (2.0 * margin),
                0.0,
            ],
            offset: 0.0,
        });
        pieces.push(affine_piece(
            right_end,
            f64::INFINITY,
            right_end,
            right_value,
            sp,
        ));

        Ok(Self::from_pieces(
            nodes,
            sm,
            sp,
            margin,
            pieces,
            None,
            Some((f64::NEG_INFINITY, f64::INFINITY)),
        ))
    }

    fn from_pieces(
        nodes: Vec<HermiteNode>,
        slope_minus_inf: f64,
        slope_plus_inf: f64,
        blend_margin: f64,
        mut pieces: Vec<Piece>,
        truncation: Option<TruncationKind>,
        agrees_on: Option<(f64, f64)>,
    ) -> Self {
        // Primitive constants, anchored so that F(0) = 0.
        let anchor = pieces
            .iter()
            .position(|p| 0.0 <= p.hi)
            .unwrap_or(pieces.len() - 1);
        pieces[anchor].offset = -pieces[anchor].antiderivative(0.0);
        for i in anchor + 1..pieces.len() {
            let prev = pieces[i - 1];
            let end = prev.offset + prev.antiderivative(prev.hi);
            pieces[i].offset = end - pieces[i].antiderivative(pieces[i].lo);
        }
        for i in (0..anchor).rev() {
            let next = pieces[i + 1];
            let start = next.offset + next.antiderivative(next.lo);
            pieces[i].offset = start - pieces[i].antiderivative(pieces[i].hi);
        }
        let (slope_floor, gamma) = pieces
            .iter()
            .map(Piece::derivative_bounds)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            });
        Self {
            nodes,
            slope_minus_inf,
            slope_plus_inf,
            blend_margin,
            pieces,
            gamma,
            slope_floor,
            truncation,
            agrees_on,
        }
    }

    fn piece(&self, t: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.hi < t);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    pub fn value(&self, t: f64) -> f64 {
        self.piece(t).value(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.piece(t).derivative(t)
    }

    /// `F(t) = int_0^t f`.
    pub fn primitive(&self, t: f64) -> f64 {
        let p = self.piece(t);
        p.offset + p.antiderivative(t)
    }

    /// `(f(t), f'(t))` with a single piece lookup.
    pub fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        let p = self.piece(t);
        (p.value(t), p.derivative(t))
    }

    /// Certified `sup f'` over the real line.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Certified `inf f'` over the real line.
    pub fn slope_floor(&self) -> f64 {
        self.slope_floor
    }

    pub fn slope_minus_inf(&self) -> f64 {
        self.slope_minus_inf
    }

    pub fn slope_plus_inf(&self) -> f64 {
        self.slope_plus_inf
    }

    pub fn blend_margin(&self) -> f64 {
        self.blend_margin
    }

    pub fn nodes(&self) -> &[HermiteNode] {
        &self.nodes
    }

    /// Nodes prescribed as zeros of `f`.
    pub fn zeros(&self) -> Vec<HermiteNode> {
        self.nodes
            .iter()
            .copied()
            .filter(|n| n.value == 0.0)
            .collect()
    }

    pub fn truncation(&self) -> Option<TruncationKind> {
        self.truncation
    }

    /// Range on which this function coincides with the untruncated original.
    pub fn agrees_on(&self) -> Option<(f64, f64)> {
        self.agrees_on
    }

    /// All finite breakpoints between pieces.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .map(|p| p.hi)
            .filter(|h| h.is_finite())
            .collect()
    }

    /// Points beyond which `f` is exactly affine: `(left, right)`.
    pub fn affine_beyond(&self) -> (f64, f64) {
        let b = self.breakpoints();
        (b[0], *b.last().unwrap())
    }

    /// Intercepts `c` of the tails written as `f(t) = slope (t - c)`, when the
    /// tail slope is nonzero: `(c_minus, c_plus)`.
    pub fn tail_intercepts(&self) -> (Option<f64>, Option<f64>) {
        let first = self.pieces[0];
        let last = *self.pieces.last().unwrap();
        let c = |p: Piece| {
            if p.c[1] != 0.0 {
                Some(p.origin - p.c[0] / p.c[1])
            } else {
                None
            }
        };
        (c(first), c(last))
    }

    /// Magnitude of the largest node coordinate plus the blend margin.
    pub fn extent(&self) -> f64 {
        self.nodes.iter().map(|n| n.t.abs()).fold(0.0, f64::max) + self.blend_margin
    }

    /// `h(lambda, t) = lambda f'(inf) t + (1 - lambda) f(t)`.
    pub fn homotopy(&self, lambda: f64, t: f64) -> Result<f64, NonlinearityError> {
        let slope = self.symmetric_slope()?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(NonlinearityError::HomotopyParameter(lambda));
        }
        Ok(lambda * slope * t + (1.0 - lambda) * self.value(t))
    }

    /// The common asymptotic slope `f'(inf)`.
    pub fn symmetric_slope(&self) -> Result<f64, NonlinearityError> {
        if self.slope_minus_inf != self.slope_plus_inf {
            return Err(NonlinearityError::AsymmetricSlopes {
                minus: self.slope_minus_inf,
                plus: self.slope_plus_inf,
            });
        }
        Ok(self.slope_plus_inf)
    }

    fn check_anchor(&self, anchor: f64) -> Result<f64, NonlinearityError> {
        let (value, slope) = self.value_and_derivative(anchor);
        if value.abs() > ANCHOR_TOL {
            return Err(NonlinearityError::AnchorNotZero { anchor, value });
        }
        if slope >= 0.0 {
            return Err(NonlinearityError::AnchorSlopeNonNegative { anchor, slope });
        }
        Ok(slope)
    }

    fn clip(&self, lo: f64, hi: f64) -> Vec<Piece> {
        self.pieces
            .iter()
            .filter(|p| p.hi > lo && p.lo < hi)
            .map(|p| Piece {
                lo: p.lo.max(lo),
                hi: p.hi.min(hi),
                ..*p
            })
            .collect()
    }

    fn nodes_within(&self, lo: f64, hi: f64) -> Vec<HermiteNode> {
        self.nodes
            .iter()
            .copied()
            .filter(|n| n.t >= lo && n.t <= hi)
            .collect()
    }

    fn anchor_node(&self, t: f64, slope: f64, nodes: &mut Vec<HermiteNode>) {
        if !nodes.iter().any(|n| n.t == t) {
            nodes.push(HermiteNode {
                t,
                value: 0.0,
                slope,
            });
            nodes.sort_by(|a, b| a.t.total_cmp(&b.t));
        }
    }

    fn restrict_agreement(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.agrees_on.map(|(a, b)| (a.max(lo), b.min(hi)))
    }

    /// Applies a truncation (or the homotopy) and returns the modified function.
    pub fn truncate(&self, kind: TruncationKind) -> Result<Self, NonlinearityError> {
        match kind {
            TruncationKind::Below { alpha } => {
                let slope = self.check_anchor(alpha)?;
                let mut pieces = self.clip(f64::NEG_INFINITY, alpha);
                pieces.push(affine_piece(alpha, f64::INFINITY, alpha, 0.0, slope));
                let mut nodes = self.nodes_within(f64::NEG_INFINITY, alpha);
                self.anchor_node(alpha, slope, &mut nodes);
                Ok(Self::from_pieces(
                    nodes,
                    self.slope_minus_inf,
                    slope,
                    self.blend_margin,
                    pieces,
                    Some(kind),
                    self.restrict_agreement(f64::NEG_INFINITY, alpha),
                ))
            }
            TruncationKind::Above { alpha } => {
                let slope = self.check_anchor(alpha)?;
                let mut pieces = vec![affine_piece(f64::NEG_INFINITY, alpha, alpha, 0.0, slope)];
                pieces.extend(self.clip(alpha, f64::INFINITY));
                let mut nodes = self.nodes_within(alpha, f64::INFINITY);
                self.anchor_node(alpha, slope, &mut nodes);
                Ok(Self::from_pieces(
                    nodes,
                    slope,
                    self.slope_plus_inf,
                    self.blend_margin,
                    pieces,
                    Some(kind),
                    self.restrict_agreement(alpha, f64::INFINITY),
                ))
            }
            TruncationKind::Interval { alpha, beta } => {
                if alpha.partial_cmp(&beta) != Some(std::cmp::Ordering::Less) {
                    return Err(NonlinearityError::EmptyInterval(alpha, beta));
                }
                let sa = self.check_anchor(alpha)?;
                let sb = self.check_anchor(beta)?;
                let mut pieces = vec![affine_piece(f64::NEG_INFINITY, alpha, alpha, 0.0, sa)];
                pieces.extend(self.clip(alpha, beta));
                pieces.push(affine_piece(beta, f64::INFINITY, beta, 0.0, sb));
                let mut nodes = self.nodes_within(alpha, beta);
                self.anchor_node(alpha, sa, &mut nodes);
                self.anchor_node(beta, sb, &mut nodes);
                Ok(Self::from_pieces(
                    nodes,
                    sa,
                    sb,
                    self.blend_margin,
                    pieces,
                    Some(kind),
                    self.restrict_agreement(alpha, beta),
                ))
            }
            TruncationKind::Homotopy { lambda } => {
                let slope = self.symmetric_slope()?;
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(NonlinearityError::HomotopyParameter(lambda));
                }
                let keep = 1.0 - lambda;
                let pieces = self
                    .pieces
                    .iter()
                    .map(|p| Piece {
                        c: [
                            keep * p.c[0] + lambda * slope * p.origin,
                            keep * p.c[1] + lambda * slope,
                            keep * p.c[2],
                            keep * p.c[3],
                        ],
                        ..*p
                    })
                    .collect();
                let nodes = self
                    .nodes
                    .iter()
                    .map(|n| HermiteNode {
                        t: n.t,
                        value: keep * n.value + lambda * slope * n.t,
                        slope: keep * n.slope + lambda * slope,
                    })
                    .collect();
                let agrees_on = if lambda == 0.0 { self.agrees_on } else { None };
                Ok(Self::from_pieces(
                    nodes,
                    slope,
                    slope,
                    self.blend_margin,
                    pieces,
                    Some(kind),
                    agrees_on,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroKind {
    /// `f'(t_i) < 0`: constant solution is a strict local minimum.
    MinimumType,
    /// `f'(t_i) > 0` and nonresonant.
    Crossing,
    /// `f'(t_i)` coincides with an eigenvalue.
    Resonant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub t: f64,
    pub slope: f64,
    pub kind: ZeroKind,
    /// Eigenvalues (with multiplicity) strictly below the slope.
    pub crossed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiveSolutionPattern {
    /// Crossing zeros `a_1 < a_2 < a_3`.
    pub crossing: [f64; 3],
    /// Minimum-type zeros `m_1 < m_2`, interleaved with the crossings.
    pub minima: [f64; 2],
    /// `k_i` of the crossing zeros.
    pub crossed: [usize; 3],
    /// At least one `k_i` equals `k`.
    pub matches_k: bool,
    /// `1 != sum (-1)^{k_i}`: the condition forcing an extra solution beyond
    /// the reduction maximizer.
    pub extra_solution_condition: bool,
}

/// Advisory check of the standing assumptions on `f` against a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub slope_minus_inf: f64,
    pub slope_plus_inf: f64,
    pub symmetric_slopes: bool,
    pub nonresonant_minus: bool,
    pub nonresonant_plus: bool,
    /// `f'(inf)` lies above every computed eigenvalue, so `k` may be undercounted.
    pub beyond_slice: bool,
    pub k: usize,
    pub crossed_eigenvalues: Vec<f64>,
    pub zeros: Vec<ZeroReport>,
    pub gamma: f64,
    pub lambda_min_y: Option<f64>,
    pub reduction_applies: bool,
    pub modulus: Option<f64>,
    pub five_solution_pattern: Option<FiveSolutionPattern>,
    pub diagnostics: Vec<String>,
}

impl HypothesisReport {
    pub fn pattern_holds(&self) -> bool {
        self.five_solution_pattern.is_some()
    }

    pub fn nonresonant(&self) -> bool {
        self.nonresonant_minus && self.nonresonant_plus
    }
}

fn is_resonant(spectrum: &Spectrum, slope: f64) -> bool {
    spectrum.check_nonresonant(slope).is_err()
}

pub fn check_hypotheses(spec: &NonlinearitySpec, spectrum: &Spectrum) -> HypothesisReport {
    let mut diagnostics = Vec::new();
    let (sm, sp) = (spec.slope_minus_inf(), spec.slope_plus_inf());
    let nonresonant_minus = !is_resonant(spectrum, sm);
    let nonresonant_plus = !is_resonant(spectrum, sp);
    if !nonresonant_plus || !nonresonant_minus {
        diagnostics.push(format!(
            "asymptotic slope resonant: f'(-inf) = {sm}, f'(+inf) = {sp}"
        ));
    }
    let lam = spectrum.eigenvalues();
    let beyond_slice = sp >= *lam.last().unwrap();
    if beyond_slice {
        diagnostics.push(format!(
            "f'(+inf) = {sp} is above all {} computed eigenvalues",
            lam.len()
        ));
    }
    let k = spectrum.count_below(sp);
    let crossed_eigenvalues = lam.iter().copied().filter(|&l| l < sp).collect();

    let zeros: Vec<ZeroReport> = spec
        .zeros()
        .iter()
        .map(|z| {
            let kind = if z.slope < -RESONANCE_TOL {
                ZeroKind::MinimumType
            } else if is_resonant(spectrum, z.slope) {
                ZeroKind::Resonant
            } else {
                ZeroKind::Crossing
            };
            ZeroReport {
                t: z.t,
                slope: z.slope,
                kind,
                crossed: spectrum.count_below(z.slope),
            }
        })
        .collect();

    let gamma = spec.gamma();
    let (lambda_min_y, reduction_applies, modulus) = match spectrum.split(sp) {
        Ok(split) => match split.lambda_min_y(spectrum) {
            Some(ly) if gamma < ly => (Some(ly), true, Some((ly - gamma) / (1.0 + ly))),
            Some(ly) => {
                diagnostics.push(format!("gamma = {gamma} >= lambda_min(Y) = {ly}"));
                (Some(ly), false, None)
            }
            None => {
                diagnostics.push("Y is empty at this mode count".into());
                (None, false, None)
            }
        },
        Err(e) => {
            diagnostics.push(format!("cannot split at f'(+inf): {e}"));
            (None, false, None)
        }
    };

    let mut five_solution_pattern = None;
    for w in zeros.windows(5) {
        use ZeroKind::*;
        let kinds = [w[0].kind, w[1].kind, w[2].kind, w[3].kind, w[4].kind];
        if kinds == [Crossing, MinimumType, Crossing, MinimumType, Crossing] {
            let crossed = [w[0].crossed, w[2].crossed, w[4].crossed];
            let parity: i32 = crossed
                .iter()
                .map(|&c| if c % 2 == 0 { 1 } else { -1 })
                .sum();
            five_solution_pattern = Some(FiveSolutionPattern {
                crossing: [w[0].t, w[2].t, w[4].t],
                minima: [w[1].t, w[3].t],
                crossed,
                matches_k: crossed.contains(&k),
                extra_solution_condition: parity != 1,
            });
            break;
        }
    }
    if five_solution_pattern.is_none() {
        diagnostics.push("no zero pattern a1 < m1 < a2 < m2 < a3".into());
    }

    HypothesisReport {
        slope_minus_inf: sm,
        slope_plus_inf: sp,
        symmetric_slopes: sm == sp,
        nonresonant_minus,
        nonresonant_plus,
        beyond_slice,
        k,
        crossed_eigenvalues,
        zeros,
        gamma,
        lambda_min_y,
        reduction_applies,
        modulus,
        five_solution_pattern,
        diagnostics,
    }
}
