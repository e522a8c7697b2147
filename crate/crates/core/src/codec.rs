//! Differential encoding of quasi-unitary code matrices and the near-optimal
//! differential decoder.
//!
//! The transmitter sends `X_0 = I` and then `X_t = X_{t-1} U_t / a_{t-1}`,
//! where `U_t U_t^H = a_t^2 I`. With a channel that is constant over two
//! blocks the receiver sees `R_t = R_{t-1} U_t / a_{t-1} + noise` and picks
//! the `U` minimizing
//! `tr[a^-2 R_{t-1}^H R_{t-1} U U^H - 2 a^-1 Re(R_t^H R_{t-1} U)]`.
//! For a code whose Gram is `sum_i w_i |c_i|^2 I` the metric splits into one
//! term per symbol slot, which [`SymbolDecoder`] exploits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::awgn;
use crate::constellation::ConstellationSet;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, C64, J};
use crate::stbc::{assemble, gram_decompose, CodeKind, DispersionSet, SymbolVector};

/// Tolerance on `||U U^H - a^2 I||_F`.
pub const QUASI_UNITARY_TOL: f64 = 1e-9;

/// An information-bearing matrix `U` with `U U^H = a^2 I`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeMatrix {
    u: ComplexMat,
    a_sq: f64,
}

impl CodeMatrix {
    /// Checks quasi-unitarity and reads `a^2` off the Gram diagonal.
    pub fn new(u: ComplexMat) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Dimension(format!("code matrix must be square, got {}x{}", u.rows(), u.cols())));
        }
        let n = u.rows();
        let g = u.gram();
        let a_sq = g.trace().re / n as f64;
        let residual = (&g - &ComplexMat::identity(n).scale_real(a_sq)).frobenius_norm();
        if residual >= QUASI_UNITARY_TOL || a_sq <= 0.0 {
            return Err(Error::NotQuasiUnitary { beta: f64::NAN, residual });
        }
        Ok(CodeMatrix { u, a_sq })
    }

    pub(crate) fn new_unchecked(u: ComplexMat, a_sq: f64) -> Self {
        CodeMatrix { u, a_sq }
    }

    pub fn u(&self) -> &ComplexMat {
        &self.u
    }

    pub fn a_sq(&self) -> f64 {
        self.a_sq
    }
}

/// Assembles and validates the code matrix for one symbol vector.
///
/// For an MDC-QOSTBC a failure reports the offending `beta`.
pub fn make_code_matrix(set: &DispersionSet, s: &SymbolVector) -> Result<CodeMatrix> {
    let u = assemble(set, s)?;
    match CodeMatrix::new(u.clone()) {
        Ok(cm) => Ok(cm),
        Err(Error::NotQuasiUnitary { residual, .. }) => {
            let beta = match set.kind() {
                CodeKind::MdcQostbc => gram_decompose(&u, set.k())?.beta,
                CodeKind::Ostbc => f64::NAN,
            };
            Err(Error::NotQuasiUnitary { beta, residual })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug)]
pub struct EncoderState {
    x_prev: ComplexMat,
    a_prev_sq: f64,
}

impl EncoderState {
    /// Starts from the identity reference block with `a_0 = 1`.
    pub fn new(n_t: usize) -> Self {
        EncoderState {
            x_prev: ComplexMat::identity(n_t),
            a_prev_sq: 1.0,
        }
    }

    pub fn with_state(x_prev: ComplexMat, a_prev_sq: f64) -> Self {
        EncoderState { x_prev, a_prev_sq }
    }

    pub fn x_prev(&self) -> &ComplexMat {
        &self.x_prev
    }

    pub fn a_prev_sq(&self) -> f64 {
        self.a_prev_sq
    }

    /// `X_t = X_{t-1} U_t / a_{t-1}`.
    pub fn encode_step(&mut self, u: &CodeMatrix) -> Result<ComplexMat> {
        if self.a_prev_sq <= 0.0 {
            return Err(Error::NonPositiveScale(self.a_prev_sq));
        }
        if u.u().rows() != self.x_prev.cols() {
            return Err(Error::Dimension(format!(
                "code matrix is {}x{}, encoder holds {}x{}",
                u.u().rows(),
                u.u().cols(),
                self.x_prev.rows(),
                self.x_prev.cols()
            )));
        }
        let x = self.x_prev.matmul(u.u()).scale_real(1.0 / self.a_prev_sq.sqrt());
        self.x_prev = x.clone();
        self.a_prev_sq = u.a_sq();
        Ok(x)
    }
}

/// Which first term the exhaustive metric uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricForm {
    /// `tr(a^-2 R_{t-1}^H R_{t-1} U U^H)` as written.
    Literal,
    /// `U U^H` replaced by `a_U^2 I`.
    ScaledIdentity,
}

#[derive(Clone, Debug)]
pub struct DecoderState {
    r_prev: ComplexMat,
    a_prev_sq_est: f64,
    genie: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolDecision {
    pub indices: Vec<usize>,
    pub symbols: SymbolVector,
    /// `a^2` of the decided code matrix.
    pub a_sq: f64,
    /// Number of per-symbol metric evaluations performed.
    pub evaluations: usize,
}

impl DecoderState {
    /// Starts from the received reference block with `a_0 = 1`.
    pub fn new(r_ref: ComplexMat, genie: bool) -> Self {
        DecoderState {
            r_prev: r_ref,
            a_prev_sq_est: 1.0,
            genie,
        }
    }

    /// Resumes mid-stream from a known previous block and scale.
    pub fn with_scale(r_prev: ComplexMat, a_prev_sq: f64, genie: bool) -> Result<Self> {
        if a_prev_sq.is_nan() || a_prev_sq <= 0.0 {
            return Err(Error::NonPositiveScale(a_prev_sq));
        }
        Ok(DecoderState {
            r_prev,
            a_prev_sq_est: a_prev_sq,
            genie,
        })
    }

    pub fn r_prev(&self) -> &ComplexMat {
        &self.r_prev
    }

    pub fn a_prev_sq_est(&self) -> f64 {
        self.a_prev_sq_est
    }

    pub fn genie(&self) -> bool {
        self.genie
    }

    fn advance(&mut self, r_t: &ComplexMat, decided_a_sq: f64, true_a_sq: Option<f64>) -> Result<()> {
        let next = if self.genie {
            true_a_sq.ok_or(Error::GenieScaleMissing)?
        } else {
            decided_a_sq
        };
        if next <= 0.0 {
            return Err(Error::NonPositiveScale(next));
        }
        self.r_prev = r_t.clone();
        self.a_prev_sq_est = next;
        Ok(())
    }

    fn check_shape(&self, r_t: &ComplexMat) -> Result<()> {
        if r_t.rows() != self.r_prev.rows() || r_t.cols() != self.r_prev.cols() {
            return Err(Error::Dimension(format!(
                "received block is {}x{}, previous was {}x{}",
                r_t.rows(),
                r_t.cols(),
                self.r_prev.rows(),
                self.r_prev.cols()
            )));
        }
        Ok(())
    }

    /// Metric of every codebook entry for the block `r_t`.
    pub fn exhaustive_metrics(&self, r_t: &ComplexMat, codebook: &[CodeMatrix], form: MetricForm) -> Result<Vec<f64>> {
        self.check_shape(r_t)?;
        if let Some(bad) = codebook.iter().find(|c| c.u().rows() != r_t.cols() || c.u().cols() != r_t.cols()) {
            return Err(Error::Dimension(format!(
                "codebook entry is {}x{}, received block has {} columns",
                bad.u().rows(),
                bad.u().cols(),
                r_t.cols()
            )));
        }
        let a = self.a_prev_sq_est.sqrt();
        let q = self.r_prev.adjoint_mul(&self.r_prev);
        let p = r_t.adjoint_mul(&self.r_prev);
        let energy = q.trace().re;
        Ok(codebook
            .iter()
            .map(|c| {
                let first = match form {
                    MetricForm::Literal => q.trace_of_product(&c.u().gram()).re,
                    MetricForm::ScaledIdentity => energy * c.a_sq(),
                };
                first / (a * a) - 2.0 / a * p.trace_of_product(c.u()).re
            })
            .collect())
    }

    /// Near-optimal differential decision over an explicit codebook.
    ///
    /// `true_a_sq` is the scale of the transmitted matrix; it is only read in
    /// genie mode. Ties go to the lowest index.
    pub fn decode_exhaustive(&mut self, r_t: &ComplexMat, codebook: &[CodeMatrix], true_a_sq: Option<f64>) -> Result<usize> {
        if codebook.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        let metrics = self.exhaustive_metrics(r_t, codebook, MetricForm::Literal)?;
        let best = argmin(&metrics);
        self.advance(r_t, codebook[best].a_sq(), true_a_sq)?;
        Ok(best)
    }

    /// Independent per-slot decisions.
    pub fn decode_single_symbol(
        &mut self,
        r_t: &ComplexMat,
        decoder: &SymbolDecoder,
        true_a_sq: Option<f64>,
    ) -> Result<SymbolDecision> {
        self.check_shape(r_t)?;
        if r_t.cols() != decoder.set.n_t() {
            return Err(Error::Dimension(format!(
                "received block has {} columns, code has {} antennas",
                r_t.cols(),
                decoder.set.n_t()
            )));
        }
        let decision = decoder.decide(&self.r_prev, r_t, self.a_prev_sq_est);
        self.advance(r_t, decision.a_sq, true_a_sq)?;
        Ok(decision)
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Per-slot decoder for a linear code whose Gram is `sum_i w_i |c_i|^2 I`.
#[derive(Clone, Debug)]
pub struct SymbolDecoder {
    set: DispersionSet,
    points: Vec<C64>,
    /// `w_i = tr(A_i A_i^H) / N_T`; `1/K` for the MDC-QOSTBC.
    weights: Vec<f64>,
    /// `j B_i`, so slot `i` contributes `c^R A_i + c^I (j B_i)`.
    jb: Vec<ComplexMat>,
    /// Pre-assembled contribution of each point in each slot.
    contributions: Vec<Vec<ComplexMat>>,
}

impl SymbolDecoder {
    /// For an MDC-QOSTBC every point must lie on one hyperbola `x y = nu`.
    pub fn new(set: &DispersionSet, points: &[C64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        if set.kind() == CodeKind::MdcQostbc {
            let nu = points[0].re * points[0].im;
            if let Some(z) = points.iter().find(|z| (z.re * z.im - nu).abs() > QUASI_UNITARY_TOL) {
                // witness codeword: z in slot 1, points[0] elsewhere
                let mut s = vec![points[0]; set.k()];
                s[0] = *z;
                let c = assemble(set, &SymbolVector(s))?;
                let g = gram_decompose(&c, set.k())?;
                let n = set.n_t();
                let residual = (&c.gram() - &ComplexMat::identity(n).scale_real(g.alpha / set.k() as f64)).frobenius_norm();
                return Err(Error::NotQuasiUnitary { beta: g.beta, residual });
            }
        }
        let n_t = set.n_t() as f64;
        let weights = set.a_mats().iter().map(|a| a.gram().trace().re / n_t).collect();
        let jb: Vec<ComplexMat> = set.b_mats().iter().map(|b| b.scale(J)).collect();
        let contributions = (0..set.k())
            .map(|i| {
                points
                    .iter()
                    .map(|c| &set.a(i).scale_real(c.re) + &jb[i].scale_real(c.im))
                    .collect()
            })
            .collect();
        Ok(SymbolDecoder {
            set: set.clone(),
            points: points.to_vec(),
            weights,
            jb,
            contributions,
        })
    }

    pub fn from_constellation(set: &DispersionSet, constellation: &ConstellationSet) -> Result<Self> {
        Self::new(set, constellation.points())
    }

    pub fn set(&self) -> &DispersionSet {
        &self.set
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Code matrix for symbol indices, without re-validating quasi-unitarity
    /// (the constructor already checked the point set).
    pub fn code_matrix(&self, indices: &[usize]) -> CodeMatrix {
        debug_assert_eq!(indices.len(), self.set.k());
        let mut u = self.contributions[0][indices[0]].clone();
        let mut a_sq = self.weights[0] * self.points[indices[0]].norm_sqr();
        for (slot, &idx) in indices.iter().enumerate().skip(1) {
            for (d, s) in u.as_mut_slice().iter_mut().zip(self.contributions[slot][idx].as_slice()) {
                *d += s;
            }
            a_sq += self.weights[slot] * self.points[idx].norm_sqr();
        }
        CodeMatrix::new_unchecked(u, a_sq)
    }

    /// Every codeword, slot 0 most significant.
    pub fn full_codebook(&self) -> Vec<CodeMatrix> {
        let m = self.points.len();
        let k = self.set.k();
        let size = m.pow(k as u32);
        (0..size)
            .map(|n| self.code_matrix(&crate::stbc::codeword_indices(n, m, k)))
            .collect()
    }

    /// Per-slot metrics `a^-2 E w_i |c|^2 - 2 a^-1 Re tr(R_t^H R_{t-1} (c^R A_i + j c^I B_i))`.
    pub fn slot_metrics(&self, r_prev: &ComplexMat, r_t: &ComplexMat, a_prev_sq: f64) -> Vec<Vec<f64>> {
        let a = a_prev_sq.sqrt();
        let energy = r_prev.frobenius_norm_sq();
        let p = r_t.adjoint_mul(r_prev);
        (0..self.set.k())
            .map(|i| {
                let ga = p.trace_of_product(self.set.a(i)).re;
                let gb = p.trace_of_product(&self.jb[i]).re;
                let quad = energy * self.weights[i] / (a * a);
                self.points
                    .iter()
                    .map(|c| quad * c.norm_sqr() - 2.0 / a * (c.re * ga + c.im * gb))
                    .collect()
            })
            .collect()
    }

    fn decide(&self, r_prev: &ComplexMat, r_t: &ComplexMat, a_prev_sq: f64) -> SymbolDecision {
        let metrics = self.slot_metrics(r_prev, r_t, a_prev_sq);
        let indices: Vec<usize> = metrics.iter().map(|m| argmin(m)).collect();
        let symbols = SymbolVector(indices.iter().map(|&i| self.points[i]).collect());
        let a_sq = indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, w)| w * self.points[i].norm_sqr())
            .sum();
        SymbolDecision {
            indices,
            symbols,
            a_sq,
            evaluations: self.set.k() * self.points.len(),
        }
    }
}

/// Differentially encodes blocks of symbol indices. The returned blocks start
/// with the reference `X_0 = I`.
pub fn encode_indices(decoder: &SymbolDecoder, blocks: &[Vec<usize>]) -> Result<Vec<ComplexMat>> {
    let mut enc = EncoderState::new(decoder.set.n_t());
    let mut out = vec![enc.x_prev().clone()];
    for idx in blocks {
        check_indices(decoder, idx)?;
        out.push(enc.encode_step(&decoder.code_matrix(idx))?);
    }
    Ok(out)
}

/// Decodes received blocks (reference first) back to symbol indices.
/// `genie_scales`, when given, holds the true `a_t^2` of each info block.
pub fn decode_indices(decoder: &SymbolDecoder, received: &[ComplexMat], genie_scales: Option<&[f64]>) -> Result<Vec<Vec<usize>>> {
    let (first, rest) = received
        .split_first()
        .ok_or_else(|| Error::Dimension("no reference block".into()))?;
    let mut state = DecoderState::new(first.clone(), genie_scales.is_some());
    rest.iter()
        .enumerate()
        .map(|(t, r)| {
            let truth = genie_scales.and_then(|g| g.get(t).copied());
            state.decode_single_symbol(r, decoder, truth).map(|d| d.indices)
        })
        .collect()
}

fn check_indices(decoder: &SymbolDecoder, idx: &[usize]) -> Result<()> {
    if idx.len() != decoder.set.k() {
        return Err(Error::SymbolCount {
            expected: decoder.set.k(),
            got: idx.len(),
        });
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= decoder.points.len()) {
        return Err(Error::Config(format!(
            "symbol index {bad} out of range for {} points",
            decoder.points.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseStats {
    /// Mean `|entry|^2` of the effective noise.
    pub variance: f64,
    /// Analytic value `sigma^2 (1 + a_t^2 / a_{t-1}^2)`.
    pub predicted: f64,
    pub trials: usize,
}

/// Monte Carlo power of `-N_{t-1} U_t / a_{t-1} + N_t` per entry.
pub fn effective_noise_stats(trials: usize, noise_var: f64, a_prev_sq: f64, u: &CodeMatrix, n_r: usize, seed: u64) -> Result<NoiseStats> {
    if a_prev_sq <= 0.0 {
        return Err(Error::NonPositiveScale(a_prev_sq));
    }
    let n = u.u().rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_a = 1.0 / a_prev_sq.sqrt();
    let mut acc = 0.0;
    for _ in 0..trials {
        let n_prev = awgn(n_r, n, noise_var, &mut rng);
        let n_cur = awgn(n_r, n, noise_var, &mut rng);
        let eff = &n_cur - &n_prev.matmul(u.u()).scale_real(inv_a);
        acc += eff.frobenius_norm_sq();
    }
    let variance = if trials == 0 { 0.0 } else { acc / (trials * n_r * n) as f64 };
    Ok(NoiseStats {
        variance,
        predicted: noise_var * (1.0 + u.a_sq() / a_prev_sq),
        trials,
    })
}
