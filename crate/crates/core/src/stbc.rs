//! Orthogonal and minimum-decoding-complexity quasi-orthogonal STBC.
//!
//! A linear space-time code is described by its dispersion matrices: the
//! codeword for symbols `c_1..c_K` is `C = sum_i (Re(c_i) A_i + j Im(c_i) B_i)`.
//! The MDC-QOSTBC is built from a square amicable orthogonal design by the
//! four block mapping rules in [`mdc_map`]; its Gram matrix then splits into
//! an identity part weighted by `alpha` and an anti-diagonal block part
//! weighted by `beta` (see [`gram_decompose`]).

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, C64, J};

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Largest codebook that the all-pairs diagnostics will enumerate.
pub const ENUMERATION_LIMIT: u128 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Ostbc,
    MdcQostbc,
}

impl CodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::Ostbc => "ostbc",
            CodeKind::MdcQostbc => "mdc_qostbc",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// K pairs of dispersion matrices `(A_i, B_i)`, each `t_len x n_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionSet {
    n_t: usize,
    t_len: usize,
    kind: CodeKind,
    a_mats: Vec<ComplexMat>,
    b_mats: Vec<ComplexMat>,
}

impl DispersionSet {
    pub fn new(kind: CodeKind, a_mats: Vec<ComplexMat>, b_mats: Vec<ComplexMat>) -> Result<Self> {
        if a_mats.is_empty() {
            return Err(Error::EmptyDispersionSet);
        }
        if a_mats.len() != b_mats.len() {
            return Err(Error::Dimension(format!(
                "{} A matrices but {} B matrices",
                a_mats.len(),
                b_mats.len()
            )));
        }
        let (t_len, n_t) = (a_mats[0].rows(), a_mats[0].cols());
        if a_mats.iter().chain(&b_mats).any(|m| m.rows() != t_len || m.cols() != n_t) {
            return Err(Error::Dimension("dispersion matrices differ in shape".into()));
        }
        Ok(DispersionSet {
            n_t,
            t_len,
            kind,
            a_mats,
            b_mats,
        })
    }

    /// Extracts the dispersion matrices of a code given as a linear map from
    /// `k` complex symbols to a codeword.
    pub fn from_linear_map(kind: CodeKind, k: usize, map: impl Fn(&[C64]) -> ComplexMat) -> Result<Self> {
        let mut a_mats = Vec::with_capacity(k);
        let mut b_mats = Vec::with_capacity(k);
        let mut s = vec![C64::new(0.0, 0.0); k];
        for i in 0..k {
            s[i] = C64::new(1.0, 0.0);
            a_mats.push(map(&s));
            s[i] = J;
            b_mats.push(map(&s).scale(-J));
            s[i] = C64::new(0.0, 0.0);
        }
        Self::new(kind, a_mats, b_mats)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// Number of complex symbols per codeword.
    pub fn k(&self) -> usize {
        self.a_mats.len()
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn a(&self, i: usize) -> &ComplexMat {
        &self.a_mats[i]
    }

    pub fn b(&self, i: usize) -> &ComplexMat {
        &self.b_mats[i]
    }

    pub fn a_mats(&self) -> &[ComplexMat] {
        &self.a_mats
    }

    pub fn b_mats(&self) -> &[ComplexMat] {
        &self.b_mats
    }

    /// Symbols per channel use.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.t_len as f64
    }

    /// Same code with every dispersion matrix multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        DispersionSet {
            n_t: self.n_t,
            t_len: self.t_len,
            kind: self.kind,
            a_mats: self.a_mats.iter().map(|m| m.scale_real(s)).collect(),
            b_mats: self.b_mats.iter().map(|m| m.scale_real(s)).collect(),
        }
    }

    /// Measures the amicable orthogonal design conditions.
    ///
    /// `A_i A_i^H = B_i B_i^H = c I`, `A_i A_j^H + A_j A_i^H = 0`,
    /// `B_i B_j^H + B_j B_i^H = 0` for `i != j`, and `A_i B_j^H = B_j A_i^H`.
    pub fn amicability(&self) -> AmicabilityReport {
        let n = self.t_len;
        let c = self.a_mats[0].gram().trace().re / n as f64;
        let target = ComplexMat::identity(n).scale_real(c);
        let mut normalization: f64 = 0.0;
        let mut anticommute: f64 = 0.0;
        let mut cross: f64 = 0.0;
        let k = self.k();
        for i in 0..k {
            let (ai, bi) = (&self.a_mats[i], &self.b_mats[i]);
            normalization = normalization
                .max((&ai.gram() - &target).max_abs())
                .max((&bi.gram() - &target).max_abs());
            for j in 0..k {
                let (aj, bj) = (&self.a_mats[j], &self.b_mats[j]);
                if i != j {
                    let sa = &(ai * &aj.adjoint()) + &(aj * &ai.adjoint());
                    let sb = &(bi * &bj.adjoint()) + &(bj * &bi.adjoint());
                    anticommute = anticommute.max(sa.max_abs()).max(sb.max_abs());
                }
                let d = &(ai * &bj.adjoint()) - &(bj * &ai.adjoint());
                cross = cross.max(d.max_abs());
            }
        }
        AmicabilityReport {
            c,
            normalization,
            anticommute,
            cross,
        }
    }

    /// Plain-text dump: a header line, then each matrix as a label line
    /// followed by one line per row of `re im` pairs.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dispersion kind={} n_t={} t_len={} k={}\n",
            self.kind,
            self.n_t,
            self.t_len,
            self.k()
        );
        for (label, mats) in [("A", &self.a_mats), ("B", &self.b_mats)] {
            for (i, m) in mats.iter().enumerate() {
                let _ = writeln!(out, "{label} {}", i + 1);
                for r in 0..m.rows() {
                    let row: Vec<String> = (0..m.cols())
                        .map(|c| format!("{} {}", m[(r, c)].re, m[(r, c)].im))
                        .collect();
                    let _ = writeln!(out, "{}", row.join(" "));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty dispersion dump".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("dispersion") {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let mut kind = None;
        let (mut n_t, mut t_len, mut k) = (0usize, 0usize, 0usize);
        for f in fields {
            let (key, val) = f
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field: {f}")))?;
            let num = || val.parse::<usize>().map_err(|e| Error::Parse(format!("{key}: {e}")));
            match key {
                "kind" => {
                    kind = Some(match val {
                        "ostbc" => CodeKind::Ostbc,
                        "mdc_qostbc" => CodeKind::MdcQostbc,
                        other => return Err(Error::Parse(format!("unknown kind {other}"))),
                    })
                }
                "n_t" => n_t = num()?,
                "t_len" => t_len = num()?,
                "k" => k = num()?,
                other => return Err(Error::Parse(format!("unknown header key {other}"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("missing kind".into()))?;
        let mut read_block = |label: &str, idx: usize| -> Result<ComplexMat> {
            let tag = lines.next().ok_or_else(|| Error::Parse("truncated dump".into()))?;
            if tag != format!("{label} {idx}") {
                return Err(Error::Parse(format!("expected '{label} {idx}', got '{tag}'")));
            }
            let mut data = Vec::with_capacity(t_len * n_t);
            for _ in 0..t_len {
                let row = lines.next().ok_or_else(|| Error::Parse("truncated dump".into()))?;
                let vals = row
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v}: {e}"))))
                    .collect::<Result<Vec<f64>>>()?;
                if vals.len() != 2 * n_t {
                    return Err(Error::Parse(format!("row has {} values, expected {}", vals.len(), 2 * n_t)));
                }
                data.extend(vals.chunks(2).map(|p| C64::new(p[0], p[1])));
            }
            Ok(ComplexMat::from_vec(t_len, n_t, data))
        };
        let a_mats = (1..=k).map(|i| read_block("A", i)).collect::<Result<Vec<_>>>()?;
        let b_mats = (1..=k).map(|i| read_block("B", i)).collect::<Result<Vec<_>>>()?;
        Self::new(kind, a_mats, b_mats)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AmicabilityReport {
    /// Common scale `c` of `A_i A_i^H`.
    pub c: f64,
    pub normalization: f64,
    pub anticommute: f64,
    pub cross: f64,
}

impl AmicabilityReport {
    pub fn max_violation(&self) -> f64 {
        self.normalization.max(self.anticommute).max(self.cross)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.c > 0.0 && self.max_violation() <= tol
    }
}

/// The K complex symbols carried by one codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector(pub Vec<C64>);

impl SymbolVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn re(&self, i: usize) -> f64 {
        self.0[i].re
    }

    pub fn im(&self, i: usize) -> f64 {
        self.0[i].im
    }

    /// `sum_i |c_i|^2`.
    pub fn alpha(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `2 sum_{i <= K/2} (-c_i^R c_i^I + c_{K/2+i}^R c_{K/2+i}^I)`.
    pub fn beta(&self) -> f64 {
        let half = self.len() / 2;
        2.0 * (0..half)
            .map(|i| -self.re(i) * self.im(i) + self.re(half + i) * self.im(half + i))
            .sum::<f64>()
    }
}

impl From<Vec<C64>> for SymbolVector {
    fn from(v: Vec<C64>) -> Self {
        SymbolVector(v)
    }
}

/// Alamouti code `[[c1, -c2*], [c2, c1*]]`.
pub fn alamouti_set() -> DispersionSet {
    DispersionSet::from_linear_map(CodeKind::Ostbc, 2, |s| {
        ComplexMat::from_rows(&[vec![s[0], -s[1].conj()], vec![s[1], s[0].conj()]])
    })
    .expect("alamouti dispersion set is well formed")
}

/// Square rate-3/4 orthogonal design for four antennas.
pub fn ostbc_rate34_4tx() -> DispersionSet {
    let z = C64::new(0.0, 0.0);
    DispersionSet::from_linear_map(CodeKind::Ostbc, 3, |s| {
        let (s1, s2, s3) = (s[0], s[1], s[2]);
        ComplexMat::from_rows(&[
            vec![s1, z, s2, -s3],
            vec![z, s1, s3.conj(), s2.conj()],
            vec![-s2.conj(), -s3, s1.conj(), z],
            vec![s3.conj(), -s2, z, s1.conj()],
        ])
    })
    .expect("rate-3/4 dispersion set is well formed")
}

/// Builds the MDC-QOSTBC from an orthogonal seed.
///
/// For seed pairs `(A_i, B_i)`, `i = 1..K/2`, with output symbol count `K`:
/// `A_i = diag(A_i, A_i)`, `B_i = antidiag(jA_i, jA_i)`,
/// `A_{K/2+i} = diag(jB_i, jB_i)`, `B_{K/2+i} = antidiag(B_i, B_i)`,
/// all scaled by `1/sqrt(K)`.
pub fn mdc_map(seed: &DispersionSet) -> Result<DispersionSet> {
    if seed.kind() != CodeKind::Ostbc {
        return Err(Error::NotOrthogonalSeed(seed.kind().as_str()));
    }
    let k_out = 2 * seed.k();
    let norm = 1.0 / (k_out as f64).sqrt();
    let zero = ComplexMat::zeros(seed.t_len(), seed.n_t());
    let diag = |m: &ComplexMat| ComplexMat::from_blocks(m, &zero, &zero, m).scale_real(norm);
    let anti = |m: &ComplexMat| ComplexMat::from_blocks(&zero, m, m, &zero).scale_real(norm);

    let mut a_mats = Vec::with_capacity(k_out);
    let mut b_mats = Vec::with_capacity(k_out);
    for a in seed.a_mats() {
        a_mats.push(diag(a));
        b_mats.push(anti(&a.scale(J)));
    }
    for b in seed.b_mats() {
        a_mats.push(diag(&b.scale(J)));
        b_mats.push(anti(b));
    }
    DispersionSet::new(CodeKind::MdcQostbc, a_mats, b_mats)
}

/// `C = sum_i (c_i^R A_i + j c_i^I B_i)`.
pub fn assemble(set: &DispersionSet, s: &SymbolVector) -> Result<ComplexMat> {
    if s.len() != set.k() {
        return Err(Error::SymbolCount {
            expected: set.k(),
            got: s.len(),
        });
    }
    let mut out = ComplexMat::zeros(set.t_len(), set.n_t());
    for (i, c) in s.0.iter().enumerate() {
        let wa = C64::new(c.re, 0.0);
        let wb = C64::new(0.0, c.im);
        let dst = out.as_mut_slice();
        for ((d, a), b) in dst.iter_mut().zip(set.a(i).as_slice()).zip(set.b(i).as_slice()) {
            *d += wa * a + wb * b;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramDecomposition {
    pub alpha: f64,
    pub beta: f64,
    /// Frobenius norm of the part of `C C^H` outside the two-term model.
    pub residual: f64,
}

/// Least-squares fit of `C C^H` to `(alpha/K) I + (beta/K) [[0, I], [I, 0]]`.
///
/// The two basis matrices are orthogonal in the Frobenius inner product, so
/// the fit reduces to two traces.
pub fn gram_decompose(c: &ComplexMat, k: usize) -> Result<GramDecomposition> {
    if !c.is_square() {
        return Err(Error::Dimension(format!("gram_decompose needs a square matrix, got {}x{}", c.rows(), c.cols())));
    }
    let n = c.rows();
    if !n.is_multiple_of(2) {
        return Err(Error::Dimension(format!("gram_decompose needs an even dimension, got {n}")));
    }
    let g = c.gram();
    let swap = antidiag_identity(n);
    let alpha_k = g.trace().re / n as f64;
    let beta_k = g.trace_of_product(&swap).re / n as f64;
    let fit = &ComplexMat::identity(n).scale_real(alpha_k) + &swap.scale_real(beta_k);
    Ok(GramDecomposition {
        alpha: alpha_k * k as f64,
        beta: beta_k * k as f64,
        residual: (&g - &fit).frobenius_norm(),
    })
}

/// `[[0, I], [I, 0]]` with `n/2` blocks.
pub fn antidiag_identity(n: usize) -> ComplexMat {
    let h = n / 2;
    ComplexMat::from_fn(n, n, |i, j| {
        if (i < h && j == i + h) || (i >= h && j + h == i) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Number of codewords `|points|^K`.
pub fn codebook_size(set: &DispersionSet, m: usize) -> u128 {
    (m as u128).saturating_pow(set.k() as u32)
}

/// Symbol indices of codeword `n`; slot 0 is the most significant digit.
pub fn codeword_indices(n: usize, m: usize, k: usize) -> Vec<usize> {
    let mut idx = vec![0; k];
    let mut rest = n;
    for slot in (0..k).rev() {
        idx[slot] = rest % m;
        rest /= m;
    }
    idx
}

/// Inverse of [`codeword_indices`].
pub fn codeword_number(indices: &[usize], m: usize) -> usize {
    indices.iter().fold(0, |acc, &i| acc * m + i)
}

/// Every codeword over `points`, in [`codeword_number`] order.
pub fn enumerate_codebook(set: &DispersionSet, points: &[C64]) -> Result<Vec<(SymbolVector, ComplexMat)>> {
    let size = codebook_size(set, points.len());
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            codewords: size,
            limit: ENUMERATION_LIMIT,
        });
    }
    (0..size as usize)
        .map(|n| {
            let s = SymbolVector(
                codeword_indices(n, points.len(), set.k())
                    .into_iter()
                    .map(|i| points[i])
                    .collect(),
            );
            let c = assemble(set, &s)?;
            Ok((s, c))
        })
        .collect()
}

fn pairwise_codebook(set: &DispersionSet, points: &[C64]) -> Result<Vec<ComplexMat>> {
    if set.k() == 0 {
        return Err(Error::EmptyDispersionSet);
    }
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    Ok(enumerate_codebook(set, points)?.into_iter().map(|(_, c)| c).collect())
}

/// Minimum rank of `U_k - U_l` over all distinct codeword pairs.
pub fn min_rank_all_pairs(set: &DispersionSet, points: &[C64]) -> Result<usize> {
    let book = pairwise_codebook(set, points)?;
    let n = book.len();
    Ok((0..n)
        .into_par_iter()
        .map(|a| {
            (a + 1..n)
                .map(|b| (&book[a] - &book[b]).rank(RANK_TOL))
                .min()
                .unwrap_or(usize::MAX)
        })
        .min()
        .unwrap_or(0))
}

/// Minimum of `det((U_k - U_l)(U_k - U_l)^H)` over all distinct pairs, by
/// direct determinants.
pub fn min_pairwise_determinant(set: &DispersionSet, points: &[C64]) -> Result<f64> {
    let book = pairwise_codebook(set, points)?;
    let n = book.len();
    let n_t = set.n_t();
    let per_row: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut best = (f64::INFINITY, n_t);
            for b in a + 1..n {
                let d = &book[a] - &book[b];
                let det = d.gram().determinant().re;
                let scale = (d.frobenius_norm_sq() / n_t as f64).powi(n_t as i32);
                let rank = if det <= RANK_TOL * scale { d.rank(RANK_TOL) } else { n_t };
                best = (best.0.min(det), best.1.min(rank));
            }
            best
        })
        .collect();
    let (det_min, min_rank) = per_row
        .into_iter()
        .fold((f64::INFINITY, n_t), |acc, x| (acc.0.min(x.0), acc.1.min(x.1)));
    if min_rank < n_t {
        return Err(Error::RankDeficient { min_rank, n_t });
    }
    Ok(det_min)
}

/// `min N_T det((U_k - U_l)(U_k - U_l)^H)^{1/N_T}` over all distinct pairs.
pub fn coding_gain_bruteforce(set: &DispersionSet, points: &[C64]) -> Result<f64> {
    let n_t = set.n_t() as f64;
    Ok(n_t * min_pairwise_determinant(set, points)?.powf(1.0 / n_t))
}

/// Closed-form minimum determinant of an MDC-QOSTBC over a `beta = 0`
/// constellation: `min |(dx)^2 - (dy)^2|^{N_T} / K^{N_T}` over point pairs.
///
/// Only single-slot errors can attain the minimum: for a general error
/// vector the determinant is `((alpha - beta)(alpha + beta) / K^2)^{N_T/2}`
/// and both factors are sums of non-negative per-slot terms.
pub fn mdc_det_min_closed_form(points: &[C64], n_t: usize, k: usize) -> f64 {
    let mut best = f64::INFINITY;
    for (a, p) in points.iter().enumerate() {
        for q in &points[a + 1..] {
            let d = p - q;
            best = best.min((d.re * d.re - d.im * d.im).abs());
        }
    }
    (best / k as f64).powi(n_t as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn seeds_are_amicable() {
        for set in [alamouti_set(), ostbc_rate34_4tx()] {
            let rep = set.amicability();
            assert!(rep.passes(1e-12), "{rep:?}");
            assert_eq!(rep.c, 1.0);
        }
    }

    #[test]
    fn alamouti_first_matrix_is_identity() {
        assert!(alamouti_set().a(0).approx_eq(&ComplexMat::identity(2), 0.0));
    }

    #[test]
    fn rate34_unit_symbol_is_unitary() {
        let set = ostbc_rate34_4tx();
        assert_eq!((set.n_t(), set.t_len(), set.k()), (4, 4, 3));
        let u = assemble(&set, &SymbolVector(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!(u.gram().approx_eq(&ComplexMat::identity(4), 1e-15));
    }

    #[test]
    fn mdc_map_doubles_dimensions() {
        let m8 = mdc_map(&ostbc_rate34_4tx()).unwrap();
        assert_eq!((m8.n_t(), m8.t_len(), m8.k(), m8.kind()), (8, 8, 6, CodeKind::MdcQostbc));
        assert!((m8.rate() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mdc_map_rejects_quasi_orthogonal_seed() {
        let m4 = mdc_map(&alamouti_set()).unwrap();
        assert!(matches!(mdc_map(&m4), Err(Error::NotOrthogonalSeed(_))));
    }

    #[test]
    fn mapping_rules_one_and_two() {
        let seed = alamouti_set();
        let m4 = mdc_map(&seed).unwrap();
        let z = ComplexMat::zeros(2, 2);
        let a1 = ComplexMat::from_blocks(seed.a(0), &z, &z, seed.a(0)).scale_real(0.5);
        let ja = seed.a(0).scale(J);
        let b1 = ComplexMat::from_blocks(&z, &ja, &ja, &z).scale_real(0.5);
        assert!(m4.a(0).approx_eq(&a1, 1e-15));
        assert!(m4.b(0).approx_eq(&b1, 1e-15));
    }

    #[test]
    fn assemble_checks_length() {
        let set = alamouti_set();
        let err = assemble(&set, &SymbolVector(vec![c(1.0, 0.0)])).unwrap_err();
        assert!(matches!(err, Error::SymbolCount { expected: 2, got: 1 }));
    }

    #[test]
    fn assemble_zero_symbols() {
        let set = mdc_map(&alamouti_set()).unwrap();
        let u = assemble(&set, &SymbolVector(vec![c(0.0, 0.0); 4])).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn imaginary_first_symbol_lands_at_row1_col3() {
        let set = mdc_map(&alamouti_set()).unwrap();
        let u = assemble(&set, &SymbolVector(vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!((u[(0, 2)] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_decompose_examples() {
        let set = mdc_map(&alamouti_set()).unwrap();
        let ones = assemble(&set, &SymbolVector(vec![c(1.0, 0.0); 4])).unwrap();
        let g = gram_decompose(&ones, 4).unwrap();
        assert!((g.alpha - 4.0).abs() < 1e-12 && g.beta.abs() < 1e-12 && g.residual < 1e-12);

        let s = SymbolVector(vec![c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g = gram_decompose(&assemble(&set, &s).unwrap(), 4).unwrap();
        assert!((g.alpha - 2.0).abs() < 1e-12);
        assert!((g.beta + 2.0).abs() < 1e-12);
        assert!((s.beta() + 2.0).abs() < 1e-15);
        // numeric cross-check against the Gram entries themselves
        let gram = assemble(&set, &s).unwrap().gram();
        assert!((gram[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((gram[(0, 2)].re + 0.5).abs() < 1e-12);
    }

    #[test]
    fn gram_decompose_rejects_bad_shapes() {
        assert!(gram_decompose(&ComplexMat::zeros(2, 3), 2).is_err());
        assert!(gram_decompose(&ComplexMat::identity(3), 2).is_err());
    }

    #[test]
    fn enumeration_guard() {
        let set = mdc_map(&ostbc_rate34_4tx()).unwrap();
        let pts: Vec<C64> = (0..8).map(|i| c(i as f64, 0.0)).collect();
        // 8^6 = 262144 codewords
        assert!(matches!(min_rank_all_pairs(&set, &pts), Err(Error::EnumerationGuard { .. })));
    }

    #[test]
    fn single_point_constellation_is_degenerate() {
        let set = mdc_map(&alamouti_set()).unwrap();
        assert!(matches!(
            coding_gain_bruteforce(&set, &[c(1.0, 0.0)]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn codeword_numbering_round_trips() {
        for n in 0..256 {
            let idx = codeword_indices(n, 4, 4);
            assert_eq!(codeword_number(&idx, 4), n);
        }
        assert_eq!(codeword_indices(1, 4, 4), vec![0, 0, 0, 1]);
    }

    #[test]
    fn text_dump_round_trips() {
        for set in [alamouti_set(), mdc_map(&ostbc_rate34_4tx()).unwrap()] {
            let back = DispersionSet::from_text(&set.to_text()).unwrap();
            assert_eq!(back, set);
        }
        assert!(DispersionSet::from_text("dispersion kind=foo n_t=2 t_len=2 k=1").is_err());
        assert!(DispersionSet::from_text("").is_err());
    }
}
