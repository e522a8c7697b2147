//! Quasi-static Rayleigh MIMO channel and the Monte Carlo BLER engine.
//!
//! SNR convention: the total transmit power summed over all antennas is 1 per
//! channel use on average, and `SNR = 1 / sigma^2` with `sigma^2` the complex
//! noise variance per receive antenna. A frame is one channel realization
//! carrying a reference block followed by information blocks; a frame error
//! is any symbol error in the frame.
//!
//! Every frame draws from its own ChaCha stream keyed by
//! `(master_seed, snr index, frame index)`, so sweeps are bit-reproducible
//! regardless of how frames are spread over threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::codec::{DecoderState, EncoderState, SymbolDecoder};
use crate::constellation::{closed_form_m4, qam, psk, ConstellationSet};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, C64};
use crate::stbc::{alamouti_set, mdc_map, ostbc_rate34_4tx, DispersionSet};

/// Channel uses per antenna in one frame.
pub const DEFAULT_SYMBOLS_PER_ANTENNA: usize = 132;
pub const DEFAULT_MIN_FRAME_ERRORS: u64 = 100;
pub const DEFAULT_MAX_FRAMES: u64 = 2_000_000;

/// Frames simulated between stopping-rule checks.
const BATCH: u64 = 512;

/// Radii of the frozen eight-point set (`design --m 8 --nu 0 --starts 50 --seed 7`).
pub const M2_RADII: [f64; 4] = [
    0.3484496549232568,
    0.7791571151447418,
    1.0453489647697776,
    1.4760564249912471,
];

/// `rows x cols` matrix of i.i.d. `CN(0, var)` entries.
pub fn awgn<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> ComplexMat {
    let s = (var / 2.0).sqrt();
    ComplexMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// Rayleigh channel with unit-variance entries, held for a whole frame.
pub fn draw_channel<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> ComplexMat {
    awgn(n_r, n_t, 1.0, rng)
}

/// RNG stream for one frame.
pub fn frame_rng(master_seed: u64, snr_index: usize, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((snr_index as u64) << 40) ^ frame_index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    MdcQostbcDstm,
    OstbcDstm,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::MdcQostbcDstm => "mdc_qostbc_dstm",
            Scheme::OstbcDstm => "ostbc_dstm",
        }
    }

    /// Dispersion set for this scheme at `n_t` antennas, power-normalized so
    /// that unit-power symbols give `E(a^2) = 1`.
    pub fn code(self, n_t: usize) -> Result<DispersionSet> {
        match (self, n_t) {
            (Scheme::MdcQostbcDstm, 4) => mdc_map(&alamouti_set()),
            (Scheme::MdcQostbcDstm, 8) => mdc_map(&ostbc_rate34_4tx()),
            (Scheme::OstbcDstm, 4) => Ok(ostbc_rate34_4tx().scaled(1.0 / 3f64.sqrt())),
            (s, n) => Err(Error::Unsupported(format!(
                "{} with {n} transmit antennas (supported: mdc_qostbc_dstm with 4 or 8, ostbc_dstm with 4)",
                s.as_str()
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdc_qostbc_dstm" | "mdc" => Ok(Scheme::MdcQostbcDstm),
            "ostbc_dstm" | "ostbc" => Ok(Scheme::OstbcDstm),
            other => Err(Error::Unsupported(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A named symbol set handed to the simulator.
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet {
    pub name: String,
    pub points: Vec<C64>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, points: Vec<C64>) -> Self {
        Alphabet {
            name: name.into(),
            points,
        }
    }

    /// Built-in sets: `m1` (closed-form 4 points), `m2` (frozen 8 points),
    /// `qam<M>` for square M, `psk<M>`.
    pub fn builtin(name: &str) -> Result<Self> {
        let points = match name {
            "m1" => closed_form_m4().points().to_vec(),
            "m2" => m2().points().to_vec(),
            _ if name.starts_with("qam") => qam(parse_size(name, 3)?)?,
            _ if name.starts_with("psk") => psk(parse_size(name, 3)?, 0.0)?,
            _ => return Err(Error::Config(format!("unknown constellation '{name}'"))),
        };
        Ok(Alphabet::new(name, points))
    }

    pub fn from_constellation(name: impl Into<String>, set: &ConstellationSet) -> Self {
        Alphabet::new(name, set.points().to_vec())
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.points.len() as f64).log2()
    }
}

fn parse_size(name: &str, prefix: usize) -> Result<usize> {
    name[prefix..]
        .parse()
        .map_err(|_| Error::Config(format!("bad constellation size in '{name}'")))
}

/// The frozen eight-point constellation for the 3 bps/Hz rate-1 code.
pub fn m2() -> ConstellationSet {
    use crate::constellation::Branch::{AC, BD};
    ConstellationSet::from_circles(0.0, &M2_RADII, &[AC, BD, AC, BD]).expect("nu = 0 is always feasible")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSpec {
    pub t_len: usize,
    pub blocks: usize,
}

impl FrameSpec {
    /// `ceil(symbols / T)` blocks, the first being the reference.
    pub fn new(symbols_per_antenna: usize, t_len: usize) -> Result<Self> {
        if t_len == 0 {
            return Err(Error::Config("block length must be positive".into()));
        }
        let blocks = symbols_per_antenna.div_ceil(t_len);
        if blocks < 2 {
            return Err(Error::Config(format!(
                "{symbols_per_antenna} symbols per antenna give {blocks} block(s) of length {t_len}; need at least 2"
            )));
        }
        Ok(FrameSpec { t_len, blocks })
    }

    pub fn info_blocks(&self) -> usize {
        self.blocks - 1
    }

    pub fn symbols_per_antenna(&self) -> usize {
        self.blocks * self.t_len
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub n_t: usize,
    pub n_r: usize,
    pub constellation: Alphabet,
    pub snr_db: Vec<f64>,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub master_seed: u64,
    pub genie: bool,
    pub symbols_per_antenna: usize,
}

impl SimConfig {
    pub fn new(scheme: Scheme, n_t: usize, n_r: usize, constellation: Alphabet, snr_db: Vec<f64>) -> Self {
        SimConfig {
            scheme,
            n_t,
            n_r,
            constellation,
            snr_db,
            min_frame_errors: DEFAULT_MIN_FRAME_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
            master_seed: 1,
            genie: false,
            symbols_per_antenna: DEFAULT_SYMBOLS_PER_ANTENNA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("SNR list contains NaN".into()));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(Error::Config("min_frame_errors and max_frames must be at least 1".into()));
        }
        if self.n_r == 0 {
            return Err(Error::Config("need at least one receive antenna".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlerPoint {
    pub snr_db: f64,
    pub frames_run: u64,
    pub frame_errors: u64,
    pub symbol_errors: u64,
    pub bler: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FrameResult {
    pub frame_error: bool,
    pub symbol_errors: usize,
    /// Info blocks where the non-genie scale estimate differed from the truth.
    pub scale_misestimates: usize,
}

/// How the calibration run picks symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolSource {
    Uniform,
    /// Every slot always carries this point index.
    Constant(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    /// Mean `tr(X X^H) / T` over the transmitted information blocks.
    pub mean_tx_power: f64,
    /// `(snr_db, configured sigma^2, measured sigma^2)` per SNR point.
    pub noise: Vec<(f64, f64, f64)>,
}

/// A configured link: code, decoder and frame layout.
#[derive(Clone, Debug)]
pub struct Simulator {
    cfg: SimConfig,
    decoder: SymbolDecoder,
    frame: FrameSpec,
}

/// Signal gain and noise variance for one SNR value.
fn link_levels(snr_db: f64) -> (f64, f64) {
    if snr_db == f64::NEG_INFINITY {
        // signal vanishes against the noise; decisions are scale invariant
        (0.0, 1.0)
    } else {
        (1.0, 10f64.powf(-snr_db / 10.0))
    }
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let set = cfg.scheme.code(cfg.n_t)?;
        let decoder = SymbolDecoder::new(&set, &cfg.constellation.points)?;
        let frame = FrameSpec::new(cfg.symbols_per_antenna, set.t_len())?;
        Ok(Simulator { cfg, decoder, frame })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn frame(&self) -> FrameSpec {
        self.frame
    }

    pub fn decoder(&self) -> &SymbolDecoder {
        &self.decoder
    }

    /// Nominal `R log2 M` bits per channel use.
    pub fn spectral_efficiency(&self) -> f64 {
        self.decoder.set().rate() * self.cfg.constellation.bits_per_symbol()
    }

    /// Spectral efficiency after the reference-block overhead.
    pub fn effective_spectral_efficiency(&self) -> f64 {
        self.spectral_efficiency() * self.frame.info_blocks() as f64 / self.frame.blocks as f64
    }

    /// One frame at `snr_db[snr_index]`.
    pub fn run_frame(&self, snr_index: usize, frame_index: u64) -> Result<FrameResult> {
        let snr = self.cfg.snr_db[snr_index];
        let (gain, noise_var) = link_levels(snr);
        let mut rng = frame_rng(self.cfg.master_seed, snr_index, frame_index);
        let set = self.decoder.set();
        let (n_t, n_r, k, m) = (set.n_t(), self.cfg.n_r, set.k(), self.decoder.points().len());
        let h = draw_channel(n_r, n_t, &mut rng).scale_real(gain);

        let mut enc = EncoderState::new(n_t);
        let receive = |x: &ComplexMat, rng: &mut ChaCha8Rng| {
            let mut r = h.matmul(x);
            if noise_var > 0.0 {
                let n = awgn(n_r, self.frame.t_len, noise_var, rng);
                r = &r + &n;
            }
            r
        };
        let r0 = receive(enc.x_prev(), &mut rng);
        let mut dec = DecoderState::new(r0, self.cfg.genie);
        let mut result = FrameResult::default();
        let mut indices = vec![0usize; k];
        for _ in 0..self.frame.info_blocks() {
            for idx in indices.iter_mut() {
                *idx = rng.random_range(0..m);
            }
            let u = self.decoder.code_matrix(&indices);
            let x = enc.encode_step(&u)?;
            let r = receive(&x, &mut rng);
            let decision = dec.decode_single_symbol(&r, &self.decoder, Some(u.a_sq()))?;
            let errs = decision.indices.iter().zip(&indices).filter(|(a, b)| a != b).count();
            result.symbol_errors += errs;
            if (decision.a_sq - u.a_sq()).abs() > 1e-12 {
                result.scale_misestimates += 1;
            }
        }
        result.frame_error = result.symbol_errors > 0;
        Ok(result)
    }

    /// Runs frames at one SNR until `min_frame_errors` errors or `max_frames`
    /// frames. The stop is decided in frame order, so the counts do not depend
    /// on batch scheduling.
    pub fn run_point(&self, snr_index: usize) -> Result<BlerPoint> {
        let start = Instant::now();
        let (mut frames, mut errors, mut sym_errors) = (0u64, 0u64, 0u64);
        'outer: while frames < self.cfg.max_frames {
            let end = (frames + BATCH).min(self.cfg.max_frames);
            let batch: Vec<FrameResult> = (frames..end)
                .into_par_iter()
                .map(|f| self.run_frame(snr_index, f))
                .collect::<Result<_>>()?;
            for r in batch {
                frames += 1;
                sym_errors += r.symbol_errors as u64;
                if r.frame_error {
                    errors += 1;
                    if errors >= self.cfg.min_frame_errors {
                        break 'outer;
                    }
                }
            }
        }
        Ok(BlerPoint {
            snr_db: self.cfg.snr_db[snr_index],
            frames_run: frames,
            frame_errors: errors,
            symbol_errors: sym_errors,
            bler: errors as f64 / frames as f64,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn run_sweep(&self) -> Result<Vec<BlerPoint>> {
        (0..self.cfg.snr_db.len()).map(|i| self.run_point(i)).collect()
    }

    /// Measures transmit power per channel use over `blocks` information
    /// blocks and the realized noise variance at each configured SNR.
    pub fn snr_calibration(&self, blocks: usize, source: SymbolSource) -> Result<CalibrationReport> {
        let set = self.decoder.set();
        let (n_t, k, m) = (set.n_t(), set.k(), self.decoder.points().len());
        if let SymbolSource::Constant(i) = source {
            if i >= m {
                return Err(Error::Config(format!("point index {i} out of range for {m} points")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.master_seed);
        let mut enc = EncoderState::new(n_t);
        let mut power = 0.0;
        let mut indices = vec![0usize; k];
        for _ in 0..blocks {
            for idx in indices.iter_mut() {
                *idx = match source {
                    SymbolSource::Uniform => rng.random_range(0..m),
                    SymbolSource::Constant(i) => i,
                };
            }
            let x = enc.encode_step(&self.decoder.code_matrix(&indices))?;
            power += x.frobenius_norm_sq() / self.frame.t_len as f64;
        }
        let samples = 20_000;
        let noise = self
            .cfg
            .snr_db
            .iter()
            .map(|&snr| {
                let (_, var) = link_levels(snr);
                let var = if snr == f64::INFINITY { 0.0 } else { var };
                let measured = awgn(1, samples, var, &mut rng).frobenius_norm_sq() / samples as f64;
                (snr, var, measured)
            })
            .collect();
        Ok(CalibrationReport {
            mean_tx_power: if blocks == 0 { 0.0 } else { power / blocks as f64 },
            noise,
        })
    }
}

pub const CSV_HEADER: &str = "scheme,n_t,n_r,constellation,genie,snr_db,frames,frame_errors,bler,seed";

pub fn csv_row(cfg: &SimConfig, p: &BlerPoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{:.6e},{}",
        cfg.scheme,
        cfg.n_t,
        cfg.n_r,
        cfg.constellation.name,
        cfg.genie,
        p.snr_db,
        p.frames_run,
        p.frame_errors,
        p.bler,
        cfg.master_seed
    )
}

/// SNR (dB) at which a BLER curve crosses `target`, by linear interpolation
/// of `log10(BLER)` between the bracketing points. Zero-error points are
/// ignored.
pub fn snr_at_bler(points: &[BlerPoint], target: f64) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.frame_errors > 0)
        .map(|p| (p.snr_db, p.bler.log10()))
        .collect();
    let t = target.log10();
    usable.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= t && b1 <= t && b0 != b1 {
            Some(s0 + (t - b0) * (s1 - s0) / (b1 - b0))
        } else {
            None
        }
    })
}

/// Decades of BLER lost per 10 dB between two points.
pub fn diversity_slope(a: &BlerPoint, b: &BlerPoint) -> f64 {
    (a.bler.log10() - b.bler.log10()) / (b.snr_db - a.snr_db) * 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::check_criteria;

    fn cfg(snr: Vec<f64>) -> SimConfig {
        let mut c = SimConfig::new(Scheme::MdcQostbcDstm, 4, 1, Alphabet::builtin("m1").unwrap(), snr);
        c.min_frame_errors = 20;
        c.max_frames = 400;
        c
    }

    #[test]
    fn channel_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let (mut v00, mut v01, mut cross) = (0.0, 0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let h = draw_channel(2, 2, &mut rng);
            v00 += h[(0, 0)].norm_sqr();
            v01 += h[(0, 1)].norm_sqr();
            cross += h[(0, 0)] * h[(1, 1)].conj();
        }
        assert!((v00 / n as f64 - 1.0).abs() < 0.02);
        assert!((v01 / n as f64 - 1.0).abs() < 0.02);
        assert!((cross / n as f64).norm() < 0.02);
    }

    #[test]
    fn frame_streams_are_reproducible() {
        let a = draw_channel(1, 4, &mut frame_rng(3, 2, 17));
        let b = draw_channel(1, 4, &mut frame_rng(3, 2, 17));
        let c = draw_channel(1, 4, &mut frame_rng(3, 2, 18));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn frame_layout() {
        let f = FrameSpec::new(132, 4).unwrap();
        assert_eq!((f.blocks, f.info_blocks()), (33, 32));
        let f = FrameSpec::new(132, 8).unwrap();
        assert_eq!((f.blocks, f.info_blocks()), (17, 16));
        assert!(FrameSpec::new(4, 4).is_err());
    }

    #[test]
    fn noiseless_frames_are_error_free() {
        let sim = Simulator::new(cfg(vec![f64::INFINITY])).unwrap();
        for f in 0..50 {
            assert_eq!(sim.run_frame(0, f).unwrap(), FrameResult::default());
        }
    }

    #[test]
    fn noise_only_frames_always_fail() {
        let sim = Simulator::new(cfg(vec![f64::NEG_INFINITY])).unwrap();
        let p = sim.run_point(0).unwrap();
        assert_eq!(p.frames_run, 20);
        assert_eq!(p.bler, 1.0);
    }

    #[test]
    fn unsupported_combinations_are_named() {
        let mut c = cfg(vec![0.0]);
        c.n_t = 6;
        match Simulator::new(c) {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("6 transmit antennas")),
            other => panic!("{other:?}"),
        }
        let mut c = cfg(vec![0.0]);
        c.constellation = Alphabet::builtin("qam16").unwrap();
        assert!(matches!(Simulator::new(c), Err(Error::NotQuasiUnitary { .. })));
        assert!(Simulator::new(cfg(vec![])).is_err());
    }

    #[test]
    fn calibration_power() {
        let sim = Simulator::new(cfg(vec![f64::INFINITY, 10.0])).unwrap();
        let rep = sim.snr_calibration(100_000, SymbolSource::Uniform).unwrap();
        assert!((rep.mean_tx_power - 1.0).abs() < 0.01, "{rep:?}");
        assert_eq!(rep.noise[0].2, 0.0);
        assert!((rep.noise[1].2 / 0.1 - 1.0).abs() < 0.05);
        // point 2 is +j r2: every block has a^2 = 5/3
        let rep = sim.snr_calibration(1000, SymbolSource::Constant(2)).unwrap();
        assert!((rep.mean_tx_power - 5.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn m2_is_feasible_and_matches_analytic_structure() {
        let set = m2();
        assert!(check_criteria(&set, 1e-9).all_pass());
        let r1 = 1.0 / (6.0 + 5f64.sqrt()).sqrt();
        let expected = [r1, 5f64.sqrt() * r1, 3.0 * r1, (2.0 + 5f64.sqrt()) * r1];
        for (a, b) in M2_RADII.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn spectral_efficiency_labels() {
        let mut c = cfg(vec![0.0]);
        c.constellation = Alphabet::builtin("m2").unwrap();
        let sim = Simulator::new(c).unwrap();
        assert!((sim.spectral_efficiency() - 3.0).abs() < 1e-12);
        assert!((sim.effective_spectral_efficiency() - 3.0 * 32.0 / 33.0).abs() < 1e-12);
        let mut c = cfg(vec![0.0]);
        c.scheme = Scheme::OstbcDstm;
        c.constellation = Alphabet::builtin("qam16").unwrap();
        assert!((Simulator::new(c).unwrap().spectral_efficiency() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_helpers() {
        let pt = |snr: f64, bler: f64| BlerPoint {
            snr_db: snr,
            frames_run: 1000,
            frame_errors: (bler * 1000.0) as u64,
            symbol_errors: 0,
            bler,
            wall_seconds: 0.0,
        };
        let curve = [pt(0.0, 1e-1), pt(10.0, 1e-3)];
        assert!((snr_at_bler(&curve, 1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert!(snr_at_bler(&curve, 1e-5).is_none());
        assert!((diversity_slope(&curve[0], &curve[1]) - 2.0).abs() < 1e-12);
    }
}
