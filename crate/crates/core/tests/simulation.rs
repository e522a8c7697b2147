use dstm::channel::*;
use dstm::codec::{DecoderState, EncoderState, SymbolDecoder};
use dstm::constellation::closed_form_m4;
use dstm::stbc::{alamouti_set, mdc_map};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(snr: Vec<f64>) -> SimConfig {
    let mut c = SimConfig::new(Scheme::MdcQostbcDstm, 4, 1, Alphabet::builtin("m1").unwrap(), snr);
    c.min_frame_errors = 30;
    c.max_frames = 3000;
    c.master_seed = 42;
    c
}

fn sweep_in_pool(cfg: &SimConfig, threads: usize) -> Vec<(u64, u64, u64)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let sim = Simulator::new(cfg.clone()).unwrap();
    pool.install(|| sim.run_sweep().unwrap())
        .into_iter()
        .map(|p| (p.frames_run, p.frame_errors, p.symbol_errors))
        .collect()
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let cfg = small(vec![10.0, 16.0, 22.0]);
    let one = sweep_in_pool(&cfg, 1);
    assert_eq!(one, sweep_in_pool(&cfg, 3));
    assert_eq!(one, sweep_in_pool(&cfg, 1));
}

#[test]
fn bler_falls_with_snr() {
    let sim = Simulator::new(small(vec![0.0, 6.0, 12.0, 18.0, 24.0])).unwrap();
    let pts = sim.run_sweep().unwrap();
    for w in pts.windows(2) {
        // allow binomial slack at the tail
        let slack = 3.0 * (w[1].bler * (1.0 - w[1].bler) / w[1].frames_run as f64).sqrt();
        assert!(w[1].bler <= w[0].bler + slack, "{pts:?}");
    }
    assert!(pts[0].bler > 0.9 && pts[4].bler < 0.2);
}

#[test]
fn eight_antenna_and_baseline_links_run() {
    let mut cfg = small(vec![30.0]);
    cfg.n_t = 8;
    cfg.max_frames = 200;
    let sim = Simulator::new(cfg).unwrap();
    assert_eq!(sim.frame().blocks, 17);
    assert!((sim.spectral_efficiency() - 1.5).abs() < 1e-12);
    assert!(sim.run_point(0).unwrap().bler < 0.05);

    let mut cfg = small(vec![f64::INFINITY]);
    cfg.scheme = Scheme::OstbcDstm;
    cfg.constellation = Alphabet::builtin("qam16").unwrap();
    cfg.max_frames = 50;
    assert_eq!(Simulator::new(cfg).unwrap().run_point(0).unwrap().frame_errors, 0);
}

/// Runs genie and estimated decoders side by side on one realization and
/// checks that they first disagree only after the estimate went wrong.
#[test]
fn genie_and_estimate_split_only_after_misestimate() {
    let code = mdc_map(&alamouti_set()).unwrap();
    let dec = SymbolDecoder::new(&code, closed_form_m4().points()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut divergent_frames = 0;
    for _ in 0..400 {
        let h = draw_channel(1, 4, &mut rng);
        let var = 10f64.powf(-1.2);
        let mut enc = EncoderState::new(4);
        let r0 = &h.matmul(enc.x_prev()) + &awgn(1, 4, var, &mut rng);
        let mut genie = DecoderState::new(r0.clone(), true);
        let mut est = DecoderState::new(r0, false);
        let mut misestimated = false;
        for _ in 0..32 {
            let idx: Vec<usize> = (0..4).map(|_| rng.random_range(0..4)).collect();
            let u = dec.code_matrix(&idx);
            let x = enc.encode_step(&u).unwrap();
            let r = &h.matmul(&x) + &awgn(1, 4, var, &mut rng);
            let g = genie.decode_single_symbol(&r, &dec, Some(u.a_sq())).unwrap();
            let e = est.decode_single_symbol(&r, &dec, Some(u.a_sq())).unwrap();
            if g.indices != e.indices {
                assert!(misestimated, "decisions split with a correct scale estimate");
                divergent_frames += 1;
                break;
            }
            if (est.a_prev_sq_est() - genie.a_prev_sq_est()).abs() > 1e-12 {
                misestimated = true;
            }
        }
    }
    assert!(divergent_frames > 0, "the check never exercised a split");
}

#[test]
fn effective_noise_matches_prediction() {
    let code = mdc_map(&alamouti_set()).unwrap();
    let dec = SymbolDecoder::new(&code, closed_form_m4().points()).unwrap();
    let u = dec.code_matrix(&[2, 2, 2, 2]);
    let s = dstm::codec::effective_noise_stats(20_000, 0.1, 1.0 / 3.0, &u, 1, 3).unwrap();
    assert!((s.variance / s.predicted - 1.0).abs() < 0.03, "{s:?}");
    assert!((s.predicted - 0.1 * (1.0 + 5.0)).abs() < 1e-12);
}

#[test]
fn csv_rows_follow_header() {
    let cfg = small(vec![-3.5]);
    let p = BlerPoint {
        snr_db: -3.5,
        frames_run: 10,
        frame_errors: 4,
        symbol_errors: 9,
        bler: 0.4,
        wall_seconds: 1.0,
    };
    assert_eq!(CSV_HEADER.split(',').count(), csv_row(&cfg, &p).split(',').count());
    assert_eq!(csv_row(&cfg, &p), "mdc_qostbc_dstm,4,1,m1,false,-3.5,10,4,4.000000e-1,42");
}
