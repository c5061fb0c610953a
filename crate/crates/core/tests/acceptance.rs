//! End-to-end acceptance checks.
//!
//! Ten numbered tests exercise the simulator against independent oracles:
//! closed-form slotted-ALOHA throughput, peeling decoders re-implemented
//! here from scratch, from-scratch interference recounts after every
//! cancellation, the complex-baseband receiver, and byte-identical output
//! across worker counts. Each test prints one summary line of the form
//! `acceptance NN <name>: PASS|FAIL — <detail>`; run with `--nocapture`
//! to see the lines for passing tests.

use std::sync::Arc;
use std::time::Instant;

use musca::frame::{place_bursts, FrameConfig};
use musca::harness::{
    metrics_csv_string, peak_throughput, run_point, sweep_load, useful_bits_per_slot,
    ExperimentConfig, PhyChoice, StopRule,
};
use musca::phy::{PhyModel, DEFAULT_MARGIN};
use musca::protocols::{make_transmission_with_slots, CodeRegistry, CodeSpec, Scheme};
use musca::receiver::{run_sic, DecoderState, SicParams};
use musca::rng::RngKey;
use musca::signal::{rm_decode, rm_encode, SignalReceiver, SignalSystem, SoftCodec};

fn report(number: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {number:02} {name}: {verdict} — {detail}");
}

fn sic_params() -> SicParams {
    SicParams {
        d_sig: 1,
        sic_enabled: true,
        max_outer_iterations: None,
        record_trace: false,
    }
}

/// Slotted ALOHA against the closed form G·e^{−G}. With 100 slots the
/// finite-frame correction (1 − 1/N_s)^{N_u − 1} sits two orders of
/// magnitude below the tolerance.
#[test]
fn acceptance_01_slotted_aloha_matches_the_closed_form() {
    let start = Instant::now();
    let registry = CodeRegistry::builtin();
    let mut cfg = ExperimentConfig::new(Scheme::Sa, "turbo-1-6");
    cfg.phy = PhyChoice::Collision;
    cfg.stop = StopRule::exactly(20_000);

    let mut pass = true;
    let mut worst = 0.0f64;
    for i in 1..=8u32 {
        let g = 0.2 * f64::from(i);
        let rec = run_point(&cfg, &registry, g, cfg.esn0_db).unwrap();
        let expected = rec.load * (-rec.load).exp();
        let err = (rec.throughput - expected).abs();
        let tol = (3.0 * rec.throughput_ci95).max(0.01);
        if err > tol {
            pass = false;
        }
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs < 60.0;
    report(
        1,
        "slotted-aloha-closed-form",
        pass && in_time,
        &format!("worst |T − G·e^−G| = {worst:.4} over G = 0.2..1.6 at 20000 frames/point, {secs:.1}s"),
    );
    assert!(pass, "slotted-ALOHA throughput strayed from G·e^−G");
    assert!(in_time, "closed-form sweep took {secs:.1}s, budget is 60s");
}

/// The three-replica CRDSA baseline under collision erasure: peak
/// throughput in the expected band, and packet-loss spot checks with the
/// failure-count stopping rule.
#[test]
fn acceptance_02_crdsa_baseline_peak_and_plr() {
    let registry = CodeRegistry::builtin();
    let mut cfg = ExperimentConfig::new(Scheme::Crdsa { replicas: 3 }, "turbo-1-6");
    cfg.phy = PhyChoice::Collision;
    cfg.stop = StopRule::quick(4_000);

    let loads: Vec<f64> = (8..=24).map(|i| f64::from(i) / 20.0).collect();
    let records = sweep_load(&cfg, &registry, &loads, cfg.esn0_db).unwrap();
    let peak = peak_throughput(&records).unwrap().clone();
    let peak_ok = (0.60..=0.75).contains(&peak.throughput);

    cfg.stop = StopRule {
        min_frames: 2_000,
        max_frames: 200_000,
        min_failures: 100,
        batch: 256,
    };
    let at06 = run_point(&cfg, &registry, 0.6, cfg.esn0_db).unwrap();
    let at03 = run_point(&cfg, &registry, 0.3, cfg.esn0_db).unwrap();
    let plr_ok = at06.plr <= 1e-1 && at03.plr <= 1e-2;

    report(
        2,
        "crdsa-baseline",
        peak_ok && plr_ok,
        &format!(
            "peak T = {:.3} at G = {:.2}; PLR(0.6) = {:.1e} ({} frames), PLR(0.3) = {:.1e} ({} frames)",
            peak.throughput, peak.load, at06.plr, at06.frames, at03.plr, at03.frames
        ),
    );
    assert!(peak_ok, "CRDSA-3 peak {:.3} outside [0.60, 0.75]", peak.throughput);
    assert!(plr_ok, "CRDSA-3 PLR spot checks failed: {} / {}", at06.plr, at03.plr);
}

/// MuSCA at the main operating point (rate-1/6 code, 100 slots, 10 dB):
/// the peak clears 1.15 and throughput tracks the offered load to within
/// 2% everywhere up to G = 1.1. The exact peak depends on the decode
/// margin calibration, so the floor is deliberately loose.
#[test]
fn acceptance_03_musca_peak_and_linear_range() {
    let registry = CodeRegistry::builtin();
    let mut cfg = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-6");
    cfg.esn0_db = 10.0;
    cfg.phy = PhyChoice::SinrMi {
        margin: DEFAULT_MARGIN,
    };
    cfg.stop = StopRule::quick(2_500);

    let peak_loads: Vec<f64> = (20..=30).map(|i| f64::from(i) / 20.0).collect();
    let records = sweep_load(&cfg, &registry, &peak_loads, cfg.esn0_db).unwrap();
    let peak = peak_throughput(&records).unwrap().clone();
    let peak_ok = peak.throughput >= 1.15;

    let linear_loads: Vec<f64> = (1..=11).map(|i| f64::from(i) / 10.0).collect();
    let linear = sweep_load(&cfg, &registry, &linear_loads, cfg.esn0_db).unwrap();
    let worst_ratio = linear
        .iter()
        .map(|r| r.throughput / r.load)
        .fold(f64::INFINITY, f64::min);
    let linear_ok = worst_ratio >= 0.98;

    report(
        3,
        "musca-operating-point",
        peak_ok && linear_ok,
        &format!(
            "peak T = {:.3} at G = {:.2}; min T/G = {worst_ratio:.4} for G ≤ 1.1",
            peak.throughput, peak.load
        ),
    );
    assert!(peak_ok, "MuSCA peak {:.3} below 1.15", peak.throughput);
    assert!(linear_ok, "T/G dropped to {worst_ratio:.4} before G = 1.1");
}

/// Contention resolution improves with frame length: the 500-slot peak
/// exceeds the 100-slot peak by a clear margin at the same operating
/// point.
#[test]
fn acceptance_04_larger_frames_raise_the_peak() {
    let registry = CodeRegistry::builtin();
    let mut cfg = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-6");
    cfg.esn0_db = 10.0;
    cfg.stop = StopRule::quick(2_000);

    let small_loads: Vec<f64> = (24..=29).map(|i| f64::from(i) / 20.0).collect();
    let small = sweep_load(&cfg, &registry, &small_loads, cfg.esn0_db).unwrap();
    let small_peak = peak_throughput(&small).unwrap().clone();

    cfg.num_slots = 500;
    cfg.stop = StopRule::quick(500);
    let large_loads: Vec<f64> = (25..=30).map(|i| f64::from(i) / 20.0).collect();
    let large = sweep_load(&cfg, &registry, &large_loads, cfg.esn0_db).unwrap();
    let large_peak = peak_throughput(&large).unwrap().clone();

    let gain = large_peak.throughput - small_peak.throughput;
    let pass = gain >= 0.05;
    report(
        4,
        "frame-size-effect",
        pass,
        &format!(
            "peak {:.3} at 500 slots vs {:.3} at 100 slots (gain {gain:.3})",
            large_peak.throughput, small_peak.throughput
        ),
    );
    assert!(pass, "500-slot peak gained only {gain:.3} over 100 slots");
}

/// The deterministic discriminator: two users overlapping on all three
/// slots. Interfered bursts carry enough mutual information at high SNR
/// for MuSCA to decode one user and cancel its way to the other, while
/// collision erasure (CRDSA or CSA) erases every burst and deadlocks.
#[test]
fn acceptance_05_full_overlap_resolved_only_by_musca() {
    let registry = CodeRegistry::builtin();
    let code = registry.get("turbo-1-6").unwrap();
    let config = FrameConfig::with_slots(10).unwrap();
    let key = RngKey::new(5).tagged("overlap");
    let params = sic_params();
    let slots = vec![0usize, 1, 2];
    let plans_for = |scheme: &Scheme| {
        (0..2)
            .map(|u| make_transmission_with_slots(scheme, &code, u, &config, slots.clone()).unwrap())
            .collect::<Vec<_>>()
    };

    let musca = run_sic(
        &config,
        &plans_for(&Scheme::Musca { fragments: 3 }),
        &PhyModel::sinr_mi(DEFAULT_MARGIN),
        30.0,
        &params,
        &key,
    )
    .unwrap();
    let musca_ok = musca.decoded == [true, true] && !musca.deadlock;

    let crdsa = run_sic(
        &config,
        &plans_for(&Scheme::Crdsa { replicas: 3 }),
        &PhyModel::collision_erasure(),
        30.0,
        &params,
        &key,
    )
    .unwrap();
    let crdsa_ok = crdsa.decoded == [false, false] && crdsa.deadlock;

    let csa = run_sic(
        &config,
        &plans_for(&Scheme::Csa { fragments: 3 }),
        &PhyModel::collision_erasure(),
        30.0,
        &params,
        &key,
    )
    .unwrap();
    let csa_ok = csa.decoded == [false, false] && csa.deadlock;

    let pass = musca_ok && crdsa_ok && csa_ok;
    report(
        5,
        "full-overlap-discriminator",
        pass,
        &format!(
            "musca decoded {}/2, crdsa {}/2, csa {}/2",
            musca.decoded_count(),
            crdsa.decoded_count(),
            csa.decoded_count()
        ),
    );
    assert!(musca_ok, "MuSCA failed to resolve the full overlap: {:?}", musca.decoded);
    assert!(crdsa_ok, "CRDSA resolved a frame it must deadlock on: {:?}", crdsa.decoded);
    assert!(csa_ok, "CSA resolved a frame it must deadlock on: {:?}", csa.decoded);
}

/// Packet-loss ordering at 8 dB, allowing the summed confidence
/// half-widths as slack. MuSCA sits below both baselines at every load.
/// The full chain MuSCA ≤ CRDSA-3 ≤ SA is checked up to G = 0.8: past
/// its waterfall a replica scheme congests the channel (three bursts per
/// block), so CRDSA's loss crossing above slotted ALOHA's at higher
/// loads is expected, not a defect.
#[test]
fn acceptance_06_plr_ordering_at_eight_db() {
    let registry = CodeRegistry::builtin();
    let loads: Vec<f64> = (1..=11).map(|i| f64::from(i) / 10.0).collect();
    let chain_limit = 0.85;

    let mut musca_cfg = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-6");
    musca_cfg.esn0_db = 8.0;
    musca_cfg.stop = StopRule::quick(4_000);
    let musca = sweep_load(&musca_cfg, &registry, &loads, 8.0).unwrap();

    let mut crdsa_cfg = ExperimentConfig::new(Scheme::Crdsa { replicas: 3 }, "turbo-1-6");
    crdsa_cfg.esn0_db = 8.0;
    crdsa_cfg.phy = PhyChoice::Collision;
    crdsa_cfg.stop = StopRule::quick(4_000);
    let crdsa = sweep_load(&crdsa_cfg, &registry, &loads, 8.0).unwrap();

    let mut sa_cfg = ExperimentConfig::new(Scheme::Sa, "turbo-1-6");
    sa_cfg.esn0_db = 8.0;
    sa_cfg.phy = PhyChoice::Collision;
    sa_cfg.stop = StopRule::quick(4_000);
    let sa = sweep_load(&sa_cfg, &registry, &loads, 8.0).unwrap();

    let mut pass = true;
    let mut detail = String::new();
    for i in 0..loads.len() {
        let m_le_c = musca[i].plr <= crdsa[i].plr + musca[i].plr_ci95 + crdsa[i].plr_ci95;
        let m_le_s = musca[i].plr <= sa[i].plr + musca[i].plr_ci95 + sa[i].plr_ci95;
        let c_le_s = loads[i] > chain_limit
            || crdsa[i].plr <= sa[i].plr + crdsa[i].plr_ci95 + sa[i].plr_ci95;
        if !(m_le_c && m_le_s && c_le_s) {
            pass = false;
            detail = format!(
                "violated at G = {:.1}: musca {:.2e}, crdsa {:.2e}, sa {:.2e}",
                loads[i], musca[i].plr, crdsa[i].plr, sa[i].plr
            );
            break;
        }
    }
    if pass {
        detail = format!(
            "musca below both at all {} loads, full chain up to G = 0.8; at G = 0.8: {:.1e} ≤ {:.2} ≤ {:.2}",
            loads.len(),
            musca[7].plr,
            crdsa[7].plr,
            sa[7].plr
        );
    }
    report(6, "plr-ordering-8db", pass, &detail);
    assert!(pass, "{detail}");
}

/// Decoded set of the peeling decoder re-implemented from scratch:
/// `require_all = false` decodes a user once any burst is alone in its
/// slot (replica semantics under collision erasure), `require_all = true`
/// once every burst is (fragment semantics).
fn peel(slot_sets: &[Vec<usize>], require_all: bool) -> Vec<bool> {
    let n = slot_sets.len();
    let mut decoded = vec![false; n];
    loop {
        let mut newly = Vec::new();
        for u in 0..n {
            if decoded[u] {
                continue;
            }
            let clean = |s: usize| {
                (0..n).all(|v| v == u || decoded[v] || !slot_sets[v].contains(&s))
            };
            let ok = if require_all {
                slot_sets[u].iter().all(|&s| clean(s))
            } else {
                slot_sets[u].iter().any(|&s| clean(s))
            };
            if ok {
                newly.push(u);
            }
        }
        if newly.is_empty() {
            return decoded;
        }
        for u in newly {
            decoded[u] = true;
        }
    }
}

/// Recomputes every visible degree from nothing but the placements and
/// the located/decoded flags, and compares with the receiver's
/// incremental counters.
fn check_counters(
    state: &DecoderState<'_, f64>,
    slot_sets: &[Vec<usize>],
) -> Result<(), String> {
    let n = slot_sets.len();
    for u in 0..n {
        if state.is_decoded(u) && !state.is_located(u) {
            return Err(format!("user {u} decoded without being located"));
        }
        for (j, &s) in slot_sets[u].iter().enumerate() {
            let data = (0..n)
                .filter(|&v| v != u && !state.is_decoded(v) && slot_sets[v].contains(&s))
                .count();
            if data != state.data_degree(u, j) {
                return Err(format!(
                    "user {u} burst {j}: incremental data degree {} but recount {data} in {slot_sets:?}",
                    state.data_degree(u, j)
                ));
            }
            let sig = (0..n)
                .filter(|&v| v != u && !state.is_located(v) && slot_sets[v].contains(&s))
                .count();
            if sig != state.sig_degree(u, j) {
                return Err(format!(
                    "user {u} burst {j}: incremental signaling degree {} but recount {sig} in {slot_sets:?}",
                    state.sig_degree(u, j)
                ));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Oracle {
    /// SIC replicas: final decoded set equals the any-clean peeling.
    PeelAnyClean,
    /// SIC fragments under collision erasure: all-clean peeling.
    PeelAllClean,
    /// No cancellation: decoded iff some burst starts clean.
    OneShotAnyClean,
    /// No closed-form target, but a terminal state may not contain an
    /// undecoded user with an interference-free burst (one clean burst
    /// always carries enough mutual information here).
    CleanTerminal,
}

struct SmallFrameCase {
    scheme: Scheme,
    code: Arc<CodeSpec>,
    phy: PhyModel<f64>,
    oracle: Oracle,
}

fn exercise_small_frames(
    case: &SmallFrameCase,
    frames: &mut u64,
    checkpoints: &mut u64,
) -> Result<(), String> {
    let n_b = case.scheme.fixed_burst_count().unwrap();
    let key = RngKey::new(7).tagged("small-frames");
    for ns in n_b..=8 {
        let config = FrameConfig::with_slots(ns).map_err(|e| e.to_string())?;
        let combos = combinations(ns, n_b);
        let canonical: Vec<usize> = (0..n_b).collect();
        for nu in 1..=4usize {
            // Outcomes depend on slot indices only through occupancy, so
            // relabeling slots never changes them; fixing the first
            // user's bursts to the first slots covers every frame up to
            // that relabeling.
            let others = nu - 1;
            let total = combos.len().pow(others as u32);
            for idx in 0..total {
                let mut slot_sets = Vec::with_capacity(nu);
                slot_sets.push(canonical.clone());
                let mut rem = idx;
                for _ in 0..others {
                    slot_sets.push(combos[rem % combos.len()].clone());
                    rem /= combos.len();
                }
                run_small_frame(case, &config, &slot_sets, &key, checkpoints)?;
                *frames += 1;
            }
        }
    }
    Ok(())
}

fn run_small_frame(
    case: &SmallFrameCase,
    config: &FrameConfig,
    slot_sets: &[Vec<usize>],
    key: &RngKey,
    checkpoints: &mut u64,
) -> Result<(), String> {
    let n = slot_sets.len();
    let plans = slot_sets
        .iter()
        .enumerate()
        .map(|(u, s)| make_transmission_with_slots(&case.scheme, &case.code, u, config, s.clone()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut params = sic_params();
    params.sic_enabled = case.scheme.sic_enabled();

    let decoded: Vec<bool> = if params.sic_enabled {
        // Mirror the production loop one step at a time so the state can
        // be audited after every cancellation.
        let mut state = DecoderState::new(config, &plans, &case.phy, 10.0, params.clone())
            .map_err(|e| e.to_string())?;
        loop {
            state.signaling_pass();
            let mut progress = false;
            while let Some(u) = state.select_next_user() {
                if state.attempt_data_decode(u, key).map_err(|e| e.to_string())? {
                    state.cancel_user(u).map_err(|e| e.to_string())?;
                    check_counters(&state, slot_sets)?;
                    state.verify_consistency().map_err(|e| e.to_string())?;
                    *checkpoints += 1;
                    progress = true;
                }
            }
            if !progress || (0..n).all(|u| state.is_decoded(u)) {
                break;
            }
        }
        check_counters(&state, slot_sets)?;
        let drive: Vec<bool> = (0..n).map(|u| state.is_decoded(u)).collect();
        let rerun = run_sic(config, &plans, &case.phy, 10.0, &params, key)
            .map_err(|e| e.to_string())?;
        if rerun.decoded != drive {
            return Err(format!(
                "stepped drive {:?} disagrees with run() {:?} on {slot_sets:?}",
                drive, rerun.decoded
            ));
        }
        drive
    } else {
        run_sic(config, &plans, &case.phy, 10.0, &params, key)
            .map_err(|e| e.to_string())?
            .decoded
    };

    match case.oracle {
        Oracle::PeelAnyClean => {
            let want = peel(slot_sets, false);
            if decoded != want {
                return Err(format!(
                    "{} decoded {decoded:?} but peeling gives {want:?} on {slot_sets:?}",
                    case.scheme.name()
                ));
            }
        }
        Oracle::PeelAllClean => {
            let want = peel(slot_sets, true);
            if decoded != want {
                return Err(format!(
                    "{} decoded {decoded:?} but all-clean peeling gives {want:?} on {slot_sets:?}",
                    case.scheme.name()
                ));
            }
        }
        Oracle::OneShotAnyClean => {
            for u in 0..n {
                let want = slot_sets[u].iter().any(|&s| {
                    (0..n).all(|v| v == u || !slot_sets[v].contains(&s))
                });
                if decoded[u] != want {
                    return Err(format!(
                        "{} user {u} decoded={} but starts {} on {slot_sets:?}",
                        case.scheme.name(),
                        decoded[u],
                        if want { "clean" } else { "collided" }
                    ));
                }
            }
        }
        Oracle::CleanTerminal => {
            for u in 0..n {
                if decoded[u] {
                    continue;
                }
                let has_clean = slot_sets[u].iter().any(|&s| {
                    (0..n).all(|v| v == u || decoded[v] || !slot_sets[v].contains(&s))
                });
                if has_clean {
                    return Err(format!(
                        "{} left user {u} undecoded despite a clean burst on {slot_sets:?}",
                        case.scheme.name()
                    ));
                }
            }
        }
    }
    Ok(())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in start..n {
            if n - s < k - cur.len() {
                break;
            }
            cur.push(s);
            go(s + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exhausts every small frame (up to 8 slots, 4 users, 3 bursts; the
/// first user's placement canonicalized by slot relabeling) for eight
/// scheme/decode-model settings, auditing the incremental receiver state
/// after every cancellation and matching outcomes against from-scratch
/// peeling decoders.
#[test]
fn acceptance_07_small_frame_state_and_peeling_oracles() {
    let start = Instant::now();
    let registry = CodeRegistry::builtin();
    let turbo = registry.get("turbo-1-6").unwrap();
    // The fragment schemes need a codeword short enough that one and two
    // bursts still fit a slot.
    let short = registry.get("cc-ref-k64").unwrap();
    let collision = PhyModel::collision_erasure();
    let mi = PhyModel::sinr_mi(DEFAULT_MARGIN);
    let cases = [
        SmallFrameCase {
            scheme: Scheme::Sa,
            code: turbo.clone(),
            phy: collision.clone(),
            oracle: Oracle::OneShotAnyClean,
        },
        SmallFrameCase {
            scheme: Scheme::Dsa,
            code: turbo.clone(),
            phy: collision.clone(),
            oracle: Oracle::OneShotAnyClean,
        },
        SmallFrameCase {
            scheme: Scheme::Crdsa { replicas: 2 },
            code: turbo.clone(),
            phy: collision.clone(),
            oracle: Oracle::PeelAnyClean,
        },
        SmallFrameCase {
            scheme: Scheme::Crdsa { replicas: 3 },
            code: turbo.clone(),
            phy: collision.clone(),
            oracle: Oracle::PeelAnyClean,
        },
        SmallFrameCase {
            scheme: Scheme::Csa { fragments: 3 },
            code: short.clone(),
            phy: collision.clone(),
            oracle: Oracle::PeelAllClean,
        },
        SmallFrameCase {
            scheme: Scheme::Musca { fragments: 1 },
            code: short.clone(),
            phy: mi.clone(),
            oracle: Oracle::CleanTerminal,
        },
        SmallFrameCase {
            scheme: Scheme::Musca { fragments: 2 },
            code: short.clone(),
            phy: mi.clone(),
            oracle: Oracle::CleanTerminal,
        },
        SmallFrameCase {
            scheme: Scheme::Musca { fragments: 3 },
            code: short,
            phy: mi,
            oracle: Oracle::CleanTerminal,
        },
    ];

    let mut frames = 0u64;
    let mut checkpoints = 0u64;
    let mut failure: Option<String> = None;
    for case in &cases {
        if let Err(e) = exercise_small_frames(case, &mut frames, &mut checkpoints) {
            failure = Some(e);
            break;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failure.is_none() && secs < 60.0;
    report(
        7,
        "small-frame-oracles",
        pass,
        &match &failure {
            None => format!(
                "{frames} frames across {} settings, {checkpoints} cancellation audits, {secs:.1}s",
                cases.len()
            ),
            Some(e) => e.clone(),
        },
    );
    if let Some(e) = failure {
        panic!("{e}");
    }
    assert!(secs < 60.0, "small-frame enumeration took {secs:.1}s");
}

/// The complex-baseband path: perfect cancellation on a noiseless frame,
/// an exhaustive noiseless round trip of the signaling block code, and
/// agreement between the waveform receiver and the abstract model on
/// random noisy frames.
#[test]
fn acceptance_08_waveform_receiver_validation() {
    let registry = CodeRegistry::builtin();
    let code = registry.get("cc-ref-k64").unwrap();
    let config = FrameConfig::new(12, 86, 64, 16).unwrap();

    // (a) Decode a noiseless four-user chain and subtract every
    // reconstructed burst; the residual must vanish to numerical noise.
    let noiseless = SignalSystem::new(
        config,
        code.clone(),
        SoftCodec::new(64, 3),
        3,
        1,
        15.0,
        true,
    )
    .unwrap();
    let placements = vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 6], vec![6, 7, 8]];
    let frame = noiseless
        .generate_frame(&placements, &RngKey::new(81).tagged("noiseless"))
        .unwrap();
    let initial: f64 = frame
        .received
        .iter()
        .flat_map(|slot| slot.iter())
        .map(|c| c.norm_sqr())
        .sum();
    let mut rx = SignalReceiver::new(&noiseless, &frame);
    let out = rx.run();
    let relative = rx.residual_energy() / initial;
    let residual_ok = out.decoded.iter().all(|&d| d) && relative <= 1e-10;

    // (b) Every message of every RM(1, m) order up to 6 survives a
    // noiseless round trip through the soft decoder.
    let mut rm_ok = true;
    for m in 1..=6usize {
        for msg in 0..(1u32 << (m + 1)) {
            let bits: Vec<u8> = (0..=m).map(|i| ((msg >> i) & 1) as u8).collect();
            let soft: Vec<f64> = rm_encode(m, &bits)
                .iter()
                .map(|&b| 1.0 - 2.0 * f64::from(b))
                .collect();
            if rm_decode(m, &soft).0 != bits {
                rm_ok = false;
            }
        }
    }

    // (c) Waveform vs abstract decode sets on random three-user frames
    // at 15 dB.
    let noisy = SignalSystem::new(
        config,
        code.clone(),
        SoftCodec::new(64, 3),
        3,
        1,
        15.0,
        false,
    )
    .unwrap();
    let scheme = Scheme::Musca { fragments: 3 };
    let phy = PhyModel::sinr_mi(DEFAULT_MARGIN);
    let params = sic_params();
    let mut agreements = 0u32;
    for t in 0..100u64 {
        let key = RngKey::new(0x517).tagged("agree").index(t);
        let mut rng = key.tagged("place").rng();
        let placements: Vec<Vec<usize>> = (0..3)
            .map(|_| place_bursts(&mut rng, config.num_slots, 3).unwrap())
            .collect();
        let frame = noisy.generate_frame(&placements, &key).unwrap();
        let wave = SignalReceiver::new(&noisy, &frame).run();
        let plans: Vec<_> = placements
            .iter()
            .enumerate()
            .map(|(u, s)| {
                make_transmission_with_slots(&scheme, &code, u, &config, s.clone()).unwrap()
            })
            .collect();
        let abstract_run = run_sic(&config, &plans, &phy, 15.0, &params, &key).unwrap();
        if abstract_run.decoded == wave.decoded {
            agreements += 1;
        }
    }
    let agree_ok = agreements >= 95;

    let pass = residual_ok && rm_ok && agree_ok;
    report(
        8,
        "waveform-validation",
        pass,
        &format!(
            "relative residual {relative:.1e}; RM(1,1..6) exact: {rm_ok}; decode-set agreement {agreements}/100"
        ),
    );
    assert!(residual_ok, "noiseless cancellation left relative residual {relative:.3e}");
    assert!(rm_ok, "RM soft decoder failed a noiseless message");
    assert!(agree_ok, "waveform and abstract receivers agreed on only {agreements}/100 frames");
}

/// Peak useful data per slot: the rate-1/4 code (680 info bits) beats the
/// rate-1/6 code (456 info bits) at 10 dB even though the rate-1/6 curve
/// peaks at a higher packet throughput.
#[test]
fn acceptance_09_useful_bits_favor_the_higher_rate_code() {
    let registry = CodeRegistry::builtin();

    let mut low_rate = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-6");
    low_rate.esn0_db = 10.0;
    low_rate.stop = StopRule::quick(2_000);
    let low_loads: Vec<f64> = (24..=29).map(|i| f64::from(i) / 20.0).collect();
    let low = sweep_load(&low_rate, &registry, &low_loads, 10.0).unwrap();
    let low_peak = peak_throughput(&low).unwrap().clone();
    let low_bits = useful_bits_per_slot(&low_peak, registry.get("turbo-1-6").unwrap().info_bits);

    let mut high_rate = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-4");
    high_rate.esn0_db = 10.0;
    high_rate.stop = StopRule::quick(2_000);
    let high_loads: Vec<f64> = (17..=23).map(|i| f64::from(i) / 20.0).collect();
    let high = sweep_load(&high_rate, &registry, &high_loads, 10.0).unwrap();
    let high_peak = peak_throughput(&high).unwrap().clone();
    let high_bits = useful_bits_per_slot(&high_peak, registry.get("turbo-1-4").unwrap().info_bits);

    let pass = high_bits > low_bits;
    report(
        9,
        "useful-bits-crossover",
        pass,
        &format!(
            "rate 1/4: {high_bits:.0} bits/slot (T = {:.3}) vs rate 1/6: {low_bits:.0} bits/slot (T = {:.3})",
            high_peak.throughput, low_peak.throughput
        ),
    );
    assert!(pass, "rate-1/4 peak {high_bits:.1} bits/slot did not beat rate-1/6 {low_bits:.1}");
}

/// One configuration and seed must produce byte-identical CSV no matter
/// how many workers simulate it, and across repeated runs.
#[test]
fn acceptance_10_results_identical_across_worker_counts() {
    let registry = CodeRegistry::builtin();
    let mut cfg = ExperimentConfig::new(Scheme::Musca { fragments: 3 }, "turbo-1-6");
    cfg.num_slots = 50;
    cfg.stop = StopRule::quick(400);
    let loads = [0.6, 1.0, 1.3];

    let base = metrics_csv_string(&sweep_load(&cfg, &registry, &loads, 10.0).unwrap());
    let again = metrics_csv_string(&sweep_load(&cfg, &registry, &loads, 10.0).unwrap());
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| metrics_csv_string(&sweep_load(&cfg, &registry, &loads, 10.0).unwrap()));
    let eight = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap()
        .install(|| metrics_csv_string(&sweep_load(&cfg, &registry, &loads, 10.0).unwrap()));

    let pass = base == again && base == one && base == eight;
    report(
        10,
        "worker-count-determinism",
        pass,
        &format!(
            "{} CSV bytes identical across repeat, 1-thread and 8-thread pools",
            base.len()
        ),
    );
    assert!(base == again, "repeat run diverged");
    assert!(base == one, "single-thread pool diverged from the default pool");
    assert!(base == eight, "eight-thread pool diverged from the default pool");
}
