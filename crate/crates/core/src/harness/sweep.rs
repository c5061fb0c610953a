//! Monte Carlo drivers: single traced frames, adaptive points and
//! load/SNR sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::frame::LoadPoint;
use crate::protocols::{make_transmission, CodeRegistry, TransmissionPlan};
use crate::receiver::{DecoderState, SicSummary, TraceEvent};
use crate::rng::RngKey;

use super::config::ExperimentConfig;

/// One aggregated result row. Serialized as-is to the structured
/// output; the CSV columns follow the field order exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub scheme: String,
    pub num_slots: usize,
    pub n_b: usize,
    pub esn0_db: f64,
    pub load: f64,
    pub frames: u64,
    pub throughput: f64,
    pub throughput_ci95: f64,
    pub plr: f64,
    pub plr_ci95: f64,
}

impl MetricsRecord {
    /// Decoded information bits per slot: throughput times the payload
    /// size.
    pub fn useful_bits_per_slot(&self, info_bits: usize) -> f64 {
        self.throughput * info_bits as f64
    }
}

/// See [`MetricsRecord::useful_bits_per_slot`].
pub fn useful_bits_per_slot(record: &MetricsRecord, info_bits: usize) -> f64 {
    record.useful_bits_per_slot(info_bits)
}

/// Result of one fully recorded frame.
pub struct TrialOutput {
    pub plans: Vec<TransmissionPlan>,
    pub summary: SicSummary,
    pub trace: Vec<TraceEvent>,
}

/// Frame keys descend from the point key so that frame `i` is the same
/// frame no matter who simulates it.
fn point_key(cfg: &ExperimentConfig, num_users: usize, esn0_db: f64) -> RngKey {
    RngKey::new(cfg.seed)
        .tagged("point")
        .tagged(cfg.scheme.name())
        .index(num_users as u64)
        .index(esn0_db.to_bits())
}

fn draw_plans(
    cfg: &ExperimentConfig,
    code: &std::sync::Arc<crate::protocols::CodeSpec>,
    frame_cfg: &crate::frame::FrameConfig,
    num_users: usize,
    key: &RngKey,
) -> Result<Vec<TransmissionPlan>> {
    let mut rng = key.tagged("tx").rng();
    (0..num_users)
        .map(|u| make_transmission(&cfg.scheme, code, u, frame_cfg, &mut rng))
        .collect()
}

/// Runs one frame with full event tracing.
pub fn run_trial(
    cfg: &ExperimentConfig,
    registry: &CodeRegistry,
    frame_index: u64,
) -> Result<TrialOutput> {
    cfg.validate()?;
    let frame_cfg = cfg.frame_config()?;
    let code = cfg.code(registry)?;
    let phy = cfg.build_phy(registry)?;
    let mut params = cfg.sic_params();
    params.record_trace = true;
    let num_users = cfg.num_users();
    let key = point_key(cfg, num_users, cfg.esn0_db)
        .tagged("frame")
        .index(frame_index);
    let plans = draw_plans(cfg, &code, &frame_cfg, num_users, &key)?;
    let mut state = DecoderState::new(&frame_cfg, &plans, &phy, cfg.esn0_db, params)?;
    let summary = state.run(&key)?;
    let trace = state.take_trace();
    Ok(TrialOutput {
        plans,
        summary,
        trace,
    })
}

/// Simulates one `(load, Es/N0)` point under the adaptive stopping
/// rule and aggregates packet-loss statistics.
///
/// Frames are independent and fully determined by their index, batches
/// have constant size, and the integer loss counts are reduced in index
/// order, so the output is identical for any number of workers.
pub fn run_point(
    cfg: &ExperimentConfig,
    registry: &CodeRegistry,
    load: f64,
    esn0_db: f64,
) -> Result<MetricsRecord> {
    cfg.validate()?;
    let frame_cfg = cfg.frame_config()?;
    let code = cfg.code(registry)?;
    let phy = cfg.build_phy(registry)?;
    let params = cfg.sic_params();
    let num_users = cfg.users_at(load);
    let base = point_key(cfg, num_users, esn0_db);

    let mut frames: u64 = 0;
    let mut sent: u64 = 0;
    let mut lost: u64 = 0;
    if num_users > 0 {
        loop {
            let start = frames;
            let stop = cfg.stop;
            // the final batch is clipped to the cap; its size is fixed by
            // the rule alone, so scheduling cannot change which frames run
            let size = stop.batch.min(stop.max_frames - frames);
            if size == 0 {
                break;
            }
            let batch: Vec<(u64, u64)> = (start..start + size)
                .into_par_iter()
                .map(|i| -> Result<(u64, u64)> {
                    let key = base.tagged("frame").index(i);
                    let plans = draw_plans(cfg, &code, &frame_cfg, num_users, &key)?;
                    let mut state =
                        DecoderState::new(&frame_cfg, &plans, &phy, esn0_db, params.clone())?;
                    let summary = state.run(&key)?;
                    Ok((summary.lost_count() as u64, plans.len() as u64))
                })
                .collect::<Result<_>>()?;
            for (l, s) in batch {
                lost += l;
                sent += s;
            }
            frames += size;
            if frames >= stop.min_frames && (lost >= stop.min_failures || frames >= stop.max_frames)
            {
                break;
            }
        }
    }

    let plr = if sent == 0 { 0.0 } else { lost as f64 / sent as f64 };
    let plr_ci95 = wilson_half_width(lost, sent);
    let point = LoadPoint::new(num_users, cfg.num_slots, plr)?;
    let g = point.normalized_load;
    Ok(MetricsRecord {
        scheme: cfg.scheme.name().to_string(),
        num_slots: cfg.num_slots,
        n_b: cfg.n_b(),
        esn0_db,
        load: g,
        frames,
        throughput: point.throughput,
        throughput_ci95: g * plr_ci95,
        plr,
        plr_ci95,
    })
}

/// Half-width of the 95% Wilson score interval for `successes` out of
/// `n` Bernoulli trials.
pub fn wilson_half_width(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    z * ((p * (1.0 - p) + z2 / (4.0 * nf)) / nf).sqrt() / denom
}

/// The standard load grid: G = 0.05, 0.10, ..., 2.00.
pub fn default_load_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 20.0).collect()
}

/// The standard operating-point grid: integer dB from 0 to 10.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

/// Sweeps offered load at a fixed operating point.
pub fn sweep_load(
    cfg: &ExperimentConfig,
    registry: &CodeRegistry,
    loads: &[f64],
    esn0_db: f64,
) -> Result<Vec<MetricsRecord>> {
    loads
        .iter()
        .map(|&g| run_point(cfg, registry, g, esn0_db))
        .collect()
}

/// Sweeps the operating point at a fixed offered load.
pub fn sweep_snr(
    cfg: &ExperimentConfig,
    registry: &CodeRegistry,
    esn0s: &[f64],
    load: f64,
) -> Result<Vec<MetricsRecord>> {
    esn0s
        .iter()
        .map(|&e| run_point(cfg, registry, load, e))
        .collect()
}

/// Row with the highest throughput, if any.
pub fn peak_throughput(records: &[MetricsRecord]) -> Option<&MetricsRecord> {
    records
        .iter()
        .max_by(|a, b| a.throughput.total_cmp(&b.throughput))
}
