//! Frame error rate tables and the pluggable decode model.
//!
//! A [`FerTable`] maps an interference pattern — the multiset of
//! interferer counts seen by a user's bursts — and an Es/N0 point to a
//! block error probability. Tables are stored as CSV
//! (`code_id,pattern,esn0_db,fer`, pattern written `0-0-0`) and looked up
//! with log-linear interpolation along Es/N0.
//!
//! [`PhyModel`] selects how burst success is judged:
//!
//! * `CollisionErasure` — any collided burst is lost; no noise.
//! * `SinrMi` — a block decodes iff the mutual information its usable
//!   bursts deliver exceeds the info size by a margin.
//! * `DegreeFerTable` — table lookup per pattern, falling back to the
//!   margin rule for patterns the table does not cover.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::phy::mi::{mi_per_symbol_qpsk, pattern_sum_mi, q_function};
use crate::phy::{burst_sinr, SnrPoint};
use crate::protocols::{BurstKind, CodeSpec};
use crate::scalar::Real;

/// Smallest FER a table lookup will report; probabilities below this are
/// indistinguishable in any affordable simulation.
pub const FER_FLOOR: f64 = 1e-7;

/// Canonical form of an interference pattern: degrees sorted ascending,
/// values above `threshold` clipped to `threshold + 1` (they are erased,
/// so their exact count is irrelevant).
pub fn canonical_pattern(degrees: &[usize], threshold: usize) -> Vec<usize> {
    let mut p: Vec<usize> = degrees
        .iter()
        .map(|&d| d.min(threshold + 1))
        .collect();
    p.sort_unstable();
    p
}

/// `[0, 1, 2]` → `"0-1-2"`.
pub fn pattern_to_string(pattern: &[usize]) -> String {
    pattern
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// `"0-1-2"` → `[0, 1, 2]`.
pub fn parse_pattern(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::input("empty pattern"));
    }
    s.split('-')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::input(format!("bad pattern component '{part}' in '{s}'")))
        })
        .collect()
}

/// Per-code FER lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct FerTable<F> {
    pub code_id: String,
    /// pattern → (esn0_db, fer) pairs sorted by esn0_db.
    entries: BTreeMap<Vec<usize>, Vec<(F, F)>>,
}

impl<F: Real> FerTable<F> {
    pub fn new(code_id: impl Into<String>) -> Self {
        FerTable {
            code_id: code_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, pattern: Vec<usize>, esn0_db: F, fer: F) -> Result<()> {
        if !esn0_db.is_finite() {
            return Err(Error::input("non-finite Es/N0 in FER table"));
        }
        if !(F::zero()..=F::one()).contains(&fer) || !fer.is_finite() {
            return Err(Error::input(format!(
                "FER {:?} outside [0,1] for pattern {}",
                fer,
                pattern_to_string(&pattern)
            )));
        }
        let points = self.entries.entry(pattern.clone()).or_default();
        match points.binary_search_by(|(x, _)| x.partial_cmp(&esn0_db).unwrap()) {
            Ok(_) => Err(Error::input(format!(
                "duplicate Es/N0 point {:?} for pattern {}",
                esn0_db,
                pattern_to_string(&pattern)
            ))),
            Err(pos) => {
                points.insert(pos, (esn0_db, fer));
                Ok(())
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn patterns(&self) -> Vec<Vec<usize>> {
        self.entries.keys().cloned().collect()
    }

    pub fn points(&self, pattern: &[usize]) -> Option<&[(F, F)]> {
        self.entries.get(pattern).map(|v| v.as_slice())
    }

    /// Interpolated FER for an already-canonical pattern; `None` when the
    /// pattern is absent. Interpolation is linear in Es/N0 (dB) against
    /// log(FER); outside the tabulated span the end value is held. The
    /// result never goes below [`FER_FLOOR`].
    pub fn lookup(&self, pattern: &[usize], esn0_db: F) -> Option<F> {
        let points = self.entries.get(pattern)?;
        let floor = F::from_f64_lossy(FER_FLOOR);
        let clamped = |f: F| f.max(floor).min(F::one());
        let first = points.first().unwrap();
        let last = points.last().unwrap();
        if esn0_db <= first.0 {
            return Some(clamped(first.1));
        }
        if esn0_db >= last.0 {
            return Some(clamped(last.1));
        }
        let idx = points
            .partition_point(|&(x, _)| x < esn0_db)
            .min(points.len() - 1);
        let (x1, y1) = points[idx - 1];
        let (x2, y2) = points[idx];
        let t = (esn0_db - x1) / (x2 - x1);
        let ly1 = clamped(y1).ln();
        let ly2 = clamped(y2).ln();
        Some(clamped((ly1 + t * (ly2 - ly1)).exp()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_csv(&text).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::Parse {
                path: path.display().to_string(),
                detail: msg,
            },
            other => other,
        })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((_, l)) => break l.trim(),
                None => return Err(Error::input("empty FER table")),
            }
        };
        if header != "code_id,pattern,esn0_db,fer" {
            return Err(Error::input(format!(
                "bad FER table header '{header}', expected 'code_id,pattern,esn0_db,fer'"
            )));
        }
        let mut table: Option<FerTable<F>> = None;
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::input(format!(
                    "line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let code_id = fields[0];
            let pattern = parse_pattern(fields[1])?;
            let esn0_db: f64 = fields[2]
                .parse()
                .map_err(|_| Error::input(format!("line {}: bad esn0_db", lineno + 1)))?;
            let fer: f64 = fields[3]
                .parse()
                .map_err(|_| Error::input(format!("line {}: bad fer", lineno + 1)))?;
            let table = table.get_or_insert_with(|| FerTable::new(code_id));
            if table.code_id != code_id {
                return Err(Error::input(format!(
                    "line {}: table mixes code ids '{}' and '{code_id}'",
                    lineno + 1,
                    table.code_id
                )));
            }
            table.insert(pattern, F::from_f64_lossy(esn0_db), F::from_f64_lossy(fer))?;
        }
        table.ok_or_else(|| Error::input("FER table has a header but no rows"))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("code_id,pattern,esn0_db,fer\n");
        for (pattern, points) in &self.entries {
            for &(esn0, fer) in points {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    self.code_id,
                    pattern_to_string(pattern),
                    esn0.to_f64(),
                    fer.to_f64()
                ));
            }
        }
        out
    }

    /// Human-readable notes on anything suspicious: FER increasing with
    /// Es/N0, or single-point patterns.
    pub fn quality_report(&self) -> Vec<String> {
        let mut notes = Vec::new();
        for (pattern, points) in &self.entries {
            let name = pattern_to_string(pattern);
            if points.len() < 2 {
                notes.push(format!(
                    "pattern {name}: only {} Es/N0 point(s)",
                    points.len()
                ));
            }
            for w in points.windows(2) {
                if w[1].1 > w[0].1 {
                    notes.push(format!(
                        "pattern {name}: FER rises from {} to {} between {} and {} dB",
                        w[0].1.to_f64(),
                        w[1].1.to_f64(),
                        w[0].0.to_f64(),
                        w[1].0.to_f64()
                    ));
                }
            }
        }
        notes
    }

    /// Builds a table from the margin model itself: for each pattern and
    /// grid point, FER = Q(slope · (ΣMI/k − (1 + margin))).
    pub fn synthesized(
        code: &CodeSpec,
        symbols_per_burst: usize,
        margin: F,
        slope: F,
        patterns: &[Vec<usize>],
        esn0_grid_db: &[F],
    ) -> Self {
        let mut table = FerTable::new(code.code_id.clone());
        for pattern in patterns {
            for &esn0_db in esn0_grid_db {
                let fer = synth_block_fer(code, symbols_per_burst, pattern, esn0_db, margin, slope);
                table.insert(pattern.clone(), esn0_db, fer).unwrap();
            }
        }
        table
    }
}

/// Margin-model FER for one pattern at one Es/N0 point.
pub fn synth_block_fer<F: Real>(
    code: &CodeSpec,
    symbols_per_burst: usize,
    degrees: &[usize],
    esn0_db: F,
    margin: F,
    slope: F,
) -> F {
    let rho = SnrPoint { esn0_db }.esn0_linear();
    let total = pattern_sum_mi(
        degrees,
        code.erasure_degree_threshold,
        symbols_per_burst,
        rho,
    );
    let k = F::from_f64_lossy(code.info_bits as f64);
    let x = total / k - (F::one() + margin);
    q_function(slope * x)
        .max(F::from_f64_lossy(FER_FLOOR))
        .min(F::one())
}

/// Recovers the decoding margin implied by a table: for each pattern whose
/// FER curve crosses 1/2, the margin estimate is ΣMI/k − 1 at the
/// crossing; the fit averages the estimates. Patterns that never cross
/// (always good or always hopeless in the tabulated span) are skipped.
pub fn fit_margin<F: Real>(
    table: &FerTable<F>,
    code: &CodeSpec,
    symbols_per_burst: usize,
) -> Result<F> {
    let half = F::from_f64_lossy(0.5);
    let mut estimates = Vec::new();
    for pattern in table.patterns() {
        let points = table.points(&pattern).unwrap();
        if points.len() < 2 {
            continue;
        }
        let (mut lo, mut hi) = (points.first().unwrap().0, points.last().unwrap().0);
        let f_lo = table.lookup(&pattern, lo).unwrap();
        let f_hi = table.lookup(&pattern, hi).unwrap();
        if !(f_lo > half && f_hi < half) {
            continue;
        }
        for _ in 0..60 {
            let mid = (lo + hi) / F::from_f64_lossy(2.0);
            if table.lookup(&pattern, mid).unwrap() > half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let esn0_half = (lo + hi) / F::from_f64_lossy(2.0);
        let rho = SnrPoint { esn0_db: esn0_half }.esn0_linear();
        let total = pattern_sum_mi(
            &pattern,
            code.erasure_degree_threshold,
            symbols_per_burst,
            rho,
        );
        estimates.push(total / F::from_f64_lossy(code.info_bits as f64) - F::one());
    }
    if estimates.is_empty() {
        return Err(Error::input(
            "no pattern in the table crosses FER = 1/2; cannot fit a margin",
        ));
    }
    let n = F::from_f64_lossy(estimates.len() as f64);
    Ok(estimates.into_iter().sum::<F>() / n)
}

/// How block decode success is judged from interference degrees.
#[derive(Debug, Clone)]
pub enum PhyModel<F: Real> {
    /// Collided bursts are lost outright; noise is ignored. Replicas
    /// succeed iff one replica is clean, fragment blocks iff every
    /// fragment is clean.
    CollisionErasure,
    /// Success probability from a measured (or synthesized) FER table;
    /// uncovered patterns fall back to the margin rule.
    DegreeFerTable {
        table: Arc<FerTable<F>>,
        fallback_margin: F,
        warned: Arc<Mutex<HashSet<Vec<usize>>>>,
    },
    /// Hard threshold: decode iff ΣMI ≥ (1 + margin) · k.
    SinrMi { margin: F },
}

/// Calibrated margin for the rate-1/6 model code: the fragment scheme
/// peaks near T ≈ 1.3 on 100 slots at 10 dB and supports about 80 users
/// at 0 dB, while a lone clean replica of the rate-1/2 packet still
/// needs a few dB. Raising it shifts every decode cliff up in SNR.
pub const DEFAULT_MARGIN: f64 = 0.3;
/// Steepness of the synthesized FER waterfall region.
pub const DEFAULT_SLOPE: f64 = 20.0;

impl<F: Real> PhyModel<F> {
    pub fn collision_erasure() -> Self {
        PhyModel::CollisionErasure
    }

    pub fn sinr_mi(margin: F) -> Self {
        PhyModel::SinrMi { margin }
    }

    pub fn degree_fer_table(table: FerTable<F>, fallback_margin: F) -> Self {
        PhyModel::DegreeFerTable {
            table: Arc::new(table),
            fallback_margin,
            warned: Arc::new(Mutex::new(HashSet::new())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhyModel::CollisionErasure => "collision-erasure",
            PhyModel::DegreeFerTable { .. } => "degree-fer-table",
            PhyModel::SinrMi { .. } => "sinr-mi",
        }
    }

    /// Whether decode outcomes are 0/1 for a given pattern (no Bernoulli
    /// draw needed).
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PhyModel::DegreeFerTable { .. })
    }

    /// Probability that a block with burst interference counts `degrees`
    /// decodes. `symbols_per_burst` is the payload symbol count of one
    /// burst; for replicas every burst independently carries the whole
    /// block, for fragments the bursts jointly carry one codeword.
    pub fn decode_prob(
        &self,
        kind: BurstKind,
        code: &CodeSpec,
        symbols_per_burst: usize,
        degrees: &[usize],
        esn0_db: F,
    ) -> F {
        match self {
            PhyModel::CollisionErasure => {
                let ok = match kind {
                    BurstKind::Replicas => degrees.contains(&0),
                    BurstKind::Fragments => degrees.iter().all(|&d| d == 0),
                };
                if ok {
                    F::one()
                } else {
                    F::zero()
                }
            }
            PhyModel::SinrMi { margin } => {
                if margin_rule_decodes(kind, code, symbols_per_burst, degrees, esn0_db, *margin) {
                    F::one()
                } else {
                    F::zero()
                }
            }
            PhyModel::DegreeFerTable {
                table,
                fallback_margin,
                warned,
            } => {
                let thr = code.erasure_degree_threshold;
                match kind {
                    BurstKind::Fragments => {
                        let pattern = canonical_pattern(degrees, thr);
                        match table.lookup(&pattern, esn0_db) {
                            Some(fer) => F::one() - fer,
                            None => {
                                warn_once(warned, &pattern, &table.code_id);
                                if margin_rule_decodes(
                                    kind,
                                    code,
                                    symbols_per_burst,
                                    degrees,
                                    esn0_db,
                                    *fallback_margin,
                                ) {
                                    F::one()
                                } else {
                                    F::zero()
                                }
                            }
                        }
                    }
                    BurstKind::Replicas => {
                        // Replicas are independent tries of the whole
                        // block; the block fails only if every usable
                        // replica fails.
                        let mut p_all_fail = F::one();
                        for &d in degrees {
                            if d > thr {
                                continue;
                            }
                            let p_ok = match table.lookup(&[d], esn0_db) {
                                Some(fer) => F::one() - fer,
                                None => {
                                    warn_once(warned, &[d], &table.code_id);
                                    if margin_rule_decodes(
                                        kind,
                                        code,
                                        symbols_per_burst,
                                        &[d],
                                        esn0_db,
                                        *fallback_margin,
                                    ) {
                                        F::one()
                                    } else {
                                        F::zero()
                                    }
                                }
                            };
                            p_all_fail *= F::one() - p_ok;
                        }
                        F::one() - p_all_fail
                    }
                }
            }
        }
    }
}

fn warn_once(warned: &Mutex<HashSet<Vec<usize>>>, pattern: &[usize], code_id: &str) {
    let mut seen = warned.lock().unwrap();
    if seen.insert(pattern.to_vec()) {
        log::warn!(
            "FER table for {code_id} has no pattern {}; using margin-rule fallback",
            pattern_to_string(pattern)
        );
    }
}

/// Hard MI-threshold decision. For fragments the usable bursts pool their
/// mutual information toward the one codeword; replicas stand alone, so
/// the best single replica decides.
pub fn margin_rule_decodes<F: Real>(
    kind: BurstKind,
    code: &CodeSpec,
    symbols_per_burst: usize,
    degrees: &[usize],
    esn0_db: F,
    margin: F,
) -> bool {
    let rho = SnrPoint { esn0_db }.esn0_linear();
    let thr = code.erasure_degree_threshold;
    let k = F::from_f64_lossy(code.info_bits as f64);
    let needed = (F::one() + margin) * k;
    let spb = F::from_f64_lossy(symbols_per_burst as f64);
    match kind {
        BurstKind::Fragments => pattern_sum_mi(degrees, thr, symbols_per_burst, rho) >= needed,
        BurstKind::Replicas => degrees
            .iter()
            .filter(|&&d| d <= thr)
            .any(|&d| spb * mi_per_symbol_qpsk(burst_sinr(rho, d)) >= needed),
    }
}

/// Patterns covered by the shipped tables: the uniform fragment patterns
/// up to the erasure threshold, plus the single-burst patterns used for
/// replica transmissions.
pub fn default_table_patterns(n_b: usize, threshold: usize) -> Vec<Vec<usize>> {
    let mut patterns = Vec::new();
    for d in 0..=threshold {
        patterns.push(vec![d; n_b]);
    }
    for d in 0..=threshold {
        patterns.push(vec![d]);
    }
    patterns
}

/// Default Es/N0 grid for synthesized tables: −6 dB to 12 dB in 0.5 dB
/// steps.
pub fn default_esn0_grid<F: Real>() -> Vec<F> {
    (0..=36)
        .map(|i| F::from_f64_lossy(-6.0 + 0.5 * i as f64))
        .collect()
}
