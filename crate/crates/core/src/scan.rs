//! Frequency-scan processing: background normalization, resonance
//! detection with per-dip Lorentzian fits, and free-spectral-range
//! grouping into mode orders.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::models::{fit_lorentzian, LorentzianFit};
use crate::stats::{median, robust_sigma};

/// A raw frequency scan of outcoupled counts with its metadata.
#[derive(Debug, Clone, Default)]
pub struct ScanMeta {
    pub integration_s: Option<f64>,
    pub gap_nm: Option<f64>,
    pub temperature_k: Option<f64>,
    pub power_uw: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RawScan {
    /// Strictly ascending frequency axis (GHz).
    pub freq_ghz: Vec<f64>,
    pub bus_counts: Option<Vec<f64>>,
    pub drop_counts: Option<Vec<f64>>,
    pub meta: ScanMeta,
}

impl RawScan {
    pub fn validate(&self) -> Result<()> {
        if self.freq_ghz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Axis("frequency axis must be strictly ascending"));
        }
        for counts in [&self.bus_counts, &self.drop_counts].into_iter().flatten() {
            if counts.len() != self.freq_ghz.len() {
                return Err(Error::Axis("counts length mismatch"));
            }
            if counts.iter().any(|&c| c < 0.0) {
                return Err(Error::Domain("counts must be >= 0"));
            }
        }
        if self.bus_counts.is_none() && self.drop_counts.is_none() {
            return Err(Error::Domain("scan carries no counts"));
        }
        Ok(())
    }

    /// The channel resonance detection runs on: bus when present.
    pub fn primary_counts(&self) -> &[f64] {
        self.bus_counts
            .as_deref()
            .or(self.drop_counts.as_deref())
            .expect("validated scan has counts")
    }
}

fn rolling_median(y: &[f64], half: usize, mask: Option<&[bool]>) -> Vec<f64> {
    let n = y.len();
    let mut out = Vec::with_capacity(n);
    let mut window = Vec::with_capacity(2 * half + 1);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        window.clear();
        for j in lo..hi {
            if mask.map_or(true, |m| !m[j]) {
                window.push(y[j]);
            }
        }
        if window.is_empty() {
            // the whole window is inside a dip; fall back to unmasked
            window.extend_from_slice(&y[lo..hi]);
        }
        out.push(median(&window));
    }
    out
}

/// Divide counts by a local background estimate: a rolling median over a
/// ±`window_half_width_ghz` window, recomputed after excluding detected
/// dip regions. Off resonance the output sits near one.
pub fn normalize_to_background(
    freq_ghz: &[f64],
    counts: &[f64],
    window_half_width_ghz: f64,
) -> Result<Vec<f64>> {
    if freq_ghz.len() != counts.len() || freq_ghz.len() < 3 {
        return Err(Error::Axis("need >= 3 samples"));
    }
    let spacing = (freq_ghz[freq_ghz.len() - 1] - freq_ghz[0]) / (freq_ghz.len() - 1) as f64;
    if window_half_width_ghz < spacing {
        return Err(Error::Domain("background window smaller than grid spacing"));
    }
    let half = (window_half_width_ghz / spacing).round() as usize;

    // pass 1: provisional background, pass 2: exclude dip regions
    let bg0 = rolling_median(counts, half, None);
    let ratio: Vec<f64> = counts.iter().zip(&bg0).map(|(c, b)| c / b.max(1e-300)).collect();
    let noise = robust_sigma(&ratio).max(1e-6);
    let threshold = 1.0 - (5.0 * noise).max(0.02);
    let mut mask: Vec<bool> = ratio.iter().map(|&r| r < threshold).collect();
    // dilate the mask so dip shoulders stay out of the background
    let dil = (half / 8).max(2);
    let flagged: Vec<usize> =
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    for i in flagged {
        let lo = i.saturating_sub(dil);
        let hi = (i + dil + 1).min(mask.len());
        for m in &mut mask[lo..hi] {
            *m = true;
        }
    }
    let bg = rolling_median(counts, half, Some(&mask));
    Ok(counts.iter().zip(&bg).map(|(c, b)| c / b.max(1e-300)).collect())
}

/// One detected resonance.
#[derive(Debug, Clone)]
pub struct Resonance {
    pub center_ghz: f64,
    pub kappa_ghz: f64,
    pub q: f64,
    /// Fractional dip depth ΔT.
    pub delta_t: f64,
    /// Mode-order label from FSR grouping; None when unassigned.
    pub order: Option<u8>,
}

/// Detected resonances, centers ascending.
#[derive(Debug, Clone, Default)]
pub struct ResonanceTable {
    pub rows: Vec<Resonance>,
}

fn local_minima(values: &[f64], prominence: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    for i in 1..n - 1 {
        if values[i] <= values[i - 1]
            && values[i] < values[i + 1]
            && 1.0 - values[i] >= prominence
        {
            // keep only the deepest sample of a flat-bottomed dip
            if out
                .last()
                .map_or(true, |&j: &usize| values[i] < values[j] || i - j > 3)
            {
                if let Some(&j) = out.last() {
                    if i - j <= 3 && values[i] < values[j] {
                        out.pop();
                    } else if i - j <= 3 {
                        continue;
                    }
                }
                out.push(i);
            }
        }
    }
    out
}

/// Greedy free-spectral-range comb assignment. Resonances whose centers
/// fit a common spacing (within 10%) share a label; labels count up from
/// zero in order of ascending FSR.
pub fn assign_mode_orders(centers: &[f64]) -> Vec<Option<u8>> {
    let n = centers.len();
    let mut labels: Vec<Option<u8>> = alloc::vec![None; n];
    if n < 3 {
        return labels;
    }
    // candidate FSRs: spacings between any near neighbors (up to 3 apart)
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n.min(i + 4) {
            candidates.push(centers[j] - centers[i]);
        }
    }
    candidates.retain(|&c| c > 0.0);
    candidates.sort_unstable_by(|a, b| a.total_cmp(b));

    let comb_members = |fsr: f64, start: f64, taken: &[bool]| -> Vec<usize> {
        let tol = 0.1 * fsr;
        let mut members = Vec::new();
        for (i, &c) in centers.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let k = ((c - start) / fsr).round();
            if (c - start - k * fsr).abs() <= tol {
                members.push(i);
            }
        }
        members
    };

    let mut taken = alloc::vec![false; n];
    let mut combs: Vec<(f64, Vec<usize>)> = Vec::new();
    for _label in 0..4u8 {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for &fsr in &candidates {
            for (i, &c) in centers.iter().enumerate() {
                if taken[i] {
                    continue;
                }
                let members = comb_members(fsr, c, &taken);
                if members.len() >= 3 {
                    let better = match &best {
                        None => true,
                        Some((bf, bm)) => {
                            members.len() > bm.len()
                                || (members.len() == bm.len() && fsr < *bf)
                        }
                    };
                    if better {
                        best = Some((fsr, members));
                    }
                }
            }
        }
        match best {
            Some((fsr, members)) => {
                for &i in &members {
                    taken[i] = true;
                }
                combs.push((fsr, members));
            }
            None => break,
        }
    }
    combs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (label, (_, members)) in combs.iter().enumerate() {
        for &i in members {
            labels[i] = Some(label as u8);
        }
    }
    labels
}

/// Detect dips in a normalized scan, Lorentzian-fit each in a local
/// window, and label mode orders by FSR grouping. Zero detections yield
/// an empty table.
pub fn detect_resonances(
    freq_ghz: &[f64],
    normalized: &[f64],
    prominence: f64,
) -> Result<ResonanceTable> {
    if freq_ghz.len() != normalized.len() || freq_ghz.len() < 5 {
        return Err(Error::Axis("need >= 5 samples"));
    }
    if !(prominence > 0.0) {
        return Err(Error::Domain("prominence must be > 0"));
    }
    let minima = local_minima(normalized, prominence);
    let mut rows = Vec::new();
    for &i in &minima {
        // window: out to where the dip has recovered, at least 8 samples
        let depth = 1.0 - normalized[i];
        let recovered = |v: f64| 1.0 - v < 0.25 * depth;
        let mut lo = i;
        while lo > 0 && i - lo < freq_ghz.len() / 2 && !recovered(normalized[lo]) {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < freq_ghz.len() && hi - i < freq_ghz.len() / 2 && !recovered(normalized[hi]) {
            hi += 1;
        }
        let pad = 3 * (hi - lo).max(4);
        let lo = i.saturating_sub(pad);
        let hi = (i + pad + 1).min(freq_ghz.len());
        match fit_lorentzian(&freq_ghz[lo..hi], &normalized[lo..hi], None) {
            Ok(LorentzianFit { degenerate: true, .. }) => continue,
            Ok(fit) if fit.converged && fit.depth > 0.0 && fit.fwhm > 0.0 => {
                rows.push(Resonance {
                    center_ghz: fit.center,
                    kappa_ghz: fit.fwhm,
                    q: fit.center / fit.fwhm,
                    delta_t: fit.depth,
                    order: None,
                });
            }
            _ => continue,
        }
    }
    rows.sort_by(|a, b| a.center_ghz.total_cmp(&b.center_ghz));
    rows.dedup_by(|a, b| (a.center_ghz - b.center_ghz).abs() < 0.5 * b.kappa_ghz);
    let centers: Vec<f64> = rows.iter().map(|r| r.center_ghz).collect();
    let labels = assign_mode_orders(&centers);
    for (row, label) in rows.iter_mut().zip(labels) {
        row.order = label;
    }
    Ok(ResonanceTable { rows })
}
