//! Error-rate statistics and throughput.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Transport-block duration: one slot at subcarrier spacing 15 kHz.
pub const T_TB_S: f64 = 1e-3;

/// Wilson score interval for `errors` out of `trials`.
pub fn wilson(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exact at the edges; rounding would leave ~1e-17 residue
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Aggregated theoretical throughput in bit/s: `J * N_TBS / T_TB * (1 - BLER)`.
pub fn att(bler: f64, tbs_bits: usize, t_tb_s: f64, users: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&bler) {
        return Err(Error::InvalidArgument(format!("BLER {bler} outside [0, 1]")));
    }
    if !(t_tb_s > 0.0) {
        return Err(Error::InvalidArgument("transport-block duration must be positive".into()));
    }
    Ok(users as f64 * tbs_bits as f64 / t_tb_s * (1.0 - bler))
}

/// A BLER curve sampled on an Eb/N0 grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ebn0_db: f64,
    pub bler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Eb/N0 at which a curve first falls to `target`, interpolating
/// `log10(BLER)` linearly in dB between grid points. `None` if the curve
/// never crosses the target on the grid.
pub fn ebn0_at(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lg = |b: f64| b.max(1e-12).log10();
    for w in pts.windows(2) {
        let ((x0, b0), (x1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 <= target {
            if b0 == b1 {
                return Some(x0);
            }
            let f = (lg(b0) - lg(target)) / (lg(b0) - lg(b1));
            return Some(x0 + f * (x1 - x0));
        }
    }
    None
}

/// Crossing of a curve and of its confidence band edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub ebn0_db: Option<f64>,
    /// Crossing of the lower CI edge (the most optimistic position).
    pub lo_db: Option<f64>,
    /// Crossing of the upper CI edge (the most pessimistic position).
    pub hi_db: Option<f64>,
}

pub fn crossing(curve: &[CurvePoint], target: f64) -> Crossing {
    let pick = |f: fn(&CurvePoint) -> f64| -> Option<f64> {
        ebn0_at(&curve.iter().map(|p| (p.ebn0_db, f(p))).collect::<Vec<_>>(), target)
    };
    Crossing {
        ebn0_db: pick(|p| p.bler),
        lo_db: pick(|p| p.ci_lo),
        hi_db: pick(|p| p.ci_hi),
    }
}

/// Eb/N0 gap of receiver `b` over receiver `a` at a target BLER; positive
/// means `a` needs less Eb/N0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub target_bler: f64,
    pub a: Crossing,
    pub b: Crossing,
    pub delta_db: Option<f64>,
    /// Conservative range from combining the band crossings.
    pub delta_lo_db: Option<f64>,
    pub delta_hi_db: Option<f64>,
}

pub fn delta_at(a: &[CurvePoint], b: &[CurvePoint], target: f64) -> DeltaReport {
    let (ca, cb) = (crossing(a, target), crossing(b, target));
    let diff = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| x - y);
    DeltaReport {
        target_bler: target,
        a: ca,
        b: cb,
        delta_db: diff(cb.ebn0_db, ca.ebn0_db),
        delta_lo_db: diff(cb.lo_db, ca.hi_db),
        delta_hi_db: diff(cb.hi_db, ca.lo_db),
    }
}
