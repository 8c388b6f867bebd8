use serde::{Deserialize, Serialize};

use super::{MadError, Result};

/// One operating point. `tau = None` is the virtual threshold below every
/// score, where everything is classified as an attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub tau: Option<f64>,
    pub apcer: f64,
    pub bpcer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetReport {
    pub d_eer: f64,
    pub bpcer_at_apcer5: f64,
    pub bpcer_at_apcer10: f64,
    pub attack_count: usize,
    pub bonafide_count: usize,
    pub det_curve: Vec<DetPoint>,
    pub warnings: Vec<String>,
}

/// APCER and BPCER at a single threshold. Scores above `tau` are classified as attacks.
pub fn error_rates(attack: &[f64], bonafide: &[f64], tau: f64) -> (f64, f64) {
    let apcer = attack.iter().filter(|&&s| s <= tau).count() as f64 / attack.len() as f64;
    let bpcer = bonafide.iter().filter(|&&s| s > tau).count() as f64 / bonafide.len() as f64;
    (apcer, bpcer)
}

/// DET curve over every distinct observed score.
pub fn det_curve(attack: &[f64], bonafide: &[f64]) -> Result<Vec<DetPoint>> {
    if attack.is_empty() || bonafide.is_empty() {
        return Err(MadError::EmptyScores);
    }
    if attack.iter().chain(bonafide).any(|s| !s.is_finite()) {
        return Err(MadError::Config("non-finite detection score".into()));
    }
    let mut a = attack.to_vec();
    let mut b = bonafide.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = a.iter().chain(&b).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut curve = Vec::with_capacity(grid.len() + 1);
    curve.push(DetPoint { tau: None, apcer: 0.0, bpcer: 1.0 });
    let (mut ia, mut ib) = (0, 0);
    for tau in grid {
        while ia < a.len() && a[ia] <= tau {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= tau {
            ib += 1;
        }
        curve.push(DetPoint {
            tau: Some(tau),
            apcer: ia as f64 / na,
            bpcer: (b.len() - ib) as f64 / nb,
        });
    }
    Ok(curve)
}

/// Error rate where APCER and BPCER cross, interpolated linearly between the
/// two grid points bracketing the sign change of `APCER - BPCER`.
pub fn d_eer(curve: &[DetPoint]) -> f64 {
    let i = curve
        .iter()
        .position(|p| p.apcer >= p.bpcer)
        .expect("the largest threshold has BPCER 0");
    let p1 = curve[i];
    let d1 = p1.apcer - p1.bpcer;
    if d1 == 0.0 || i == 0 {
        return p1.apcer;
    }
    let p0 = curve[i - 1];
    let d0 = p0.apcer - p0.bpcer;
    let t = -d0 / (d1 - d0);
    p0.apcer + t * (p1.apcer - p0.apcer)
}

/// BPCER at the largest threshold whose APCER does not exceed `target`.
pub fn bpcer_at_apcer(curve: &[DetPoint], target: f64) -> f64 {
    curve
        .iter()
        .rev()
        .find(|p| p.apcer <= target)
        .map_or(1.0, |p| p.bpcer)
}

pub fn compute_det(attack: &[f64], bonafide: &[f64]) -> Result<DetReport> {
    let curve = det_curve(attack, bonafide)?;
    let eer = d_eer(&curve);
    let mut warnings = Vec::new();
    if eer > 0.5 {
        let msg = format!(
            "D-EER {:.2}% exceeds 50%: scores may follow the inverse convention (higher must mean attack)",
            100.0 * eer
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(DetReport {
        d_eer: eer,
        bpcer_at_apcer5: bpcer_at_apcer(&curve, 0.05),
        bpcer_at_apcer10: bpcer_at_apcer(&curve, 0.10),
        attack_count: attack.len(),
        bonafide_count: bonafide.len(),
        det_curve: curve,
        warnings,
    })
}
