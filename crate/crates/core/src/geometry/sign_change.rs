use serde::{Deserialize, Serialize};

use super::curve::CTProfile;

/// Default threshold as a fraction of the largest lobe's turning angle.
pub const DEFAULT_THRESHOLD_REL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingDirection {
    PosToNeg,
    NegToPos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignChange {
    pub s_pos: f64,
    /// 1-based disk index.
    pub nearest_disk: usize,
    pub direction: CrossingDirection,
    /// Smaller of the two flanking lobe turning angles (rad).
    pub magnitude: f64,
}

/// Index (1-based) of the disk closest to `s`; ties go to the lower index.
pub fn nearest_disk(disk_s: &[f64], s: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, ds) in disk_s.iter().enumerate() {
        let d = (s - ds).abs();
        if d < best_d - 1e-9 {
            best = i;
            best_d = d;
        }
    }
    best + 1
}

/// A maximal run of same-sign torsion.
#[derive(Debug, Clone, Copy)]
struct Lobe {
    positive: bool,
    /// Osculating-plane turning angle, integral of |tau| ds past the cutoff (rad).
    turn: f64,
    /// Zero crossings where the lobe begins and ends (arc positions).
    start: f64,
    end: f64,
}

/// Integral of a linear function from (s0, a0) to (s1, a1) restricted to s >= cutoff.
fn clipped_area(s0: f64, a0: f64, s1: f64, a1: f64, cutoff: f64) -> f64 {
    if s1 <= cutoff || s1 <= s0 {
        return 0.0;
    }
    let (s0, a0) = if s0 < cutoff {
        (cutoff, a0 + (a1 - a0) * (cutoff - s0) / (s1 - s0))
    } else {
        (s0, a0)
    };
    0.5 * (a0 + a1) * (s1 - s0)
}

/// Splits the valid, nonzero part of the torsion channel into same-sign
/// lobes; turning angles only accumulate at arc positions `>= cutoff`.
fn lobes(profile: &CTProfile, cutoff: f64) -> Vec<Lobe> {
    let samples = profile
        .s
        .iter()
        .zip(&profile.tau)
        .zip(&profile.kappa_valid)
        .filter(|((_, t), ok)| **ok && **t != 0.0)
        .map(|((s, t), _)| (*s, *t));
    let mut out: Vec<Lobe> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (s, t) in samples {
        let positive = t > 0.0;
        match (out.last_mut(), prev) {
            (Some(lobe), Some((ps, pt))) if lobe.positive == positive => {
                lobe.turn += clipped_area(ps, pt.abs(), s, t.abs(), cutoff);
                lobe.end = s;
            }
            (Some(lobe), Some((ps, pt))) => {
                let c = ps + (s - ps) * pt / (pt - t);
                lobe.turn += clipped_area(ps, pt.abs(), c, 0.0, cutoff);
                lobe.end = c;
                out.push(Lobe {
                    positive,
                    turn: clipped_area(c, 0.0, s, t.abs(), cutoff),
                    start: c,
                    end: s,
                });
            }
            _ => out.push(Lobe {
                positive,
                turn: 0.0,
                start: s,
                end: s,
            }),
        }
        prev = Some((s, t));
    }
    out
}

fn cutoff(disk_s: &[f64]) -> f64 {
    disk_s.get(1).copied().unwrap_or(f64::NEG_INFINITY)
}

/// Zero crossings of torsion between significant lobes.
///
/// A lobe is measured by how far the osculating plane turns across it,
/// counting only arc positions from the second disk on (the clamped first
/// segment carries no usable torsion). Lobes whose turning angle does not
/// exceed `threshold` (rad) are dropped first, so small wiggles neither
/// create crossings nor split a genuine one. Each remaining pair of adjacent
/// opposite-sign lobes yields one crossing, placed midway across the gap
/// between them and mapped to the nearest disk. Crossings before the second
/// disk are ignored.
pub fn torsion_sign_changes(profile: &CTProfile, disk_s: &[f64], threshold: f64) -> Vec<SignChange> {
    let cut = cutoff(disk_s);
    let significant: Vec<Lobe> = lobes(profile, cut)
        .into_iter()
        .filter(|l| l.turn > threshold)
        .collect();
    significant
        .windows(2)
        .filter(|w| w[0].positive != w[1].positive)
        .map(|w| {
            let s_pos = 0.5 * (w[0].end + w[1].start);
            SignChange {
                s_pos,
                nearest_disk: nearest_disk(disk_s, s_pos),
                direction: if w[0].positive {
                    CrossingDirection::PosToNeg
                } else {
                    CrossingDirection::NegToPos
                },
                magnitude: w[0].turn.min(w[1].turn),
            }
        })
        .filter(|c| c.s_pos >= cut && c.magnitude > 0.0)
        .collect()
}

/// Threshold at `rel` times the largest lobe turning angle of the profile.
pub fn relative_threshold(profile: &CTProfile, disk_s: &[f64], rel: f64) -> f64 {
    rel * lobes(profile, cutoff(disk_s)).iter().fold(0.0_f64, |m, l| m.max(l.turn))
}
