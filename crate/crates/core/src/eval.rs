//! Per-axis pose errors against ground truth, averaged per tube class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, tilt_from_axis, RigidTransform};

/// A tube pose tagged with its identity. Estimates without a slot were not
/// placed and count as missed.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub slot_index: Option<usize>,
    pub class_id: String,
    pub pose: RigidTransform,
}

/// Errors of one tube: rotations in degrees, translations in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeError {
    pub slot_index: usize,
    pub class_id: String,
    pub rx: f64,
    pub ry: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_id: String,
    pub count: usize,
    pub rx: f64,
    pub ry: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub tubes: Vec<TubeError>,
    /// Class means, ordered by class id.
    pub classes: Vec<ClassSummary>,
    /// Ground-truth tubes with no matching estimate.
    pub missed: usize,
}

/// Tilt angles (x then y) of a pose's z axis.
fn euler_xy(pose: &RigidTransform) -> (f64, f64) {
    let t = tilt_from_axis(&(pose.rotation * Vector3::z()));
    (t.alpha(), t.beta())
}

/// Absolute per-axis errors of `estimate` against `truth`.
pub fn pose_error(estimate: &RigidTransform, truth: &RigidTransform) -> [f64; 5] {
    let (ae, be) = euler_xy(estimate);
    let (at, bt) = euler_xy(truth);
    let dt = estimate.translation - truth.translation;
    [
        normalize_angle(ae - at).abs().to_degrees(),
        normalize_angle(be - bt).abs().to_degrees(),
        dt.x.abs() * 1e3,
        dt.y.abs() * 1e3,
        dt.z.abs() * 1e3,
    ]
}

/// Matches estimates to ground truth by slot index and measures each pair.
///
/// Errors with `IdentityMismatch` when two records share a slot or an
/// estimate names a slot absent from the ground truth.
pub fn evaluate_errors(estimates: &[PoseRecord], truth: &[PoseRecord]) -> Result<ErrorReport> {
    let mut by_slot: BTreeMap<usize, &PoseRecord> = BTreeMap::new();
    for t in truth {
        let slot = t
            .slot_index
            .ok_or_else(|| Error::IdentityMismatch("ground-truth tube without a slot".into()))?;
        if by_slot.insert(slot, t).is_some() {
            return Err(Error::IdentityMismatch(format!("slot {slot} appears twice in ground truth")));
        }
    }
    let mut seen = BTreeMap::new();
    let mut tubes = Vec::new();
    for e in estimates {
        let Some(slot) = e.slot_index else { continue };
        let t = by_slot
            .get(&slot)
            .ok_or_else(|| Error::IdentityMismatch(format!("estimate for slot {slot} has no ground truth")))?;
        if seen.insert(slot, ()).is_some() {
            return Err(Error::IdentityMismatch(format!("slot {slot} estimated twice")));
        }
        if e.class_id != t.class_id {
            return Err(Error::IdentityMismatch(format!(
                "slot {slot}: estimate class `{}` vs ground truth `{}`",
                e.class_id, t.class_id
            )));
        }
        let [rx, ry, tx, ty, tz] = pose_error(&e.pose, &t.pose);
        tubes.push(TubeError {
            slot_index: slot,
            class_id: t.class_id.clone(),
            rx,
            ry,
            tx,
            ty,
            tz,
        });
    }
    let missed = truth.len() - tubes.len();
    Ok(ErrorReport::from_errors(tubes, missed))
}

impl ErrorReport {
    pub fn from_errors(tubes: Vec<TubeError>, missed: usize) -> Self {
        let mut groups: BTreeMap<&str, Vec<&TubeError>> = BTreeMap::new();
        for t in &tubes {
            groups.entry(t.class_id.as_str()).or_default().push(t);
        }
        let classes = groups
            .into_iter()
            .map(|(class_id, members)| summarize(class_id, &members))
            .collect();
        Self {
            tubes,
            classes,
            missed,
        }
    }

    /// Pools several reports (e.g. one per trial) into one.
    pub fn combine(reports: impl IntoIterator<Item = ErrorReport>) -> Self {
        let mut tubes = Vec::new();
        let mut missed = 0;
        for r in reports {
            tubes.extend(r.tubes);
            missed += r.missed;
        }
        Self::from_errors(tubes, missed)
    }

    /// Means over every tube regardless of class.
    pub fn overall(&self) -> ClassSummary {
        summarize("all", &self.tubes.iter().collect::<Vec<_>>())
    }

    pub fn class(&self, class_id: &str) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    /// Plain-text table: one row per class plus an overall row.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "class", "n", "Rx(deg)", "Ry(deg)", "Tx(mm)", "Ty(mm)", "Tz(mm)"
        );
        let mut row = |c: &ClassSummary| {
            let _ = writeln!(
                s,
                "{:<10} {:>5} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                c.class_id, c.count, c.rx, c.ry, c.tx, c.ty, c.tz
            );
        };
        for c in &self.classes {
            row(c);
        }
        if self.classes.len() > 1 {
            row(&self.overall());
        }
        if self.missed > 0 {
            let _ = writeln!(s, "missed: {}", self.missed);
        }
        s
    }
}

fn summarize(class_id: &str, members: &[&TubeError]) -> ClassSummary {
    let n = members.len();
    let mean = |f: fn(&TubeError) -> f64| {
        if n == 0 {
            0.0
        } else {
            members.iter().map(|t| f(t)).sum::<f64>() / n as f64
        }
    };
    ClassSummary {
        class_id: class_id.to_string(),
        count: n,
        rx: mean(|t| t.rx),
        ry: mean(|t| t.ry),
        tx: mean(|t| t.tx),
        ty: mean(|t| t.ty),
        tz: mean(|t| t.tz),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TiltAngles;
    use crate::tube::assemble_pose;
    use nalgebra::Point3;

    fn rec(slot: usize, class: &str, a: f64, b: f64, o: [f64; 3]) -> PoseRecord {
        PoseRecord {
            slot_index: Some(slot),
            class_id: class.into(),
            pose: assemble_pose(TiltAngles::from_degrees(a, b), &Point3::new(o[0], o[1], o[2])),
        }
    }

    #[test]
    fn identical_poses_have_zero_error() {
        let truth = vec![rec(0, "a", 3.0, -2.0, [0.1, 0.2, 0.0]), rec(5, "b", 0.0, 1.0, [0.0; 3])];
        let r = evaluate_errors(&truth, &truth).unwrap();
        assert_eq!(r.tubes.len(), 2);
        for t in &r.tubes {
            assert!(t.rx < 1e-12 && t.ry < 1e-12 && t.tx == 0.0 && t.ty == 0.0 && t.tz == 0.0);
        }
        assert_eq!(r.missed, 0);
    }

    #[test]
    fn alpha_offset_shows_in_rx_only() {
        let truth = vec![rec(0, "a", 2.0, 3.0, [0.0; 3])];
        let est = vec![rec(0, "a", 3.0, 3.0, [0.0; 3])];
        let t = &evaluate_errors(&est, &truth).unwrap().tubes[0];
        assert!((t.rx - 1.0).abs() < 1e-9, "{}", t.rx);
        assert!(t.ry < 1e-9);
        assert_eq!([t.tx, t.ty, t.tz], [0.0; 3]);
    }

    #[test]
    fn translation_in_millimetres() {
        let truth = vec![rec(0, "a", 0.0, 0.0, [0.0; 3])];
        let est = vec![rec(0, "a", 0.0, 0.0, [0.001, -0.002, 0.0005])];
        let t = &evaluate_errors(&est, &truth).unwrap().tubes[0];
        assert!((t.tx - 1.0).abs() < 1e-9 && (t.ty - 2.0).abs() < 1e-9 && (t.tz - 0.5).abs() < 1e-9);
    }

    #[test]
    fn relabeling_does_not_change_report() {
        let truth = vec![rec(0, "a", 1.0, 0.0, [0.0; 3]), rec(1, "a", 0.0, 2.0, [0.0; 3])];
        let est = vec![rec(0, "a", 1.5, 0.0, [0.0; 3]), rec(1, "a", 0.0, 1.0, [0.0; 3])];
        let a = evaluate_errors(&est, &truth).unwrap();
        let rev_est: Vec<_> = est.iter().rev().cloned().collect();
        let rev_truth: Vec<_> = truth.iter().rev().cloned().collect();
        let b = evaluate_errors(&rev_est, &rev_truth).unwrap();
        assert_eq!(a.classes, b.classes);
    }

    #[test]
    fn identity_mismatches() {
        let truth = vec![rec(0, "a", 0.0, 0.0, [0.0; 3])];
        assert!(matches!(
            evaluate_errors(&[rec(1, "a", 0.0, 0.0, [0.0; 3])], &truth),
            Err(Error::IdentityMismatch(_))
        ));
        assert!(matches!(
            evaluate_errors(&[rec(0, "b", 0.0, 0.0, [0.0; 3])], &truth),
            Err(Error::IdentityMismatch(_))
        ));
        let dup = vec![rec(0, "a", 0.0, 0.0, [0.0; 3]), rec(0, "a", 0.0, 0.0, [0.0; 3])];
        assert!(evaluate_errors(&dup, &truth).is_err());
        assert!(evaluate_errors(&truth, &dup).is_err());
    }

    #[test]
    fn unplaced_estimates_count_as_missed() {
        let truth = vec![rec(0, "a", 0.0, 0.0, [0.0; 3]), rec(1, "a", 0.0, 0.0, [0.0; 3])];
        let mut est = truth.clone();
        est[1].slot_index = None;
        let r = evaluate_errors(&est, &truth).unwrap();
        assert_eq!((r.tubes.len(), r.missed), (1, 1));
    }

    #[test]
    fn class_means_and_table() {
        let truth = vec![
            rec(0, "a", 0.0, 0.0, [0.0; 3]),
            rec(1, "a", 0.0, 0.0, [0.0; 3]),
            rec(2, "b", 0.0, 0.0, [0.0; 3]),
        ];
        let est = vec![
            rec(0, "a", 1.0, 0.0, [0.0; 3]),
            rec(1, "a", 3.0, 0.0, [0.0; 3]),
            rec(2, "b", 0.0, 4.0, [0.0; 3]),
        ];
        let r = evaluate_errors(&est, &truth).unwrap();
        assert!((r.class("a").unwrap().rx - 2.0).abs() < 1e-9);
        assert!((r.class("b").unwrap().ry - 4.0).abs() < 1e-9);
        let table = r.to_table();
        assert_eq!(table.lines().count(), 4);
        assert!(table.contains("Rx(deg)"));
        let single = evaluate_errors(&est[2..], &truth[2..]).unwrap();
        assert_eq!(single.to_table().lines().count(), 2);
    }
}
