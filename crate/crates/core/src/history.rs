//! Time-indexed ring of plate snapshots spanning the delay horizon.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::PlateField;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: PlateField,
    pub v: PlateField,
}

/// Ordered snapshots with strictly increasing times at a uniform step.
///
/// Entries older than `latest - keep_span` are evicted on append, where
/// `keep_span` must be at least `t* + 2*dt` for delayed-closure runs so a
/// restart can rebuild its previous right-hand side.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    snapshots: VecDeque<Snapshot>,
    dt: f64,
    keep_span: f64,
}

impl HistoryBuffer {
    pub fn new(dt: f64, keep_span: f64) -> HistoryBuffer {
        assert!(dt > 0.0, "history step must be positive");
        HistoryBuffer {
            snapshots: VecDeque::new(),
            dt,
            keep_span: keep_span.max(2.0 * dt),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn keep_span(&self) -> f64 {
        self.keep_span
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn earliest(&self) -> Option<f64> {
        self.snapshots.front().map(|s| s.t)
    }

    pub fn latest(&self) -> Option<f64> {
        self.snapshots.back().map(|s| s.t)
    }

    /// Covered interval length.
    pub fn span(&self) -> f64 {
        match (self.earliest(), self.latest()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter()
    }

    /// Append a snapshot, evicting entries older than the retained window.
    pub fn push(&mut self, t: f64, u: PlateField, v: PlateField) {
        if let Some(last) = self.latest() {
            let step = t - last;
            assert!(
                (step - self.dt).abs() <= 1e-9 * self.dt.max(1.0),
                "history requires a uniform step: got {step}, expected {}",
                self.dt
            );
        }
        self.snapshots.push_back(Snapshot { t, u, v });
        let cutoff = t - self.keep_span - 0.5 * self.dt;
        while matches!(self.snapshots.front(), Some(s) if s.t < cutoff) {
            self.snapshots.pop_front();
        }
    }

    pub fn covers(&self, from: f64, to: f64) -> bool {
        let eps = 1e-9 * self.dt.max(1.0);
        match (self.earliest(), self.latest()) {
            (Some(a), Some(b)) => a <= from + eps && b >= to - eps,
            _ => false,
        }
    }

    /// Snapshot exactly at time `t` if one exists.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        let eps = 1e-9 * self.dt.max(1.0);
        self.snapshots.iter().find(|s| (s.t - t).abs() <= eps)
    }

    /// Displacement at time `t`, linearly interpolated between snapshots.
    pub fn sample_u(&self, t: f64) -> Result<PlateField> {
        let eps = 1e-9 * self.dt.max(1.0);
        let (a, b) = match (self.earliest(), self.latest()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::HistoryUnderflow {
                    t,
                    needed_from: t,
                    have_from: f64::NAN,
                })
            }
        };
        if t < a - eps || t > b + eps {
            return Err(Error::HistoryUnderflow {
                t,
                needed_from: t,
                have_from: a,
            });
        }
        let tc = t.clamp(a, b);
        let pos = (tc - a) / self.dt;
        let k = (pos.floor() as usize).min(self.snapshots.len() - 1);
        let frac = pos - k as f64;
        if frac <= 1e-12 || k + 1 >= self.snapshots.len() {
            return Ok(self.snapshots[k].u.clone());
        }
        let lo = &self.snapshots[k].u;
        let hi = &self.snapshots[k + 1].u;
        lo.scale(1.0 - frac).axpy(frac, hi)
    }
}
