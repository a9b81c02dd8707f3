use std::collections::BTreeMap;

use super::{OtssConfig, SliceWindow};
use crate::topology::LinkId;

/// Reservations of one directed link, all of length one slice and read
/// modulo the frame.
#[derive(Debug, Clone)]
pub struct LinkCalendar {
    pub link: LinkId,
    reservations: BTreeMap<usize, SliceWindow>,
    // (start, connection) sorted by start
    index: Vec<(f64, usize)>,
}

impl LinkCalendar {
    pub fn new(link: LinkId) -> Self {
        LinkCalendar {
            link,
            reservations: BTreeMap::new(),
            index: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.reservations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reservations.is_empty()
    }

    pub fn reservations(&self) -> &BTreeMap<usize, SliceWindow> {
        &self.reservations
    }

    pub fn window(&self, connection: usize) -> Option<&SliceWindow> {
        self.reservations.get(&connection)
    }

    /// Whether a one-slice window starting at `start` (in `[0, frame)`)
    /// overlaps no reservation. Windows that merely touch do not overlap.
    pub fn is_free(&self, start: f64, config: &OtssConfig) -> bool {
        if self.index.is_empty() {
            return true;
        }
        let frame = config.frame_s;
        let min_gap = config.slice_s - config.overlap_tolerance();
        let at = self.index.partition_point(|&(s, _)| s < start);
        let above = match self.index.get(at) {
            Some(&(s, _)) => s,
            None => self.index[0].0 + frame,
        };
        let below = if at > 0 {
            self.index[at - 1].0
        } else {
            self.index[self.index.len() - 1].0 - frame
        };
        above - start >= min_gap && start - below >= min_gap
    }

    pub(crate) fn insert(&mut self, connection: usize, window: SliceWindow) {
        let at = self.index.partition_point(|&(s, _)| s < window.start_s);
        self.index.insert(at, (window.start_s, connection));
        self.reservations.insert(connection, window);
    }

    pub(crate) fn remove(&mut self, connection: usize) -> Option<SliceWindow> {
        let window = self.reservations.remove(&connection)?;
        if let Some(pos) = self.index.iter().position(|&(_, c)| c == connection) {
            self.index.remove(pos);
        }
        Some(window)
    }

    /// Independent sweep: splits wrapping windows into two plain intervals,
    /// sorts everything and checks neighbours. Returns the first clashing
    /// connection pair.
    pub fn find_overlap(&self, config: &OtssConfig) -> Option<(usize, usize)> {
        let frame = config.frame_s;
        let tol = config.overlap_tolerance();
        let mut pieces: Vec<(f64, f64, usize)> = Vec::with_capacity(self.reservations.len() + 4);
        for (&c, w) in &self.reservations {
            let end = w.start_s + w.duration_s;
            // an end within tolerance of the frame edge does not wrap
            if end > frame + tol {
                pieces.push((w.start_s, frame, c));
                pieces.push((0.0, end - frame, c));
            } else {
                pieces.push((w.start_s, end.min(frame), c));
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        pieces
            .windows(2)
            .find(|p| p[1].0 < p[0].1 - tol)
            .map(|p| (p[0].2, p[1].2))
    }
}
