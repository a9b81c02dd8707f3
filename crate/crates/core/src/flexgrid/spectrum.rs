use crate::topology::{LinkId, PathSpec};

/// Per-link slot occupancy. `owners` records which lightpath holds each
/// `(link, slot)`; `masks` mirrors it as bits for the first-fit scan.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    slots: usize,
    masks: Vec<u64>,
    owners: Vec<Option<usize>>,
}

impl SpectrumState {
    pub fn new(link_count: usize, slots: usize) -> Self {
        assert!((1..=64).contains(&slots), "1..=64 slots per link supported");
        SpectrumState {
            slots,
            masks: vec![0; link_count],
            owners: vec![None; link_count * slots],
        }
    }

    pub fn slots_per_link(&self) -> usize {
        self.slots
    }

    pub fn link_count(&self) -> usize {
        self.masks.len()
    }

    pub fn is_set(&self, link: LinkId, slot: usize) -> bool {
        self.masks[link.0] >> slot & 1 == 1
    }

    pub fn owner(&self, link: LinkId, slot: usize) -> Option<usize> {
        self.owners[link.0 * self.slots + slot]
    }

    pub fn occupied(&self, link: LinkId) -> u32 {
        self.masks[link.0].count_ones()
    }

    pub fn is_clear(&self) -> bool {
        self.masks.iter().all(|&m| m == 0) && self.owners.iter().all(Option::is_none)
    }

    /// Lowest slot free on every link of `route`.
    pub fn first_free_slot(&self, route: &PathSpec) -> Option<usize> {
        let used = route
            .links
            .iter()
            .fold(0u64, |acc, l| acc | self.masks[l.0]);
        let slot = (!used).trailing_zeros() as usize;
        (slot < self.slots).then_some(slot)
    }

    pub(crate) fn claim(&mut self, route: &PathSpec, slot: usize, lightpath: usize) {
        for l in &route.links {
            let cell = &mut self.owners[l.0 * self.slots + slot];
            assert!(cell.is_none(), "{l} slot {slot} already claimed");
            *cell = Some(lightpath);
            self.masks[l.0] |= 1 << slot;
        }
    }

    pub(crate) fn clear(&mut self, route: &PathSpec, slot: usize, lightpath: usize) {
        for l in &route.links {
            let cell = &mut self.owners[l.0 * self.slots + slot];
            assert_eq!(
                *cell,
                Some(lightpath),
                "{l} slot {slot} owned by another lightpath"
            );
            *cell = None;
            self.masks[l.0] &= !(1 << slot);
        }
    }
}
