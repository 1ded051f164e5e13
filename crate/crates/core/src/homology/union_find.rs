use alloc::vec::Vec;

/// Disjoint sets that also keep the member list of every component, so the
/// merged component can be reported at each merge.
#[derive(Debug, Clone)]
pub(crate) struct Components {
    parent: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl Components {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            members: (0..n as u32).map(|v| alloc::vec![v]).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    /// Merges the components of `a` and `b`; returns the new root, or `None`
    /// if they were already connected.
    pub(crate) fn union(&mut self, a: u32, b: u32) -> Option<u32> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (keep, gone) = if self.members[ra as usize].len() >= self.members[rb as usize].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[gone as usize] = keep;
        let moved = core::mem::take(&mut self.members[gone as usize]);
        self.members[keep as usize].extend(moved);
        Some(keep)
    }

    pub(crate) fn members(&self, root: u32) -> &[u32] {
        &self.members[root as usize]
    }

    /// Roots in ascending order.
    pub(crate) fn roots(&mut self) -> Vec<u32> {
        let n = self.parent.len() as u32;
        (0..n).filter(|&v| self.find(v) == v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_members() {
        let mut c = Components::new(4);
        assert!(c.union(0, 1).is_some());
        assert!(c.union(1, 0).is_none());
        let r = c.union(2, 1).unwrap();
        let mut m = c.members(r).to_vec();
        m.sort();
        assert_eq!(m, [0, 1, 2]);
        assert_eq!(c.roots().len(), 2);
    }
}
