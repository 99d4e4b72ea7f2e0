//! Disjoint-set forest with path halving.

#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "too many elements for a u32 forest");
        DisjointSet {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Attaches the root `child` below `root`. Both must be roots.
    pub fn attach(&mut self, child: usize, root: usize) {
        debug_assert_eq!(self.parent[child] as usize, child);
        debug_assert_eq!(self.parent[root] as usize, root);
        self.parent[child] = root as u32;
    }

    pub fn is_root(&self, x: usize) -> bool {
        self.parent[x] as usize == x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attach_and_find() {
        let mut ds = DisjointSet::new(5);
        ds.attach(1, 0);
        ds.attach(2, 0);
        ds.attach(4, 3);
        assert_eq!(ds.find(2), 0);
        assert_eq!(ds.find(1), 0);
        assert_eq!(ds.find(4), 3);
        assert!(ds.is_root(3));
        assert!(!ds.is_root(4));
    }
}
