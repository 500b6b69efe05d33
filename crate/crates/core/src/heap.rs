//! Indexed binary max-heap with decrease-key.

use alloc::vec;
use alloc::vec::Vec;

const ABSENT: usize = usize::MAX;

/// Max-heap over the dense ids `0..n`, each carrying an `f64` key. Equal
/// keys pop in increasing id order. Keys must not be NaN.
#[derive(Debug, Clone)]
pub struct IndexedMaxHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
    keys: Vec<f64>,
}

impl IndexedMaxHeap {
    /// Heap holding every id `0..keys.len()`, built in linear time.
    pub fn from_keys(keys: Vec<f64>) -> Self {
        debug_assert!(keys.iter().all(|k| !k.is_nan()));
        let n = keys.len();
        let mut h = Self { heap: (0..n).collect(), pos: (0..n).collect(), keys };
        for i in (0..n / 2).rev() {
            h.sift_down(i);
        }
        h
    }

    /// Empty heap over ids `0..n`.
    pub fn with_capacity(n: usize) -> Self {
        Self { heap: Vec::with_capacity(n), pos: vec![ABSENT; n], keys: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.pos[id] != ABSENT
    }

    /// Current (or last) key of `id`.
    pub fn key(&self, id: usize) -> f64 {
        self.keys[id]
    }

    pub fn push(&mut self, id: usize, key: f64) {
        debug_assert!(!self.contains(id));
        self.keys[id] = key;
        self.pos[id] = self.heap.len();
        self.heap.push(id);
        self.sift_up(self.heap.len() - 1);
    }

    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&id| (id, self.keys[id]))
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top] = ABSENT;
        if last != top {
            self.heap[0] = last;
            self.pos[last] = 0;
            self.sift_down(0);
        }
        Some((top, self.keys[top]))
    }

    /// Lowers the key of a queued id. Panics in debug builds if the key
    /// would grow.
    pub fn decrease_key(&mut self, id: usize, key: f64) {
        debug_assert!(self.contains(id));
        debug_assert!(key <= self.keys[id]);
        self.keys[id] = key;
        self.sift_down(self.pos[id]);
    }

    #[inline]
    fn above(&self, a: usize, b: usize) -> bool {
        let (ka, kb) = (self.keys[a], self.keys[b]);
        ka > kb || (ka == kb && a < b)
    }

    fn sift_up(&mut self, mut i: usize) {
        let id = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !self.above(id, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p] = i;
            i = parent;
        }
        self.heap[i] = id;
        self.pos[id] = i;
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        let id = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && self.above(self.heap[right], self.heap[left]) { right } else { left };
            let c = self.heap[child];
            if !self.above(c, id) {
                break;
            }
            self.heap[i] = c;
            self.pos[c] = i;
            i = child;
        }
        self.heap[i] = id;
        self.pos[id] = i;
    }
}
