//! Connected-component labeling and region statistics for binary masks.
//!
//! Labeling is the classic two-pass algorithm: the first raster scan assigns
//! provisional labels from already-visited neighbors and records label
//! equivalences in a union-find forest; the second scan resolves each pixel
//! to its representative. Final labels are renumbered to `1..=count` in
//! order of first appearance in raster order, with 0 reserved for
//! background.

use crate::raster::BinaryImage;

/// Neighborhood used to decide whether two foreground pixels touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Edge-adjacent neighbors only (N, S, E, W).
    Four,
    /// Edge- and corner-adjacent neighbors.
    #[default]
    Eight,
}

/// Result of labeling: one `u32` per pixel, 0 for background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of connected components (labels run `1..=count`).
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Pixel count per label; index 0 counts background.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count as usize + 1];
        for &label in &self.labels {
            sizes[label as usize] += 1;
        }
        sizes
    }

    /// Mask selecting exactly the pixels carrying `label`.
    pub fn component_mask(&self, label: u32) -> BinaryImage {
        let mut mask = BinaryImage::zeros(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) == label {
                    mask.set(x, y, 1);
                }
            }
        }
        mask
    }
}

/// Union-find forest over provisional labels with path compression.
struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new() -> Self {
        // index 0 is the background placeholder so labels index directly
        Self { parent: vec![0] }
    }

    fn make_set(&mut self) -> u32 {
        let label = self.parent.len() as u32;
        self.parent.push(label);
        label
    }

    fn find(&mut self, label: u32) -> u32 {
        let mut root = label;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // compress the walked path
        let mut cur = label;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Merges the two sets, keeping the smaller root as representative.
    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
    }
}

/// Labels the connected components of `mask`.
pub fn label_components(mask: &BinaryImage, connectivity: Connectivity) -> LabelMap {
    let width = mask.width();
    let height = mask.height();
    let mut provisional = vec![0u32; width * height];
    let mut sets = DisjointSets::new();

    // Offsets of neighbors already visited in raster order.
    let neighbors: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(0, -1), (-1, 0)],
        Connectivity::Eight => &[(-1, -1), (0, -1), (1, -1), (-1, 0)],
    };

    for y in 0..height {
        for x in 0..width {
            if mask.get(x, y) == 0 {
                continue;
            }
            let mut best = u32::MAX;
            for &(dx, dy) in neighbors {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                    continue;
                }
                let neighbor = provisional[ny as usize * width + nx as usize];
                if neighbor != 0 && neighbor < best {
                    best = neighbor;
                }
            }
            let label = if best == u32::MAX {
                sets.make_set()
            } else {
                // adopt the minimum neighbor label and merge the rest
                for &(dx, dy) in neighbors {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                        continue;
                    }
                    let neighbor = provisional[ny as usize * width + nx as usize];
                    if neighbor != 0 {
                        sets.union(best, neighbor);
                    }
                }
                best
            };
            provisional[y * width + x] = label;
        }
    }

    // Second pass: resolve to representatives and renumber contiguously in
    // order of first raster appearance.
    let mut remap = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    let mut labels = vec![0u32; width * height];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = sets.find(p) as usize;
        if remap[root] == 0 {
            count += 1;
            remap[root] = count;
        }
        labels[i] = remap[root];
    }

    LabelMap {
        width,
        height,
        labels,
        count,
    }
}

/// Mask of the component with the most pixels, or `None` when the map has
/// no foreground. Ties go to the smaller label (earlier first appearance).
pub fn largest_component(map: &LabelMap) -> Option<BinaryImage> {
    if map.count == 0 {
        return None;
    }
    let sizes = map.component_sizes();
    let best = (1..=map.count)
        .max_by_key(|&label| (sizes[label as usize], std::cmp::Reverse(label)))
        .expect("count >= 1");
    Some(map.component_mask(best))
}

/// Centroid of the foreground, weighting each pixel by its mask value:
/// `(sum(x) / n, sum(y) / n)` over foreground pixels. `None` for an empty
/// mask.
pub fn centroid(mask: &BinaryImage) -> Option<(f64, f64)> {
    let mut sum_x = 0u64;
    let mut sum_y = 0u64;
    let mut n = 0u64;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) == 1 {
                sum_x += x as u64;
                sum_y += y as u64;
                n += 1;
            }
        }
    }
    if n == 0 {
        None
    } else {
        Some((sum_x as f64 / n as f64, sum_y as f64 / n as f64))
    }
}
