use serde::{Deserialize, Serialize};

use super::ModelError;

/// A partitionwise map: for each part `i`, a finite sequence of vertices of
/// `Omega_i`. The domain of part `i` is the position range `0..len`.
/// Repeats are allowed (samples are taken with replacement).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionwiseMap {
    images: Vec<Vec<usize>>,
}

impl PartitionwiseMap {
    /// Checks every image against `parts`.
    pub fn new(images: Vec<Vec<usize>>, parts: &[usize]) -> Result<Self, ModelError> {
        if images.len() != parts.len() {
            return Err(ModelError::PartCount {
                expected: parts.len(),
                got: images.len(),
            });
        }
        for (i, (img, &n)) in images.iter().zip(parts).enumerate() {
            if let Some(&v) = img.iter().find(|&&v| v >= n) {
                return Err(ModelError::VertexOutOfRange {
                    part: i,
                    vertex: v,
                    size: n,
                });
            }
        }
        Ok(PartitionwiseMap { images })
    }

    /// The map with empty domain on `r` parts.
    pub fn empty(r: usize) -> Self {
        PartitionwiseMap {
            images: vec![Vec::new(); r],
        }
    }

    pub fn r(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self, part: usize) -> &[usize] {
        &self.images[part]
    }

    pub fn all_images(&self) -> &[Vec<usize>] {
        &self.images
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.images.iter().map(Vec::len).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.images.iter().all(Vec::is_empty)
    }

    /// Disjoint union: the domains are concatenated per part, `self` first.
    pub fn union(&self, other: &PartitionwiseMap) -> PartitionwiseMap {
        assert_eq!(self.r(), other.r(), "maps over different part counts");
        PartitionwiseMap {
            images: self
                .images
                .iter()
                .zip(&other.images)
                .map(|(a, b)| a.iter().chain(b).copied().collect())
                .collect(),
        }
    }

    /// True when every part's image sequence of `self` is a prefix of the
    /// corresponding sequence of `other`.
    pub fn is_prefix_of(&self, other: &PartitionwiseMap) -> bool {
        self.r() == other.r()
            && self
                .images
                .iter()
                .zip(&other.images)
                .all(|(a, b)| b.starts_with(a))
    }
}

/// Enumerates every map with exactly `h` positions per part, in
/// lexicographic order over the flattened `(part, position)` digits.
pub struct MapOdometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
    h: usize,
    done: bool,
}

impl MapOdometer {
    pub fn new(parts: &[usize], h: usize) -> Self {
        let radices: Vec<usize> = parts
            .iter()
            .flat_map(|&n| std::iter::repeat_n(n, h))
            .collect();
        MapOdometer {
            digits: vec![0; radices.len()],
            radices,
            h,
            done: false,
        }
    }

    /// Current assignment as flat digits; part `i`, position `p` sits at
    /// `i * h + p`.
    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// Advances; returns false after the last map.
    pub fn advance(&mut self) -> bool {
        for pos in (0..self.digits.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.radices[pos] {
                return true;
            }
            self.digits[pos] = 0;
        }
        self.done = true;
        false
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn to_map(&self) -> PartitionwiseMap {
        let r = if self.h == 0 {
            0
        } else {
            self.digits.len() / self.h
        };
        PartitionwiseMap {
            images: (0..r)
                .map(|i| self.digits[i * self.h..(i + 1) * self.h].to_vec())
                .collect(),
        }
    }
}

/// Number of maps in `Phi(h)`: `prod_i |Omega_i|^h`, saturating.
pub fn map_space_size(parts: &[usize], h: usize) -> u128 {
    parts.iter().fold(1u128, |acc, &n| {
        (0..h).fold(acc, |a, _| a.saturating_mul(n as u128))
    })
}

/// Visits every map of `Phi(h)` over `parts`.
pub fn for_each_map(parts: &[usize], h: usize, mut f: impl FnMut(&PartitionwiseMap)) {
    let mut odo = MapOdometer::new(parts, h);
    if h == 0 {
        f(&PartitionwiseMap::empty(parts.len()));
        return;
    }
    loop {
        f(&odo.to_map());
        if !odo.advance() {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_images() {
        assert!(PartitionwiseMap::new(vec![vec![0, 2], vec![]], &[2, 1]).is_err());
        assert!(PartitionwiseMap::new(vec![vec![1, 1], vec![0]], &[2, 1]).is_ok());
    }

    #[test]
    fn union_concatenates() {
        let a = PartitionwiseMap::new(vec![vec![0, 1], vec![2, 2]], &[3, 3]).unwrap();
        let b = PartitionwiseMap::new(vec![vec![2, 2, 0], vec![1, 0, 0]], &[3, 3]).unwrap();
        let u = a.union(&b);
        assert_eq!(u.sizes(), vec![5, 5]);
        assert!(a.is_prefix_of(&u));
        assert_eq!(a.union(&PartitionwiseMap::empty(2)), a);

        let mut left: Vec<usize> = b.union(&a).images(0).to_vec();
        let mut right: Vec<usize> = u.images(0).to_vec();
        left.sort();
        right.sort();
        assert_eq!(left, right);
    }

    #[test]
    fn odometer_visits_all_maps_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_map(&[2, 3], 2, |m| {
            assert!(seen.insert(m.clone()));
        });
        assert_eq!(seen.len() as u128, map_space_size(&[2, 3], 2));
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn zero_positions_is_one_empty_map() {
        let mut count = 0;
        for_each_map(&[4, 4], 0, |m| {
            assert!(m.is_empty());
            count += 1;
        });
        assert_eq!(count, 1);
    }
}
