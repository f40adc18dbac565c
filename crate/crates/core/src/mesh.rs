//! Mesh connectivity shared by every frame of an animation.

use crate::error::{Error, Result};

/// Undirected edge between two vertex indices, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: u32,
    b: u32,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("self-loop on vertex {a}")));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let hi = u32::try_from(hi)
            .map_err(|_| Error::invalid(format!("vertex index {hi} too large")))?;
        Ok(Self {
            a: lo as u32,
            b: hi,
        })
    }

    pub fn a(self) -> usize {
        self.a as usize
    }

    pub fn b(self) -> usize {
        self.b as usize
    }
}

/// Deduplicated edge set plus compressed adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    vertices: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbours: Vec<u32>,
}

impl Topology {
    /// Builds the topology, sorting and deduplicating `edges`.
    pub fn new(vertices: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if let Some(e) = edges.iter().find(|e| e.b() >= vertices) {
            return Err(Error::IndexOutOfRange {
                mode: 1,
                index: e.b(),
                size: vertices,
            });
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degree = vec![0usize; vertices + 1];
        for e in &edges {
            degree[e.a() + 1] += 1;
            degree[e.b() + 1] += 1;
        }
        for i in 0..vertices {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut neighbours = vec![0u32; 2 * edges.len()];
        for e in &edges {
            neighbours[fill[e.a()]] = e.b;
            fill[e.a()] += 1;
            neighbours[fill[e.b()]] = e.a;
            fill[e.b()] += 1;
        }
        for i in 0..vertices {
            neighbours[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Self {
            vertices,
            edges,
            offsets,
            neighbours,
        })
    }

    /// Edges of the faces given as vertex index polygons.
    pub fn from_faces(vertices: usize, faces: &[Vec<usize>]) -> Result<Self> {
        let mut edges = Vec::new();
        for face in faces {
            for (i, &a) in face.iter().enumerate() {
                let b = face[(i + 1) % face.len()];
                if a != b {
                    edges.push(Edge::new(a, b)?);
                }
            }
        }
        Self::new(vertices, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.neighbours[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&n| n as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Vertices within `hops` edges of `v`, including `v`, in ascending order.
    pub fn ring(&self, v: usize, hops: usize) -> Vec<usize> {
        let mut seen = vec![v];
        let mut frontier = vec![v];
        for _ in 0..hops {
            let mut next = Vec::new();
            for &u in &frontier {
                for n in self.neighbours(u) {
                    if !seen.contains(&n) && !next.contains(&n) {
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            seen.extend_from_slice(&next);
            frontier = next;
        }
        seen.sort_unstable();
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_normalised() {
        let e = Edge::new(5, 2).unwrap();
        assert_eq!((e.a(), e.b()), (2, 5));
        assert!(Edge::new(3, 3).is_err());
    }

    #[test]
    fn triangle_topology() {
        let t = Topology::from_faces(3, &[vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        assert_eq!(t.edges().len(), 3);
        assert_eq!(t.neighbours(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(t.degree(2), 2);
        assert!(Topology::new(2, vec![Edge::new(0, 4).unwrap()]).is_err());
    }

    #[test]
    fn rings_on_a_path() {
        let edges = (0..5).map(|i| Edge::new(i, i + 1).unwrap()).collect();
        let t = Topology::new(6, edges).unwrap();
        assert_eq!(t.ring(2, 0), vec![2]);
        assert_eq!(t.ring(2, 1), vec![1, 2, 3]);
        assert_eq!(t.ring(2, 2), vec![0, 1, 2, 3, 4]);
        assert_eq!(t.ring(0, 9), vec![0, 1, 2, 3, 4, 5]);
    }
}
