use crate::error::{Error, Result};

/// Geometry tag of a finite volume.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum Geometry {
    General,
    Ring { length: usize },
    Torus { dim: usize, side: usize },
}

/// A finite site graph: distinct site identifiers plus symmetric neighborhoods.
///
/// Sites are addressed by their index in the label list; labels are kept for
/// I/O only. Neighborhoods are symmetric, self-loop free, and sorted.
#[derive(Debug, Clone)]
pub struct Volume {
    labels: Vec<String>,
    neighbors: Vec<Vec<usize>>,
    geometry: Geometry,
}

impl Volume {
    /// General graph from explicit labels and undirected edges.
    pub fn general(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if labels[i] == labels[j] {
                    return Err(Error::Invalid(format!(
                        "duplicate site identifier '{}'",
                        labels[i]
                    )));
                }
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::SiteOutsideVolume {
                    site: a.max(b),
                    volume: n,
                });
            }
            if a == b {
                return Err(Error::Invalid(format!("self-loop at site {a}")));
            }
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Self {
            labels,
            neighbors,
            geometry: Geometry::General,
        })
    }

    /// Ring of `length` sites; `wrap` controls whether the closing edge exists
    /// (periodic boundary) or not (free/fixed boundary, i.e. a chain).
    pub fn ring(length: usize, wrap: bool) -> Result<Self> {
        if length == 0 {
            return Err(Error::Invalid("ring of length 0".into()));
        }
        let labels = (0..length).map(|i| format!("s{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..length.saturating_sub(1) {
            edges.push((i, i + 1));
        }
        if wrap && length > 2 {
            edges.push((length - 1, 0));
        }
        if wrap && length == 2 {
            // the wrap edge coincides with the single chain edge
        }
        let mut v = Self::general(labels, &edges)?;
        v.geometry = Geometry::Ring { length };
        Ok(v)
    }

    /// Hypercubic torus of dimension `dim` and side `side`; `wrap` as for rings.
    pub fn torus(dim: usize, side: usize, wrap: bool) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(Error::Invalid(format!("degenerate torus {dim}x{side}")));
        }
        let n = side.checked_pow(dim as u32).ok_or_else(|| {
            Error::Invalid(format!("torus size {side}^{dim} overflows"))
        })?;
        let coord = |idx: usize| -> Vec<usize> {
            let mut c = Vec::with_capacity(dim);
            let mut r = idx;
            for _ in 0..dim {
                c.push(r % side);
                r /= side;
            }
            c
        };
        let index = |c: &[usize]| -> usize {
            c.iter().rev().fold(0, |acc, &x| acc * side + x)
        };
        let labels = (0..n)
            .map(|i| {
                let c = coord(i);
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                format!("t{}", parts.join("_"))
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            let c = coord(i);
            for d in 0..dim {
                if c[d] + 1 < side {
                    let mut c2 = c.clone();
                    c2[d] += 1;
                    edges.push((i, index(&c2)));
                } else if wrap && side > 2 {
                    let mut c2 = c.clone();
                    c2[d] = 0;
                    edges.push((i, index(&c2)));
                }
            }
        }
        let mut v = Self::general(labels, &edges)?;
        v.geometry = Geometry::Torus { dim, side };
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, site: usize) -> &str {
        &self.labels[site]
    }

    pub fn site_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Undirected edge list with endpoints in increasing order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nbs) in self.neighbors.iter().enumerate() {
            for &b in nbs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.len() {
            return Err(Error::SiteOutsideVolume {
                site,
                volume: self.len(),
            });
        }
        Ok(())
    }
}
